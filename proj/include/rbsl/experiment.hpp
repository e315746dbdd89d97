#pragma once

// Experiment orchestration: builds observed data, expands grid points and
// replicates into jobs, runs them on a worker pool and writes the artifact tree.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rbsl/config.hpp"
#include "rbsl/diagnostics.hpp"
#include "rbsl/models.hpp"
#include "rbsl/samplers.hpp"

namespace rbsl {

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides experiment.seed
  std::optional<std::string> out;     // overrides output.directory
  int threads = 1;
};

struct MethodResult {
  RunMethod method = RunMethod::BSL;
  std::optional<Trace> trace;             // MCMC methods
  std::optional<ImportanceSample> importance;  // bsl-is
  RunEstimate estimate;
  std::vector<ComponentDiagnostic> diagnostics;
};

struct JobResult {
  std::size_t grid_index = 0;
  int replicate = 0;
  std::string grid_value;  // empty without a grid
  std::uint64_t seed = 0;
  Vector observed;
  std::vector<MethodResult> methods;
};

struct ExperimentResult {
  std::filesystem::path output_dir;
  std::vector<JobResult> jobs;
};

/// Model for a resolved config (sizes taken from the data block).
ModelSpec model_for(const ExperimentConfig& config);

/// Observed dataset: read from file or simulated from the configured true process.
Dataset observed_data(const ExperimentConfig& config, std::uint64_t data_seed);

/// Seed of job (grid index, replicate) under a master seed.
std::uint64_t job_seed(std::uint64_t master, std::size_t grid_index, int replicate) noexcept;

/// Validates the document, runs every job and writes all artifacts.
ExperimentResult run_experiment(const ConfigDocument& document, const RunOptions& options = {});

/// Machine-readable record of a failure, written as error.json.
void write_error_record(const std::filesystem::path& dir, const std::exception& error);

}  // namespace rbsl
