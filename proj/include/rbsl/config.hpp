#pragma once

// Experiment configuration: an INI-like text format with [section] headers,
// `key = value` lines, '#' comments and comma-separated arrays.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rbsl/errors.hpp"
#include "rbsl/priors.hpp"
#include "rbsl/trace.hpp"

namespace rbsl {

struct ConfigIssue {
  int line = 0;  // 0 when the issue is not tied to a line
  std::string key;
  std::string message;
};

/// Raised with every issue found, not just the first.
class ConfigErrors : public ConfigError {
 public:
  explicit ConfigErrors(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Key/value pairs by section, with the source line of each assignment.
struct ConfigDocument {
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, std::map<std::string, Entry>> sections;

  const Entry* find(const std::string& section, const std::string& key) const;
  /// Sets "section.key" to `value`, adding the section if needed.
  void set(const std::string& dotted_key, const std::string& value);
};

/// Syntax-level parse. Throws ConfigErrors on malformed lines.
ConfigDocument parse_config_document(const std::string& text);

enum class RunMethod { BSL, RBSL_Mean, RBSL_Variance, BSL_ImportanceSampling };

std::string to_string(RunMethod method);
std::optional<Method> chain_method(RunMethod method) noexcept;

struct DataSourceConfig {
  enum class Kind { Synthetic, File };
  Kind kind = Kind::Synthetic;
  std::string path;
  int n = 100;  // sample size (normal) or series length (ma1)
  // normal: contaminated generator
  double mean = 1.0;
  double sd = 1.0;
  double omega = 0.8;
  bool standardize = true;
  // ma1: stochastic-volatility generator
  double sv_omega = -0.76;
  double sv_rho = 0.90;
  double sv_sigma = 0.36;
  // toad
  Vector toad_theta;
  int n_toads = 66;
  int n_days = 63;
};

struct GridConfig {
  std::string parameter;  // "section.key" overridden per grid point
  std::vector<std::string> values;
  int replicates = 1;
};

struct ExperimentConfig {
  std::string model = "normal";
  std::vector<RunMethod> methods;
  int m = 100;
  long iterations = 1000;
  long burn_in = 0;
  long thin = 1;
  std::uint64_t seed = 1;
  long is_draws = 10000;

  DataSourceConfig data;
  ThetaPrior theta_prior;
  std::optional<GammaPrior::Kind> gamma_kind;  // set when the config fixes one kind
  double laplace_scale = 0.5;
  double exponential_mean = 0.5;

  Matrix proposal_cov;
  bool tune_proposal = false;
  std::optional<Vector> theta_init;  // nullopt: CSS estimate from the data (ma1 only)

  std::optional<Vector> truth;
  GridConfig grid;

  double threshold = 0.3;
  std::size_t reference_n = 100000;
  std::size_t predictive_draws = 0;
  bool predictive_adjusted = false;
  long export_thin = 1;
  std::size_t density_points = 201;

  std::string output_dir = "out";

  /// Gamma prior for a robust method, honoring the configured kind.
  GammaPrior gamma_prior_for(Method method, Eigen::Index dim) const;
  int d_theta() const noexcept { return static_cast<int>(theta_prior.dim()); }
};

/// Full parse and validation. Throws ConfigErrors listing all problems.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig resolve_config(const ConfigDocument& doc);
/// Reads a file and parses it.
ConfigDocument load_config_document(const std::string& path);

/// "1.0:0.1:2.0" or "a, b, c".
std::vector<std::string> expand_values(const std::string& text);

}  // namespace rbsl
