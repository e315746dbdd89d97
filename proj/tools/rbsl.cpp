// Command-line front end: run experiments, diagnose traces, posterior predictive checks.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rbsl/config.hpp"
#include "rbsl/diagnostics.hpp"
#include "rbsl/experiment.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--seed", flags.seed, "Master seed (overrides the config)");
  cmd->add_option("--out", flags.out, "Output directory");
  cmd->add_option("--threads", flags.threads, "Worker threads")->check(CLI::PositiveNumber);
}

int fail(const std::exception& e, const fs::path& dir) {
  std::cerr << "error: " << e.what() << '\n';
  rbsl::write_error_record(dir, e);
  return 1;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides, const CommonFlags& flags) {
  fs::path out_dir = flags.out.value_or("out");
  try {
    rbsl::ConfigDocument doc = rbsl::load_config_document(config_path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw rbsl::ConfigError("--set expects section.key=value, got '" + o + "'");
      doc.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (!flags.out) {
      if (const auto* e = doc.find("output", "directory")) out_dir = e->value;
    }
    const auto start = std::chrono::steady_clock::now();
    const auto result = rbsl::run_experiment(doc, {flags.seed, flags.out, flags.threads});
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    std::cerr << "wrote " << result.output_dir.string() << " (" << result.jobs.size() << " job"
              << (result.jobs.size() == 1 ? "" : "s") << ", " << elapsed.count() << " s)\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e, out_dir);
  }
}

int cmd_diagnose(const std::string& trace_path, const std::string& prior_text, double threshold,
                 std::size_t reference_n, const CommonFlags& flags) {
  const fs::path out_dir = flags.out.value_or(".");
  try {
    const rbsl::Trace trace = rbsl::read_trace_csv(trace_path);
    const rbsl::GammaPrior prior = rbsl::parse_gamma_prior(prior_text, trace.gamma_dim());
    rbsl::Rng rng = rbsl::make_stream(flags.seed.value_or(1), rbsl::StreamTag::Prior);
    const auto diags = rbsl::gamma_prior_divergence(trace, prior, reference_n, rng, threshold);
    std::ostringstream table;
    table << "component,ks_statistic,q025,q50,q975,incompatible\n";
    for (const auto& d : diags) {
      table << d.component + 1 << ',' << rbsl::format_double(d.ks_statistic) << ',' << rbsl::format_double(d.q025)
            << ',' << rbsl::format_double(d.q50) << ',' << rbsl::format_double(d.q975) << ','
            << (d.incompatible ? 1 : 0) << '\n';
    }
    std::cout << table.str();
    if (flags.out) {
      fs::create_directories(out_dir);
      std::ofstream(out_dir / "diagnostics.csv", std::ios::binary) << table.str();
    }
    return 0;
  } catch (const std::exception& e) {
    return fail(e, out_dir);
  }
}

int cmd_predictive(const std::string& trace_path, const std::string& model_id, std::size_t draws,
                   std::optional<std::string> observed_path, int size, const std::string& mode,
                   const CommonFlags& flags) {
  const fs::path out_dir = flags.out.value_or(".");
  try {
    const rbsl::Trace trace = rbsl::read_trace_csv(trace_path);
    if (!observed_path) observed_path = (fs::path(trace_path).parent_path().parent_path() / "observed.csv").string();
    const rbsl::SummaryVector observed(rbsl::load_series(*observed_path));
    const rbsl::ModelSpec model = rbsl::make_model(model_id, size);
    const auto stats = rbsl::posterior_predictive(
        trace, model, observed, draws, flags.seed.value_or(1),
        mode == "adjusted" ? rbsl::PredictiveMode::Adjusted : rbsl::PredictiveMode::Raw);
    std::ostringstream table;
    table << "summary,observed,q025,q50,q975,observed_percentile\n";
    for (std::size_t j = 0; j < stats.size(); ++j) {
      table << j + 1 << ',' << rbsl::format_double(observed.values()[static_cast<Eigen::Index>(j)]) << ','
            << rbsl::format_double(stats[j].q025) << ',' << rbsl::format_double(stats[j].q50) << ','
            << rbsl::format_double(stats[j].q975) << ',' << rbsl::format_double(stats[j].observed_percentile)
            << '\n';
    }
    std::cout << table.str();
    if (flags.out) {
      fs::create_directories(out_dir);
      std::ofstream(out_dir / "predictive.csv", std::ios::binary) << table.str();
    }
    return 0;
  } catch (const std::exception& e) {
    return fail(e, out_dir);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust Bayesian synthetic likelihood"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string config_path;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--set", overrides, "Override a config key: section.key=value");
  add_common(run, run_flags);

  CommonFlags diag_flags;
  std::string diag_trace, prior_text;
  double threshold = rbsl::kDefaultIncompatibilityThreshold;
  std::size_t reference_n = rbsl::kDefaultReferenceDraws;
  auto* diagnose = app.add_subcommand("diagnose", "Compare the adjustment posterior in a trace with its prior");
  diagnose->add_option("trace", diag_trace, "Trace CSV")->required()->check(CLI::ExistingFile);
  diagnose->add_option("--prior", prior_text, "Adjustment prior, kind:hyper (laplace:0.5, exponential:0.5)")
      ->required();
  diagnose->add_option("--threshold", threshold, "KS incompatibility threshold");
  diagnose->add_option("--reference", reference_n, "Reference prior draws");
  add_common(diagnose, diag_flags);

  CommonFlags pred_flags;
  std::string pred_trace, model_id, mode = "raw";
  std::size_t draws = 1000;
  std::optional<std::string> observed_path;
  int size = 100;
  auto* predictive = app.add_subcommand("predictive", "Posterior predictive check of the summaries");
  predictive->add_option("trace", pred_trace, "Trace CSV")->required()->check(CLI::ExistingFile);
  predictive->add_option("--model", model_id, "Model id: normal, ma1, toad")->required();
  predictive->add_option("--draws", draws, "Predictive draws")->required();
  predictive->add_option("--observed", observed_path, "Observed summaries, one per line");
  predictive->add_option("--size", size, "Sample size or series length");
  predictive->add_option("--mode", mode, "raw or adjusted")->check(CLI::IsMember({"raw", "adjusted"}));
  add_common(predictive, pred_flags);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path, overrides, run_flags);
  if (diagnose->parsed()) return cmd_diagnose(diag_trace, prior_text, threshold, reference_n, diag_flags);
  return cmd_predictive(pred_trace, model_id, draws, observed_path, size, mode, pred_flags);
}
