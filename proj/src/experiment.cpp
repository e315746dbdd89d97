#include "rbsl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "rbsl/samplers.hpp"

namespace rbsl {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string pad(std::size_t value, int width) {
  std::string s = std::to_string(value);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json summary_json(const ParameterSummary& s) {
  return {{"mean", s.mean}, {"median", s.median}, {"q025", s.q025}, {"q975", s.q975}};
}

std::string theta_header(Eigen::Index d) {
  std::string h;
  for (Eigen::Index i = 1; i <= d; ++i) h += (i > 1 ? ",theta_" : "theta_") + std::to_string(i);
  return h;
}

/// Weighted Gaussian KDE with a rule-of-thumb bandwidth based on the effective sample size.
DensityGrid density_for(std::span<const double> values, std::span<const double> weights, std::size_t points) {
  double wsum = 0.0, w2 = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    wsum += weights[i];
    w2 += weights[i] * weights[i];
    mean += weights[i] * values[i];
  }
  mean /= wsum;
  double var = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) var += weights[i] * (values[i] - mean) * (values[i] - mean);
  var /= wsum;
  const double ess = wsum * wsum / w2;
  double h = 1.06 * std::sqrt(var) * std::pow(ess, -0.2);
  if (!(h > 0.0)) h = 1e-3;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return weighted_density(values, weights, *lo - 3.0 * h, *hi + 3.0 * h, points, h);
}

void write_density(const fs::path& path, const std::vector<DensityGrid>& grids) {
  auto out = open_output(path);
  out << "component,x,density\n";
  for (std::size_t c = 0; c < grids.size(); ++c) {
    for (std::size_t k = 0; k < grids[c].x.size(); ++k) {
      out << c + 1 << ',' << format_double(grids[c].x[k]) << ',' << format_double(grids[c].density[k]) << '\n';
    }
  }
}

json modes_json(const std::vector<DensityGrid>& grids) {
  json modes = json::array();
  for (const auto& g : grids) modes.push_back(density_modes(g));
  return modes;
}

void write_dataset(const fs::path& path, const Dataset& data) {
  auto out = open_output(path);
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) out << (c ? "," : "") << format_double(data(r, c));
    out << '\n';
  }
}

struct JobSpec {
  std::size_t grid_index = 0;
  int replicate = 0;
  std::string grid_value;
  ExperimentConfig config;
};

class JobRunner {
 public:
  JobRunner(const JobSpec& spec, const fs::path& dir, std::uint64_t master, int threads)
      : spec_(spec), cfg_(spec.config), dir_(dir), threads_(threads) {
    result_.grid_index = spec.grid_index;
    result_.replicate = spec.replicate;
    result_.grid_value = spec.grid_value;
    result_.seed = job_seed(master, spec.grid_index, spec.replicate);
  }

  JobResult run(json& report) {
    fs::create_directories(dir_);
    const ModelSpec model = model_for(cfg_);
    const Dataset data = observed_data(cfg_, stream_seed(result_.seed, StreamTag::Data));
    write_dataset(dir_ / "data.csv", data);
    const SummaryVector observed(model.summarize(data));
    result_.observed = observed.values();
    {
      auto out = open_output(dir_ / "observed.csv");
      for (Eigen::Index i = 0; i < result_.observed.size(); ++i) out << format_double(result_.observed[i]) << '\n';
    }

    report = {{"grid_index", spec_.grid_index},
              {"replicate", spec_.replicate},
              {"seed", result_.seed},
              {"observed_summary", vector_json(result_.observed)},
              {"methods", json::object()}};
    if (!spec_.grid_value.empty()) report["grid_value"] = spec_.grid_value;

    const std::uint64_t chain_seed = stream_seed(result_.seed, StreamTag::Chain);
    for (std::size_t k = 0; k < cfg_.methods.size(); ++k) {
      const RunMethod method = cfg_.methods[k];
      const fs::path mdir = dir_ / to_string(method);
      fs::create_directories(mdir);
      json summary;
      MethodResult mr;
      mr.method = method;
      if (auto chain = chain_method(method)) {
        run_chain_method(*chain, k, model, data, observed, chain_seed, mdir, mr, summary);
      } else {
        run_importance(model, observed, chain_seed, mdir, mr, summary);
      }
      auto out = open_output(mdir / "summary.json");
      out << summary.dump(2) << '\n';
      report["methods"][to_string(method)] = summary;
      result_.methods.push_back(std::move(mr));
    }
    return std::move(result_);
  }

 private:
  void run_chain_method(Method method, std::size_t index, const ModelSpec& model, const Dataset& data,
                        const SummaryVector& observed, std::uint64_t chain_seed, const fs::path& mdir,
                        MethodResult& mr, json& summary) {
    SamplerSettings settings;
    settings.method = method;
    settings.m = cfg_.m;
    settings.theta_prior = cfg_.theta_prior;
    if (uses_gamma(method)) settings.gamma_prior = cfg_.gamma_prior_for(method, model.d_eta);
    settings.proposal_cov = cfg_.proposal_cov;
    if (cfg_.theta_init) {
      settings.theta_init = *cfg_.theta_init;
    } else {
      settings.theta_init = Vector::Constant(1, ma1_css_estimate({data.data(), static_cast<std::size_t>(data.size())}));
    }
    settings.iterations = cfg_.iterations;
    settings.burn_in = cfg_.burn_in;
    settings.thin = cfg_.thin;
    settings.seed = chain_seed;
    settings.threads = threads_;
    if (cfg_.tune_proposal) settings.proposal_cov = tune_proposal(model, observed, settings);

    Trace trace = run_chain(model, observed, settings);
    write_trace_csv((mdir / "trace.csv").string(), trace);

    const ChainSummary cs = chain_summary(trace);
    mr.estimate = estimate_from_trace(trace);

    {
      auto out = open_output(mdir / "quantiles.csv");
      out << "parameter,mean,median,q025,q975\n";
      auto row = [&](const std::string& name, const ParameterSummary& s) {
        out << name << ',' << format_double(s.mean) << ',' << format_double(s.median) << ','
            << format_double(s.q025) << ',' << format_double(s.q975) << '\n';
      };
      for (std::size_t i = 0; i < cs.theta.size(); ++i) row("theta_" + std::to_string(i + 1), cs.theta[i]);
      for (std::size_t j = 0; j < cs.gamma.size(); ++j) row("gamma_" + std::to_string(j + 1), cs.gamma[j]);
    }
    {
      auto out = open_output(mdir / "draws.csv");
      out << "iter," << theta_header(trace.theta_dim());
      for (Eigen::Index j = 1; j <= trace.gamma_dim(); ++j) out << ",gamma_" << j;
      out << '\n';
      for (const TraceRow* r : thinned_draws(trace, cfg_.export_thin)) {
        out << r->iter;
        for (Eigen::Index i = 0; i < r->theta.size(); ++i) out << ',' << format_double(r->theta[i]);
        for (Eigen::Index j = 0; j < r->gamma.size(); ++j) out << ',' << format_double(r->gamma[j]);
        out << '\n';
      }
    }

    std::vector<DensityGrid> grids;
    for (Eigen::Index i = 0; i < trace.theta_dim(); ++i) {
      const auto draws = trace.theta_draws(i);
      if (draws.empty()) break;
      const std::vector<double> w(draws.size(), 1.0);
      grids.push_back(density_for(draws, w, cfg_.density_points));
    }
    if (!grids.empty()) write_density(mdir / "density.csv", grids);

    summary = {{"method", to_string(method)},
               {"m", trace.meta.m},
               {"iterations", trace.meta.iterations},
               {"burn_in", trace.meta.burn_in},
               {"thin", trace.meta.thin},
               {"seed", trace.meta.seed},
               {"acceptance_rate", cs.acceptance_rate},
               {"accepted", trace.meta.accepted},
               {"proposals", trace.meta.proposals},
               {"simulation_calls", trace.meta.simulation_calls},
               {"simulation_failures", trace.meta.simulation_failures},
               {"longest_rejection_run", trace.meta.longest_rejection_run},
               {"post_burnin_rows", cs.post_burnin_rows},
               {"theta_init", vector_json(settings.theta_init)}};
    json theta = json::array();
    for (const auto& s : cs.theta) theta.push_back(summary_json(s));
    summary["theta"] = theta;
    if (!grids.empty()) summary["theta_density_modes"] = modes_json(grids);

    if (uses_gamma(method)) {
      json gamma = json::array();
      for (const auto& s : cs.gamma) gamma.push_back(summary_json(s));
      summary["gamma"] = gamma;
      if (cs.post_burnin_rows >= 100) {
        Rng ref = make_stream(result_.seed, StreamTag::Prior, index, 0);
        mr.diagnostics = gamma_prior_divergence(trace, *settings.gamma_prior, cfg_.reference_n, ref, cfg_.threshold);
        auto out = open_output(mdir / "diagnostics.csv");
        out << "component,ks_statistic,q025,q50,q975,incompatible\n";
        json diag = json::array();
        json flagged = json::array();
        for (const auto& d : mr.diagnostics) {
          out << d.component + 1 << ',' << format_double(d.ks_statistic) << ',' << format_double(d.q025) << ','
              << format_double(d.q50) << ',' << format_double(d.q975) << ',' << (d.incompatible ? 1 : 0) << '\n';
          diag.push_back(d.ks_statistic);
          if (d.incompatible) flagged.push_back(d.component + 1);
        }
        summary["gamma_diagnostics"] = {{"prior", settings.gamma_prior->describe()},
                                        {"threshold", cfg_.threshold},
                                        {"reference_draws", cfg_.reference_n},
                                        {"ks_statistic", diag},
                                        {"incompatible_components", flagged}};
      } else {
        summary["gamma_diagnostics"] = "skipped: fewer than 100 post-burn-in rows";
      }
    }

    if (cfg_.predictive_draws > 0 && cs.post_burnin_rows > 0) {
      const auto mode = cfg_.predictive_adjusted && uses_gamma(method) ? PredictiveMode::Adjusted : PredictiveMode::Raw;
      const auto stats = posterior_predictive(trace, model, observed, cfg_.predictive_draws,
                                              stream_seed(result_.seed, StreamTag::Predictive, index), mode);
      auto out = open_output(mdir / "predictive.csv");
      out << "summary,observed,q025,q50,q975,observed_percentile\n";
      for (std::size_t j = 0; j < stats.size(); ++j) {
        out << j + 1 << ',' << format_double(observed.values()[static_cast<Eigen::Index>(j)]) << ','
            << format_double(stats[j].q025) << ',' << format_double(stats[j].q50) << ','
            << format_double(stats[j].q975) << ',' << format_double(stats[j].observed_percentile) << '\n';
      }
    }
    mr.trace = std::move(trace);
  }

  void run_importance(const ModelSpec& model, const SummaryVector& observed, std::uint64_t seed,
                      const fs::path& mdir, MethodResult& mr, json& summary) {
    ImportanceSample is = importance_sample_bsl(cfg_.theta_prior, cfg_.is_draws, cfg_.m, model, observed, seed, threads_);
    {
      auto out = open_output(mdir / "importance.csv");
      out << theta_header(is.theta.cols()) << ",log_weight,weight\n";
      for (Eigen::Index r = 0; r < is.theta.rows(); ++r) {
        for (Eigen::Index c = 0; c < is.theta.cols(); ++c) out << format_double(is.theta(r, c)) << ',';
        out << format_double(is.log_weights[r]) << ',' << format_double(is.weights[r]) << '\n';
      }
    }
    mr.estimate = estimate_from_weights(is.theta, is.weights);
    std::vector<DensityGrid> grids;
    const std::vector<double> w(is.weights.data(), is.weights.data() + is.weights.size());
    for (Eigen::Index c = 0; c < is.theta.cols(); ++c) {
      const Vector col = is.theta.col(c);
      grids.push_back(density_for(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), w,
                                  cfg_.density_points));
    }
    write_density(mdir / "density.csv", grids);
    summary = {{"method", "bsl-is"},
               {"m", cfg_.m},
               {"draws", cfg_.is_draws},
               {"seed", seed},
               {"ess", is.ess},
               {"simulation_failures", is.simulation_failures},
               {"simulation_calls", cfg_.is_draws * cfg_.m},
               {"theta_mean", vector_json(mr.estimate.mean)},
               {"theta_lower", vector_json(mr.estimate.lower)},
               {"theta_upper", vector_json(mr.estimate.upper)},
               {"theta_density_modes", modes_json(grids)}};
    mr.importance = std::move(is);
  }

  const JobSpec& spec_;
  const ExperimentConfig& cfg_;
  fs::path dir_;
  int threads_;
  JobResult result_;
};

json config_echo(const ConfigDocument& doc) {
  json echo = json::object();
  for (const auto& [section, entries] : doc.sections) {
    json s = json::object();
    for (const auto& [key, entry] : entries) {
      if (section == "output" && key == "directory") continue;
      s[key] = entry.value;
    }
    if (!s.empty()) echo[section] = s;
  }
  return echo;
}

}  // namespace

ModelSpec model_for(const ExperimentConfig& config) {
  return make_model(config.model, config.data.n, ToadSettings{config.data.n_toads, config.data.n_days});
}

Dataset observed_data(const ExperimentConfig& config, std::uint64_t data_seed) {
  const auto& d = config.data;
  if (d.kind == DataSourceConfig::Kind::File) {
    if (config.model == "toad") return load_matrix(d.path);
    return load_series(d.path);
  }
  Rng rng(data_seed);
  if (config.model == "normal") {
    const double sigma_eps = std::sqrt(contamination_variance(d.omega, d.sd));
    Vector x = generate_contaminated(d.mean, d.n, d.omega, sigma_eps, rng);
    if (d.standardize) x = standardize_to_moments(x, d.mean, d.sd);
    return x;
  }
  if (config.model == "ma1") return simulate_sv(d.sv_omega, d.sv_rho, d.sv_sigma, d.n, rng);
  return simulate_toads(d.toad_theta, ToadSettings{d.n_toads, d.n_days}, rng);
}

std::uint64_t job_seed(std::uint64_t master, std::size_t grid_index, int replicate) noexcept {
  return stream_seed(master, StreamTag::Job, grid_index, static_cast<std::uint64_t>(replicate));
}

ExperimentResult run_experiment(const ConfigDocument& document, const RunOptions& options) {
  ConfigDocument doc = document;
  if (options.seed) doc.set("experiment.seed", std::to_string(*options.seed));
  if (options.out) doc.set("output.directory", *options.out);
  const ExperimentConfig base = resolve_config(doc);

  std::vector<JobSpec> specs;
  const std::vector<std::string> values = base.grid.values.empty() ? std::vector<std::string>{""} : base.grid.values;
  std::vector<ConfigIssue> issues;
  for (std::size_t g = 0; g < values.size(); ++g) {
    ExperimentConfig cfg = base;
    if (!values[g].empty()) {
      ConfigDocument point = doc;
      point.set(base.grid.parameter, values[g]);
      try {
        cfg = resolve_config(point);
      } catch (const ConfigErrors& e) {
        for (auto issue : e.issues()) {
          issue.message += " (grid value " + values[g] + ")";
          issues.push_back(issue);
        }
        continue;
      }
    }
    for (int r = 0; r < base.grid.replicates; ++r) specs.push_back({g, r, values[g], cfg});
  }
  if (!issues.empty()) throw ConfigErrors(std::move(issues));

  ExperimentResult result;
  result.output_dir = base.output_dir;
  fs::create_directories(result.output_dir);

  const int threads = std::max(1, options.threads);
  const int workers = std::min<int>(threads, static_cast<int>(specs.size()));
  const int sim_threads = std::max(1, threads / workers);

  std::vector<std::optional<JobResult>> results(specs.size());
  std::vector<json> reports(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      const fs::path dir = result.output_dir / "jobs" /
                           ("g" + pad(specs[i].grid_index, 3) + "_r" + pad(static_cast<std::size_t>(specs[i].replicate), 3));
      try {
        JobRunner runner(specs[i], dir, base.seed, sim_threads);
        results[i] = runner.run(reports[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& r : results) result.jobs.push_back(std::move(*r));

  // aggregate outputs
  {
    auto out = open_output(result.output_dir / "acceptance.csv");
    out << "grid_index,grid_value,replicate,method,acceptance_rate,longest_rejection_run\n";
    for (const auto& job : result.jobs) {
      for (const auto& m : job.methods) {
        if (!m.trace) continue;
        out << job.grid_index << ',' << job.grid_value << ',' << job.replicate << ',' << to_string(m.method) << ','
            << format_double(m.trace->acceptance_rate()) << ',' << m.trace->meta.longest_rejection_run << '\n';
      }
    }
  }

  json accuracy = json::array();
  if (base.truth && base.grid.replicates >= 2) {
    auto out = open_output(result.output_dir / "accuracy.csv");
    out << "grid_index,grid_value,method,parameter,bias,rmse,length,coverage,runs\n";
    for (std::size_t g = 0; g < values.size(); ++g) {
      for (const RunMethod method : base.methods) {
        std::vector<RunEstimate> runs;
        for (const auto& job : result.jobs) {
          if (job.grid_index != g) continue;
          for (const auto& m : job.methods) {
            if (m.method == method) runs.push_back(m.estimate);
          }
        }
        const AccuracyRow row = accuracy_table(runs, *base.truth, to_string(method));
        for (Eigen::Index i = 0; i < row.bias.size(); ++i) {
          out << g << ',' << values[g] << ',' << row.label << ",theta_" << i + 1 << ',' << format_double(row.bias[i])
              << ',' << format_double(row.rmse[i]) << ',' << format_double(row.length[i]) << ','
              << format_double(row.coverage[i]) << ',' << row.runs << '\n';
        }
        accuracy.push_back({{"grid_index", g},
                            {"method", row.label},
                            {"bias", vector_json(row.bias)},
                            {"rmse", vector_json(row.rmse)},
                            {"length", vector_json(row.length)},
                            {"coverage", vector_json(row.coverage)},
                            {"runs", row.runs}});
      }
    }
  }

  json top = {{"config", config_echo(doc)}, {"model", base.model}, {"seed", base.seed}, {"jobs", json::array()}};
  for (auto& r : reports) top["jobs"].push_back(std::move(r));
  if (!accuracy.empty()) top["accuracy"] = accuracy;
  auto out = open_output(result.output_dir / "summary.json");
  out << top.dump(2) << '\n';
  return result;
}

void write_error_record(const fs::path& dir, const std::exception& error) {
  json record = {{"error", "unknown"}, {"message", error.what()}};
  if (const auto* e = dynamic_cast<const Error*>(&error)) record["error"] = e->kind();
  if (const auto* e = dynamic_cast<const ConfigErrors*>(&error)) {
    json issues = json::array();
    for (const auto& i : e->issues()) issues.push_back({{"line", i.line}, {"key", i.key}, {"message", i.message}});
    record["issues"] = issues;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "error.json", std::ios::binary);
  if (out) out << record.dump(2) << '\n';
}

}  // namespace rbsl
