#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rbsl/config.hpp"
#include "rbsl/diagnostics.hpp"
#include "rbsl/experiment.hpp"
#include "rbsl/samplers.hpp"

namespace py = pybind11;
using namespace rbsl;

namespace {

ThetaComponent parse_component(const py::tuple& spec) {
  const auto kind = spec[0].cast<std::string>();
  if (spec.size() != 3) throw ConfigError("theta prior components look like (kind, a, b)");
  const double a = spec[1].cast<double>(), b = spec[2].cast<double>();
  if (kind == "uniform") return ThetaPrior::uniform(a, b);
  if (kind == "normal") return ThetaPrior::normal(a, b);
  throw ConfigError("unknown theta prior kind '" + kind + "'");
}

ThetaPrior parse_theta_prior(const std::vector<py::tuple>& specs) {
  std::vector<ThetaComponent> components;
  for (const auto& s : specs) components.push_back(parse_component(s));
  return ThetaPrior(std::move(components));
}

std::optional<AdjustmentVector> adjustment_for(Method method, const std::optional<Vector>& gamma, Eigen::Index d) {
  if (method == Method::BSL) return std::nullopt;
  const auto kind = method == Method::RBSL_Mean ? AdjustmentKind::MeanShift : AdjustmentKind::VarianceInflation;
  if (!gamma) return AdjustmentVector::zeros(d, kind);
  return AdjustmentVector(*gamma, kind);
}

py::dict trace_dict(const Trace& t) {
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Eigen::VectorXi iter(n), accepted(n), burnin(n);
  Vector loglike(n);
  Matrix theta(n, t.theta_dim()), gamma(n, t.gamma_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = t.rows[static_cast<std::size_t>(i)];
    iter[i] = static_cast<int>(row.iter);
    accepted[i] = row.accepted;
    burnin[i] = row.burnin;
    loglike[i] = row.log_like;
    theta.row(i) = row.theta.transpose();
    if (gamma.cols() > 0) gamma.row(i) = row.gamma.transpose();
  }
  py::dict d;
  d["method"] = to_string(t.meta.method);
  d["iter"] = iter;
  d["accepted"] = accepted;
  d["burnin"] = burnin;
  d["loglike"] = loglike;
  d["theta"] = theta;
  d["gamma"] = gamma;
  d["acceptance_rate"] = t.acceptance_rate();
  d["longest_rejection_run"] = t.meta.longest_rejection_run;
  d["simulation_calls"] = t.meta.simulation_calls;
  d["simulation_failures"] = t.meta.simulation_failures;
  return d;
}

}  // namespace

PYBIND11_MODULE(_rbsl, m) {
  m.doc() = "Bayesian synthetic likelihood and its robust variants";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("gaussian_logpdf", py::overload_cast<const Vector&, const Vector&, const Matrix&>(&gaussian_logpdf),
        py::arg("x"), py::arg("mu"), py::arg("chol"), "log N(x; mu, L L^T) for a lower Cholesky factor L.");

  m.def(
      "estimate_moments",
      [](const Matrix& sims) {
        const auto est = estimate_moments(sims);
        return py::make_tuple(est.mu(), est.sigma());
      },
      py::arg("sims"), "Sample mean and covariance (divisor m) of the rows of an m x d array.");

  m.def(
      "synthetic_loglike",
      [](const Vector& observed, const Matrix& sims, const std::string& method, std::optional<Vector> gamma) {
        const Method meth = parse_method(method);
        const auto est = estimate_moments(sims);
        const auto adj = adjustment_for(meth, gamma, observed.size());
        return synthetic_loglike(SummaryVector(observed), est, adj ? &*adj : nullptr, meth);
      },
      py::arg("observed"), py::arg("sims"), py::arg("method") = "bsl", py::arg("gamma") = py::none(),
      "Synthetic log-likelihood of an observed summary given simulated summaries.");

  m.def(
      "simulate_summaries",
      [](const std::string& model, const Vector& theta, int n_sims, std::uint64_t seed, int size) {
        const ModelSpec spec = make_model(model, size);
        SimulationEngine engine(spec, seed, StreamTag::Simulation);
        auto sims = engine.simulate(theta, n_sims, 0);
        if (!sims) throw NumericalError("a simulation failed");
        return *sims;
      },
      py::arg("model"), py::arg("theta"), py::arg("n_sims"), py::arg("seed") = 1, py::arg("size") = 100,
      "n_sims x d_eta simulated summaries for model 'normal', 'ma1' or 'toad'.");

  m.def(
      "run_chain",
      [](const std::string& model, const Vector& observed, const std::string& method, int n_sims, long iterations,
         long burn_in, std::uint64_t seed, const Vector& theta_init, const Matrix& proposal_cov,
         const std::vector<py::tuple>& theta_prior, std::optional<std::string> gamma_prior, int size, long thin,
         int threads) {
        const ModelSpec spec = make_model(model, size);
        SamplerSettings s;
        s.method = parse_method(method);
        s.m = n_sims;
        s.theta_prior = parse_theta_prior(theta_prior);
        if (s.method == Method::RBSL_Mean) s.gamma_prior = GammaPrior::laplace(0.5, spec.d_eta);
        if (s.method == Method::RBSL_Variance) s.gamma_prior = GammaPrior::exponential(0.5, spec.d_eta);
        if (gamma_prior && s.method != Method::BSL) s.gamma_prior = parse_gamma_prior(*gamma_prior, spec.d_eta);
        s.proposal_cov = proposal_cov;
        s.theta_init = theta_init;
        s.iterations = iterations;
        s.burn_in = burn_in;
        s.thin = thin;
        s.seed = seed;
        s.threads = threads;
        Trace trace;
        {
          py::gil_scoped_release release;
          trace = run_chain(spec, SummaryVector(observed), s);
        }
        return trace_dict(trace);
      },
      py::arg("model"), py::arg("observed"), py::arg("method"), py::arg("n_sims"), py::arg("iterations"),
      py::arg("burn_in"), py::arg("seed"), py::arg("theta_init"), py::arg("proposal_cov"), py::arg("theta_prior"),
      py::arg("gamma_prior") = py::none(), py::arg("size") = 100, py::arg("thin") = 1, py::arg("threads") = 1,
      "Runs one MCMC chain. theta_prior is a list of ('uniform', lower, upper) or ('normal', mean, variance).");

  m.def(
      "read_trace", [](const std::string& path) { return trace_dict(read_trace_csv(path)); }, py::arg("path"),
      "Loads a trace.csv written by a run.");

  m.def(
      "gamma_prior_divergence",
      [](const std::string& trace_path, const std::string& prior, std::size_t reference_n, std::uint64_t seed,
         double threshold) {
        const Trace trace = read_trace_csv(trace_path);
        Rng rng(seed);
        py::list out;
        for (const auto& d : gamma_prior_divergence(trace, parse_gamma_prior(prior, trace.gamma_dim()), reference_n,
                                                    rng, threshold)) {
          py::dict row;
          row["component"] = d.component + 1;
          row["ks_statistic"] = d.ks_statistic;
          row["q025"] = d.q025;
          row["q50"] = d.q50;
          row["q975"] = d.q975;
          row["incompatible"] = d.incompatible;
          out.append(row);
        }
        return out;
      },
      py::arg("trace_path"), py::arg("prior"), py::arg("reference_n") = kDefaultReferenceDraws,
      py::arg("seed") = 1, py::arg("threshold") = kDefaultIncompatibilityThreshold,
      "KS distance between each adjustment component's posterior and its prior.");

  m.def(
      "ks_two_sample",
      [](const std::vector<double>& a, const std::vector<double>& b) { return ks_two_sample(a, b); }, py::arg("a"),
      py::arg("b"));

  m.def(
      "validate_config", [](const std::string& text) { (void)parse_config(text); }, py::arg("text"),
      "Raises ConfigError listing every problem in a config text.");

  m.def(
      "run_experiment",
      [](const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<std::string> out,
         int threads, const std::map<std::string, std::string>& overrides) {
        ConfigDocument doc = load_config_document(config_path);
        for (const auto& [k, v] : overrides) doc.set(k, v);
        py::gil_scoped_release release;
        return run_experiment(doc, {seed, out, threads}).output_dir.string();
      },
      py::arg("config_path"), py::arg("seed") = py::none(), py::arg("out") = py::none(), py::arg("threads") = 1,
      py::arg("overrides") = std::map<std::string, std::string>{},
      "Runs a config file and returns the output directory.");
}
