#include "rbsl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "rbsl/errors.hpp"

namespace rbsl {

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DimensionError("KS statistic needs two non-empty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  // once one sample is exhausted the gap only shrinks toward 0
  return d;
}

double ks_one_sample(std::span<const double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw DimensionError("KS statistic needs a non-empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double empirical_quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

std::vector<ComponentDiagnostic> gamma_prior_divergence(const Trace& trace, const GammaPrior& prior,
                                                        std::size_t reference_n, Rng& rng,
                                                        double threshold) {
  if (!uses_gamma(trace.meta.method) || trace.gamma_dim() == 0) {
    throw ConfigError("gamma diagnostics need a trace from a robust method");
  }
  const auto wanted = trace.meta.method == Method::RBSL_Mean ? AdjustmentKind::MeanShift
                                                             : AdjustmentKind::VarianceInflation;
  if (prior.adjustment_kind() != wanted) {
    throw ConfigError("gamma prior " + prior.describe() + " does not match trace method " +
                      to_string(trace.meta.method));
  }
  const auto rows = trace.post_burnin();
  if (rows.size() < 100) {
    throw ConfigError("gamma diagnostics need at least 100 post-burn-in rows, got " +
                      std::to_string(rows.size()));
  }
  if (reference_n == 0) throw ConfigError("reference sample size must be positive");
  std::vector<ComponentDiagnostic> out;
  std::vector<double> reference(reference_n);
  for (Eigen::Index j = 0; j < trace.gamma_dim(); ++j) {
    for (auto& r : reference) r = prior.sample(rng);
    const auto draws = trace.gamma_draws(j);
    ComponentDiagnostic diag;
    diag.component = j;
    diag.ks_statistic = ks_two_sample(draws, reference);
    const auto s = summarize_draws(draws);
    diag.q025 = s.q025;
    diag.q50 = s.median;
    diag.q975 = s.q975;
    diag.incompatible = diag.ks_statistic > threshold;
    out.push_back(diag);
  }
  return out;
}

ParameterSummary summarize_draws(std::span<const double> draws) {
  if (draws.empty()) throw DimensionError("cannot summarize an empty sample");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  ParameterSummary s;
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  s.median = quantile_sorted(sorted, 0.5);
  s.q025 = quantile_sorted(sorted, 0.025);
  s.q975 = quantile_sorted(sorted, 0.975);
  return s;
}

ChainSummary chain_summary(const Trace& trace) {
  if (trace.rows.empty()) throw DimensionError("chain summary of an empty trace");
  ChainSummary out;
  out.acceptance_rate = trace.acceptance_rate();
  auto rows = trace.post_burnin();
  out.post_burnin_rows = rows.size();
  // a trace that is all burn-in falls back to every row
  const bool all_rows = rows.empty();
  auto draws = [&](bool theta, Eigen::Index i) {
    std::vector<double> v;
    for (const auto& row : trace.rows) {
      if (all_rows || !row.burnin) v.push_back(theta ? row.theta[i] : row.gamma[i]);
    }
    return v;
  };
  for (Eigen::Index i = 0; i < trace.theta_dim(); ++i) out.theta.push_back(summarize_draws(draws(true, i)));
  for (Eigen::Index j = 0; j < trace.gamma_dim(); ++j) out.gamma.push_back(summarize_draws(draws(false, j)));
  return out;
}

std::vector<const TraceRow*> thinned_draws(const Trace& trace, long thin) {
  if (thin < 1) throw ConfigError("thin must be at least 1");
  const auto rows = trace.post_burnin();
  std::vector<const TraceRow*> out;
  for (std::size_t i = 0; i < rows.size(); i += static_cast<std::size_t>(thin)) out.push_back(rows[i]);
  return out;
}

std::vector<PredictiveStatistic> posterior_predictive(const Trace& trace, const ModelSpec& model,
                                                      const SummaryVector& observed, std::size_t n_draws,
                                                      std::uint64_t seed, PredictiveMode mode,
                                                      int scale_sims) {
  if (n_draws < 100) throw ConfigError("posterior predictive needs at least 100 draws");
  if (observed.size() != model.d_eta) throw DimensionError("observed summary length does not match the model");
  auto rows = trace.post_burnin();
  if (rows.empty()) throw ConfigError("posterior predictive needs post-burn-in rows");
  if (mode == PredictiveMode::Adjusted && (!uses_gamma(trace.meta.method) || trace.gamma_dim() != model.d_eta)) {
    throw ConfigError("adjusted predictive mode needs a robust trace with one gamma per summary");
  }
  if (mode == PredictiveMode::Adjusted && scale_sims < 2) throw ConfigError("scale_sims must be at least 2");
  // canonical row order so the result does not depend on how the trace is ordered
  auto key_less = [](const TraceRow* a, const TraceRow* b) {
    auto lex = [](const Vector& u, const Vector& v) {
      return std::lexicographical_compare(u.data(), u.data() + u.size(), v.data(), v.data() + v.size());
    };
    if (lex(a->theta, b->theta)) return true;
    if (lex(b->theta, a->theta)) return false;
    if (lex(a->gamma, b->gamma)) return true;
    if (lex(b->gamma, a->gamma)) return false;
    return a->log_like < b->log_like;
  };
  std::sort(rows.begin(), rows.end(), key_less);

  Rng pick_rng = make_stream(seed, StreamTag::Predictive);
  std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix sims(static_cast<Eigen::Index>(n_draws), model.d_eta);
  for (std::size_t k = 0; k < n_draws; ++k) {
    const TraceRow& row = *rows[pick(pick_rng)];
    Rng sim_rng = make_stream(seed, StreamTag::Predictive, k + 1, 0);
    Vector eta = model.simulate_summary(row.theta, sim_rng).values();
    if (mode == PredictiveMode::Adjusted) {
      Matrix scale_rows(scale_sims, model.d_eta);
      for (int i = 0; i < scale_sims; ++i) {
        Rng rng = make_stream(seed, StreamTag::Predictive, k + 1, static_cast<std::uint64_t>(i) + 1);
        scale_rows.row(i) = model.simulate_summary(row.theta, rng).values().transpose();
      }
      const Vector sd = estimate_moments(scale_rows).sigma().diagonal().array().sqrt();
      if (trace.meta.method == Method::RBSL_Mean) {
        eta += (sd.array() * row.gamma.array()).matrix();
      } else {
        for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] += sd[i] * row.gamma[i] * normal(sim_rng);
      }
    }
    sims.row(static_cast<Eigen::Index>(k)) = eta.transpose();
  }
  std::vector<PredictiveStatistic> out;
  for (Eigen::Index s = 0; s < model.d_eta; ++s) {
    std::vector<double> col(sims.col(s).data(), sims.col(s).data() + sims.rows());
    std::sort(col.begin(), col.end());
    PredictiveStatistic stat;
    stat.q025 = quantile_sorted(col, 0.025);
    stat.q50 = quantile_sorted(col, 0.5);
    stat.q975 = quantile_sorted(col, 0.975);
    const double obs = observed[s];
    const auto below = std::lower_bound(col.begin(), col.end(), obs) - col.begin();
    const auto ties = std::upper_bound(col.begin(), col.end(), obs) - col.begin() - below;
    stat.observed_percentile = (static_cast<double>(below) + 0.5 * static_cast<double>(ties)) /
                               static_cast<double>(col.size());
    out.push_back(stat);
  }
  return out;
}

RunEstimate estimate_from_trace(const Trace& trace, double level) {
  const auto d = trace.theta_dim();
  RunEstimate est{Vector(d), Vector(d), Vector(d)};
  const double tail = 0.5 * (1.0 - level);
  for (Eigen::Index i = 0; i < d; ++i) {
    auto draws = trace.theta_draws(i);
    if (draws.empty()) throw ConfigError("trace has no post-burn-in rows");
    std::sort(draws.begin(), draws.end());
    est.mean[i] = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(draws.size());
    est.lower[i] = quantile_sorted(draws, tail);
    est.upper[i] = quantile_sorted(draws, 1.0 - tail);
  }
  return est;
}

RunEstimate estimate_from_weights(const Matrix& theta, const Vector& weights, double level) {
  if (theta.rows() != weights.size() || theta.rows() == 0) throw DimensionError("weights do not match draws");
  const auto d = theta.cols();
  RunEstimate est{Vector(d), Vector(d), Vector(d)};
  const double total = weights.sum();
  const double tail = 0.5 * (1.0 - level);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(theta.rows()));
  for (Eigen::Index i = 0; i < d; ++i) {
    est.mean[i] = theta.col(i).dot(weights) / total;
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return theta(a, i) < theta(b, i); });
    auto weighted_quantile = [&](double p) {
      double cumulative = 0.0;
      for (auto k : order) {
        cumulative += weights[k] / total;
        if (cumulative >= p) return theta(k, i);
      }
      return theta(order.back(), i);
    };
    est.lower[i] = weighted_quantile(tail);
    est.upper[i] = weighted_quantile(1.0 - tail);
  }
  return est;
}

AccuracyRow accuracy_table(std::span<const RunEstimate> runs, const Vector& true_theta, const std::string& label) {
  if (runs.size() < 2) throw ConfigError("accuracy table needs at least two runs");
  const auto d = true_theta.size();
  AccuracyRow row{label, Vector::Zero(d), Vector::Zero(d), Vector::Zero(d), Vector::Zero(d), runs.size()};
  for (const auto& run : runs) {
    if (run.mean.size() != d) throw DimensionError("run estimate dimension mismatch");
    const Vector err = run.mean - true_theta;
    row.bias += err;
    row.rmse += err.array().square().matrix();
    row.length += run.upper - run.lower;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (run.lower[i] <= true_theta[i] && true_theta[i] <= run.upper[i]) row.coverage[i] += 1.0;
    }
  }
  const double n = static_cast<double>(runs.size());
  row.bias /= n;
  row.rmse = (row.rmse / n).array().sqrt();
  row.length /= n;
  row.coverage /= n;
  return row;
}

AccuracyRow accuracy_table(std::span<const Trace> traces, const Vector& true_theta, const std::string& label,
                           double level) {
  std::vector<RunEstimate> runs;
  for (const auto& t : traces) runs.push_back(estimate_from_trace(t, level));
  return accuracy_table(runs, true_theta, label);
}

DensityGrid weighted_density(std::span<const double> values, std::span<const double> weights, double lower,
                             double upper, std::size_t points, double bandwidth) {
  if (values.size() != weights.size() || values.empty()) throw DimensionError("weights do not match values");
  if (points < 2 || !(upper > lower) || !(bandwidth > 0.0)) throw ConfigError("bad density grid");
  DensityGrid grid;
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double norm = 1.0 / (total * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < points; ++g) {
    const double x = lower + (upper - lower) * static_cast<double>(g) / static_cast<double>(points - 1);
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (weights[i] == 0.0) continue;
      const double z = (x - values[i]) / bandwidth;
      s += weights[i] * std::exp(-0.5 * z * z);
    }
    grid.x.push_back(x);
    grid.density.push_back(s * norm);
  }
  return grid;
}

std::vector<double> density_modes(const DensityGrid& grid, double min_relative_height) {
  std::vector<double> modes;
  const auto& f = grid.density;
  if (f.size() < 3) return modes;
  const double top = *std::max_element(f.begin(), f.end());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    if (f[i] >= f[i - 1] && f[i] > f[i + 1] && f[i] >= min_relative_height * top) modes.push_back(grid.x[i]);
  }
  return modes;
}

}  // namespace rbsl
