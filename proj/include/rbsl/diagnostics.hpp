#pragma once

// Post-processing of traces: adjustment-vs-prior comparison, chain
// summaries, posterior predictive checks and repeated-sampling accuracy.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rbsl/models.hpp"
#include "rbsl/priors.hpp"
#include "rbsl/trace.hpp"

namespace rbsl {

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
double ks_two_sample(std::span<const double> a, std::span<const double> b);
/// One-sample statistic against a continuous CDF.
double ks_one_sample(std::span<const double> a, const std::function<double(double)>& cdf);

/// Empirical quantile (linear interpolation between order statistics).
double empirical_quantile(std::vector<double> values, double p);

struct ComponentDiagnostic {
  Eigen::Index component = 0;
  double ks_statistic = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  bool incompatible = false;
};

inline constexpr double kDefaultIncompatibilityThreshold = 0.3;
inline constexpr std::size_t kDefaultReferenceDraws = 100000;

/// Compares each post-burn-in gamma_j with `reference_n` fresh prior draws.
std::vector<ComponentDiagnostic> gamma_prior_divergence(const Trace& trace, const GammaPrior& prior,
                                                        std::size_t reference_n, Rng& rng,
                                                        double threshold = kDefaultIncompatibilityThreshold);

struct ParameterSummary {
  double mean = 0.0;
  double median = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

struct ChainSummary {
  double acceptance_rate = 0.0;
  std::vector<ParameterSummary> theta;
  std::vector<ParameterSummary> gamma;
  std::size_t post_burnin_rows = 0;
};

ParameterSummary summarize_draws(std::span<const double> draws);
ChainSummary chain_summary(const Trace& trace);
/// Every `thin`-th post-burn-in row, as (theta, gamma) pairs, for plotting.
std::vector<const TraceRow*> thinned_draws(const Trace& trace, long thin);

struct PredictiveStatistic {
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  /// Fraction of predictive draws strictly below the observed value (ties count half).
  double observed_percentile = 0.0;
};

enum class PredictiveMode { Raw, Adjusted };

/// Simulates once per resampled post-burn-in row. In adjusted mode the
/// row's gamma shift (mean method) or gamma-inflated Gaussian noise
/// (variance method) is added, scaled by the summary standard deviations
/// estimated from `scale_sims` simulations at that row's theta.
std::vector<PredictiveStatistic> posterior_predictive(const Trace& trace, const ModelSpec& model,
                                                      const SummaryVector& observed, std::size_t n_draws,
                                                      std::uint64_t seed,
                                                      PredictiveMode mode = PredictiveMode::Raw,
                                                      int scale_sims = 50);

/// Posterior point and interval summary of one run, per parameter.
struct RunEstimate {
  Vector mean;
  Vector lower;
  Vector upper;
};

RunEstimate estimate_from_trace(const Trace& trace, double level = 0.95);
/// Weighted mean and equal-tailed weighted quantiles.
RunEstimate estimate_from_weights(const Matrix& theta, const Vector& weights, double level = 0.95);

struct AccuracyRow {
  std::string label;
  Vector bias;
  Vector rmse;
  Vector length;
  Vector coverage;
  std::size_t runs = 0;
};

AccuracyRow accuracy_table(std::span<const RunEstimate> runs, const Vector& true_theta,
                           const std::string& label = "");
AccuracyRow accuracy_table(std::span<const Trace> traces, const Vector& true_theta,
                           const std::string& label = "", double level = 0.95);

/// Gaussian-kernel weighted density of a 1-D sample on an even grid.
struct DensityGrid {
  std::vector<double> x;
  std::vector<double> density;
};

DensityGrid weighted_density(std::span<const double> values, std::span<const double> weights, double lower,
                             double upper, std::size_t points, double bandwidth);
/// Grid positions of strict local maxima whose height is at least
/// `min_relative_height` times the global maximum.
std::vector<double> density_modes(const DensityGrid& grid, double min_relative_height = 0.05);

}  // namespace rbsl
