#pragma once

// Simulators and summary maps: the normal location model with its
// contaminated true process, MA(1) with a stochastic-volatility true process,
// and the toad movement model with its 48 displacement summaries.

#include <functional>
#include <string>
#include <vector>

#include "rbsl/random.hpp"
#include "rbsl/synthetic_likelihood.hpp"

namespace rbsl {

/// Raw simulated or observed data. Series are stored as one column.
using Dataset = Matrix;

/// A simulator paired with its summary map.
struct ModelSpec {
  std::string name;
  Eigen::Index d_theta = 0;
  Eigen::Index d_eta = 0;
  std::function<Dataset(const Vector& theta, Rng& rng)> simulate;
  std::function<Vector(const Dataset& data)> summarize;

  /// summarize(simulate(theta, rng)), validated for length and finiteness.
  SummaryVector simulate_summary(const Vector& theta, Rng& rng) const;
};

// ---- normal location model ----

Vector simulate_normal(double theta, int n, Rng& rng);
/// (sample mean, sample variance with divisor n - 1)
Vector summary_normal(std::span<const double> data);
Vector generate_contaminated(double theta, int n, double omega, double sigma_eps, Rng& rng);
/// Affine rescaling so the sample mean and sample sd (divisor n - 1) hit the targets.
Vector standardize_to_moments(const Vector& data, double target_mean, double target_sd);
/// sigma_eps^2 giving population variance target_sd^2 for the mixture with weight omega on N(theta, 1).
double contamination_variance(double omega, double target_sd);

ModelSpec make_normal_model(int n);

// ---- MA(1) / stochastic volatility ----

Vector simulate_ma1(double theta, int length, Rng& rng);
/// eta_j = (1/T) sum_{t=1+j}^{T} z_t z_{t-j} for each requested lag.
Vector summary_autocov(std::span<const double> series, std::span<const int> lags = {});
Vector simulate_sv(double omega, double rho, double sigma_v, int length, Rng& rng);
/// Conditional-sum-of-squares estimate of the MA(1) coefficient, on [-0.99, 0.99].
double ma1_css_estimate(std::span<const double> series);

/// Probability limits of the MA(1) summaries under the assumed model and the SV process.
Vector ma1_summary_limit(double theta);
Vector sv_summary_limit(double omega, double rho, double sigma_v);

ModelSpec make_ma1_model(int length);

// ---- toad movement model ----

/// Symmetric alpha-stable draw (Chambers-Mallows-Stuck), scale delta.
double sample_stable(double alpha, double delta, Rng& rng);

struct ToadSettings {
  int n_toads = 66;
  int n_days = 63;
};

/// Refuge locations, n_days x n_toads, metres.
Dataset simulate_toads(const Vector& theta, const ToadSettings& settings, Rng& rng);

/// Count of summary_toads tie clamps applied in this thread.
std::size_t toad_tie_clamp_count() noexcept;

inline constexpr double kToadReturnDistance = 10.0;
inline constexpr double kToadMinLogGap = 1e-8;

/// 12 statistics per lag: [returns, 10 adjacent-decile log gaps of non-returns, median of non-returns].
Vector summary_toads(const Dataset& refuges, std::span<const int> lags = {});

/// Linear interpolation between order statistics of sorted data (type 7).
double quantile_sorted(std::span<const double> sorted, double p);

ModelSpec make_toad_model(ToadSettings settings = {});

/// Model lookup by id: "normal", "ma1", "toad". `size` is n, series length or unused.
ModelSpec make_model(const std::string& id, int size, ToadSettings toads = {});

// ---- data loading ----

/// One value per line; blank lines and '#' comments ignored.
Vector load_series(const std::string& path);
/// Delimited matrix (comma, tab or spaces). Empty fields are rejected.
Dataset load_matrix(const std::string& path);

}  // namespace rbsl
