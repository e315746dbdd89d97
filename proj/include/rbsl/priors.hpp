#pragma once

// Priors for the model parameters and the adjustment vector, and the
// bijections used to run random-walk proposals on an unconstrained scale.

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rbsl/random.hpp"
#include "rbsl/synthetic_likelihood.hpp"

namespace rbsl {

/// I.i.d. prior on every adjustment component.
///
/// Laplace: location 0, scale `hyper`. Exponential: mean `hyper` (rate 1/hyper).
struct GammaPrior {
  enum class Kind { Laplace, Exponential };

  Kind kind = Kind::Laplace;
  double hyper = 0.5;
  Eigen::Index dim = 0;

  static GammaPrior laplace(double scale, Eigen::Index dim);
  static GammaPrior exponential(double mean, Eigen::Index dim);

  AdjustmentKind adjustment_kind() const noexcept {
    return kind == Kind::Laplace ? AdjustmentKind::MeanShift : AdjustmentKind::VarianceInflation;
  }
  double log_density(double g) const noexcept;
  double cdf(double g) const noexcept;
  double sample(Rng& rng) const;
  std::string describe() const;
};

double gamma_log_prior(const AdjustmentVector& gamma, const GammaPrior& prior);

/// `n` i.i.d. draws from the prior. Throws ConfigError when n == 0.
std::vector<AdjustmentVector> sample_gamma_prior(const GammaPrior& prior, std::size_t n, Rng& rng);

/// Parses "laplace:0.5" or "exponential:0.5".
GammaPrior parse_gamma_prior(const std::string& text, Eigen::Index dim);

struct UniformPrior {
  double lower;
  double upper;
};

struct NormalPrior {
  double mean;
  double variance;
};

/// User-supplied log density on (lower, upper); `sample` is optional.
struct CustomPrior {
  std::function<double(double)> log_density;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  std::function<double(Rng&)> sample;
};

using PriorDensity = std::variant<UniformPrior, NormalPrior, CustomPrior>;

/// Strictly monotone map from a parameter's support onto the real line.
struct Transform {
  enum class Kind { Identity, Log, LogitAffine };

  Kind kind = Kind::Identity;
  double lower = 0.0;  // Log: theta = lower + exp(x)
  double upper = 1.0;  // LogitAffine: theta = lower + (upper - lower) * logistic(x)

  static Transform identity() { return {}; }
  static Transform log(double lower = 0.0) { return {Kind::Log, lower, 0.0}; }
  static Transform logit(double lower, double upper) { return {Kind::LogitAffine, lower, upper}; }

  double to_unconstrained(double theta) const;
  double from_unconstrained(double x) const noexcept;
  /// log |d theta / d x|
  double log_jacobian(double x) const noexcept;
};

struct ThetaComponent {
  PriorDensity density;
  Transform transform;
};

class ThetaPrior {
 public:
  ThetaPrior() = default;
  explicit ThetaPrior(std::vector<ThetaComponent> components);

  /// Uniform with a logit transform onto its interval.
  static ThetaComponent uniform(double lower, double upper);
  static ThetaComponent normal(double mean, double variance);

  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(components_.size()); }
  const std::vector<ThetaComponent>& components() const noexcept { return components_; }

  double log_density(const Vector& theta) const;
  Vector to_unconstrained(const Vector& theta) const;
  Vector from_unconstrained(const Vector& x) const;
  double log_jacobian(const Vector& x) const;
  /// Prior log density of from_unconstrained(x) plus the Jacobian term.
  double log_density_unconstrained(const Vector& x) const;
  Vector sample(Rng& rng) const;

 private:
  std::vector<ThetaComponent> components_;
};

double theta_log_prior(const Vector& theta, const ThetaPrior& prior);

}  // namespace rbsl
