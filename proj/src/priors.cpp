#include "rbsl/priors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rbsl/errors.hpp"

namespace rbsl {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log1p_exp(double x) noexcept { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

GammaPrior GammaPrior::laplace(double scale, Eigen::Index dim) {
  if (!(scale > 0.0)) throw ConfigError("laplace scale must be positive");
  return {Kind::Laplace, scale, dim};
}

GammaPrior GammaPrior::exponential(double mean, Eigen::Index dim) {
  if (!(mean > 0.0)) throw ConfigError("exponential mean must be positive");
  return {Kind::Exponential, mean, dim};
}

double GammaPrior::log_density(double g) const noexcept {
  if (kind == Kind::Laplace) return -std::log(2.0 * hyper) - std::abs(g) / hyper;
  if (g < 0.0) return kNegInf;
  return -std::log(hyper) - g / hyper;
}

double GammaPrior::cdf(double g) const noexcept {
  if (kind == Kind::Laplace) {
    return g < 0.0 ? 0.5 * std::exp(g / hyper) : 1.0 - 0.5 * std::exp(-g / hyper);
  }
  return g <= 0.0 ? 0.0 : -std::expm1(-g / hyper);
}

double GammaPrior::sample(Rng& rng) const {
  std::exponential_distribution<double> expo(1.0 / hyper);
  if (kind == Kind::Exponential) return expo(rng);
  std::bernoulli_distribution sign(0.5);
  const double magnitude = expo(rng);
  return sign(rng) ? magnitude : -magnitude;
}

std::string GammaPrior::describe() const {
  std::ostringstream out;
  out.precision(17);
  out << (kind == Kind::Laplace ? "laplace:" : "exponential:") << hyper;
  return out.str();
}

double gamma_log_prior(const AdjustmentVector& gamma, const GammaPrior& prior) {
  if (gamma.kind() != prior.adjustment_kind()) {
    throw ConfigError("gamma prior kind does not match the adjustment kind");
  }
  if (gamma.size() != prior.dim) throw DimensionError("gamma prior dimension does not match the adjustment vector");
  double total = 0.0;
  for (Eigen::Index j = 0; j < gamma.size(); ++j) total += prior.log_density(gamma[j]);
  return total;
}

std::vector<AdjustmentVector> sample_gamma_prior(const GammaPrior& prior, std::size_t n, Rng& rng) {
  if (n == 0) throw ConfigError("sample_gamma_prior: n must be at least 1");
  std::vector<AdjustmentVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector g(prior.dim);
    for (Eigen::Index j = 0; j < prior.dim; ++j) g[j] = prior.sample(rng);
    out.emplace_back(std::move(g), prior.adjustment_kind());
  }
  return out;
}

GammaPrior parse_gamma_prior(const std::string& text, Eigen::Index dim) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("gamma prior must look like kind:hyper, got '" + text + "'");
  }
  const std::string kind = text.substr(0, colon);
  double hyper = 0.0;
  try {
    std::size_t used = 0;
    hyper = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigError("gamma prior hyperparameter is not a number: '" + text + "'");
  }
  if (kind == "laplace") return GammaPrior::laplace(hyper, dim);
  if (kind == "exponential") return GammaPrior::exponential(hyper, dim);
  throw ConfigError("unknown gamma prior kind '" + kind + "'");
}

double Transform::to_unconstrained(double theta) const {
  switch (kind) {
    case Kind::Identity:
      return theta;
    case Kind::Log:
      if (!(theta > lower)) throw DomainError("log transform: value on or below the lower bound");
      return std::log(theta - lower);
    case Kind::LogitAffine: {
      if (!(theta > lower && theta < upper)) {
        throw DomainError("logit transform: value not strictly inside the interval");
      }
      const double u = (theta - lower) / (upper - lower);
      return std::log(u) - std::log1p(-u);
    }
  }
  return theta;
}

double Transform::from_unconstrained(double x) const noexcept {
  switch (kind) {
    case Kind::Identity:
      return x;
    case Kind::Log:
      return lower + std::exp(x);
    case Kind::LogitAffine:
      return lower + (upper - lower) * logistic(x);
  }
  return x;
}

double Transform::log_jacobian(double x) const noexcept {
  switch (kind) {
    case Kind::Identity:
      return 0.0;
    case Kind::Log:
      return x;
    case Kind::LogitAffine:
      // log[(b - a) * s(x) * (1 - s(x))]
      return std::log(upper - lower) - log1p_exp(-x) - log1p_exp(x);
  }
  return 0.0;
}

ThetaPrior::ThetaPrior(std::vector<ThetaComponent> components)
    : components_(std::move(components)) {
  for (const auto& c : components_) {
    if (const auto* u = std::get_if<UniformPrior>(&c.density)) {
      if (!(u->upper > u->lower)) throw ConfigError("uniform prior needs lower < upper");
    } else if (const auto* n = std::get_if<NormalPrior>(&c.density)) {
      if (!(n->variance > 0.0)) throw ConfigError("normal prior variance must be positive");
    } else if (!std::get<CustomPrior>(c.density).log_density) {
      throw ConfigError("custom prior needs a log density");
    }
    if (c.transform.kind == Transform::Kind::LogitAffine && !(c.transform.upper > c.transform.lower)) {
      throw ConfigError("logit transform needs lower < upper");
    }
  }
}

ThetaComponent ThetaPrior::uniform(double lower, double upper) {
  return {UniformPrior{lower, upper}, Transform::logit(lower, upper)};
}

ThetaComponent ThetaPrior::normal(double mean, double variance) {
  return {NormalPrior{mean, variance}, Transform::identity()};
}

double ThetaPrior::log_density(const Vector& theta) const {
  if (theta.size() != dim()) throw DimensionError("theta prior: dimension mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const double t = theta[i];
    const auto& density = components_[static_cast<std::size_t>(i)].density;
    if (const auto* u = std::get_if<UniformPrior>(&density)) {
      if (!(t >= u->lower && t <= u->upper)) return kNegInf;
      total -= std::log(u->upper - u->lower);
    } else if (const auto* n = std::get_if<NormalPrior>(&density)) {
      const double z = t - n->mean;
      total += -0.5 * std::log(2.0 * std::numbers::pi * n->variance) - 0.5 * z * z / n->variance;
    } else {
      const auto& c = std::get<CustomPrior>(density);
      if (!(t > c.lower && t < c.upper)) return kNegInf;
      total += c.log_density(t);
    }
  }
  return total;
}

Vector ThetaPrior::to_unconstrained(const Vector& theta) const {
  if (theta.size() != dim()) throw DimensionError("theta prior: dimension mismatch");
  Vector x(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    x[i] = components_[static_cast<std::size_t>(i)].transform.to_unconstrained(theta[i]);
  }
  return x;
}

Vector ThetaPrior::from_unconstrained(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError("theta prior: dimension mismatch");
  Vector theta(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    theta[i] = components_[static_cast<std::size_t>(i)].transform.from_unconstrained(x[i]);
  }
  return theta;
}

double ThetaPrior::log_jacobian(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError("theta prior: dimension mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < dim(); ++i) {
    total += components_[static_cast<std::size_t>(i)].transform.log_jacobian(x[i]);
  }
  return total;
}

double ThetaPrior::log_density_unconstrained(const Vector& x) const {
  const double lp = log_density(from_unconstrained(x));
  if (lp == kNegInf) return lp;
  return lp + log_jacobian(x);
}

Vector ThetaPrior::sample(Rng& rng) const {
  Vector theta(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const auto& density = components_[static_cast<std::size_t>(i)].density;
    if (const auto* u = std::get_if<UniformPrior>(&density)) {
      theta[i] = std::uniform_real_distribution<double>(u->lower, u->upper)(rng);
    } else if (const auto* n = std::get_if<NormalPrior>(&density)) {
      theta[i] = std::normal_distribution<double>(n->mean, std::sqrt(n->variance))(rng);
    } else {
      const auto& c = std::get<CustomPrior>(density);
      if (!c.sample) throw ConfigError("custom prior has no sampler");
      theta[i] = c.sample(rng);
    }
  }
  return theta;
}

double theta_log_prior(const Vector& theta, const ThetaPrior& prior) {
  return prior.log_density(theta);
}

}  // namespace rbsl
