#include "rbsl/synthetic_likelihood.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rbsl/errors.hpp"

namespace rbsl {

SummaryVector::SummaryVector(Vector values) : values_(std::move(values)) {
  if (!values_.allFinite()) {
    throw NumericalError("summary vector contains non-finite entries");
  }
}

std::optional<Matrix> robust_cholesky(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) {
    Matrix l = llt.matrixL();
    if (l.diagonal().minCoeff() > 0.0) return l;
  }
  const double jitter = 1e-10 * a.diagonal().mean();
  if (!(jitter > 0.0)) return std::nullopt;
  Matrix b = a;
  b.diagonal().array() += jitter;
  llt.compute(b);
  if (llt.info() == Eigen::Success) {
    Matrix l = llt.matrixL();
    if (l.diagonal().minCoeff() > 0.0) return l;
  }
  return std::nullopt;
}

MomentEstimate::MomentEstimate(Vector mu, Matrix sigma, int m)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), m_(m) {
  if (m_ < 2) throw DimensionError("moment estimate needs at least 2 simulations");
  if (sigma_.rows() != mu_.size() || sigma_.cols() != mu_.size()) {
    throw DimensionError("covariance shape does not match mean length");
  }
  sigma_ = (0.5 * (sigma_ + sigma_.transpose())).eval();
  chol_ = robust_cholesky(sigma_);
}

MomentEstimate estimate_moments(const Matrix& sims) {
  const auto m = sims.rows();
  if (m < 2) {
    throw DimensionError("estimate_moments needs at least 2 simulations, got " +
                         std::to_string(m));
  }
  Vector mu = sims.colwise().mean().transpose();
  Matrix centered = sims.rowwise() - mu.transpose();
  Matrix sigma = (centered.transpose() * centered) / static_cast<double>(m);
  return MomentEstimate(std::move(mu), std::move(sigma), static_cast<int>(m));
}

MomentEstimate estimate_moments(std::span<const SummaryVector> sims) {
  if (sims.size() < 2) {
    throw DimensionError("estimate_moments needs at least 2 simulations, got " +
                         std::to_string(sims.size()));
  }
  const auto d = sims.front().size();
  Matrix rows(static_cast<Eigen::Index>(sims.size()), d);
  for (std::size_t i = 0; i < sims.size(); ++i) {
    if (sims[i].size() != d) throw DimensionError("simulated summaries differ in length");
    rows.row(static_cast<Eigen::Index>(i)) = sims[i].values().transpose();
  }
  return estimate_moments(rows);
}

double gaussian_logpdf(const Vector& x, const Vector& mu, const Matrix& chol) {
  const auto d = x.size();
  if (mu.size() != d || chol.rows() != d || chol.cols() != d) {
    throw DimensionError("gaussian_logpdf: dimension mismatch");
  }
  const Vector z = chol.triangularView<Eigen::Lower>().solve(x - mu);
  const double log_det_half = chol.diagonal().array().log().sum();
  return -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) - log_det_half -
         0.5 * z.squaredNorm();
}

Vector mean_adjust(const MomentEstimate& est, const AdjustmentVector& gamma) {
  if (gamma.size() != est.dim()) throw DimensionError("mean_adjust: dimension mismatch");
  const auto diag = est.sigma().diagonal();
  if ((diag.array() < 0.0).any()) {
    throw NumericalError("mean_adjust: negative variance on covariance diagonal");
  }
  return est.mu() + (diag.array().sqrt() * gamma.gamma().array()).matrix();
}

MomentEstimate variance_inflate(const MomentEstimate& est, const AdjustmentVector& gamma) {
  if (gamma.size() != est.dim()) throw DimensionError("variance_inflate: dimension mismatch");
  Matrix inflated = est.sigma();
  inflated.diagonal().array() += est.sigma().diagonal().array() * gamma.gamma().array().square();
  return MomentEstimate(est.mu(), std::move(inflated), est.m());
}

AdjustmentVector::AdjustmentVector(Vector gamma, AdjustmentKind kind)
    : gamma_(std::move(gamma)), kind_(kind) {
  if (kind_ == AdjustmentKind::VarianceInflation && (gamma_.array() < 0.0).any()) {
    throw DomainError("variance inflation factors must be nonnegative");
  }
}

AdjustmentVector AdjustmentVector::with(Eigen::Index j, double value) const {
  Vector g = gamma_;
  g[j] = value;
  return AdjustmentVector(std::move(g), kind_);
}

}  // namespace rbsl
