#pragma once

// Gaussian synthetic likelihood: moment estimation from simulated summaries,
// log-density evaluation through a Cholesky factor, and the mean-shift and
// variance-inflation adjustments.

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

namespace rbsl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point in summary-statistic space. Entries are finite.
class SummaryVector {
 public:
  SummaryVector() = default;
  /// Throws NumericalError if any entry is NaN or infinite.
  explicit SummaryVector(Vector values);

  const Vector& values() const noexcept { return values_; }
  Eigen::Index size() const noexcept { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }

 private:
  Vector values_;
};

/// Simulated mean and covariance of the summaries at one parameter value.
///
/// `sigma` is symmetrized on construction. The lower Cholesky factor is kept
/// only when `sigma` is numerically positive definite; otherwise `chol()` is
/// empty and callers treat the synthetic likelihood as -inf.
class MomentEstimate {
 public:
  MomentEstimate(Vector mu, Matrix sigma, int m);

  const Vector& mu() const noexcept { return mu_; }
  const Matrix& sigma() const noexcept { return sigma_; }
  const std::optional<Matrix>& chol() const noexcept { return chol_; }
  bool positive_definite() const noexcept { return chol_.has_value(); }
  int m() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return mu_.size(); }

 private:
  Vector mu_;
  Matrix sigma_;
  std::optional<Matrix> chol_;
  int m_;
};

enum class AdjustmentKind { MeanShift, VarianceInflation };

/// The free robustification parameters, one per summary statistic.
class AdjustmentVector {
 public:
  /// Throws DomainError when a VarianceInflation component is negative.
  AdjustmentVector(Vector gamma, AdjustmentKind kind);

  static AdjustmentVector zeros(Eigen::Index dim, AdjustmentKind kind) {
    return AdjustmentVector(Vector::Zero(dim), kind);
  }

  const Vector& gamma() const noexcept { return gamma_; }
  AdjustmentKind kind() const noexcept { return kind_; }
  Eigen::Index size() const noexcept { return gamma_.size(); }
  double operator[](Eigen::Index i) const { return gamma_[i]; }

  /// Copy with component `j` replaced (validated like the constructor).
  AdjustmentVector with(Eigen::Index j, double value) const;

 private:
  Vector gamma_;
  AdjustmentKind kind_;
};

/// Lower Cholesky factor of `a`, retrying once with a diagonal jitter of
/// 1e-10 * mean(diag(a)). Empty when both attempts fail.
std::optional<Matrix> robust_cholesky(const Matrix& a);

/// Sample mean and covariance (divisor m) of the rows of `sims` (m x d).
MomentEstimate estimate_moments(const Matrix& sims);
MomentEstimate estimate_moments(std::span<const SummaryVector> sims);

/// log N(x; mu, L L^T), evaluated by a triangular solve.
double gaussian_logpdf(const Vector& x, const Vector& mu, const Matrix& chol);
inline double gaussian_logpdf(const SummaryVector& x, const Vector& mu, const Matrix& chol) {
  return gaussian_logpdf(x.values(), mu, chol);
}

/// mu + sqrt(diag(sigma)) .* gamma
Vector mean_adjust(const MomentEstimate& est, const AdjustmentVector& gamma);

/// Covariance with each diagonal entry multiplied by (1 + gamma_i^2).
MomentEstimate variance_inflate(const MomentEstimate& est, const AdjustmentVector& gamma);

}  // namespace rbsl
