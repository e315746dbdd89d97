#pragma once

// Component-wise robust BSL sampler: a slice-sampler sweep over the
// adjustment vector with the simulations held fixed, then a pseudo-marginal
// random-walk update of theta. Also a prior importance sampler for plain BSL.

#include <cstdint>
#include <functional>
#include <optional>

#include "rbsl/models.hpp"
#include "rbsl/priors.hpp"
#include "rbsl/random.hpp"
#include "rbsl/synthetic_likelihood.hpp"
#include "rbsl/trace.hpp"

namespace rbsl {

/// Synthetic log-likelihood of `observed`. `gamma` is ignored for BSL and
/// required otherwise. Returns -inf when the needed factorization fails.
double synthetic_loglike(const SummaryVector& observed, const MomentEstimate& moments,
                         const AdjustmentVector* gamma, Method method);

struct SliceOptions {
  double width = 1.0;
  /// Support boundary: stepping out to the left stops here and the interval is clamped to it.
  std::optional<double> lower_bound;
  int max_step_out = 1000;
  int max_shrink = 1000;
};

/// One stepping-out / shrinkage slice-sampling transition from x0.
/// Throws SamplerError when either loop exceeds its cap.
double slice_sample(double x0, const std::function<double(double)>& log_density, Rng& rng,
                    const SliceOptions& options = {});

struct ChainState {
  Vector theta;
  std::optional<AdjustmentVector> gamma;
  MomentEstimate moments;
  double log_like = 0.0;
  double log_prior_theta = 0.0;
  double log_prior_gamma = 0.0;
};

/// Draw of gamma_j from its full conditional given the cached moments.
/// No simulation happens here.
double slice_update_gamma(Eigen::Index j, const ChainState& state, const SummaryVector& observed,
                          Method method, const GammaPrior& prior, Rng& rng);

struct SamplerSettings {
  Method method = Method::BSL;
  int m = 100;
  ThetaPrior theta_prior;
  std::optional<GammaPrior> gamma_prior;
  /// Random-walk covariance on the unconstrained scale.
  Matrix proposal_cov;
  Vector theta_init;
  long iterations = 0;
  long burn_in = 0;
  long thin = 1;
  std::uint64_t seed = 0;
  int threads = 1;

  /// Throws ConfigError describing the first inconsistency.
  void validate(const ModelSpec& model) const;
};

/// Runs batches of model simulations with one random stream per
/// (seed, tag, batch index, simulation index), so results do not depend on
/// the thread count.
class SimulationEngine {
 public:
  SimulationEngine(const ModelSpec& model, std::uint64_t seed, StreamTag tag, int threads = 1);

  /// m x d_eta simulated summaries, or nullopt when any simulation fails.
  std::optional<Matrix> simulate(const Vector& theta, int m, std::uint64_t batch);
  std::optional<MomentEstimate> estimate(const Vector& theta, int m, std::uint64_t batch);

  long calls() const noexcept { return calls_; }
  long failures() const noexcept { return failures_; }

 private:
  const ModelSpec& model_;
  std::uint64_t seed_;
  StreamTag tag_;
  int threads_;
  long calls_ = 0;
  long failures_ = 0;
};

/// Log-density ratio log q(x | x*) - log q(x* | x) of the Gaussian random walk.
double proposal_log_ratio(const Vector& x, const Vector& x_star, const Matrix& proposal_chol);

class ChainRunner {
 public:
  ChainRunner(const ModelSpec& model, SummaryVector observed, SamplerSettings settings);

  /// m simulations at theta_init; gamma starts at zero.
  ChainState initial_state();
  /// Slice sweep over j = 1..d_eta, then log_like recomputed at the new gamma.
  void update_gamma(ChainState& state, Rng& rng) const;
  /// Pseudo-marginal random-walk step. Returns whether theta moved.
  bool update_theta(ChainState& state, long iteration, Rng& rng);
  Trace run();

  const SimulationEngine& engine() const noexcept { return engine_; }
  const SamplerSettings& settings() const noexcept { return settings_; }
  long simulation_failures() const noexcept { return engine_.failures(); }

 private:
  const ModelSpec& model_;
  SummaryVector observed_;
  SamplerSettings settings_;
  Matrix proposal_chol_;
  SimulationEngine engine_;
  long proposals_ = 0;
};

Trace run_chain(const ModelSpec& model, const SummaryVector& observed, const SamplerSettings& settings);

/// Doubles or halves the proposal standard deviation over short pilot runs
/// until the acceptance rate falls in [low, high]. Returns the tuned covariance.
Matrix tune_proposal(const ModelSpec& model, const SummaryVector& observed, SamplerSettings settings,
                     long pilot_iterations = 2000, int max_rounds = 8, double low = 0.15,
                     double high = 0.40);

struct ImportanceSample {
  Matrix theta;         // N x d_theta prior draws
  Vector log_weights;   // estimated synthetic log-likelihoods
  Vector weights;       // self-normalized
  double ess = 0.0;     // (sum w)^2 / sum w^2
  long simulation_failures = 0;
};

/// Prior importance sampling of the BSL posterior. Throws
/// DegenerateSampleError when every weight is zero.
ImportanceSample importance_sample_bsl(const ThetaPrior& prior, long draws, int m, const ModelSpec& model,
                                       const SummaryVector& observed, std::uint64_t seed, int threads = 1);

/// Self-normalized weights and effective sample size from log weights.
std::pair<Vector, double> normalize_log_weights(const Vector& log_weights);

}  // namespace rbsl
