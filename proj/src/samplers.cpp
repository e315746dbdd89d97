#include "rbsl/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "rbsl/errors.hpp"

namespace rbsl {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

double synthetic_loglike(const SummaryVector& observed, const MomentEstimate& moments,
                         const AdjustmentVector* gamma, Method method) {
  if (observed.size() != moments.dim()) throw DimensionError("observed summary length mismatch");
  switch (method) {
    case Method::BSL:
      if (!moments.chol()) return kNegInf;
      return gaussian_logpdf(observed, moments.mu(), *moments.chol());
    case Method::RBSL_Mean:
      if (gamma == nullptr) throw ConfigError("mean adjustment needs a gamma vector");
      if (!moments.chol()) return kNegInf;
      return gaussian_logpdf(observed, mean_adjust(moments, *gamma), *moments.chol());
    case Method::RBSL_Variance: {
      if (gamma == nullptr) throw ConfigError("variance inflation needs a gamma vector");
      const MomentEstimate inflated = variance_inflate(moments, *gamma);
      if (!inflated.chol()) return kNegInf;
      return gaussian_logpdf(observed, inflated.mu(), *inflated.chol());
    }
  }
  return kNegInf;
}

double slice_sample(double x0, const std::function<double(double)>& log_density, Rng& rng,
                    const SliceOptions& options) {
  const double w = options.width;
  if (!(w > 0.0)) throw ConfigError("slice width must be positive");
  const double f0 = log_density(x0);
  if (std::isnan(f0) || f0 == kNegInf) {
    throw SamplerError("slice sampler started at a point with zero density");
  }
  const double level = f0 + std::log(uniform_open(rng));

  double left = x0 - w * uniform_open(rng);
  double right = left + w;
  const double bound = options.lower_bound.value_or(-std::numeric_limits<double>::infinity());
  for (int steps = 0; left > bound && log_density(left) > level; left -= w) {
    if (++steps > options.max_step_out) {
      throw SamplerError("slice stepping-out exceeded " + std::to_string(options.max_step_out) +
                         " expansions to the left from x0=" + std::to_string(x0));
    }
  }
  left = std::max(left, bound);
  for (int steps = 0; log_density(right) > level; right += w) {
    if (++steps > options.max_step_out) {
      throw SamplerError("slice stepping-out exceeded " + std::to_string(options.max_step_out) +
                         " expansions to the right from x0=" + std::to_string(x0));
    }
  }

  for (int shrinks = 0; shrinks < options.max_shrink; ++shrinks) {
    const double x1 = left + (right - left) * uniform_open(rng);
    if (log_density(x1) > level) return x1;
    if (x1 < x0) {
      left = x1;
    } else {
      right = x1;
    }
  }
  throw SamplerError("slice shrinkage exceeded " + std::to_string(options.max_shrink) +
                     " iterations around x0=" + std::to_string(x0));
}

double slice_update_gamma(Eigen::Index j, const ChainState& state, const SummaryVector& observed,
                          Method method, const GammaPrior& prior, Rng& rng) {
  if (!state.gamma) throw ConfigError("slice_update_gamma needs a gamma vector");
  const AdjustmentVector& current = *state.gamma;
  if (current.kind() != prior.adjustment_kind()) {
    throw ConfigError("gamma prior kind does not match the method");
  }
  auto conditional = [&](double g) {
    const double lp = prior.log_density(g);
    if (lp == kNegInf) return kNegInf;
    const AdjustmentVector candidate = current.with(j, g);
    return synthetic_loglike(observed, state.moments, &candidate, method) + lp;
  };
  SliceOptions options;
  if (current.kind() == AdjustmentKind::VarianceInflation) options.lower_bound = 0.0;
  return slice_sample(current[j], conditional, rng, options);
}

void SamplerSettings::validate(const ModelSpec& model) const {
  if (m < 2) throw ConfigError("m must be at least 2");
  if (m < model.d_eta + 1) {
    throw ConfigError("m = " + std::to_string(m) + " is too small for " +
                      std::to_string(model.d_eta) + " summaries (need m >= d_eta + 1)");
  }
  if (iterations < 0) throw ConfigError("iterations must be nonnegative");
  if (burn_in < 0 || burn_in > iterations) throw ConfigError("burn_in must lie in [0, iterations]");
  if (thin < 1) throw ConfigError("thin must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (theta_prior.dim() != model.d_theta) throw ConfigError("theta prior dimension does not match the model");
  if (theta_init.size() != model.d_theta) throw ConfigError("initial theta dimension does not match the model");
  if (theta_prior.log_density(theta_init) == kNegInf) {
    throw ConfigError("initial theta lies outside the prior support");
  }
  try {
    (void)theta_prior.to_unconstrained(theta_init);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("initial theta: ") + e.what());
  }
  if (proposal_cov.rows() != model.d_theta || proposal_cov.cols() != model.d_theta) {
    throw ConfigError("proposal covariance must be d_theta x d_theta");
  }
  Eigen::LLT<Matrix> llt(proposal_cov);
  if (llt.info() != Eigen::Success) throw ConfigError("proposal covariance is not positive definite");
  if (uses_gamma(method)) {
    if (!gamma_prior) throw ConfigError("method " + to_string(method) + " needs a gamma prior");
    const auto wanted = method == Method::RBSL_Mean ? AdjustmentKind::MeanShift
                                                    : AdjustmentKind::VarianceInflation;
    if (gamma_prior->adjustment_kind() != wanted) {
      throw ConfigError("method " + to_string(method) + " is inconsistent with gamma prior " +
                        gamma_prior->describe());
    }
    if (gamma_prior->dim != model.d_eta) throw ConfigError("gamma prior dimension must equal d_eta");
  }
}

SimulationEngine::SimulationEngine(const ModelSpec& model, std::uint64_t seed, StreamTag tag, int threads)
    : model_(model), seed_(seed), tag_(tag), threads_(std::max(1, threads)) {}

std::optional<Matrix> SimulationEngine::simulate(const Vector& theta, int m, std::uint64_t batch) {
  Matrix out(m, model_.d_eta);
  std::vector<char> failed(static_cast<std::size_t>(m), 0);
  auto run_range = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Rng rng = make_stream(seed_, tag_, batch, static_cast<std::uint64_t>(i));
      try {
        out.row(i) = model_.simulate_summary(theta, rng).values().transpose();
      } catch (const Error&) {
        failed[static_cast<std::size_t>(i)] = 1;
      }
    }
  };
  const int workers = std::min(threads_, m);
  if (workers <= 1) {
    run_range(0, m);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    {
      std::vector<std::jthread> pool;
      for (int w = 0; w < workers; ++w) {
        const int begin = m * w / workers, end = m * (w + 1) / workers;
        pool.emplace_back([&, w, begin, end] {
          try {
            run_range(begin, end);
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  calls_ += m;
  long n_failed = 0;
  for (char f : failed) n_failed += f;
  failures_ += n_failed;
  if (n_failed > 0) return std::nullopt;
  return out;
}

std::optional<MomentEstimate> SimulationEngine::estimate(const Vector& theta, int m, std::uint64_t batch) {
  auto sims = simulate(theta, m, batch);
  if (!sims) return std::nullopt;
  return estimate_moments(*sims);
}

double proposal_log_ratio(const Vector& x, const Vector& x_star, const Matrix& proposal_chol) {
  const Vector forward = proposal_chol.triangularView<Eigen::Lower>().solve(x_star - x);
  const Vector reverse = proposal_chol.triangularView<Eigen::Lower>().solve(x - x_star);
  return -0.5 * reverse.squaredNorm() + 0.5 * forward.squaredNorm();
}

ChainRunner::ChainRunner(const ModelSpec& model, SummaryVector observed, SamplerSettings settings)
    : model_(model),
      observed_(std::move(observed)),
      settings_(std::move(settings)),
      engine_(model_, settings_.seed, StreamTag::Simulation, settings_.threads) {
  settings_.validate(model_);
  if (observed_.size() != model_.d_eta) throw ConfigError("observed summary length does not match the model");
  proposal_chol_ = Eigen::LLT<Matrix>(settings_.proposal_cov).matrixL();
}

ChainState ChainRunner::initial_state() {
  auto moments = engine_.estimate(settings_.theta_init, settings_.m, 0);
  if (!moments) throw SamplerError("model simulations failed at the initial theta");
  ChainState state{settings_.theta_init, std::nullopt, std::move(*moments), 0.0, 0.0, 0.0};
  state.log_prior_theta = settings_.theta_prior.log_density(state.theta);
  if (uses_gamma(settings_.method)) {
    state.gamma = AdjustmentVector::zeros(model_.d_eta, settings_.gamma_prior->adjustment_kind());
    state.log_prior_gamma = gamma_log_prior(*state.gamma, *settings_.gamma_prior);
  }
  state.log_like = synthetic_loglike(observed_, state.moments, state.gamma ? &*state.gamma : nullptr,
                                     settings_.method);
  return state;
}

void ChainRunner::update_gamma(ChainState& state, Rng& rng) const {
  if (!state.gamma) return;
  // With a non-PD covariance every gamma has zero conditional density; wait
  // for the next accepted theta instead.
  if (state.log_like == kNegInf) return;
  const GammaPrior& prior = *settings_.gamma_prior;
  for (Eigen::Index j = 0; j < state.gamma->size(); ++j) {
    const double g = slice_update_gamma(j, state, observed_, settings_.method, prior, rng);
    state.gamma = state.gamma->with(j, g);
  }
  state.log_like = synthetic_loglike(observed_, state.moments, &*state.gamma, settings_.method);
  state.log_prior_gamma = gamma_log_prior(*state.gamma, prior);
}

bool ChainRunner::update_theta(ChainState& state, long iteration, Rng& rng) {
  ++proposals_;
  const ThetaPrior& prior = settings_.theta_prior;
  const Vector x = prior.to_unconstrained(state.theta);
  Vector z(x.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  const Vector x_star = x + proposal_chol_.triangularView<Eigen::Lower>() * z;
  const Vector theta_star = prior.from_unconstrained(x_star);

  const double log_prior_star = prior.log_density(theta_star);
  if (log_prior_star == kNegInf) return false;

  auto moments_star = engine_.estimate(theta_star, settings_.m, static_cast<std::uint64_t>(iteration));
  if (!moments_star) return false;
  const double log_like_star = synthetic_loglike(observed_, *moments_star,
                                                 state.gamma ? &*state.gamma : nullptr, settings_.method);

  const double log_ratio = (log_like_star + log_prior_star + prior.log_jacobian(x_star)) -
                           (state.log_like + state.log_prior_theta + prior.log_jacobian(x)) +
                           proposal_log_ratio(x, x_star, proposal_chol_);
  if (!(std::log(uniform_open(rng)) < log_ratio)) return false;

  state.theta = theta_star;
  state.moments = std::move(*moments_star);
  state.log_like = log_like_star;
  state.log_prior_theta = log_prior_star;
  return true;
}

Trace ChainRunner::run() {
  Trace trace;
  auto& meta = trace.meta;
  meta.method = settings_.method;
  meta.m = settings_.m;
  meta.seed = settings_.seed;
  meta.iterations = settings_.iterations;
  meta.burn_in = settings_.burn_in;
  meta.thin = settings_.thin;

  ChainState state = initial_state();
  Rng rng = make_stream(settings_.seed, StreamTag::Chain);
  auto record = [&](long iter, bool accepted) {
    trace.rows.push_back(TraceRow{iter, accepted, iter <= settings_.burn_in && settings_.burn_in > 0,
                                  state.log_like, state.theta,
                                  state.gamma ? state.gamma->gamma() : Vector()});
  };
  record(0, false);

  long rejection_run = 0;
  for (long t = 1; t <= settings_.iterations; ++t) {
    update_gamma(state, rng);
    const bool accepted = update_theta(state, t, rng);
    if (accepted) {
      ++meta.accepted;
      rejection_run = 0;
    } else {
      meta.longest_rejection_run = std::max(meta.longest_rejection_run, ++rejection_run);
    }
    if (t % settings_.thin == 0) record(t, accepted);
  }
  meta.proposals = proposals_;
  meta.simulation_calls = engine_.calls();
  meta.simulation_failures = engine_.failures();
  return trace;
}

Trace run_chain(const ModelSpec& model, const SummaryVector& observed, const SamplerSettings& settings) {
  ChainRunner runner(model, observed, settings);
  return runner.run();
}

Matrix tune_proposal(const ModelSpec& model, const SummaryVector& observed, SamplerSettings settings,
                     long pilot_iterations, int max_rounds, double low, double high) {
  settings.iterations = pilot_iterations;
  settings.burn_in = 0;
  settings.thin = std::max<long>(1, pilot_iterations);
  const std::uint64_t base_seed = settings.seed;
  for (int round = 0; round < max_rounds; ++round) {
    settings.seed = mix64(base_seed ^ static_cast<std::uint64_t>(round + 1));
    const Trace pilot = run_chain(model, observed, settings);
    const double rate = pilot.acceptance_rate();
    if (rate >= low && rate <= high) break;
    settings.proposal_cov *= rate < low ? 0.25 : 4.0;
    settings.theta_init = pilot.rows.back().theta;
  }
  return settings.proposal_cov;
}

std::pair<Vector, double> normalize_log_weights(const Vector& log_weights) {
  const double top = log_weights.maxCoeff();
  if (!std::isfinite(top)) throw DegenerateSampleError("all importance weights are zero");
  Vector w(log_weights.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - top);
  w /= w.sum();
  return {w, 1.0 / w.squaredNorm()};
}

ImportanceSample importance_sample_bsl(const ThetaPrior& prior, long draws, int m, const ModelSpec& model,
                                       const SummaryVector& observed, std::uint64_t seed, int threads) {
  if (draws < 1) throw ConfigError("importance sampling needs at least one draw");
  if (m < 2) throw ConfigError("m must be at least 2");
  if (prior.dim() != model.d_theta) throw ConfigError("theta prior dimension does not match the model");
  ImportanceSample out;
  out.theta.resize(draws, model.d_theta);
  out.log_weights.resize(draws);
  Rng prior_rng = make_stream(seed, StreamTag::Prior);
  SimulationEngine engine(model, seed, StreamTag::Importance, threads);
  for (long k = 0; k < draws; ++k) {
    const Vector theta = prior.sample(prior_rng);
    out.theta.row(k) = theta.transpose();
    const auto moments = engine.estimate(theta, m, static_cast<std::uint64_t>(k));
    out.log_weights[k] = moments ? synthetic_loglike(observed, *moments, nullptr, Method::BSL) : kNegInf;
  }
  out.simulation_failures = engine.failures();
  auto [w, ess] = normalize_log_weights(out.log_weights);
  out.weights = std::move(w);
  out.ess = ess;
  return out;
}

}  // namespace rbsl
