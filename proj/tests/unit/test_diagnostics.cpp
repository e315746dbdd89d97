#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "rbsl/diagnostics.hpp"
#include "rbsl/errors.hpp"
#include "test_support.hpp"

using namespace rbsl;

namespace {

Trace make_trace(Method method, const std::vector<double>& theta, const std::vector<Vector>& gamma = {}) {
  Trace t;
  t.meta.method = method;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    TraceRow row;
    row.iter = static_cast<long>(i);
    row.theta = Vector::Constant(1, theta[i]);
    if (!gamma.empty()) row.gamma = gamma[i];
    t.rows.push_back(row);
  }
  return t;
}

Trace thin_trace(const Trace& t, std::size_t k) {
  Trace out;
  out.meta = t.meta;
  for (std::size_t i = 0; i < t.rows.size(); i += k) out.rows.push_back(t.rows[i]);
  return out;
}

}  // namespace

TEST_CASE("two-sample KS equals the brute-force maximum") {
  Rng rng(1);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t na = 1 + static_cast<std::size_t>(trial * 16) % 1000, nb = 1 + static_cast<std::size_t>(trial * 37) % 700;
    std::vector<double> a(na), b(nb);
    // rounding creates ties within and across the samples
    for (auto& v : a) v = std::round(z(rng) * 4.0) / 4.0;
    for (auto& v : b) v = std::round((z(rng) + 0.3) * 4.0) / 4.0;
    CHECK(ks_two_sample(a, b) == testing::brute_force_ks(a, b));
  }
  const std::vector<double> same{1, 2, 3};
  CHECK(ks_two_sample(same, same) == 0.0);
  const std::vector<double> low{0, 0}, high{5};
  CHECK(ks_two_sample(low, high) == 1.0);
  CHECK_THROWS_AS(ks_two_sample({}, same), DimensionError);
}

TEST_CASE("gamma diagnostics: prior draws are compatible, a far point mass is not") {
  Rng rng(2);
  const GammaPrior prior = GammaPrior::laplace(0.5, 2);
  std::vector<Vector> gamma;
  for (int i = 0; i < 10000; ++i) {
    Vector g(2);
    g << prior.sample(rng), 5.0;
    gamma.push_back(g);
  }
  const Trace t = make_trace(Method::RBSL_Mean, std::vector<double>(10000, 0.0), gamma);
  Rng ref(3);
  const auto d = gamma_prior_divergence(t, prior, 10000, ref);
  REQUIRE(d.size() == 2);
  CHECK(d[0].ks_statistic < 0.05);
  CHECK_FALSE(d[0].incompatible);
  CHECK(d[1].ks_statistic > 0.99);
  CHECK(d[1].incompatible);
  CHECK(d[1].q50 == 5.0);
}

TEST_CASE("gamma diagnostics error cases") {
  Rng rng(4);
  const Trace bsl = make_trace(Method::BSL, std::vector<double>(200, 0.0));
  CHECK_THROWS_AS(gamma_prior_divergence(bsl, GammaPrior::laplace(0.5, 1), 100, rng), ConfigError);

  const std::vector<Vector> g(200, Vector::Zero(1));
  Trace burn = make_trace(Method::RBSL_Mean, std::vector<double>(200, 0.0), g);
  for (auto& row : burn.rows) row.burnin = true;
  CHECK_THROWS_AS(gamma_prior_divergence(burn, GammaPrior::laplace(0.5, 1), 100, rng), ConfigError);

  const Trace mean = make_trace(Method::RBSL_Mean, std::vector<double>(200, 0.0), g);
  CHECK_THROWS_AS(gamma_prior_divergence(mean, GammaPrior::exponential(0.5, 1), 100, rng), ConfigError);
}

TEST_CASE("chain summary acceptance rates") {
  Trace all = make_trace(Method::BSL, std::vector<double>(101, 1.0));
  for (auto& row : all.rows) row.accepted = row.iter > 0;
  CHECK(chain_summary(all).acceptance_rate == 1.0);

  Trace alternating = make_trace(Method::BSL, std::vector<double>(101, 1.0));
  for (auto& row : alternating.rows) row.accepted = row.iter % 2 == 1;
  CHECK(chain_summary(alternating).acceptance_rate == 0.5);

  alternating.meta.iterations = 100;
  alternating.meta.accepted = 50;
  CHECK(chain_summary(alternating).acceptance_rate == 0.5);
}

TEST_CASE("chain summary quantiles are equal-tailed") {
  std::vector<double> values;
  for (int i = 0; i <= 1000; ++i) values.push_back(i);
  Trace t = make_trace(Method::BSL, values);
  for (std::size_t i = 0; i < 201; ++i) t.rows[i].burnin = true;
  const ChainSummary s = chain_summary(t);
  CHECK(s.post_burnin_rows == 800);
  CHECK(s.theta[0].median == doctest::Approx(600.5));
  CHECK(s.theta[0].mean == doctest::Approx(600.5));
  CHECK(s.theta[0].q025 == doctest::Approx(201.0 + 0.025 * 799.0));
  CHECK(s.theta[0].q975 == doctest::Approx(201.0 + 0.975 * 799.0));
  CHECK(thinned_draws(t, 100).size() == 8);
}

TEST_CASE("accuracy table examples") {
  const Vector truth = Vector::Constant(1, 0.5);
  const std::vector<Trace> degenerate(4, make_trace(Method::BSL, std::vector<double>(50, 0.5)));
  const AccuracyRow exact = accuracy_table(std::span<const Trace>(degenerate), truth);
  CHECK(exact.bias[0] == 0.0);
  CHECK(exact.rmse[0] == 0.0);
  CHECK(exact.length[0] == 0.0);
  CHECK(exact.coverage[0] == 1.0);
  CHECK(exact.runs == 4);

  std::vector<RunEstimate> pm(2);
  pm[0] = {Vector::Constant(1, 1.5), Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)};
  pm[1] = {Vector::Constant(1, -0.5), Vector::Constant(1, -1.0), Vector::Constant(1, 0.0)};
  const AccuracyRow sym = accuracy_table(std::span<const RunEstimate>(pm), truth);
  CHECK(sym.bias[0] == 0.0);
  CHECK(sym.rmse[0] == 1.0);
  CHECK(sym.length[0] == 1.0);
  CHECK(sym.coverage[0] == 0.0);

  CHECK_THROWS_AS(accuracy_table(std::span<const RunEstimate>(pm.data(), 1), truth), ConfigError);
}

TEST_CASE("coverage is stable under thinning") {
  Rng rng(6);
  std::normal_distribution<double> z;
  std::vector<Trace> traces;
  for (int r = 0; r < 40; ++r) {
    const double center = 0.3 * z(rng);
    std::vector<double> chain;
    double x = center;
    for (int i = 0; i < 20000; ++i) chain.push_back(x = center + 0.9 * (x - center) + 0.1 * z(rng));
    traces.push_back(make_trace(Method::BSL, chain));
  }
  const Vector truth = Vector::Zero(1);
  const double base = accuracy_table(std::span<const Trace>(traces), truth).coverage[0];
  for (std::size_t k : {10, 100}) {
    std::vector<Trace> thinned;
    for (const auto& t : traces) thinned.push_back(thin_trace(t, k));
    const double c = accuracy_table(std::span<const Trace>(thinned), truth).coverage[0];
    CHECK(std::abs(c - base) <= 1.0 / 40.0 + 1e-12);
  }
}

TEST_CASE("weighted estimates") {
  Matrix theta(4, 1);
  theta << 0.0, 1.0, 2.0, 3.0;
  Vector w(4);
  w << 0.1, 0.2, 0.3, 0.4;
  const RunEstimate e = estimate_from_weights(theta, w);
  CHECK(e.mean[0] == doctest::Approx(2.0));
  CHECK(e.lower[0] >= 0.0);
  CHECK(e.upper[0] <= 3.0);
  CHECK(e.lower[0] < e.upper[0]);
}

TEST_CASE("posterior predictive: constant simulator gives zero-width intervals") {
  ModelSpec constant;
  constant.name = "constant";
  constant.d_theta = 1;
  constant.d_eta = 2;
  constant.simulate = [](const Vector&, Rng&) -> Dataset { return Matrix::Constant(1, 1, 0.0); };
  constant.summarize = [](const Dataset&) -> Vector { return Vector::Constant(2, 3.0); };
  const Trace t = make_trace(Method::BSL, std::vector<double>(300, 0.2));
  Vector obs(2);
  obs << 3.0, 10.0;
  const auto stats = posterior_predictive(t, constant, SummaryVector(obs), 200, 1);
  REQUIRE(stats.size() == 2);
  CHECK(stats[0].q025 == 3.0);
  CHECK(stats[0].q975 == 3.0);
  CHECK(stats[0].observed_percentile == 0.5);
  CHECK(stats[1].observed_percentile == 1.0);
}

TEST_CASE("posterior predictive: sample mean interval at a fixed theta") {
  const ModelSpec model = make_normal_model(100);
  const Trace t = make_trace(Method::BSL, std::vector<double>(500, 0.0));
  Vector obs(2);
  obs << 0.0, 1.0;
  const auto stats = posterior_predictive(t, model, SummaryVector(obs), 10000, 7);
  CHECK(stats[0].q025 == doctest::Approx(-1.96 / 10.0).epsilon(0.05));
  CHECK(stats[0].q975 == doctest::Approx(1.96 / 10.0).epsilon(0.05));
  CHECK(stats[0].observed_percentile == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("posterior predictive is invariant to row order") {
  const ModelSpec model = make_normal_model(50);
  Rng rng(8);
  std::normal_distribution<double> z;
  std::vector<double> theta;
  for (int i = 0; i < 400; ++i) theta.push_back(z(rng));
  std::vector<Vector> gamma;
  std::exponential_distribution<double> e(2.0);
  for (int i = 0; i < 400; ++i) gamma.push_back(Vector::Constant(2, e(rng)));
  Trace t = make_trace(Method::RBSL_Variance, theta, gamma);
  Trace shuffled = t;
  std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
  Vector obs(2);
  obs << 0.2, 1.3;
  for (auto mode : {PredictiveMode::Raw, PredictiveMode::Adjusted}) {
    const auto a = posterior_predictive(t, model, SummaryVector(obs), 500, 9, mode, 10);
    const auto b = posterior_predictive(shuffled, model, SummaryVector(obs), 500, 9, mode, 10);
    for (std::size_t j = 0; j < a.size(); ++j) {
      CHECK(a[j].q025 == b[j].q025);
      CHECK(a[j].q975 == b[j].q975);
      CHECK(a[j].observed_percentile == b[j].observed_percentile);
    }
  }
  CHECK_THROWS_AS(posterior_predictive(t, model, SummaryVector(obs), 50, 9), ConfigError);
}

TEST_CASE("weighted density and its modes") {
  std::vector<double> values, weights;
  for (int i = 0; i < 500; ++i) {
    values.push_back(-1.0 + 0.001 * i);
    values.push_back(1.0 + 0.001 * i);
  }
  weights.assign(values.size(), 1.0);
  const DensityGrid g = weighted_density(values, weights, -3.0, 3.0, 301, 0.1);
  double integral = 0.0;
  for (std::size_t i = 1; i < g.x.size(); ++i) integral += 0.5 * (g.x[i] - g.x[i - 1]) * (g.density[i] + g.density[i - 1]);
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
  const auto modes = density_modes(g);
  REQUIRE(modes.size() == 2);
  CHECK(modes[1] - modes[0] == doctest::Approx(2.0).epsilon(0.05));

  std::vector<double> w2 = weights;
  for (std::size_t i = 0; i < w2.size(); i += 2) w2[i] = 0.0;
  CHECK(density_modes(weighted_density(values, w2, -3.0, 3.0, 301, 0.1)).size() == 1);
}
