#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "rbsl/errors.hpp"
#include "rbsl/models.hpp"
#include "test_support.hpp"

using namespace rbsl;
using rbsl::testing::sample_mean;
using rbsl::testing::sample_variance;

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

/// Type-7 quantile written with 1-based indexing, as a check on quantile_sorted.
double quantile_oracle(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p + 1.0;
  const auto j = static_cast<std::size_t>(h);
  if (j >= x.size()) return x.back();
  return x[j - 1] + (h - static_cast<double>(j)) * (x[j] - x[j - 1]);
}

/// 48 toad statistics computed with full sorts and the quantile oracle.
Vector toad_summary_oracle(const Dataset& y) {
  Vector out(48);
  int k = 0;
  for (int lag : {1, 2, 4, 8}) {
    std::vector<double> far;
    double returns = 0;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      for (Eigen::Index i = 0; i + lag < y.rows(); ++i) {
        const double d = std::abs(y(i + lag, j) - y(i, j));
        if (d < 10.0) {
          returns += 1;
        } else {
          far.push_back(d);
        }
      }
    }
    out[k++] = returns;
    for (int q = 1; q <= 10; ++q) {
      out[k++] = std::log(std::max(quantile_oracle(far, q / 10.0) - quantile_oracle(far, (q - 1) / 10.0), 1e-8));
    }
    out[k++] = quantile_oracle(far, 0.5);
  }
  return out;
}

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& contents) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() / ("rbsl_models_test_" + std::to_string(counter++) + ".txt");
    std::ofstream(path) << contents;
  }
  ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("summary_normal examples") {
  const std::vector<double> ones{1, 1, 1};
  const Vector a = summary_normal(ones);
  CHECK(a[0] == 1.0);
  CHECK(a[1] == 0.0);
  const std::vector<double> two{0, 2};
  const Vector b = summary_normal(two);
  CHECK(b[0] == 1.0);
  CHECK(b[1] == 2.0);
}

TEST_CASE("normal simulator moments") {
  Rng rng(1);
  const auto x = to_std(simulate_normal(3.0, 1000000, rng));
  CHECK(std::abs(sample_mean(x) - 3.0) < 3e-3);
  CHECK(std::abs(sample_variance(x) - 1.0) < 5e-3);
}

TEST_CASE("standardize_to_moments hits its targets") {
  Rng rng(2);
  const Vector raw = generate_contaminated(1.0, 100, 0.8, 4.0, rng);
  const Vector s = standardize_to_moments(raw, 1.0, 1.3);
  const auto v = to_std(s);
  CHECK(std::abs(sample_mean(v) - 1.0) < 1e-12);
  CHECK(std::abs(std::sqrt(sample_variance(v)) - 1.3) < 1e-12);
  CHECK_THROWS_AS(standardize_to_moments(Vector::Ones(5), 1.0, 1.0), DomainError);
}

TEST_CASE("contamination variance") {
  CHECK(contamination_variance(0.8, 2.0) == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(contamination_variance(0.8, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(contamination_variance(0.8, 0.5), DomainError);

  Rng rng(3);
  const auto x = to_std(generate_contaminated(0.0, 1000000, 0.8, 4.0, rng));
  CHECK(sample_variance(x) == doctest::Approx(4.0).epsilon(0.02));

  const auto y = to_std(generate_contaminated(0.0, 1000000, 1.0 - 1e-12, 4.0, rng));
  CHECK(std::abs(sample_variance(y) - 1.0) < 3.0 * std::sqrt(2.0 / 1e6));
}

TEST_CASE("autocovariance summaries") {
  const std::vector<double> flat{1, 1, 1};
  const Vector a = summary_autocov(flat);
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(a[1] == doctest::Approx(2.0 / 3.0));
  CHECK(a[2] == doctest::Approx(1.0 / 3.0));
  const std::vector<double> alt{1, -1, 1};
  const Vector b = summary_autocov(alt);
  CHECK(b[0] == doctest::Approx(1.0));
  CHECK(b[1] == doctest::Approx(-2.0 / 3.0));
  CHECK(b[2] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("MA(1) summaries converge to their limit") {
  Rng rng(4);
  const Vector series = simulate_ma1(0.5, 1000000, rng);
  const Vector eta = summary_autocov(to_std(series));
  const Vector limit = ma1_summary_limit(0.5);
  CHECK(limit[0] == 1.25);
  CHECK(limit[1] == 0.5);
  CHECK(limit[2] == 0.0);
  // standard errors of the lag-0..2 autocovariances, loosely bounded from the MA(1) structure
  const double se = std::sqrt(4.0 / 1e6);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(eta[j] - limit[j]) < 3.0 * se);
  CHECK_THROWS_AS(simulate_ma1(1.0, 10, rng), DomainError);
}

TEST_CASE("MA(1) mean summaries over a theta grid") {
  Rng rng(5);
  const int reps = 10000, length = 100;
  for (int k = -4; k <= 4; ++k) {
    const double theta = 0.2 * k;
    std::vector<std::vector<double>> draws(3);
    for (int r = 0; r < reps; ++r) {
      const Vector eta = summary_autocov(to_std(simulate_ma1(theta, length, rng)));
      for (int j = 0; j < 3; ++j) draws[static_cast<std::size_t>(j)].push_back(eta[j]);
    }
    // E[eta_j] = (T - j)/T * b_j(theta) with divisor T
    const Vector b = ma1_summary_limit(theta);
    for (int j = 0; j < 3; ++j) {
      const auto& d = draws[static_cast<std::size_t>(j)];
      const double expected = (length - j) / static_cast<double>(length) * b[j];
      const double se = std::sqrt(sample_variance(d) / reps);
      CHECK(std::abs(sample_mean(d) - expected) < 3.0 * se + 1e-12);
    }
  }
}

TEST_CASE("stochastic volatility series") {
  Rng rng(6);
  const auto flat = to_std(simulate_sv(0.0, 0.5, 1e-12, 1000000, rng));
  CHECK(std::abs(sample_variance(flat) - 1.0) < 3.0 * std::sqrt(2.0 / 1e6));

  const Vector b0 = sv_summary_limit(-0.76, 0.9, 0.36);
  CHECK(b0[0] == doctest::Approx(std::exp(-0.76 / 0.1 + 0.36 * 0.36 / (2.0 * 0.19))).epsilon(1e-12));
  CHECK(b0[0] == doctest::Approx(7.03e-4).epsilon(0.01));
  CHECK(b0[1] == 0.0);
  CHECK(b0[2] == 0.0);

  const Vector y = simulate_sv(-0.76, 0.9, 0.36, 1000000, rng);
  const auto yv = to_std(y);
  CHECK(sample_variance(yv) == doctest::Approx(b0[0]).epsilon(0.10));
  const Vector eta = summary_autocov(yv);
  std::vector<double> products;
  for (std::size_t t = 1; t < yv.size(); ++t) products.push_back(yv[t] * yv[t - 1]);
  const double se = std::sqrt(sample_variance(products) / static_cast<double>(products.size()));
  CHECK(std::abs(eta[1]) < 3.0 * se);
}

TEST_CASE("MA(1) conditional sum of squares estimate") {
  Rng rng(7);
  CHECK(ma1_css_estimate(to_std(simulate_ma1(0.5, 20000, rng))) == doctest::Approx(0.5).epsilon(0.04));
  CHECK(ma1_css_estimate(to_std(simulate_ma1(-0.3, 20000, rng))) == doctest::Approx(-0.3).epsilon(0.07));
  const double sv = ma1_css_estimate(to_std(simulate_sv(-0.76, 0.9, 0.36, 100, rng)));
  CHECK(std::abs(sv) <= 0.99);
}

TEST_CASE("stable sampler: Gaussian and Cauchy limits, scaling") {
  Rng rng(8);
  std::vector<double> x(1000000);
  for (auto& v : x) v = sample_stable(2.0, 1.0, rng);
  CHECK(sample_variance(x) == doctest::Approx(2.0).epsilon(0.01));

  for (auto& v : x) v = sample_stable(1.0 + 1e-9, 1.0, rng);
  std::sort(x.begin(), x.end());
  const double median = x[x.size() / 2];
  const double iqr = x[3 * x.size() / 4] - x[x.size() / 4];
  CHECK(std::abs(median) < 0.01);
  CHECK(iqr == doctest::Approx(2.0).epsilon(0.02));

  for (double alpha : {1.2, 1.5, 1.8, 2.0}) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(sample_stable(alpha, 7.5, a) == 7.5 * sample_stable(alpha, 1.0, b));
  }

  CHECK_THROWS_AS(sample_stable(1.0, 1.0, rng), DomainError);
  CHECK_THROWS_AS(sample_stable(2.1, 1.0, rng), DomainError);
  CHECK_THROWS_AS(sample_stable(1.5, 0.0, rng), DomainError);
}

TEST_CASE("stable sampler characteristic function") {
  Rng rng(9);
  const double delta = 1.3;
  for (double alpha : {1.2, 1.5, 1.8}) {
    std::vector<double> x(1000000);
    for (auto& v : x) v = sample_stable(alpha, delta, rng);
    for (double t : {0.5, 1.0, 2.0}) {
      double re = 0.0;
      for (double v : x) re += std::cos(t * v);
      re /= static_cast<double>(x.size());
      CHECK(std::abs(re - std::exp(-std::pow(std::abs(delta * t), alpha))) < 0.01);
    }
  }
}

TEST_CASE("toad simulator limits") {
  Rng rng(10);
  Vector stay(3);
  stay << 1.5, 1e-6, 0.9;
  const Dataset y = simulate_toads(stay, {20, 30}, rng);
  CHECK(y.rows() == 30);
  CHECK(y.cols() == 20);
  CHECK(y.cwiseAbs().maxCoeff() < 1e-3);
  CHECK_THROWS_AS(summary_toads(y), NumericalError);

  Vector walk(3);
  walk << 2.0, 1.0, 0.0;
  const Dataset w = simulate_toads(walk, {400, 63}, rng);
  for (int lag : {1, 2, 4, 8}) {
    std::vector<double> d;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i + lag < w.rows(); ++i) d.push_back(w(i + lag, j) - w(i, j));
    }
    CHECK(sample_variance(d) == doctest::Approx(2.0 * lag).epsilon(0.05));
  }
}

TEST_CASE("toad simulator determinism and return counts") {
  Vector theta(3);
  theta << 1.8, 45.0, 0.6;
  Rng a(11), b(11);
  CHECK(simulate_toads(theta, {}, a) == simulate_toads(theta, {}, b));

  Rng rng(12);
  double previous = -1.0;
  for (double p0 : {0.1, 0.5, 0.8}) {
    theta[2] = p0;
    double total = 0.0;
    for (int r = 0; r < 200; ++r) total += summary_toads(simulate_toads(theta, {}, rng))[0];
    CHECK(total / 200.0 > previous);
    previous = total / 200.0;
  }
}

TEST_CASE("toad summaries: length, oracle, permutation invariance") {
  Rng rng(13);
  Vector theta(3);
  theta << 1.7, 40.0, 0.5;
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset y = simulate_toads(theta, {}, rng);
    const Vector s = summary_toads(y);
    REQUIRE(s.size() == 48);
    const Vector oracle = toad_summary_oracle(y);
    CHECK((s - oracle).cwiseAbs().maxCoeff() < 1e-12);

    Dataset shuffled = y;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(y.cols()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index c = 0; c < y.cols(); ++c) shuffled.col(c) = y.col(order[static_cast<std::size_t>(c)]);
    CHECK(summary_toads(shuffled) == s);
  }
}

TEST_CASE("toad summaries on a hand-built track") {
  Dataset y(4, 1);
  y << 0.0, 20.0, 50.0, 100.0;
  const int lag1[] = {1};
  const Vector s = summary_toads(y, lag1);
  REQUIRE(s.size() == 12);
  CHECK(s[0] == 0.0);
  CHECK(s[11] == 30.0);
  const std::vector<double> far{20.0, 30.0, 50.0};
  for (int q = 1; q <= 10; ++q) {
    const double gap = quantile_oracle(far, q / 10.0) - quantile_oracle(far, (q - 1) / 10.0);
    CHECK(s[q] == doctest::Approx(std::log(gap)).epsilon(1e-14));
  }
  CHECK(quantile_sorted(far, 0.0) == 20.0);
  CHECK(quantile_sorted(far, 1.0) == 50.0);
  CHECK(quantile_sorted(far, 0.25) == 25.0);
}

TEST_CASE("model registry and validated simulation") {
  CHECK(make_model("normal", 100).d_eta == 2);
  CHECK(make_model("ma1", 100).d_eta == 3);
  CHECK(make_model("toad", 0).d_eta == 48);
  CHECK_THROWS_AS(make_model("ricker", 10), ConfigError);

  ModelSpec broken = make_normal_model(10);
  broken.summarize = [](const Dataset&) { return Vector::Zero(3); };
  Rng rng(1);
  CHECK_THROWS_AS(broken.simulate_summary(Vector::Zero(1), rng), DimensionError);
  broken.summarize = [](const Dataset&) { return Vector::Constant(2, std::nan("")); };
  CHECK_THROWS_AS(broken.simulate_summary(Vector::Zero(1), rng), NumericalError);
}

TEST_CASE("data loading") {
  const TempFile series("# header\n1.5\n\n-2\n3e-1\n");
  const Vector s = load_series(series.path.string());
  REQUIRE(s.size() == 3);
  CHECK(s[2] == 0.3);

  const TempFile matrix("1,2,3\n4\t5\t6\n7 8 9\n");
  const Dataset m = load_matrix(matrix.path.string());
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 6.0);

  const TempFile ragged("1,2\n3\n");
  CHECK_THROWS_AS(load_matrix(ragged.path.string()), IoError);
  const TempFile empty_field("1,,2\n");
  CHECK_THROWS_AS(load_matrix(empty_field.path.string()), IoError);
  const TempFile text("1\nabc\n");
  CHECK_THROWS_AS(load_series(text.path.string()), IoError);
  CHECK_THROWS_AS(load_series("/nonexistent/file"), IoError);
}
