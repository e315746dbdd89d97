#include "rbsl/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rbsl/errors.hpp"

namespace rbsl {
namespace {

constexpr int kDefaultAutocovLags[] = {0, 1, 2};
constexpr int kDefaultToadLags[] = {1, 2, 4, 8};

thread_local std::size_t g_toad_tie_clamps = 0;

std::span<const double> series_span(const Dataset& data) {
  if (data.cols() != 1) throw DimensionError("expected a single-column data set");
  return {data.data(), static_cast<std::size_t>(data.size())};
}

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

double parse_number(const std::string& field, const std::string& path, int line) {
  try {
    std::size_t used = 0;
    const double value = std::stod(field, &used);
    if (used != field.size() || !std::isfinite(value)) throw std::invalid_argument("bad");
    return value;
  } catch (const std::exception&) {
    throw IoError(path + ":" + std::to_string(line) + ": not a finite number: '" + field + "'");
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

SummaryVector ModelSpec::simulate_summary(const Vector& theta, Rng& rng) const {
  Vector eta = summarize(simulate(theta, rng));
  if (eta.size() != d_eta) {
    throw DimensionError(name + ": summary length " + std::to_string(eta.size()) +
                         " differs from d_eta " + std::to_string(d_eta));
  }
  return SummaryVector(std::move(eta));
}

Vector simulate_normal(double theta, int n, Rng& rng) {
  if (n < 2) throw ConfigError("normal model needs n >= 2");
  std::normal_distribution<double> noise(0.0, 1.0);
  Vector data(n);
  for (int i = 0; i < n; ++i) data[i] = theta + noise(rng);
  return data;
}

Vector summary_normal(std::span<const double> data) {
  const auto n = data.size();
  if (n < 2) throw ConfigError("summary_normal needs at least 2 observations");
  double mean = 0.0;
  for (double x : data) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : data) ss += (x - mean) * (x - mean);
  Vector out(2);
  out << mean, ss / static_cast<double>(n - 1);
  return out;
}

Vector generate_contaminated(double theta, int n, double omega, double sigma_eps, Rng& rng) {
  if (n < 2) throw ConfigError("contaminated generator needs n >= 2");
  if (!(omega > 0.0 && omega < 1.0)) throw DomainError("omega must lie in (0, 1)");
  if (!(sigma_eps > 0.0)) throw DomainError("sigma_eps must be positive");
  std::bernoulli_distribution clean(omega);
  std::normal_distribution<double> noise(0.0, 1.0);
  Vector data(n);
  for (int i = 0; i < n; ++i) {
    const double scale = clean(rng) ? 1.0 : sigma_eps;
    data[i] = theta + scale * noise(rng);
  }
  return data;
}

Vector standardize_to_moments(const Vector& data, double target_mean, double target_sd) {
  if (data.size() < 2) throw ConfigError("standardize_to_moments needs at least 2 values");
  if (!(target_sd > 0.0)) throw DomainError("target sd must be positive");
  const Vector summary = summary_normal(as_span(data));
  const double sd = std::sqrt(summary[1]);
  if (!(sd > 0.0)) throw DomainError("cannot rescale constant data");
  return ((data.array() - summary[0]) * (target_sd / sd) + target_mean).matrix();
}

double contamination_variance(double omega, double target_sd) {
  const double v = (target_sd * target_sd - omega) / (1.0 - omega);
  if (!(v > 0.0)) throw DomainError("target sd too small for the contamination weight");
  return v;
}

ModelSpec make_normal_model(int n) {
  if (n < 2) throw ConfigError("normal model needs n >= 2");
  ModelSpec spec;
  spec.name = "normal";
  spec.d_theta = 1;
  spec.d_eta = 2;
  spec.simulate = [n](const Vector& theta, Rng& rng) -> Dataset {
    return simulate_normal(theta[0], n, rng);
  };
  spec.summarize = [](const Dataset& data) -> Vector {
    return summary_normal(series_span(data));
  };
  return spec;
}

Vector simulate_ma1(double theta, int length, Rng& rng) {
  if (!(std::abs(theta) < 1.0)) throw DomainError("MA(1) coefficient must satisfy |theta| < 1");
  if (length < 3) throw ConfigError("MA(1) series length must be at least 3");
  std::normal_distribution<double> noise(0.0, 1.0);
  double previous = noise(rng);
  Vector z(length);
  for (int t = 0; t < length; ++t) {
    const double e = noise(rng);
    z[t] = e + theta * previous;
    previous = e;
  }
  return z;
}

Vector summary_autocov(std::span<const double> series, std::span<const int> lags) {
  if (lags.empty()) lags = kDefaultAutocovLags;
  const auto length = static_cast<int>(series.size());
  Vector out(static_cast<Eigen::Index>(lags.size()));
  for (std::size_t k = 0; k < lags.size(); ++k) {
    const int lag = lags[k];
    if (lag < 0 || lag >= length) throw DimensionError("autocovariance lag out of range");
    double s = 0.0;
    for (int t = lag; t < length; ++t) s += series[t] * series[t - lag];
    out[static_cast<Eigen::Index>(k)] = s / static_cast<double>(length);
  }
  return out;
}

Vector simulate_sv(double omega, double rho, double sigma_v, int length, Rng& rng) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("SV rho must lie in (0, 1)");
  if (!(sigma_v > 0.0 && sigma_v < 1.0)) throw DomainError("SV sigma_v must lie in (0, 1)");
  if (length < 1) throw ConfigError("SV series length must be positive");
  std::normal_distribution<double> noise(0.0, 1.0);
  double h = omega / (1.0 - rho) + sigma_v / std::sqrt(1.0 - rho * rho) * noise(rng);
  Vector y(length);
  for (int t = 0; t < length; ++t) {
    if (t > 0) h = omega + rho * h + sigma_v * noise(rng);
    y[t] = std::exp(0.5 * h) * noise(rng);
  }
  return y;
}

double ma1_css_estimate(std::span<const double> series) {
  auto sum_squares = [&](double theta) {
    double e_prev = 0.0, s = 0.0;
    for (double z : series) {
      const double e = z - theta * e_prev;
      s += e * e;
      e_prev = e;
    }
    return s;
  };
  constexpr double kBound = 0.99;
  constexpr int kGrid = 199;
  double best = 0.0, best_value = sum_squares(0.0);
  for (int i = 0; i < kGrid; ++i) {
    const double theta = -kBound + 2.0 * kBound * i / (kGrid - 1);
    const double v = sum_squares(theta);
    if (v < best_value) best_value = v, best = theta;
  }
  // golden-section refinement around the best grid point
  const double step = 2.0 * kBound / (kGrid - 1);
  double a = std::max(-kBound, best - step), b = std::min(kBound, best + step);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 60; ++it) {
    const double c = b - ratio * (b - a), d = a + ratio * (b - a);
    if (sum_squares(c) < sum_squares(d)) b = d; else a = c;
  }
  return 0.5 * (a + b);
}

Vector ma1_summary_limit(double theta) {
  Vector b(3);
  b << 1.0 + theta * theta, theta, 0.0;
  return b;
}

Vector sv_summary_limit(double omega, double rho, double sigma_v) {
  Vector b(3);
  b << std::exp(omega / (1.0 - rho) + 0.5 * sigma_v * sigma_v / (1.0 - rho * rho)), 0.0, 0.0;
  return b;
}

ModelSpec make_ma1_model(int length) {
  if (length < 3) throw ConfigError("MA(1) series length must be at least 3");
  ModelSpec spec;
  spec.name = "ma1";
  spec.d_theta = 1;
  spec.d_eta = 3;
  spec.simulate = [length](const Vector& theta, Rng& rng) -> Dataset {
    return simulate_ma1(theta[0], length, rng);
  };
  spec.summarize = [](const Dataset& data) -> Vector {
    return summary_autocov(series_span(data));
  };
  return spec;
}

double sample_stable(double alpha, double delta, Rng& rng) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("stable alpha must lie in (1, 2]");
  if (!(delta > 0.0)) throw DomainError("stable scale must be positive");
  const double v = std::numbers::pi * (uniform_open(rng) - 0.5);
  const double w = -std::log(uniform_open(rng));
  const double x = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
                   std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
  return delta * x;
}

Dataset simulate_toads(const Vector& theta, const ToadSettings& settings, Rng& rng) {
  if (theta.size() != 3) throw DimensionError("toad model has three parameters");
  const double alpha = theta[0], delta = theta[1], p0 = theta[2];
  if (!(p0 >= 0.0 && p0 < 1.0)) throw DomainError("toad return probability must lie in [0, 1)");
  if (settings.n_toads < 1 || settings.n_days < 2) throw ConfigError("toad grid too small");
  if (!(alpha > 1.0 && alpha <= 2.0) || !(delta > 0.0)) {
    throw DomainError("toad stable parameters out of range");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset refuges = Dataset::Zero(settings.n_days, settings.n_toads);
  for (int j = 0; j < settings.n_toads; ++j) {
    for (int day = 1; day < settings.n_days; ++day) {
      if (unit(rng) < p0) {
        std::uniform_int_distribution<int> pick(0, day - 1);
        refuges(day, j) = refuges(pick(rng), j);
      } else {
        refuges(day, j) = refuges(day - 1, j) + sample_stable(alpha, delta, rng);
      }
    }
  }
  return refuges;
}

std::size_t toad_tie_clamp_count() noexcept { return g_toad_tie_clamps; }

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DimensionError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

// Places the order statistics at the sorted positions `targets[first..last)`
// (ascending) so that v[k] equals the k-th smallest value for each target.
void select_positions(std::vector<double>& v, std::size_t lo, std::size_t hi, const std::vector<std::size_t>& targets,
                      std::size_t first, std::size_t last) {
  if (first >= last || lo >= hi) return;
  const std::size_t mid = first + (last - first) / 2;
  const std::size_t k = targets[mid];
  std::nth_element(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(k),
                   v.begin() + static_cast<std::ptrdiff_t>(hi));
  select_positions(v, lo, k, targets, first, mid);
  select_positions(v, k + 1, hi, targets, mid + 1, last);
}

}  // namespace

Vector summary_toads(const Dataset& refuges, std::span<const int> lags) {
  if (lags.empty()) lags = kDefaultToadLags;
  constexpr int kPerLag = 12;
  Vector out(static_cast<Eigen::Index>(lags.size()) * kPerLag);
  std::vector<double> non_returns;
  std::vector<std::size_t> targets;
  for (std::size_t k = 0; k < lags.size(); ++k) {
    const int lag = lags[k];
    if (lag < 1 || refuges.rows() <= lag) {
      throw DimensionError("toad data needs more than " + std::to_string(lag) + " days");
    }
    non_returns.clear();
    double returns = 0.0;
    for (Eigen::Index j = 0; j < refuges.cols(); ++j) {
      for (Eigen::Index i = 0; i + lag < refuges.rows(); ++i) {
        const double d = std::abs(refuges(i + lag, j) - refuges(i, j));
        if (d < kToadReturnDistance) {
          returns += 1.0;
        } else {
          non_returns.push_back(d);
        }
      }
    }
    if (non_returns.empty()) {
      throw NumericalError("toad summary: lag " + std::to_string(lag) +
                           " has no non-returns; the decile statistics are undefined "
                           "(degenerate-summary guard)");
    }
    targets.clear();
    for (int q = 0; q <= 10; ++q) {
      const double h = (static_cast<double>(non_returns.size()) - 1.0) * (q / 10.0);
      const auto below = static_cast<std::size_t>(std::floor(h));
      targets.push_back(below);
      targets.push_back(std::min(below + 1, non_returns.size() - 1));
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    select_positions(non_returns, 0, non_returns.size(), targets, 0, targets.size());
    const auto base = static_cast<Eigen::Index>(k) * kPerLag;
    out[base] = returns;
    double previous = quantile_sorted(non_returns, 0.0);
    for (int q = 1; q <= 10; ++q) {
      const double current = quantile_sorted(non_returns, q / 10.0);
      double gap = current - previous;
      if (gap < kToadMinLogGap) {
        gap = kToadMinLogGap;
        ++g_toad_tie_clamps;
      }
      out[base + q] = std::log(gap);
      previous = current;
    }
    out[base + 11] = quantile_sorted(non_returns, 0.5);
  }
  return out;
}

ModelSpec make_toad_model(ToadSettings settings) {
  ModelSpec spec;
  spec.name = "toad";
  spec.d_theta = 3;
  spec.d_eta = 48;
  spec.simulate = [settings](const Vector& theta, Rng& rng) -> Dataset {
    return simulate_toads(theta, settings, rng);
  };
  spec.summarize = [](const Dataset& data) -> Vector { return summary_toads(data); };
  return spec;
}

ModelSpec make_model(const std::string& id, int size, ToadSettings toads) {
  if (id == "normal") return make_normal_model(size);
  if (id == "ma1") return make_ma1_model(size);
  if (id == "toad") return make_toad_model(toads);
  throw ConfigError("unknown model id '" + id + "' (expected normal, ma1 or toad)");
}

Vector load_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open series file '" + path + "'");
  std::vector<double> values;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    values.push_back(parse_number(line, path, number));
  }
  if (values.empty()) throw IoError("series file '" + path + "' holds no values");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Dataset load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line).front() == '#') continue;
    std::vector<std::string> fields;
    if (line.find(',') != std::string::npos || line.find('\t') != std::string::npos) {
      const char sep = line.find(',') != std::string::npos ? ',' : '\t';
      std::string field;
      std::istringstream parts(line);
      while (std::getline(parts, field, sep)) fields.push_back(trim(field));
      if (line.back() == sep) fields.emplace_back();
    } else {
      std::istringstream parts(line);
      std::string field;
      while (parts >> field) fields.push_back(field);
    }
    std::vector<double> row;
    for (const auto& f : fields) {
      if (f.empty()) {
        throw IoError(path + ":" + std::to_string(number) + ": empty field (missing values are not supported)");
      }
      row.push_back(parse_number(f, path, number));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path + ":" + std::to_string(number) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("matrix file '" + path + "' holds no rows");
  Dataset out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return out;
}

}  // namespace rbsl
