#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rbsl/synthetic_likelihood.hpp"

namespace rbsl {

enum class Method { BSL, RBSL_Mean, RBSL_Variance };

std::string to_string(Method method);
/// Accepts "bsl", "rbsl-mean", "rbsl-var".
Method parse_method(const std::string& text);
bool uses_gamma(Method method) noexcept;

struct TraceRow {
  long iter = 0;
  bool accepted = false;
  bool burnin = false;
  double log_like = 0.0;
  Vector theta;
  Vector gamma;  // empty for plain BSL
};

/// Run settings echoed into the trace, plus counters collected while sampling.
struct TraceMeta {
  Method method = Method::BSL;
  int m = 0;
  std::uint64_t seed = 0;
  long iterations = 0;
  long burn_in = 0;
  long thin = 1;
  long accepted = 0;
  long proposals = 0;
  long simulation_calls = 0;
  long simulation_failures = 0;
  long longest_rejection_run = 0;  // consecutive rejected theta proposals
};

/// Recorded chain states. Row 0 is the initial state; further rows are
/// every `thin`-th iteration.
struct Trace {
  TraceMeta meta;
  std::vector<TraceRow> rows;

  Eigen::Index theta_dim() const noexcept { return rows.empty() ? 0 : rows.front().theta.size(); }
  Eigen::Index gamma_dim() const noexcept { return rows.empty() ? 0 : rows.front().gamma.size(); }

  /// Accepted theta moves over iterations, from the run counters when present and
  /// otherwise from the recorded rows after row 0.
  double acceptance_rate() const noexcept;
  std::vector<const TraceRow*> post_burnin() const;

  /// Post-burn-in draws of one theta or gamma component.
  std::vector<double> theta_draws(Eigen::Index i) const;
  std::vector<double> gamma_draws(Eigen::Index j) const;
};

/// Shortest decimal rendering that reads back to the same double.
std::string format_double(double value);

/// CSV with one '#'-prefixed metadata line followed by the header
/// iter,accepted,burnin,loglike,theta_1..[,gamma_1..].
void write_trace_csv(std::ostream& out, const Trace& trace);
void write_trace_csv(const std::string& path, const Trace& trace);
Trace read_trace_csv(std::istream& in);
Trace read_trace_csv(const std::string& path);

}  // namespace rbsl
