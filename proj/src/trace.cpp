#include "rbsl/trace.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "rbsl/errors.hpp"

namespace rbsl {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream parts(line);
  while (std::getline(parts, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw IoError("trace: bad number '" + s + "'");
  return v;
}

long parse_long(const std::string& s) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("trace: bad integer '" + s + "'");
  return v;
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::BSL:
      return "bsl";
    case Method::RBSL_Mean:
      return "rbsl-mean";
    case Method::RBSL_Variance:
      return "rbsl-var";
  }
  return "bsl";
}

Method parse_method(const std::string& text) {
  if (text == "bsl") return Method::BSL;
  if (text == "rbsl-mean") return Method::RBSL_Mean;
  if (text == "rbsl-var") return Method::RBSL_Variance;
  throw ConfigError("unknown method '" + text + "' (expected bsl, rbsl-mean or rbsl-var)");
}

bool uses_gamma(Method method) noexcept { return method != Method::BSL; }

double Trace::acceptance_rate() const noexcept {
  if (meta.iterations > 0) return static_cast<double>(meta.accepted) / static_cast<double>(meta.iterations);
  // without run counters, use the recorded rows after the initial state
  long moves = 0, steps = 0;
  for (const auto& row : rows) {
    if (row.iter == 0) continue;
    ++steps;
    moves += row.accepted ? 1 : 0;
  }
  return steps > 0 ? static_cast<double>(moves) / static_cast<double>(steps) : 0.0;
}

std::vector<const TraceRow*> Trace::post_burnin() const {
  std::vector<const TraceRow*> out;
  for (const auto& row : rows) {
    if (!row.burnin) out.push_back(&row);
  }
  return out;
}

std::vector<double> Trace::theta_draws(Eigen::Index i) const {
  std::vector<double> out;
  for (const auto* row : post_burnin()) out.push_back(row->theta[i]);
  return out;
}

std::vector<double> Trace::gamma_draws(Eigen::Index j) const {
  std::vector<double> out;
  for (const auto* row : post_burnin()) out.push_back(row->gamma[j]);
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value < 0 ? "-inf" : "inf";
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  const auto& m = trace.meta;
  out << "# method=" << to_string(m.method) << ",m=" << m.m << ",seed=" << m.seed
      << ",iterations=" << m.iterations << ",burn_in=" << m.burn_in << ",thin=" << m.thin
      << ",accepted=" << m.accepted << ",proposals=" << m.proposals
      << ",simulation_calls=" << m.simulation_calls
      << ",simulation_failures=" << m.simulation_failures
      << ",longest_rejection_run=" << m.longest_rejection_run << "\n";
  out << "iter,accepted,burnin,loglike";
  for (Eigen::Index i = 0; i < trace.theta_dim(); ++i) out << ",theta_" << i + 1;
  for (Eigen::Index j = 0; j < trace.gamma_dim(); ++j) out << ",gamma_" << j + 1;
  out << "\n";
  for (const auto& row : trace.rows) {
    out << row.iter << ',' << (row.accepted ? 1 : 0) << ',' << (row.burnin ? 1 : 0) << ','
        << format_double(row.log_like);
    for (Eigen::Index i = 0; i < row.theta.size(); ++i) out << ',' << format_double(row.theta[i]);
    for (Eigen::Index j = 0; j < row.gamma.size(); ++j) out << ',' << format_double(row.gamma[j]);
    out << "\n";
  }
}

void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trace '" + path + "'");
  write_trace_csv(out, trace);
}

Trace read_trace_csv(std::istream& in) {
  Trace trace;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw IoError("trace: missing metadata line");
  }
  std::map<std::string, std::string> meta;
  for (const auto& item : split(line.substr(2), ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw IoError("trace: malformed metadata item '" + item + "'");
    meta[item.substr(0, eq)] = item.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw IoError(std::string("trace: metadata lacks ") + key);
    return it->second;
  };
  trace.meta.method = parse_method(get("method"));
  trace.meta.m = static_cast<int>(parse_long(get("m")));
  trace.meta.seed = std::stoull(get("seed"));
  trace.meta.iterations = parse_long(get("iterations"));
  trace.meta.burn_in = parse_long(get("burn_in"));
  trace.meta.thin = parse_long(get("thin"));
  trace.meta.accepted = parse_long(get("accepted"));
  trace.meta.proposals = parse_long(get("proposals"));
  trace.meta.simulation_calls = parse_long(get("simulation_calls"));
  trace.meta.simulation_failures = parse_long(get("simulation_failures"));
  trace.meta.longest_rejection_run = parse_long(get("longest_rejection_run"));

  if (!std::getline(in, line)) throw IoError("trace: missing header");
  const auto header = split(line, ',');
  if (header.size() < 5 || header[0] != "iter" || header[1] != "accepted" ||
      header[2] != "burnin" || header[3] != "loglike") {
    throw IoError("trace: unexpected header '" + line + "'");
  }
  Eigen::Index d_theta = 0, d_gamma = 0;
  for (std::size_t c = 4; c < header.size(); ++c) {
    if (header[c].rfind("theta_", 0) == 0) {
      ++d_theta;
    } else if (header[c].rfind("gamma_", 0) == 0) {
      ++d_gamma;
    } else {
      throw IoError("trace: unexpected column '" + header[c] + "'");
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) throw IoError("trace: ragged row");
    TraceRow row;
    row.iter = parse_long(fields[0]);
    row.accepted = fields[1] == "1";
    row.burnin = fields[2] == "1";
    row.log_like = parse_double(fields[3]);
    row.theta.resize(d_theta);
    row.gamma.resize(d_gamma);
    for (Eigen::Index i = 0; i < d_theta; ++i) row.theta[i] = parse_double(fields[4 + i]);
    for (Eigen::Index j = 0; j < d_gamma; ++j) row.gamma[j] = parse_double(fields[4 + d_theta + j]);
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace '" + path + "'");
  return read_trace_csv(in);
}

}  // namespace rbsl
