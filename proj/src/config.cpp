#include "rbsl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rbsl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream parts(text);
  while (std::getline(parts, item, ',')) out.push_back(trim(item));
  if (!text.empty() && text.back() == ',') out.emplace_back();
  return out;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment", {"model", "method", "m", "iterations", "burn_in", "thin", "seed", "is_draws"}},
      {"data",
       {"source", "path", "n", "mean", "sd", "omega", "standardize", "sv_omega", "sv_rho", "sv_sigma", "theta",
        "n_toads", "n_days"}},
      {"theta_prior", {"kind", "lower", "upper", "mean", "variance", "transform"}},
      {"gamma_prior", {"kind", "scale", "laplace_scale", "exponential_mean"}},
      {"proposal", {"sd", "variance", "covariance", "tune"}},
      {"init", {"theta"}},
      {"truth", {"theta"}},
      {"grid", {"parameter", "values", "replicates"}},
      {"diagnostics", {"threshold", "reference_n", "predictive_draws", "predictive_mode"}},
      {"output", {"directory", "export_thin", "density_points"}},
  };
  return keys;
}

int model_theta_dim(const std::string& model) {
  if (model == "toad") return 3;
  return 1;
}

int model_summary_dim(const std::string& model) {
  if (model == "toad") return 48;
  if (model == "ma1") return 3;
  return 2;
}

class Resolver {
 public:
  explicit Resolver(const ConfigDocument& doc) : doc_(doc) {
    for (const auto& [section, entries] : doc.sections) {
      const auto it = schema().find(section);
      if (it == schema().end()) {
        const int line = entries.empty() ? 0 : entries.begin()->second.line;
        issue(line, section, "unknown section [" + section + "]");
        continue;
      }
      for (const auto& [key, entry] : entries) {
        if (!it->second.count(key)) issue(entry.line, section + "." + key, "unknown key '" + key + "'");
      }
    }
  }

  void issue(int line, std::string key, std::string message) {
    issues_.push_back({line, std::move(key), std::move(message)});
  }
  void issue_at(const std::string& section, const std::string& key, std::string message) {
    const auto* e = doc_.find(section, key);
    issue(e ? e->line : 0, section + "." + key, std::move(message));
  }

  bool has(const std::string& section, const std::string& key) const { return doc_.find(section, key) != nullptr; }

  std::string str(const std::string& section, const std::string& key, const std::string& fallback) const {
    const auto* e = doc_.find(section, key);
    return e ? e->value : fallback;
  }

  template <typename T>
  T number(const std::string& section, const std::string& key, T fallback) {
    const auto* e = doc_.find(section, key);
    if (!e) return fallback;
    T value{};
    if (!parse(e->value, value)) {
      issue(e->line, section + "." + key, "expected " + type_name<T>() + ", got '" + e->value + "'");
      return fallback;
    }
    return value;
  }

  bool boolean(const std::string& section, const std::string& key, bool fallback) {
    const auto* e = doc_.find(section, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    issue(e->line, section + "." + key, "expected a boolean, got '" + e->value + "'");
    return fallback;
  }

  std::optional<std::vector<double>> numbers(const std::string& section, const std::string& key) {
    const auto* e = doc_.find(section, key);
    if (!e) return std::nullopt;
    std::vector<double> out;
    for (const auto& item : split_list(e->value)) {
      double v = 0.0;
      if (!parse(item, v)) {
        issue(e->line, section + "." + key, "expected a number list, got '" + e->value + "'");
        return std::nullopt;
      }
      out.push_back(v);
    }
    return out;
  }

  /// A list broadcast to `dim` entries, or nullopt (issue recorded) on a length mismatch.
  std::optional<std::vector<double>> per_component(const std::string& section, const std::string& key, int dim) {
    auto values = numbers(section, key);
    if (!values) return std::nullopt;
    if (values->size() == 1) return std::vector<double>(static_cast<std::size_t>(dim), values->front());
    if (static_cast<int>(values->size()) != dim) {
      issue_at(section, key, "expected 1 or " + std::to_string(dim) + " values, got " +
                                 std::to_string(values->size()));
      return std::nullopt;
    }
    return values;
  }

  std::vector<std::string> words(const std::string& section, const std::string& key, int dim,
                                 const std::string& fallback) {
    const auto* e = doc_.find(section, key);
    auto items = split_list(e ? e->value : fallback);
    if (items.size() == 1) return std::vector<std::string>(static_cast<std::size_t>(dim), items.front());
    if (static_cast<int>(items.size()) != dim) {
      issue_at(section, key, "expected 1 or " + std::to_string(dim) + " entries");
      return std::vector<std::string>(static_cast<std::size_t>(dim), items.empty() ? fallback : items.front());
    }
    return items;
  }

  std::vector<ConfigIssue>& issues() { return issues_; }

 private:
  static bool parse(const std::string& s, double& out) {
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return !s.empty() && end == s.c_str() + s.size() && std::isfinite(out);
  }
  template <typename I>
  static bool parse(const std::string& s, I& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  }
  template <typename T>
  static std::string type_name() {
    if constexpr (std::is_floating_point_v<T>) {
      return "a number";
    } else {
      return "an integer";
    }
  }

  const ConfigDocument& doc_;
  std::vector<ConfigIssue> issues_;
};

RunMethod parse_run_method(const std::string& text) {
  if (text == "bsl-is") return RunMethod::BSL_ImportanceSampling;
  switch (parse_method(text)) {
    case Method::BSL:
      return RunMethod::BSL;
    case Method::RBSL_Mean:
      return RunMethod::RBSL_Mean;
    case Method::RBSL_Variance:
      return RunMethod::RBSL_Variance;
  }
  return RunMethod::BSL;
}

std::string format_issues(const std::vector<ConfigIssue>& issues) {
  std::ostringstream out;
  out << issues.size() << " configuration error" << (issues.size() == 1 ? "" : "s") << ":";
  for (const auto& i : issues) {
    out << "\n  ";
    if (i.line > 0) out << "line " << i.line << ": ";
    if (!i.key.empty()) out << i.key << ": ";
    out << i.message;
  }
  return out.str();
}

}  // namespace

ConfigErrors::ConfigErrors(std::vector<ConfigIssue> issues)
    : ConfigError(format_issues(issues)), issues_(std::move(issues)) {}

const ConfigDocument::Entry* ConfigDocument::find(const std::string& section, const std::string& key) const {
  const auto s = sections.find(section);
  if (s == sections.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

void ConfigDocument::set(const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size()) {
    throw ConfigError("override key must look like section.key, got '" + dotted_key + "'");
  }
  auto& entry = sections[dotted_key.substr(0, dot)][dotted_key.substr(dot + 1)];
  entry.value = value;
}

ConfigDocument parse_config_document(const std::string& text) {
  ConfigDocument doc;
  std::vector<ConfigIssue> issues;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']' || content.size() < 3) {
        issues.push_back({line, "", "malformed section header '" + content + "'"});
        continue;
      }
      section = trim(content.substr(1, content.size() - 2));
      doc.sections[section];
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      issues.push_back({line, "", "expected 'key = value', got '" + content + "'"});
      continue;
    }
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (section.empty()) {
      issues.push_back({line, key, "assignment before any [section] header"});
      continue;
    }
    if (key.empty()) {
      issues.push_back({line, "", "empty key"});
      continue;
    }
    auto& entries = doc.sections[section];
    if (entries.count(key)) {
      issues.push_back({line, section + "." + key, "duplicate key"});
      continue;
    }
    entries[key] = {value, line};
  }
  if (!issues.empty()) throw ConfigErrors(std::move(issues));
  return doc;
}

ConfigDocument load_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_document(buffer.str());
}

std::string to_string(RunMethod method) {
  switch (method) {
    case RunMethod::BSL:
      return "bsl";
    case RunMethod::RBSL_Mean:
      return "rbsl-mean";
    case RunMethod::RBSL_Variance:
      return "rbsl-var";
    case RunMethod::BSL_ImportanceSampling:
      return "bsl-is";
  }
  return "bsl";
}

std::optional<Method> chain_method(RunMethod method) noexcept {
  switch (method) {
    case RunMethod::BSL:
      return Method::BSL;
    case RunMethod::RBSL_Mean:
      return Method::RBSL_Mean;
    case RunMethod::RBSL_Variance:
      return Method::RBSL_Variance;
    case RunMethod::BSL_ImportanceSampling:
      return std::nullopt;
  }
  return std::nullopt;
}

GammaPrior ExperimentConfig::gamma_prior_for(Method method, Eigen::Index dim) const {
  if (method == Method::RBSL_Mean) return GammaPrior::laplace(laplace_scale, dim);
  return GammaPrior::exponential(exponential_mean, dim);
}

std::vector<std::string> expand_values(const std::string& text) {
  if (text.find(':') != std::string::npos && text.find(',') == std::string::npos) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ':')) parts.push_back(trim(item));
    if (parts.size() != 3) throw ConfigError("range must look like start:step:stop, got '" + text + "'");
    double start = 0, step = 0, stop = 0;
    try {
      start = std::stod(parts[0]);
      step = std::stod(parts[1]);
      stop = std::stod(parts[2]);
    } catch (const std::exception&) {
      throw ConfigError("range bounds must be numbers: '" + text + "'");
    }
    if (!(step > 0.0) || stop < start) throw ConfigError("range needs step > 0 and stop >= start");
    std::vector<std::string> out;
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) {
      // round to 12 decimals so 1.0:0.1:2.0 gives 1.1 rather than 1.1000000000000001
      const double v = std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12;
      std::ostringstream s;
      s.precision(15);
      s << v;
      out.push_back(s.str());
    }
    return out;
  }
  auto items = split_list(text);
  for (const auto& i : items) {
    if (i.empty()) throw ConfigError("empty entry in value list '" + text + "'");
  }
  return items;
}

ExperimentConfig resolve_config(const ConfigDocument& doc) {
  Resolver r(doc);
  ExperimentConfig cfg;

  cfg.model = r.str("experiment", "model", "normal");
  if (cfg.model != "normal" && cfg.model != "ma1" && cfg.model != "toad") {
    r.issue_at("experiment", "model", "unknown model '" + cfg.model + "' (expected normal, ma1 or toad)");
    cfg.model = "normal";
  }
  const int d_theta = model_theta_dim(cfg.model);
  const int d_eta = model_summary_dim(cfg.model);

  if (!r.has("experiment", "method")) {
    r.issue(0, "experiment.method", "missing required key");
  } else {
    for (const auto& name : split_list(r.str("experiment", "method", ""))) {
      try {
        cfg.methods.push_back(parse_run_method(name));
      } catch (const ConfigError& e) {
        r.issue_at("experiment", "method", e.what());
      }
    }
  }
  cfg.m = r.number<int>("experiment", "m", cfg.m);
  cfg.iterations = r.number<long>("experiment", "iterations", cfg.iterations);
  cfg.burn_in = r.number<long>("experiment", "burn_in", cfg.burn_in);
  cfg.thin = r.number<long>("experiment", "thin", cfg.thin);
  cfg.seed = r.number<std::uint64_t>("experiment", "seed", cfg.seed);
  cfg.is_draws = r.number<long>("experiment", "is_draws", cfg.is_draws);
  if (cfg.m < 2) r.issue_at("experiment", "m", "m must be at least 2");
  else if (cfg.m < d_eta + 1) {
    r.issue_at("experiment", "m", "m must be at least d_eta + 1 = " + std::to_string(d_eta + 1));
  }
  if (cfg.iterations < 0) r.issue_at("experiment", "iterations", "must be nonnegative");
  if (cfg.burn_in < 0 || cfg.burn_in > cfg.iterations) {
    r.issue_at("experiment", "burn_in", "burn_in must lie in [0, iterations]");
  }
  if (cfg.thin < 1) r.issue_at("experiment", "thin", "thin must be at least 1");
  if (cfg.is_draws < 1) r.issue_at("experiment", "is_draws", "must be at least 1");

  // data
  auto& data = cfg.data;
  const std::string source = r.str("data", "source", "synthetic");
  if (source == "file") {
    data.kind = DataSourceConfig::Kind::File;
    data.path = r.str("data", "path", "");
    if (data.path.empty()) r.issue_at("data", "path", "data.source = file needs data.path");
  } else if (source != "synthetic") {
    r.issue_at("data", "source", "expected synthetic or file");
  }
  data.n = r.number<int>("data", "n", data.n);
  data.mean = r.number<double>("data", "mean", data.mean);
  data.sd = r.number<double>("data", "sd", data.sd);
  data.omega = r.number<double>("data", "omega", data.omega);
  data.standardize = r.boolean("data", "standardize", data.standardize);
  data.sv_omega = r.number<double>("data", "sv_omega", data.sv_omega);
  data.sv_rho = r.number<double>("data", "sv_rho", data.sv_rho);
  data.sv_sigma = r.number<double>("data", "sv_sigma", data.sv_sigma);
  data.n_toads = r.number<int>("data", "n_toads", data.n_toads);
  data.n_days = r.number<int>("data", "n_days", data.n_days);
  if (cfg.model != "toad" && data.n < 3) r.issue_at("data", "n", "sample size must be at least 3");
  if (cfg.model == "normal") {
    if (!(data.omega > 0.0 && data.omega < 1.0)) r.issue_at("data", "omega", "must lie in (0, 1)");
    else if (!(data.sd * data.sd > data.omega)) r.issue_at("data", "sd", "sd^2 must exceed omega");
  }
  if (cfg.model == "ma1") {
    if (!(data.sv_rho > 0.0 && data.sv_rho < 1.0)) r.issue_at("data", "sv_rho", "must lie in (0, 1)");
    if (!(data.sv_sigma > 0.0 && data.sv_sigma < 1.0)) r.issue_at("data", "sv_sigma", "must lie in (0, 1)");
  }
  if (cfg.model == "toad") {
    if (data.n_toads < 1) r.issue_at("data", "n_toads", "must be positive");
    if (data.n_days < 9) r.issue_at("data", "n_days", "must be at least 9 for lag 8");
    const auto t = r.numbers("data", "theta");
    if (t && t->size() == 3) {
      data.toad_theta = Eigen::Map<const Vector>(t->data(), 3);
    } else if (t) {
      r.issue_at("data", "theta", "toad theta needs 3 values");
    } else {
      data.toad_theta = Vector(3);
      data.toad_theta << 1.8, 45.0, 0.6;
    }
  }

  // theta prior
  {
    std::string default_kind = cfg.model == "normal" ? "normal" : "uniform";
    std::vector<double> lower, upper, mean, variance;
    if (cfg.model == "ma1") lower = {-1.0}, upper = {1.0};
    if (cfg.model == "toad") lower = {1.0, 0.0, 0.0}, upper = {2.0, 100.0, 0.9};
    mean.assign(static_cast<std::size_t>(d_theta), 0.0);
    variance.assign(static_cast<std::size_t>(d_theta), 10.0);
    if (lower.empty()) lower.assign(static_cast<std::size_t>(d_theta), 0.0);
    if (upper.empty()) upper.assign(static_cast<std::size_t>(d_theta), 1.0);
    const auto kinds = r.words("theta_prior", "kind", d_theta, default_kind);
    if (auto v = r.per_component("theta_prior", "lower", d_theta)) lower = *v;
    if (auto v = r.per_component("theta_prior", "upper", d_theta)) upper = *v;
    if (auto v = r.per_component("theta_prior", "mean", d_theta)) mean = *v;
    if (auto v = r.per_component("theta_prior", "variance", d_theta)) variance = *v;
    const std::string default_transform = cfg.model == "ma1" ? "identity" : "auto";
    const auto transforms = r.words("theta_prior", "transform", d_theta, default_transform);
    std::vector<ThetaComponent> components;
    bool ok = true;
    for (int i = 0; i < d_theta; ++i) {
      const auto k = static_cast<std::size_t>(i);
      ThetaComponent c;
      if (kinds[k] == "normal") {
        if (!(variance[k] > 0.0)) {
          r.issue_at("theta_prior", "variance", "must be positive");
          ok = false;
        }
        c = ThetaPrior::normal(mean[k], variance[k]);
      } else if (kinds[k] == "uniform") {
        if (!(upper[k] > lower[k])) {
          r.issue_at("theta_prior", "upper", "must exceed lower");
          ok = false;
        }
        c = ThetaPrior::uniform(lower[k], upper[k]);
      } else {
        r.issue_at("theta_prior", "kind", "unknown prior kind '" + kinds[k] + "'");
        ok = false;
        continue;
      }
      const auto& t = transforms[k];
      if (t == "identity") {
        c.transform = Transform::identity();
      } else if (t == "log") {
        if (kinds[k] != "uniform") {
          r.issue_at("theta_prior", "transform", "log transform needs a bounded-below (uniform) prior");
          ok = false;
        }
        c.transform = Transform::log(lower[k]);
      } else if (t == "logit") {
        if (kinds[k] != "uniform") {
          r.issue_at("theta_prior", "transform", "logit transform needs a uniform prior");
          ok = false;
        }
        c.transform = Transform::logit(lower[k], upper[k]);
      } else if (t != "auto") {
        r.issue_at("theta_prior", "transform", "unknown transform '" + t + "'");
        ok = false;
      }
      components.push_back(c);
    }
    if (ok && static_cast<int>(components.size()) == d_theta) cfg.theta_prior = ThetaPrior(std::move(components));
  }

  // gamma prior
  {
    const auto* kind = doc.find("gamma_prior", "kind");
    cfg.laplace_scale = r.number<double>("gamma_prior", "laplace_scale", cfg.laplace_scale);
    cfg.exponential_mean = r.number<double>("gamma_prior", "exponential_mean", cfg.exponential_mean);
    if (kind) {
      if (kind->value == "laplace") {
        cfg.gamma_kind = GammaPrior::Kind::Laplace;
        cfg.laplace_scale = r.number<double>("gamma_prior", "scale", cfg.laplace_scale);
      } else if (kind->value == "exponential") {
        cfg.gamma_kind = GammaPrior::Kind::Exponential;
        cfg.exponential_mean = r.number<double>("gamma_prior", "scale", cfg.exponential_mean);
      } else {
        r.issue(kind->line, "gamma_prior.kind", "expected laplace or exponential");
      }
    } else if (r.has("gamma_prior", "scale")) {
      r.issue_at("gamma_prior", "scale", "gamma_prior.scale needs gamma_prior.kind");
    }
    if (!(cfg.laplace_scale > 0.0)) r.issue_at("gamma_prior", "laplace_scale", "must be positive");
    if (!(cfg.exponential_mean > 0.0)) r.issue_at("gamma_prior", "exponential_mean", "must be positive");
    if (cfg.gamma_kind) {
      for (auto method : cfg.methods) {
        const bool mismatch = (method == RunMethod::RBSL_Mean && *cfg.gamma_kind != GammaPrior::Kind::Laplace) ||
                              (method == RunMethod::RBSL_Variance && *cfg.gamma_kind != GammaPrior::Kind::Exponential);
        if (mismatch) {
          r.issue(kind->line, "experiment.method/gamma_prior.kind",
                  "experiment.method = " + to_string(method) + " is inconsistent with gamma_prior.kind = " +
                      kind->value);
        }
      }
    }
  }

  // proposal
  {
    const int set_keys = static_cast<int>(r.has("proposal", "sd")) + static_cast<int>(r.has("proposal", "variance")) +
                         static_cast<int>(r.has("proposal", "covariance"));
    if (set_keys > 1) r.issue(0, "proposal", "give only one of sd, variance or covariance");
    cfg.proposal_cov = Matrix::Identity(d_theta, d_theta) * 0.01;
    if (auto sd = r.per_component("proposal", "sd", d_theta)) {
      Vector v = Eigen::Map<const Vector>(sd->data(), d_theta);
      cfg.proposal_cov = v.array().square().matrix().asDiagonal();
    } else if (auto var = r.per_component("proposal", "variance", d_theta)) {
      cfg.proposal_cov = Eigen::Map<const Vector>(var->data(), d_theta).asDiagonal();
    } else if (auto cov = r.numbers("proposal", "covariance")) {
      if (static_cast<int>(cov->size()) != d_theta * d_theta) {
        r.issue_at("proposal", "covariance", "needs d_theta^2 = " + std::to_string(d_theta * d_theta) + " values");
      } else {
        cfg.proposal_cov = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            cov->data(), d_theta, d_theta);
      }
    }
    if (Eigen::LLT<Matrix>(cfg.proposal_cov).info() != Eigen::Success ||
        !(cfg.proposal_cov.diagonal().array() > 0.0).all()) {
      r.issue(0, "proposal", "proposal covariance must be positive definite");
    }
    cfg.tune_proposal = r.boolean("proposal", "tune", false);
  }

  // initial value
  {
    const std::string init = r.str("init", "theta", "");
    if (init == "mle") {
      if (cfg.model != "ma1") r.issue_at("init", "theta", "init.theta = mle is only available for ma1");
    } else if (!init.empty()) {
      if (auto v = r.per_component("init", "theta", d_theta)) cfg.theta_init = Eigen::Map<const Vector>(v->data(), d_theta);
    } else if (cfg.model == "normal") {
      cfg.theta_init = Vector::Zero(1);
    } else if (cfg.model == "toad") {
      cfg.theta_init = Vector(3);
      *cfg.theta_init << 1.8, 45.0, 0.6;
    }
    if (cfg.theta_init && cfg.theta_prior.dim() == d_theta &&
        cfg.theta_prior.log_density(*cfg.theta_init) == -std::numeric_limits<double>::infinity()) {
      r.issue_at("init", "theta", "initial theta lies outside the prior support");
    }
  }

  if (auto t = r.per_component("truth", "theta", d_theta)) cfg.truth = Eigen::Map<const Vector>(t->data(), d_theta);

  // grid
  if (r.has("grid", "parameter") || r.has("grid", "values")) {
    cfg.grid.parameter = r.str("grid", "parameter", "");
    const auto dot = cfg.grid.parameter.find('.');
    if (dot == std::string::npos) {
      r.issue_at("grid", "parameter", "expected section.key");
    } else {
      const auto section = cfg.grid.parameter.substr(0, dot);
      const auto key = cfg.grid.parameter.substr(dot + 1);
      const auto it = schema().find(section);
      if (it == schema().end() || !it->second.count(key) || section == "grid") {
        r.issue_at("grid", "parameter", "'" + cfg.grid.parameter + "' is not a configurable key");
      }
    }
    try {
      cfg.grid.values = expand_values(r.str("grid", "values", ""));
    } catch (const ConfigError& e) {
      r.issue_at("grid", "values", e.what());
    }
  }
  cfg.grid.replicates = r.number<int>("grid", "replicates", 1);
  if (cfg.grid.replicates < 1) r.issue_at("grid", "replicates", "must be at least 1");

  cfg.threshold = r.number<double>("diagnostics", "threshold", cfg.threshold);
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0)) r.issue_at("diagnostics", "threshold", "must lie in (0, 1)");
  cfg.reference_n = r.number<std::size_t>("diagnostics", "reference_n", cfg.reference_n);
  if (cfg.reference_n < 1) r.issue_at("diagnostics", "reference_n", "must be positive");
  cfg.predictive_draws = r.number<std::size_t>("diagnostics", "predictive_draws", cfg.predictive_draws);
  if (cfg.predictive_draws != 0 && cfg.predictive_draws < 100) {
    r.issue_at("diagnostics", "predictive_draws", "must be 0 (off) or at least 100");
  }
  const std::string mode = r.str("diagnostics", "predictive_mode", "raw");
  if (mode == "adjusted") cfg.predictive_adjusted = true;
  else if (mode != "raw") r.issue_at("diagnostics", "predictive_mode", "expected raw or adjusted");

  cfg.output_dir = r.str("output", "directory", cfg.output_dir);
  cfg.export_thin = r.number<long>("output", "export_thin", cfg.export_thin);
  if (cfg.export_thin < 1) r.issue_at("output", "export_thin", "must be at least 1");
  cfg.density_points = r.number<std::size_t>("output", "density_points", cfg.density_points);
  if (cfg.density_points < 3) r.issue_at("output", "density_points", "must be at least 3");

  if (!r.issues().empty()) throw ConfigErrors(std::move(r.issues()));
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
  const ConfigDocument doc = parse_config_document(text);
  ExperimentConfig cfg = resolve_config(doc);
  // every grid point must resolve too
  std::vector<ConfigIssue> issues;
  for (const auto& value : cfg.grid.values) {
    ConfigDocument point = doc;
    point.set(cfg.grid.parameter, value);
    try {
      (void)resolve_config(point);
    } catch (const ConfigErrors& e) {
      for (auto issue : e.issues()) {
        issue.message += " (grid value " + value + ")";
        issues.push_back(issue);
      }
    }
  }
  if (!issues.empty()) throw ConfigErrors(std::move(issues));
  return cfg;
}

}  // namespace rbsl
