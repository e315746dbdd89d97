#include <algorithm>

#include "doctest.h"
#include "rbsl/config.hpp"

using namespace rbsl;

namespace {

std::vector<ConfigIssue> issues_of(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigErrors& e) {
    return e.issues();
  }
  return {};
}

bool has_issue(const std::vector<ConfigIssue>& issues, const std::string& key) {
  return std::any_of(issues.begin(), issues.end(), [&](const ConfigIssue& i) { return i.key == key; });
}

const ConfigIssue* find_issue(const std::vector<ConfigIssue>& issues, const std::string& key) {
  for (const auto& i : issues) {
    if (i.key == key) return &i;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("document parsing: sections, comments and line numbers") {
  const auto doc = parse_config_document("# header\n[experiment]\nmodel = normal  # trailing\n\nmethod=bsl, rbsl-mean\n");
  REQUIRE(doc.find("experiment", "model"));
  CHECK(doc.find("experiment", "model")->value == "normal");
  CHECK(doc.find("experiment", "model")->line == 3);
  CHECK(doc.find("experiment", "method")->value == "bsl, rbsl-mean");
  CHECK(doc.find("experiment", "m") == nullptr);
  CHECK(doc.find("data", "n") == nullptr);
}

TEST_CASE("document parsing reports every malformed line") {
  try {
    (void)parse_config_document("key = 1\n[experiment\n[experiment]\nno equals here\n = 3\nm = 1\nm = 2\n");
    FAIL("expected ConfigErrors");
  } catch (const ConfigErrors& e) {
    std::vector<int> lines;
    for (const auto& i : e.issues()) lines.push_back(i.line);
    CHECK(lines == std::vector<int>{1, 2, 4, 5, 7});
  }
}

TEST_CASE("set adds or replaces dotted keys") {
  ConfigDocument doc;
  doc.set("experiment.seed", "5");
  CHECK(doc.find("experiment", "seed")->value == "5");
  doc.set("experiment.seed", "6");
  CHECK(doc.find("experiment", "seed")->value == "6");
  CHECK_THROWS_AS(doc.set("seed", "1"), ConfigError);
}

TEST_CASE("minimal config gets model defaults") {
  const auto cfg = parse_config("[experiment]\nmethod = rbsl-mean\n");
  CHECK(cfg.model == "normal");
  REQUIRE(cfg.methods.size() == 1);
  CHECK(cfg.methods[0] == RunMethod::RBSL_Mean);
  CHECK(cfg.m == 100);
  CHECK(cfg.d_theta() == 1);
  CHECK(cfg.proposal_cov.rows() == 1);
  CHECK(cfg.proposal_cov(0, 0) == doctest::Approx(0.01));
  const GammaPrior g = cfg.gamma_prior_for(Method::RBSL_Mean, 2);
  CHECK(g.kind == GammaPrior::Kind::Laplace);
  CHECK(g.hyper == 0.5);
  const GammaPrior v = cfg.gamma_prior_for(Method::RBSL_Variance, 2);
  CHECK(v.kind == GammaPrior::Kind::Exponential);
  CHECK(v.hyper == 0.5);
  REQUIRE(cfg.theta_init);
  CHECK((*cfg.theta_init)[0] == 0.0);
}

TEST_CASE("toad defaults use the box prior") {
  const auto cfg = parse_config("[experiment]\nmodel = toad\nmethod = rbsl-var\n");
  CHECK(cfg.d_theta() == 3);
  CHECK(std::isinf(cfg.theta_prior.log_density(Vector::Constant(3, 5.0))));
  Vector inside(3);
  inside << 1.5, 40.0, 0.5;
  CHECK(std::isfinite(cfg.theta_prior.log_density(inside)));
}

TEST_CASE("variance method with a laplace prior names both keys") {
  const auto issues = issues_of("[experiment]\nmethod = rbsl-var\n[gamma_prior]\nkind = laplace\n");
  const ConfigIssue* issue = find_issue(issues, "experiment.method/gamma_prior.kind");
  REQUIRE(issue);
  CHECK(issue->message.find("experiment.method") != std::string::npos);
  CHECK(issue->message.find("gamma_prior.kind") != std::string::npos);
}

TEST_CASE("burn-in beyond the iteration count is rejected") {
  const auto issues = issues_of("[experiment]\nmethod = bsl\niterations = 100\nburn_in = 200\n");
  const ConfigIssue* issue = find_issue(issues, "experiment.burn_in");
  REQUIRE(issue);
  CHECK(issue->line == 4);
}

TEST_CASE("all value errors are reported together") {
  const auto issues = issues_of(
      "[experiment]\nmethod = bsl, nope\nm = 2\nthin = 0\n[data]\nomega = 1.5\nbogus = 1\n[diagnostics]\n"
      "threshold = 2\npredictive_draws = 50\n[weird]\nx = 1\n");
  CHECK(has_issue(issues, "experiment.method"));
  CHECK(has_issue(issues, "experiment.m"));
  CHECK(has_issue(issues, "experiment.thin"));
  CHECK(has_issue(issues, "data.omega"));
  CHECK(has_issue(issues, "data.bogus"));
  CHECK(has_issue(issues, "diagnostics.threshold"));
  CHECK(has_issue(issues, "diagnostics.predictive_draws"));
  CHECK(has_issue(issues, "weird"));
  CHECK(find_issue(issues, "experiment.thin")->line == 4);
  CHECK(find_issue(issues, "data.bogus")->line == 7);
}

TEST_CASE("missing method and type errors") {
  CHECK(has_issue(issues_of("[experiment]\nm = 50\n"), "experiment.method"));
  CHECK(has_issue(issues_of("[experiment]\nmethod = bsl\nm = ten\n"), "experiment.m"));
  CHECK(has_issue(issues_of("[experiment]\nmethod = bsl\n[proposal]\ntune = maybe\n"), "proposal.tune"));
}

TEST_CASE("proposal forms") {
  const auto sd = parse_config("[experiment]\nmodel = toad\nmethod = bsl\n[proposal]\nsd = 0.1, 0.2, 0.3\n");
  CHECK(sd.proposal_cov(1, 1) == doctest::Approx(0.04));
  CHECK(sd.proposal_cov(0, 1) == 0.0);
  const auto bc = parse_config("[experiment]\nmodel = toad\nmethod = bsl\n[proposal]\nvariance = 0.5\n");
  CHECK(bc.proposal_cov(2, 2) == 0.5);
  CHECK(has_issue(issues_of("[experiment]\nmethod = bsl\n[proposal]\nsd = 1\nvariance = 1\n"), "proposal"));
  CHECK(has_issue(issues_of("[experiment]\nmodel = toad\nmethod = bsl\n[proposal]\nsd = 0.1, 0.2\n"), "proposal.sd"));
  CHECK(has_issue(issues_of("[experiment]\nmethod = bsl\n[proposal]\ncovariance = -1\n"), "proposal"));
}

TEST_CASE("initial values must be inside the prior support") {
  CHECK(has_issue(issues_of("[experiment]\nmodel = ma1\nmethod = bsl\n[init]\ntheta = 2\n"), "init.theta"));
  const auto cfg = parse_config("[experiment]\nmodel = ma1\nmethod = bsl\n[init]\ntheta = mle\n");
  CHECK_FALSE(cfg.theta_init);
  CHECK(has_issue(issues_of("[experiment]\nmethod = bsl\n[init]\ntheta = mle\n"), "init.theta"));
}

TEST_CASE("value expansion") {
  const auto range = expand_values("1.0:0.1:2.0");
  REQUIRE(range.size() == 11);
  CHECK(range.front() == "1");
  CHECK(range[3] == "1.3");
  CHECK(range.back() == "2");
  CHECK(expand_values("a, b,c") == std::vector<std::string>{"a", "b", "c"});
  CHECK_THROWS_AS(expand_values("1:0:2"), ConfigError);
  CHECK_THROWS_AS(expand_values("2:0.1:1"), ConfigError);
}

TEST_CASE("grid points are validated individually") {
  const auto cfg = parse_config("[experiment]\nmethod = bsl\n[grid]\nparameter = data.sd\nvalues = 1.0:0.5:2.0\nreplicates = 2\n");
  CHECK(cfg.grid.values.size() == 3);
  CHECK(cfg.grid.replicates == 2);
  const auto bad = issues_of("[experiment]\nmethod = bsl\n[grid]\nparameter = data.sd\nvalues = 0.5, 1.0\n");
  const ConfigIssue* issue = find_issue(bad, "data.sd");
  REQUIRE(issue);
  CHECK(issue->message.find("grid value 0.5") != std::string::npos);
  CHECK(has_issue(issues_of("[experiment]\nmethod = bsl\n[grid]\nparameter = sd\nvalues = 1\n"), "grid.parameter"));
}

TEST_CASE("method names round-trip") {
  for (auto m : {RunMethod::BSL, RunMethod::RBSL_Mean, RunMethod::RBSL_Variance, RunMethod::BSL_ImportanceSampling}) {
    const auto cfg = parse_config("[experiment]\nmethod = " + to_string(m) + "\n");
    CHECK(cfg.methods[0] == m);
  }
  CHECK_FALSE(chain_method(RunMethod::BSL_ImportanceSampling));
  CHECK(*chain_method(RunMethod::RBSL_Variance) == Method::RBSL_Variance);
}
