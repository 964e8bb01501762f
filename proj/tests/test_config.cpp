#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "affine_lab/config.hpp"

using namespace affine_lab;

namespace {

const char* kMinimal = R"({"params": {"a": 1, "beta22": -1}})";

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string with(const std::string& extra) {
  return R"({"params": {"a": 1, "beta22": -1}, )" + extra + "}";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, DefaultsFillUnspecifiedSections) {
  const RunConfig c = parse_config(kMinimal);
  EXPECT_EQ(c.params.a, 1.0);
  EXPECT_EQ(c.params.beta.m22, -1.0);
  EXPECT_EQ(c.grid, GridConfig{});
  EXPECT_EQ(c.mc, McConfig{});
  EXPECT_EQ(c.state, StateConfig{});
  EXPECT_EQ(c.transform, TransformConfig{});
  EXPECT_EQ(c.validate, ValidateConfig{});
  EXPECT_EQ(c.limit, LimitConfig{});
  EXPECT_EQ(c.output.directory, "out");
  EXPECT_TRUE(c.output.wants("csv"));
  EXPECT_TRUE(c.output.wants("json"));
}

TEST(Config, Alpha21DefaultsToAlpha12) {
  const RunConfig c =
      parse_config(R"({"params": {"alpha11": 1, "alpha12": 0.3, "alpha22": 1}})");
  EXPECT_EQ(c.params.alpha.m21, 0.3);
}

TEST(Config, MissingParams) { EXPECT_EQ(error_of("{}"), "$.params: missing"); }

TEST(Config, InadmissibleParamsNameTheClause) {
  const std::string e = error_of(R"({"params": {"beta12": 0.5}})");
  EXPECT_EQ(e.rfind("$.params: clause (iv)", 0), 0u) << e;
  EXPECT_NE(e.find("beta12"), std::string::npos) << e;
  EXPECT_EQ(error_of(R"({"params": {"b1": -0.5}})").rfind("$.params: clause (iii)", 0), 0u);
}

TEST(Config, UnknownKeysCarryTheirPath) {
  EXPECT_EQ(error_of(with(R"("mc": {"n_path": 3})")), "unknown key $.mc.n_path");
  EXPECT_EQ(error_of(R"({"params": {}, "extra": 1})"), "unknown key $.extra");
  EXPECT_EQ(error_of(R"({"params": {"m": {"kind": "finite_atomic", "atoms": [{"xi": [1, 0], "weight": 1, "w": 2}]}}})"),
            "unknown key $.params.m.atoms[0].w");
}

TEST(Config, SyntaxErrorsReportLineAndColumn) {
  const std::string e = error_of("{\n  \"params\": {\n    \"a\": 1,,\n  }\n}");
  EXPECT_EQ(e.rfind("JSON syntax error at line 3, column 12", 0), 0u) << e;
}

TEST(Config, TypeErrors) {
  EXPECT_EQ(error_of(R"({"params": {"a": "one"}})"), "$.params.a: expected a number");
  EXPECT_EQ(error_of(with(R"("mc": {"n_paths": -5})")), "$.mc.n_paths: expected a nonnegative integer");
  EXPECT_EQ(error_of(with(R"("mc": {"seed": 1.5})")), "$.mc.seed: expected a nonnegative integer");
  EXPECT_EQ(error_of(with(R"("limit": {"expect_inverse_theta": 1})")),
            "$.limit.expect_inverse_theta: expected true or false");
  EXPECT_EQ(error_of(with(R"("validate": {"states": [[1, 2, 3]]})")),
            "$.validate.states[0]: expected [xi1, xi2]");
  EXPECT_EQ(error_of(with(R"("simulate": {"model": "heston"})")),
            "$.simulate.model: expected \"affine\", \"cbi\" or \"catalytic\"");
  EXPECT_EQ(error_of(with(R"("limit": {"mode": "triple"})")), "$.limit.mode: expected \"single\" or \"pair\"");
}

TEST(Config, GridAndStability) {
  EXPECT_EQ(error_of(with(R"("grid": {"t_max": 1, "dt": 0.3})")).rfind("$.grid:", 0), 0u);
  const std::string e = error_of(R"({"params": {"beta11": -1}, "grid": {"t_max": 1, "dt": 0.25}})");
  EXPECT_EQ(e.rfind("$.grid.dt: stability rule dt * |beta11| <= 0.1 violated", 0), 0u) << e;
  EXPECT_EQ(error_of(R"({"params": {"beta11": -1}, "grid": {"t_max": 1, "dt": 0.0625}})"), "");
}

TEST(Config, RangeChecks) {
  EXPECT_EQ(error_of(with(R"("mc": {"n_paths": 1})")), "$.mc.n_paths: need at least 2 paths");
  EXPECT_EQ(error_of(with(R"("mc": {"eps": 0})")), "$.mc.eps: must be > 0");
  EXPECT_EQ(error_of(with(R"("state": {"x0": -1})")), "$.state.x0: must be >= 0");
  EXPECT_EQ(error_of(with(R"("transform": {"tol": 1e-3})")), "$.transform.tol: must lie in [1e-12, 1e-4]");
  EXPECT_EQ(error_of(with(R"("transform": {"u_list": [{"u1": [0.5, 0]}]})")),
            "$.transform.u_list[0]: u must satisfy Re(u1) <= 0 and Re(u2) = 0");
  EXPECT_EQ(error_of(with(R"("validate": {"t_list": [0.5, 0.3]})")),
            "$.validate.t_list[1]: must be a positive multiple of dt");
  EXPECT_EQ(error_of(with(R"("validate": {"checks": ["semigroup", "ergodicity"]})")),
            "$.validate.checks[1]: unknown check \"ergodicity\"");
  EXPECT_EQ(error_of(with(R"("limit": {"theta_ladder": [4, 0]})")), "$.limit.theta_ladder: entries must be > 0");
  EXPECT_EQ(error_of(with(R"("limit": {"split": {"b2_plus": 0.1}})")),
            "$.limit.split: only meaningful with \"mode\": \"pair\"");
  EXPECT_EQ(error_of(with(R"("output": {"formats": ["csv", "xml"]})")),
            "$.output.formats: unknown format \"xml\"");
}

TEST(Config, Measures) {
  const RunConfig c = parse_config(R"({"params": {"m": {"kind": "product_exponential", "total_rate": 2,
      "rate1": 3, "rate2": 4, "sign_mix": 0.25, "truncation_eps": 0.01},
      "mu": {"kind": "finite_atomic", "atoms": [{"xi": [0.5, -0.5], "weight": 2}]}}})");
  EXPECT_EQ(c.params.m.kind(), JumpMeasure::Kind::ProductExponential);
  EXPECT_EQ(c.params.m.rate2(), 4.0);
  EXPECT_EQ(c.params.m.truncation_eps(), 0.01);
  ASSERT_EQ(c.params.mu.atoms().size(), 1u);
  EXPECT_EQ(c.params.mu.atoms()[0].xi.xi2, -0.5);
  EXPECT_EQ(error_of(R"({"params": {"m": {"kind": "stable"}}})"),
            "$.params.m.kind: unknown measure kind \"stable\"");
  EXPECT_EQ(error_of(R"({"params": {"m": {"kind": "product_exponential", "rate1": 1, "rate2": 1, "sign_mix": 0}}})"),
            "$.params.m.total_rate: missing");
  EXPECT_EQ(error_of(R"({"params": {"m": {"kind": "finite_atomic", "atoms": [{"xi": [1, 0]}]}}})"),
            "$.params.m.atoms[0]: atoms need \"xi\" and \"weight\"");
}

TEST(Config, PairSplitParses) {
  const RunConfig c = parse_config(with(R"("limit": {"mode": "pair", "split": {"sigma0_plus": 0.2, "b2_minus": 0.1}})"));
  ASSERT_TRUE(c.limit.split.has_value());
  EXPECT_EQ(c.limit.split->sigma0_plus, 0.2);
  EXPECT_EQ(c.limit.split->b2_minus, 0.1);
}

TEST(Config, SerializeRoundTripsShippedConfigs) {
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(AFFINE_LAB_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().string());
    const RunConfig c = parse_config(slurp(entry.path()));
    const std::string text = serialize_config(c);
    const RunConfig back = parse_config(text);
    EXPECT_TRUE(back == c);
    EXPECT_EQ(serialize_config(back), text);
    ++seen;
  }
  EXPECT_GE(seen, 6);
}

TEST(Config, SerializeRoundTripsSplit) {
  RunConfig c = parse_config(kMinimal);
  c.limit.pair = true;
  c.limit.split = ReactantSplit{};
  c.limit.split->sigma22_plus = 0.125;
  c.transform.u_list = {{{-0.25, 1.5}, {0.0, -2.0}}};
  c.simulate.model = SimModel::Cbi;
  c.output.formats = {"json"};
  EXPECT_TRUE(parse_config(serialize_config(c)) == c);
}
