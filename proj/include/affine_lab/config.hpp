// Run configuration: strict JSON parsing, defaults, validation and serialization.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "affine_lab/params.hpp"
#include "affine_lab/sde.hpp"

namespace affine_lab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridConfig {
  double t_max = 1.0;
  double dt = 1.0 / 1024.0;
  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct McConfig {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  double eps = 1e-4;
  double u_bound = 8.0;
  friend bool operator==(const McConfig&, const McConfig&) = default;
};

/// Initial state (x0, z0); z0 is y0 for the catalytic model. l is the catalytic coupling.
struct StateConfig {
  double x0 = 1.0;
  double z0 = 0.0;
  double l = 1.0;
  friend bool operator==(const StateConfig&, const StateConfig&) = default;
};

struct TransformConfig {
  std::vector<UPoint> u_list{{{-1.0, 0.0}, {0.0, 0.0}}, {{0.0, 0.0}, {0.0, 1.0}},
                             {{-0.5, 0.0}, {0.0, -1.0}}};
  double tol = 1e-9;
  friend bool operator==(const TransformConfig&, const TransformConfig&) = default;
};

enum class SimModel { Affine, Cbi, Catalytic };

struct SimulateConfig {
  SimModel model = SimModel::Affine;
  friend bool operator==(const SimulateConfig&, const SimulateConfig&) = default;
};

struct ValidateConfig {
  std::vector<std::string> checks{"semigroup", "affine_formula", "moments"};
  std::vector<double> t_list{0.5, 1.0};
  std::vector<Point> states{{1.0, 0.5}, {0.3, 1.2}};  // generator state points
  std::vector<SimModel> models{SimModel::Affine, SimModel::Cbi, SimModel::Catalytic};
  double x0_b = 2.0;  // second initial value of the uniqueness experiment
  friend bool operator==(const ValidateConfig&, const ValidateConfig&) = default;
};

struct LimitConfig {
  std::vector<double> theta_ladder{4.0, 16.0, 64.0, 256.0};
  bool pair = false;
  std::optional<ReactantSplit> split;  // pair mode only; canonical parts when absent
  double z_plus0 = 0.0;
  double z_minus0 = 0.0;
  bool expect_inverse_theta = false;
  friend bool operator==(const LimitConfig& a, const LimitConfig& b) {
    auto parts = [](const std::optional<ReactantSplit>& s) {
      return s ? std::vector<double>{s->sigma0_plus,  s->sigma0_minus,  s->sigma21_plus,
                                     s->sigma21_minus, s->sigma22_plus,  s->sigma22_minus,
                                     s->b2_plus,       s->b2_minus,      s->beta21_plus,
                                     s->beta21_minus}
               : std::vector<double>{};
    };
    return a.theta_ladder == b.theta_ladder && a.pair == b.pair && parts(a.split) == parts(b.split) &&
           a.z_plus0 == b.z_plus0 && a.z_minus0 == b.z_minus0 &&
           a.expect_inverse_theta == b.expect_inverse_theta;
  }
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"csv", "json"};
  bool wants(std::string_view f) const {
    return std::find(formats.begin(), formats.end(), f) != formats.end();
  }
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
  ParamRecord params;
  GridConfig grid;
  McConfig mc;
  StateConfig state;
  TransformConfig transform;
  SimulateConfig simulate;
  ValidateConfig validate;
  LimitConfig limit;
  OutputConfig output;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"semigroup", "affine_formula", "moments",
                                              "generator", "uniqueness"};
  return names;
}

inline const char* sim_model_name(SimModel m) {
  switch (m) {
    case SimModel::Affine: return "affine";
    case SimModel::Cbi: return "cbi";
    case SimModel::Catalytic: return "catalytic";
  }
  return "?";
}

namespace detail {

using json = nlohmann::json;

inline std::string child(const std::string& path, std::string_view key) {
  return path + "." + std::string(key);
}
inline std::string child(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

inline void require_object(const json& j, const std::string& path,
                           std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError("unknown key " + child(path, it.key()));
  }
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path + ": must be finite");
  return v;
}

inline void read_number(const json& obj, std::string_view key, const std::string& path, double& out) {
  if (auto it = obj.find(key); it != obj.end()) out = get_number(*it, child(path, key));
}

inline void read_bool(const json& obj, std::string_view key, const std::string& path, bool& out) {
  if (auto it = obj.find(key); it != obj.end()) {
    if (!it->is_boolean()) throw ConfigError(child(path, key) + ": expected true or false");
    out = it->get<bool>();
  }
}

inline std::uint64_t get_unsigned(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) throw ConfigError(path + ": expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline const json& get_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  return j;
}

inline std::vector<double> get_number_list(const json& j, const std::string& path) {
  std::vector<double> out;
  const json& a = get_array(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(get_number(a[i], child(path, i)));
  return out;
}

inline Point get_point(const json& j, const std::string& path) {
  const auto v = get_number_list(j, path);
  if (v.size() != 2) throw ConfigError(path + ": expected [xi1, xi2]");
  return {v[0], v[1]};
}

inline JumpMeasure parse_measure(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  auto kind_it = j.find("kind");
  if (kind_it == j.end() || !kind_it->is_string())
    throw ConfigError(child(path, "kind") + ": expected \"finite_atomic\" or \"product_exponential\"");
  const std::string kind = kind_it->get<std::string>();
  double trunc = 0.0;
  if (kind == "finite_atomic") {
    require_object(j, path, {"kind", "atoms", "truncation_eps"});
    read_number(j, "truncation_eps", path, trunc);
    std::vector<Atom> atoms;
    if (auto it = j.find("atoms"); it != j.end()) {
      const std::string apath = child(path, "atoms");
      const json& a = get_array(*it, apath);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string ap = child(apath, i);
        require_object(a[i], ap, {"xi", "weight"});
        if (!a[i].contains("xi") || !a[i].contains("weight"))
          throw ConfigError(ap + ": atoms need \"xi\" and \"weight\"");
        atoms.push_back({get_point(a[i]["xi"], child(ap, "xi")),
                         get_number(a[i]["weight"], child(ap, "weight"))});
      }
    }
    return JumpMeasure::finite_atomic(std::move(atoms), trunc);
  }
  if (kind == "product_exponential") {
    require_object(j, path, {"kind", "total_rate", "rate1", "rate2", "sign_mix", "truncation_eps"});
    for (const char* k : {"total_rate", "rate1", "rate2", "sign_mix"})
      if (!j.contains(k)) throw ConfigError(child(path, k) + ": missing");
    double total = 0, r1 = 0, r2 = 0, s = 0;
    read_number(j, "total_rate", path, total);
    read_number(j, "rate1", path, r1);
    read_number(j, "rate2", path, r2);
    read_number(j, "sign_mix", path, s);
    read_number(j, "truncation_eps", path, trunc);
    return JumpMeasure::product_exponential(total, r1, r2, s, trunc);
  }
  throw ConfigError(child(path, "kind") + ": unknown measure kind \"" + kind + "\"");
}

inline json measure_to_json(const JumpMeasure& m) {
  json j = json::object();
  if (m.kind() == JumpMeasure::Kind::FiniteAtomic) {
    j["kind"] = "finite_atomic";
    json atoms = json::array();
    for (const Atom& a : m.atoms())
      atoms.push_back(json{{"xi", {a.xi.xi1, a.xi.xi2}}, {"weight", a.weight}});
    j["atoms"] = atoms;
  } else {
    j["kind"] = "product_exponential";
    j["total_rate"] = m.total_rate();
    j["rate1"] = m.rate1();
    j["rate2"] = m.rate2();
    j["sign_mix"] = m.sign_mix();
  }
  j["truncation_eps"] = m.truncation_eps();
  return j;
}

inline SimModel parse_model(const json& j, const std::string& path) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "affine") return SimModel::Affine;
    if (s == "cbi") return SimModel::Cbi;
    if (s == "catalytic") return SimModel::Catalytic;
  }
  throw ConfigError(path + ": expected \"affine\", \"cbi\" or \"catalytic\"");
}

inline cplx get_complex(const json& j, const std::string& path) {
  const auto v = get_number_list(j, path);
  if (v.size() != 2) throw ConfigError(path + ": expected [re, im]");
  return {v[0], v[1]};
}

inline std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  // byte points one past the offending character
  if (col > 1) --col;
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Stability and range checks that do not depend on the subcommand.
inline void check_config(const RunConfig& c) {
  const AdmissibilityResult adm = validate_admissible(c.params);
  if (!adm.report.ok()) throw ConfigError("$.params: " + adm.report.describe());
  const TimeGrid grid{c.grid.t_max, c.grid.dt};
  try {
    grid.check();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("$.grid: ") + e.what());
  }
  for (auto [rate, name] : {std::pair{c.params.beta.m11, "beta11"}, std::pair{c.params.beta.m22, "beta22"}}) {
    if (c.grid.dt * std::abs(rate) > kStabilityMargin) {
      std::ostringstream os;
      os << "$.grid.dt: stability rule dt * |" << name << "| <= " << kStabilityMargin
         << " violated (" << c.grid.dt * std::abs(rate) << ")";
      throw ConfigError(os.str());
    }
  }
  if (c.mc.n_paths < 2) throw ConfigError("$.mc.n_paths: need at least 2 paths");
  if (!(c.mc.eps > 0.0)) throw ConfigError("$.mc.eps: must be > 0");
  if (!(c.mc.u_bound > 0.0)) throw ConfigError("$.mc.u_bound: must be > 0");
  if (!(c.state.x0 >= 0.0)) throw ConfigError("$.state.x0: must be >= 0");
  if (!(c.state.l > 0.0)) throw ConfigError("$.state.l: must be > 0");
  if (!(c.transform.tol >= 1e-12 && c.transform.tol <= 1e-4))
    throw ConfigError("$.transform.tol: must lie in [1e-12, 1e-4]");
  for (std::size_t i = 0; i < c.transform.u_list.size(); ++i)
    if (!c.transform.u_list[i].in_domain())
      throw ConfigError("$.transform.u_list[" + std::to_string(i) +
                        "]: u must satisfy Re(u1) <= 0 and Re(u2) = 0");
  for (std::size_t i = 0; i < c.validate.t_list.size(); ++i) {
    const double t = c.validate.t_list[i];
    if (!(t > 0.0) || grid.index_of(t) == TimeGrid::npos)
      throw ConfigError("$.validate.t_list[" + std::to_string(i) + "]: must be a positive multiple of dt");
  }
  if (!(c.validate.x0_b >= 0.0)) throw ConfigError("$.validate.x0_b: must be >= 0");
  for (double th : c.limit.theta_ladder)
    if (!(th > 0.0)) throw ConfigError("$.limit.theta_ladder: entries must be > 0");
  if (c.limit.split && !c.limit.pair)
    throw ConfigError("$.limit.split: only meaningful with \"mode\": \"pair\"");
  for (const auto& f : c.output.formats)
    if (f != "csv" && f != "json") throw ConfigError("$.output.formats: unknown format \"" + f + "\"");
}

/// Strict parse: unknown keys, wrong types and inadmissible parameters are errors.
inline RunConfig parse_config(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::string what = e.what();
    if (auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ConfigError("JSON syntax error at " + detail::line_col(text, e.byte) + ": " + what);
  }
  const std::string root = "$";
  detail::require_object(doc, root,
                         {"params", "grid", "mc", "state", "transform", "simulate", "validate", "limit", "output"});
  if (!doc.contains("params")) throw ConfigError("$.params: missing");

  RunConfig c;
  {
    const std::string path = "$.params";
    const json& j = doc["params"];
    detail::require_object(j, path,
                           {"a", "alpha11", "alpha12", "alpha21", "alpha22", "b1", "b2", "beta11",
                            "beta12", "beta21", "beta22", "m", "mu"});
    ParamRecord& r = c.params;
    detail::read_number(j, "a", path, r.a);
    detail::read_number(j, "alpha11", path, r.alpha.m11);
    detail::read_number(j, "alpha12", path, r.alpha.m12);
    r.alpha.m21 = r.alpha.m12;
    detail::read_number(j, "alpha21", path, r.alpha.m21);
    detail::read_number(j, "alpha22", path, r.alpha.m22);
    detail::read_number(j, "b1", path, r.b1);
    detail::read_number(j, "b2", path, r.b2);
    detail::read_number(j, "beta11", path, r.beta.m11);
    detail::read_number(j, "beta12", path, r.beta.m12);
    detail::read_number(j, "beta21", path, r.beta.m21);
    detail::read_number(j, "beta22", path, r.beta.m22);
    if (j.contains("m")) r.m = detail::parse_measure(j["m"], path + ".m");
    if (j.contains("mu")) r.mu = detail::parse_measure(j["mu"], path + ".mu");
  }
  if (doc.contains("grid")) {
    const json& j = doc["grid"];
    detail::require_object(j, "$.grid", {"t_max", "dt"});
    detail::read_number(j, "t_max", "$.grid", c.grid.t_max);
    detail::read_number(j, "dt", "$.grid", c.grid.dt);
  }
  if (doc.contains("mc")) {
    const json& j = doc["mc"];
    detail::require_object(j, "$.mc", {"n_paths", "seed", "eps", "u_bound"});
    if (j.contains("n_paths")) c.mc.n_paths = detail::get_unsigned(j["n_paths"], "$.mc.n_paths");
    if (j.contains("seed")) c.mc.seed = detail::get_unsigned(j["seed"], "$.mc.seed");
    detail::read_number(j, "eps", "$.mc", c.mc.eps);
    detail::read_number(j, "u_bound", "$.mc", c.mc.u_bound);
  }
  if (doc.contains("state")) {
    const json& j = doc["state"];
    detail::require_object(j, "$.state", {"x0", "z0", "l"});
    detail::read_number(j, "x0", "$.state", c.state.x0);
    detail::read_number(j, "z0", "$.state", c.state.z0);
    detail::read_number(j, "l", "$.state", c.state.l);
  }
  if (doc.contains("transform")) {
    const json& j = doc["transform"];
    detail::require_object(j, "$.transform", {"u_list", "tol"});
    detail::read_number(j, "tol", "$.transform", c.transform.tol);
    if (j.contains("u_list")) {
      const std::string path = "$.transform.u_list";
      const json& a = detail::get_array(j["u_list"], path);
      c.transform.u_list.clear();
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string up = detail::child(path, i);
        detail::require_object(a[i], up, {"u1", "u2"});
        UPoint u;
        if (a[i].contains("u1")) u.u1 = detail::get_complex(a[i]["u1"], up + ".u1");
        if (a[i].contains("u2")) u.u2 = detail::get_complex(a[i]["u2"], up + ".u2");
        c.transform.u_list.push_back(u);
      }
    }
  }
  if (doc.contains("simulate")) {
    const json& j = doc["simulate"];
    detail::require_object(j, "$.simulate", {"model"});
    if (j.contains("model")) c.simulate.model = detail::parse_model(j["model"], "$.simulate.model");
  }
  if (doc.contains("validate")) {
    const std::string path = "$.validate";
    const json& j = doc["validate"];
    detail::require_object(j, path, {"checks", "t_list", "states", "models", "x0_b"});
    if (j.contains("checks")) {
      const json& a = detail::get_array(j["checks"], path + ".checks");
      c.validate.checks.clear();
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string cp = detail::child(path + ".checks", i);
        if (!a[i].is_string()) throw ConfigError(cp + ": expected a check name");
        const std::string name = a[i].get<std::string>();
        const auto& known = known_checks();
        if (std::find(known.begin(), known.end(), name) == known.end())
          throw ConfigError(cp + ": unknown check \"" + name + "\"");
        c.validate.checks.push_back(name);
      }
    }
    if (j.contains("t_list")) c.validate.t_list = detail::get_number_list(j["t_list"], path + ".t_list");
    if (j.contains("states")) {
      const json& a = detail::get_array(j["states"], path + ".states");
      c.validate.states.clear();
      for (std::size_t i = 0; i < a.size(); ++i)
        c.validate.states.push_back(detail::get_point(a[i], detail::child(path + ".states", i)));
    }
    if (j.contains("models")) {
      const json& a = detail::get_array(j["models"], path + ".models");
      c.validate.models.clear();
      for (std::size_t i = 0; i < a.size(); ++i)
        c.validate.models.push_back(detail::parse_model(a[i], detail::child(path + ".models", i)));
    }
    detail::read_number(j, "x0_b", path, c.validate.x0_b);
  }
  if (doc.contains("limit")) {
    const std::string path = "$.limit";
    const json& j = doc["limit"];
    detail::require_object(j, path,
                           {"theta_ladder", "mode", "split", "z_plus0", "z_minus0", "expect_inverse_theta"});
    if (j.contains("theta_ladder"))
      c.limit.theta_ladder = detail::get_number_list(j["theta_ladder"], path + ".theta_ladder");
    if (j.contains("mode")) {
      const json& m = j["mode"];
      if (m == "single") c.limit.pair = false;
      else if (m == "pair") c.limit.pair = true;
      else throw ConfigError(path + ".mode: expected \"single\" or \"pair\"");
    }
    if (j.contains("split")) {
      const std::string sp = path + ".split";
      const json& s = j["split"];
      detail::require_object(s, sp,
                             {"sigma0_plus", "sigma0_minus", "sigma21_plus", "sigma21_minus",
                              "sigma22_plus", "sigma22_minus", "b2_plus", "b2_minus",
                              "beta21_plus", "beta21_minus"});
      ReactantSplit r;
      detail::read_number(s, "sigma0_plus", sp, r.sigma0_plus);
      detail::read_number(s, "sigma0_minus", sp, r.sigma0_minus);
      detail::read_number(s, "sigma21_plus", sp, r.sigma21_plus);
      detail::read_number(s, "sigma21_minus", sp, r.sigma21_minus);
      detail::read_number(s, "sigma22_plus", sp, r.sigma22_plus);
      detail::read_number(s, "sigma22_minus", sp, r.sigma22_minus);
      detail::read_number(s, "b2_plus", sp, r.b2_plus);
      detail::read_number(s, "b2_minus", sp, r.b2_minus);
      detail::read_number(s, "beta21_plus", sp, r.beta21_plus);
      detail::read_number(s, "beta21_minus", sp, r.beta21_minus);
      c.limit.split = r;
    }
    detail::read_number(j, "z_plus0", path, c.limit.z_plus0);
    detail::read_number(j, "z_minus0", path, c.limit.z_minus0);
    detail::read_bool(j, "expect_inverse_theta", path, c.limit.expect_inverse_theta);
  }
  if (doc.contains("output")) {
    const json& j = doc["output"];
    detail::require_object(j, "$.output", {"directory", "formats"});
    if (j.contains("directory")) {
      if (!j["directory"].is_string()) throw ConfigError("$.output.directory: expected a string");
      c.output.directory = j["directory"].get<std::string>();
    }
    if (j.contains("formats")) {
      const json& a = detail::get_array(j["formats"], "$.output.formats");
      c.output.formats.clear();
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_string())
          throw ConfigError(detail::child("$.output.formats", i) + ": expected a string");
        c.output.formats.push_back(a[i].get<std::string>());
      }
    }
  }
  check_config(c);
  return c;
}

/// Full document with every field spelled out; parse_config(serialize_config(c)) == c.
inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
  using oj = nlohmann::ordered_json;
  const ParamRecord& r = c.params;
  oj j;
  j["params"] = {{"a", r.a},           {"alpha11", r.alpha.m11}, {"alpha12", r.alpha.m12},
                 {"alpha21", r.alpha.m21}, {"alpha22", r.alpha.m22}, {"b1", r.b1},
                 {"b2", r.b2},         {"beta11", r.beta.m11},   {"beta12", r.beta.m12},
                 {"beta21", r.beta.m21}, {"beta22", r.beta.m22}};
  j["params"]["m"] = oj::parse(detail::measure_to_json(r.m).dump());
  j["params"]["mu"] = oj::parse(detail::measure_to_json(r.mu).dump());
  j["grid"] = {{"t_max", c.grid.t_max}, {"dt", c.grid.dt}};
  j["mc"] = {{"n_paths", c.mc.n_paths}, {"seed", c.mc.seed}, {"eps", c.mc.eps}, {"u_bound", c.mc.u_bound}};
  j["state"] = {{"x0", c.state.x0}, {"z0", c.state.z0}, {"l", c.state.l}};
  oj us = oj::array();
  for (const UPoint& u : c.transform.u_list)
    us.push_back({{"u1", {u.u1.real(), u.u1.imag()}}, {"u2", {u.u2.real(), u.u2.imag()}}});
  j["transform"] = {{"u_list", us}, {"tol", c.transform.tol}};
  j["simulate"] = {{"model", sim_model_name(c.simulate.model)}};
  oj states = oj::array();
  for (const Point& s : c.validate.states) states.push_back({s.xi1, s.xi2});
  oj models = oj::array();
  for (SimModel m : c.validate.models) models.push_back(sim_model_name(m));
  j["validate"] = {{"checks", c.validate.checks}, {"t_list", c.validate.t_list},
                   {"states", states},           {"models", models},
                   {"x0_b", c.validate.x0_b}};
  j["limit"] = {{"theta_ladder", c.limit.theta_ladder}, {"mode", c.limit.pair ? "pair" : "single"}};
  if (c.limit.split) {
    const ReactantSplit& s = *c.limit.split;
    j["limit"]["split"] = {{"sigma0_plus", s.sigma0_plus},   {"sigma0_minus", s.sigma0_minus},
                           {"sigma21_plus", s.sigma21_plus}, {"sigma21_minus", s.sigma21_minus},
                           {"sigma22_plus", s.sigma22_plus}, {"sigma22_minus", s.sigma22_minus},
                           {"b2_plus", s.b2_plus},           {"b2_minus", s.b2_minus},
                           {"beta21_plus", s.beta21_plus},   {"beta21_minus", s.beta21_minus}};
  }
  j["limit"]["z_plus0"] = c.limit.z_plus0;
  j["limit"]["z_minus0"] = c.limit.z_minus0;
  j["limit"]["expect_inverse_theta"] = c.limit.expect_inverse_theta;
  j["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
  return j;
}

inline std::string serialize_config(const RunConfig& c) { return config_to_json(c).dump(2) + "\n"; }

}  // namespace affine_lab
