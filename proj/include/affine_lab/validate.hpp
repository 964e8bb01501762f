// Monte Carlo estimators and experiment drivers: simulated paths against the
// transform, the moment functionals, the generators and the fluctuation limits.
#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "affine_lab/format.hpp"
#include "affine_lab/noise.hpp"
#include "affine_lab/parallel.hpp"
#include "affine_lab/params.hpp"
#include "affine_lab/sde.hpp"
#include "affine_lab/transform.hpp"

namespace affine_lab {

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Reports.

enum class RowKind {
  Within,  // |observed - predicted| <= tolerance
  AtMost,  // observed <= predicted + tolerance (real parts)
  Exact,   // observed == predicted bitwise
  Info,    // recorded, always passes
};

inline const char* row_kind_name(RowKind k) {
  switch (k) {
    case RowKind::Within: return "within";
    case RowKind::AtMost: return "at_most";
    case RowKind::Exact: return "exact";
    case RowKind::Info: return "info";
  }
  return "?";
}

struct CheckRow {
  std::string quantity;
  cplx predicted;
  cplx observed;
  double tolerance = 0.0;
  RowKind kind = RowKind::Within;
  bool complex_valued = false;
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double bias_budget = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;

  void evaluate() {
    switch (kind) {
      case RowKind::Within: pass = std::abs(observed - predicted) <= tolerance; break;
      case RowKind::AtMost: pass = observed.real() <= predicted.real() + tolerance; break;
      case RowKind::Exact: pass = observed == predicted; break;
      case RowKind::Info: pass = true; break;
    }
  }
};

struct ExperimentReport {
  std::string name;
  std::string inputs_digest;
  std::vector<CheckRow> rows;
  double runtime_seconds = 0.0;  // reported on the table only, never serialized

  bool pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
  }

  const CheckRow* first_failure() const {
    for (const CheckRow& r : rows)
      if (!r.pass) return &r;
    return nullptr;
  }

  CheckRow& add(std::string quantity, cplx predicted, cplx observed, double tolerance,
                RowKind kind, bool complex_valued = false) {
    CheckRow row;
    row.quantity = std::move(quantity);
    row.predicted = predicted;
    row.observed = observed;
    row.tolerance = tolerance;
    row.kind = kind;
    row.complex_valued = complex_valued;
    row.evaluate();
    rows.push_back(std::move(row));
    return rows.back();
  }

  nlohmann::ordered_json to_json() const {
    using nlohmann::ordered_json;
    auto value = [](const CheckRow& r, cplx v) -> ordered_json {
      if (r.complex_valued) return ordered_json{{"re", v.real()}, {"im", v.imag()}};
      return v.real();
    };
    ordered_json j;
    j["name"] = name;
    j["inputs_digest"] = inputs_digest;
    j["pass"] = pass();
    ordered_json rows_json = ordered_json::array();
    for (const CheckRow& r : rows) {
      ordered_json row;
      row["quantity"] = r.quantity;
      row["kind"] = row_kind_name(r.kind);
      row["predicted"] = value(r, r.predicted);
      row["observed"] = value(r, r.observed);
      row["tolerance"] = r.tolerance;
      if (std::isfinite(r.std_error)) row["stderr"] = r.std_error;
      if (std::isfinite(r.bias_budget)) row["bias_budget"] = r.bias_budget;
      row["pass"] = r.pass;
      rows_json.push_back(std::move(row));
    }
    j["rows"] = std::move(rows_json);
    return j;
  }

  void print_table(std::ostream& os) const {
    auto show = [](const CheckRow& r, cplx v) {
      std::ostringstream s;
      s << std::setprecision(6);
      if (r.complex_valued)
        s << v.real() << (v.imag() < 0 ? "" : "+") << v.imag() << "i";
      else
        s << v.real();
      return s.str();
    };
    os << "== " << name << "  [" << (pass() ? "PASS" : "FAIL") << "]  (" << std::fixed
       << std::setprecision(2) << runtime_seconds << " s)\n";
    os.unsetf(std::ios::floatfield);
    os << std::left << std::setw(44) << "quantity" << std::setw(26) << "predicted"
       << std::setw(26) << "observed" << std::setw(14) << "tolerance" << "result\n";
    for (const CheckRow& r : rows) {
      std::ostringstream tol;
      tol << std::setprecision(4) << r.tolerance;
      os << std::left << std::setw(44) << r.quantity << std::setw(26) << show(r, r.predicted)
         << std::setw(26) << show(r, r.observed) << std::setw(14)
         << (r.kind == RowKind::Info ? "-" : tol.str())
         << (r.kind == RowKind::Info ? "info" : (r.pass ? "pass" : "FAIL")) << "\n";
    }
    os << std::right;
  }
};

/// Monte Carlo settings shared by the experiment drivers.
struct McSettings {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  double dt = 1.0 / 1024.0;
  double eps = 1e-4;
  double u_bound = 8.0;
  unsigned workers = 0;
  std::size_t n_calibration = 10000;  // paths of the dt vs dt/2 bias calibration
};

inline constexpr double kGeneratorBiasConstant = 20.0;    // C_gen: budget C_gen * delta
inline constexpr double kUniquenessBiasConstant = 1.0;    // C_u: budget C_u * dt * |dx0|
inline constexpr double kLadderSlack = 1.05;              // e_{i+1} <= 1.05 e_i
inline constexpr double kLadderTotalDrop = 4.0;           // e_last <= e_first / 4
inline constexpr double kInverseThetaTolerance = 0.10;    // deterministic ratios within 10%
inline constexpr std::uint64_t kCalibrationStream = 1ULL << 62;

namespace detail {

inline std::string fmt_short(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

inline std::string fmt_u(const UPoint& u) {
  auto c = [](cplx z) {
    std::ostringstream os;
    os << std::setprecision(6) << z.real();
    if (z.imag() != 0.0) os << (z.imag() < 0 ? "" : "+") << z.imag() << "i";
    return os.str();
  };
  return "(" + c(u.u1) + "," + c(u.u2) + ")";
}

inline void describe_measure(std::ostringstream& os, const JumpMeasure& m) {
  if (m.kind() == JumpMeasure::Kind::FiniteAtomic) {
    os << "atoms[";
    for (const Atom& a : m.atoms())
      os << fmt_num(a.xi.xi1) << ',' << fmt_num(a.xi.xi2) << ',' << fmt_num(a.weight) << ';';
    os << "]";
  } else {
    os << "pexp[" << fmt_num(m.total_rate()) << ',' << fmt_num(m.rate1()) << ','
       << fmt_num(m.rate2()) << ',' << fmt_num(m.sign_mix()) << ']';
  }
  os << "eps=" << fmt_num(m.truncation_eps());
}

inline std::string describe_params(const AdmissibleParams& p) {
  const ParamRecord& r = p.record();
  std::ostringstream os;
  os << "a=" << fmt_num(r.a) << ";alpha=" << fmt_num(r.alpha.m11) << ',' << fmt_num(r.alpha.m12)
     << ',' << fmt_num(r.alpha.m22) << ";b=" << fmt_num(r.b1) << ',' << fmt_num(r.b2)
     << ";beta=" << fmt_num(r.beta.m11) << ',' << fmt_num(r.beta.m21) << ','
     << fmt_num(r.beta.m22) << ";m=";
  describe_measure(os, r.m);
  os << ";mu=";
  describe_measure(os, r.mu);
  return os.str();
}

inline std::string describe_mc(const McSettings& mc) {
  std::ostringstream os;
  os << "n=" << mc.n_paths << ";seed=" << mc.seed << ";dt=" << fmt_num(mc.dt)
     << ";eps=" << fmt_num(mc.eps) << ";u_bound=" << fmt_num(mc.u_bound)
     << ";ncal=" << mc.n_calibration;
  return os.str();
}

inline std::string digest(const std::string& s) { return hex64(fnv1a(s)); }

/// Mean and standard error of a sample (sample variance, n - 1).
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return {};
  // Shifted by the first sample: exact for constant samples.
  const double shift = v[0];
  double acc = 0.0;
  for (double x : v) acc += x - shift;
  const double mean = shift + acc / static_cast<double>(n);
  if (n < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

struct ComplexMeanSe {
  cplx mean;
  double se = 0.0;
};

inline ComplexMeanSe complex_mean_se(std::span<const cplx> v) {
  std::vector<double> re(v.size()), im(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    re[i] = v[i].real();
    im[i] = v[i].imag();
  }
  const MeanSe a = mean_se(re);
  const MeanSe b = mean_se(im);
  return {{a.mean, b.mean}, std::hypot(a.se, b.se)};
}

/// Runs `sim(noise)` on the noise of one path; when it reports an abort
/// (nullopt), regenerates with doubled u_bound from the same seed.
template <class Sim>
auto with_retry(const JumpMeasure& m, const JumpMeasure& mu, TimeGrid grid, std::uint64_t seed,
                double u_bound, double eps, Sim&& sim) {
  for (int attempt = 0; attempt < 40; ++attempt) {
    const NoiseSystem noise = generate_noise(m, mu, grid, seed, u_bound, eps);
    auto result = sim(noise);
    if (result) return std::move(*result);
    u_bound *= 2.0;
  }
  throw SimulationError("u_bound kept overflowing; state appears to explode");
}

inline std::vector<std::size_t> grid_indices(const TimeGrid& grid, std::span<const double> times) {
  std::vector<std::size_t> idx;
  for (double t : times) {
    const std::size_t k = grid.index_of(t);
    if (k == TimeGrid::npos) throw ValidationError("check time " + fmt_short(t) + " is off-grid");
    idx.push_back(k);
  }
  return idx;
}

inline TimeGrid horizon_grid(std::span<const double> times, double dt) {
  if (times.empty()) throw ValidationError("need at least one check time");
  for (double t : times)
    if (!(t > 0.0)) throw ValidationError("check times must be > 0");
  TimeGrid g{*std::max_element(times.begin(), times.end()), dt};
  try {
    g.check();
  } catch (const NoiseError&) {
    throw ValidationError("check time " + fmt_short(g.t_max) + " is off the dt grid");
  }
  return g;
}

/// (x, z) of the affine process at the given grid indices; nullopt on abort.
inline std::optional<std::vector<std::array<double, 2>>> affine_samples(
    const AdmissibleParams& p, double x0, double z0, const NoiseSystem& noise,
    std::span<const std::size_t> idx) {
  const PathBundle b = simulate_affine(p, x0, z0, noise);
  if (b.aborted()) return std::nullopt;
  std::vector<std::array<double, 2>> out;
  out.reserve(idx.size());
  for (std::size_t k : idx) out.push_back({b.values[0][k], b.values[1][k]});
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Empirical characteristic function.

struct CharFnEstimate {
  UPoint u;
  double t = 0.0;
  cplx estimate;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

/// Estimate of E exp(u1 x1(t) + u2 x2(t)) from samples of (x1(t), x2(t)).
inline CharFnEstimate char_fn_estimate(std::span<const double> x1, std::span<const double> x2,
                                       double t, const UPoint& u) {
  if (x1.empty()) throw ValidationError("empty ensemble");
  if (!x2.empty() && x2.size() != x1.size()) throw ValidationError("component sizes differ");
  std::vector<cplx> values(x1.size());
  for (std::size_t i = 0; i < x1.size(); ++i)
    values[i] = std::exp(u.u1 * x1[i] + (x2.empty() ? cplx{} : u.u2 * x2[i]));
  const auto ms = detail::complex_mean_se(values);
  return {u, t, ms.mean, ms.se, x1.size()};
}

/// Sample mean of exp(u1 c1(t) + u2 c2(t)) over an ensemble; `second` may be empty.
inline CharFnEstimate empirical_char_fn(std::span<const PathBundle> paths, std::string_view first,
                                        std::string_view second, double t, const UPoint& u) {
  if (paths.size() < 2) throw ValidationError("need at least two paths");
  std::vector<double> a, b;
  for (const PathBundle& p : paths) {
    const std::size_t k = p.grid.index_of(t);
    if (k == TimeGrid::npos) throw ValidationError("t is off the path grid");
    const auto& c1 = p.component(first);
    if (k >= c1.size()) throw ValidationError("path ends before t (aborted run)");
    a.push_back(c1[k]);
    if (!second.empty()) b.push_back(p.component(second)[k]);
  }
  return char_fn_estimate(a, b, t, u);
}

// ---------------------------------------------------------------------------
// Affine transform formula and first moments.

/// Empirical versus analytic characteristic function of (x(t), z(t)).
/// Tolerance per row: 3 stderr + C_b dt, with C_b = max over rows of
/// 2 (|mean(f_dt - f_dt/2)| + 3 se) / dt from a run on refined common noise.
inline ExperimentReport check_affine_formula(const AdmissibleParams& p, double x0, double z0,
                                             std::span<const double> t_list,
                                             std::span<const UPoint> u_list,
                                             const McSettings& mc, double tol = 1e-9) {
  const auto start = std::chrono::steady_clock::now();
  for (const UPoint& u : u_list)
    if (!u.in_domain()) throw ValidationError("frequency " + detail::fmt_u(u) + " is outside U");
  if (mc.n_paths < 2) throw ValidationError("need at least two paths");
  const TimeGrid grid = detail::horizon_grid(t_list, mc.dt);
  const auto idx = detail::grid_indices(grid, t_list);

  auto samples = parallel_map<std::vector<std::array<double, 2>>>(
      mc.n_paths, mc.workers, [&](std::size_t i) {
        return detail::with_retry(p.m(), p.mu(), grid, substream_seed(mc.seed, i), mc.u_bound,
                                  mc.eps, [&](const NoiseSystem& ns) {
                                    return detail::affine_samples(p, x0, z0, ns, idx);
                                  });
      });

  // Bias calibration on refined common noise.
  const std::uint64_t cal_seed = substream_seed(mc.seed, kCalibrationStream);
  std::vector<std::size_t> fine_idx;
  for (std::size_t k : idx) fine_idx.push_back(2 * k);
  using Pair = std::array<std::vector<std::array<double, 2>>, 2>;
  auto cal = parallel_map<Pair>(mc.n_calibration, mc.workers, [&](std::size_t i) {
    return detail::with_retry(
        p.m(), p.mu(), grid, substream_seed(cal_seed, i), mc.u_bound, mc.eps,
        [&](const NoiseSystem& ns) -> std::optional<Pair> {
          auto coarse = detail::affine_samples(p, x0, z0, ns, idx);
          auto fine = detail::affine_samples(p, x0, z0, refine(ns), fine_idx);
          if (!coarse || !fine) return std::nullopt;
          return Pair{std::move(*coarse), std::move(*fine)};
        });
  });

  double c_b = 0.0;
  for (std::size_t ti = 0; ti < idx.size(); ++ti) {
    for (const UPoint& u : u_list) {
      std::vector<cplx> d(cal.size());
      for (std::size_t i = 0; i < cal.size(); ++i) {
        const auto& c = cal[i][0][ti];
        const auto& f = cal[i][1][ti];
        d[i] = std::exp(u.u1 * c[0] + u.u2 * c[1]) - std::exp(u.u1 * f[0] + u.u2 * f[1]);
      }
      if (d.empty()) continue;
      const auto ms = detail::complex_mean_se(d);
      c_b = std::max(c_b, 2.0 * (std::abs(ms.mean) + 3.0 * ms.se) / mc.dt);
    }
  }
  const double budget = c_b * mc.dt;

  ExperimentReport rep;
  rep.name = "affine_formula";
  rep.inputs_digest = detail::digest("affine_formula|" + detail::describe_params(p) + "|x0=" +
                                     fmt_num(x0) + "|z0=" + fmt_num(z0) + "|" +
                                     detail::describe_mc(mc));
  std::vector<double> xs(samples.size()), zs(samples.size());
  for (std::size_t ti = 0; ti < idx.size(); ++ti) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      xs[i] = samples[i][ti][0];
      zs[i] = samples[i][ti][1];
    }
    for (const UPoint& u : u_list) {
      const double t = t_list[ti];
      const auto est = char_fn_estimate(xs, zs, t, u);
      const cplx exact = char_fn(p, {x0, z0}, t, u, tol);
      auto& row = rep.add("char_fn t=" + detail::fmt_short(t) + " u=" + detail::fmt_u(u), exact,
                          est.estimate, 3.0 * est.std_error + budget, RowKind::Within, true);
      row.std_error = est.std_error;
      row.bias_budget = budget;
    }
  }
  rep.add("bias constant C_b", 0.0, c_b, 0.0, RowKind::Info);
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

/// Empirical means of x(t), z(t) against the moment functionals, plus the
/// one-sided Gronwall bound E[x(t)] <= (x0 + t b1 + t m(l1)) exp(t |beta11|).
inline ExperimentReport check_moments(const AdmissibleParams& p, double x0, double z0,
                                      std::span<const double> t_list, const McSettings& mc) {
  const auto start = std::chrono::steady_clock::now();
  if (mc.n_paths < 2) throw ValidationError("need at least two paths");
  const TimeGrid grid = detail::horizon_grid(t_list, mc.dt);
  const auto idx = detail::grid_indices(grid, t_list);

  auto samples = parallel_map<std::vector<std::array<double, 2>>>(
      mc.n_paths, mc.workers, [&](std::size_t i) {
        return detail::with_retry(p.m(), p.mu(), grid, substream_seed(mc.seed, i), mc.u_bound,
                                  mc.eps, [&](const NoiseSystem& ns) {
                                    return detail::affine_samples(p, x0, z0, ns, idx);
                                  });
      });

  const std::uint64_t cal_seed = substream_seed(mc.seed, kCalibrationStream);
  std::vector<std::size_t> fine_idx;
  for (std::size_t k : idx) fine_idx.push_back(2 * k);
  using Pair = std::array<std::vector<std::array<double, 2>>, 2>;
  auto cal = parallel_map<Pair>(mc.n_calibration, mc.workers, [&](std::size_t i) {
    return detail::with_retry(
        p.m(), p.mu(), grid, substream_seed(cal_seed, i), mc.u_bound, mc.eps,
        [&](const NoiseSystem& ns) -> std::optional<Pair> {
          auto coarse = detail::affine_samples(p, x0, z0, ns, idx);
          auto fine = detail::affine_samples(p, x0, z0, refine(ns), fine_idx);
          if (!coarse || !fine) return std::nullopt;
          return Pair{std::move(*coarse), std::move(*fine)};
        });
  });
  double c_b = 0.0;
  for (std::size_t ti = 0; ti < idx.size(); ++ti) {
    for (int c = 0; c < 2; ++c) {
      std::vector<double> d(cal.size());
      for (std::size_t i = 0; i < cal.size(); ++i) d[i] = cal[i][0][ti][c] - cal[i][1][ti][c];
      if (d.empty()) continue;
      const auto ms = detail::mean_se(d);
      c_b = std::max(c_b, 2.0 * (std::abs(ms.mean) + 3.0 * ms.se) / mc.dt);
    }
  }
  const double budget = c_b * mc.dt;

  const MomentFunctionals mf(p);
  const double m_l1 = jump_moment(p.m(), Moment::L1Xi1);
  const double beta_bar = std::abs(p.beta11());

  ExperimentReport rep;
  rep.name = "moments";
  rep.inputs_digest = detail::digest("moments|" + detail::describe_params(p) + "|x0=" +
                                     fmt_num(x0) + "|z0=" + fmt_num(z0) + "|" +
                                     detail::describe_mc(mc));
  std::vector<double> xs(samples.size()), zs(samples.size());
  for (std::size_t ti = 0; ti < idx.size(); ++ti) {
    const double t = t_list[ti];
    for (std::size_t i = 0; i < samples.size(); ++i) {
      xs[i] = samples[i][ti][0];
      zs[i] = samples[i][ti][1];
    }
    const auto mx = detail::mean_se(xs);
    const auto mz = detail::mean_se(zs);
    auto& rx = rep.add("E[x] t=" + detail::fmt_short(t), mf.mean_x1(x0, t), mx.mean,
                       3.0 * mx.se + budget, RowKind::Within);
    rx.std_error = mx.se;
    rx.bias_budget = budget;
    auto& rz = rep.add("E[z] t=" + detail::fmt_short(t), mf.mean_x2(x0, z0, t), mz.mean,
                       3.0 * mz.se + budget, RowKind::Within);
    rz.std_error = mz.se;
    rz.bias_budget = budget;
    const double bound = (x0 + t * p.b1() + m_l1 * t) * std::exp(t * beta_bar);
    auto& rg = rep.add("E[x] <= Gronwall bound t=" + detail::fmt_short(t), bound, mx.mean,
                       3.0 * mx.se, RowKind::AtMost);
    rg.std_error = mx.se;
  }
  rep.add("bias constant C_b", 0.0, c_b, 0.0, RowKind::Info);
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Generators.

enum class GeneratorModel { Affine, Cbi, Catalytic };

inline const char* generator_model_name(GeneratorModel m) {
  switch (m) {
    case GeneratorModel::Affine: return "affine";
    case GeneratorModel::Cbi: return "cbi";
    case GeneratorModel::Catalytic: return "catalytic";
  }
  return "?";
}

enum class TestFunction { One, X1, X2, X1Sq, X2Sq, X1X2, ExpNegX1, ExpMixedRe, ExpMixedIm };

inline constexpr std::array<TestFunction, 9> kGeneratorCatalog{
    TestFunction::One,  TestFunction::X1,       TestFunction::X2,
    TestFunction::X1Sq, TestFunction::X2Sq,     TestFunction::X1X2,
    TestFunction::ExpNegX1, TestFunction::ExpMixedRe, TestFunction::ExpMixedIm};

inline const char* test_function_name(TestFunction f) {
  switch (f) {
    case TestFunction::One: return "1";
    case TestFunction::X1: return "x1";
    case TestFunction::X2: return "x2";
    case TestFunction::X1Sq: return "x1^2";
    case TestFunction::X2Sq: return "x2^2";
    case TestFunction::X1X2: return "x1*x2";
    case TestFunction::ExpNegX1: return "exp(-x1)";
    case TestFunction::ExpMixedRe: return "Re exp(-x1+i*x2)";
    case TestFunction::ExpMixedIm: return "Im exp(-x1+i*x2)";
  }
  return "?";
}

inline double eval_test_function(TestFunction f, double x1, double x2) {
  switch (f) {
    case TestFunction::One: return 1.0;
    case TestFunction::X1: return x1;
    case TestFunction::X2: return x2;
    case TestFunction::X1Sq: return x1 * x1;
    case TestFunction::X2Sq: return x2 * x2;
    case TestFunction::X1X2: return x1 * x2;
    case TestFunction::ExpNegX1: return std::exp(-x1);
    case TestFunction::ExpMixedRe: return std::exp(-x1) * std::cos(x2);
    case TestFunction::ExpMixedIm: return std::exp(-x1) * std::sin(x2);
  }
  return 0.0;
}

namespace detail {

/// A e^{<u,x>} / e^{<u,x>} for the affine generator.
inline cplx affine_exp_symbol(const AdmissibleParams& p, double x1, double x2, const UPoint& u) {
  return eval_F(p, u) + x1 * eval_R(p, u) + x2 * p.beta22() * u.u2;
}

/// L e^{<u,x>} / e^{<u,x>} for the catalytic generator.
inline cplx catalytic_exp_symbol(const AdmissibleParams& p, double l, double x1, double x2,
                                 const UPoint& u) {
  const double lam = std::min(x1, l * x1 * x2);
  const double rho1 = x1 - lam;
  const double rho2 = l * x1 * x2 - lam;
  const UPoint u_first{u.u1, 0.0};
  const UPoint u_second{0.0, u.u2};
  const cplx diffusion = p.alpha11() * x1 * u.u1 * u.u1 +
                         2.0 * p.alpha12() * x1 * std::sqrt(x2) * u.u1 * u.u2 +
                         (p.alpha22() * x1 * x2 + p.a() * x2) * u.u2 * u.u2;
  const cplx drift = (p.b1() + p.beta11() * x1) * u.u1 +
                     (p.b2() + p.beta21() * x1 * x2 + p.beta22() * x2) * u.u2;
  const cplx immigration = jump_exp_integral(p.m(), u, Compensation::None, Region::Upper) +
                           jump_exp_integral(p.m(), u_first, Compensation::None, Region::Lower);
  const cplx branching =
      lam * jump_exp_integral(p.mu(), u, Compensation::Full, Region::Upper) +
      rho1 * jump_exp_integral(p.mu(), u_first, Compensation::Full, Region::Upper) +
      rho2 * jump_exp_integral(p.mu(), u_second, Compensation::Full, Region::Upper) +
      x1 * jump_exp_integral(p.mu(), u_first, Compensation::Full, Region::Lower);
  return diffusion + drift + immigration + branching;
}

}  // namespace detail

/// Closed-form generator value at state (x1, x2). For the one-dimensional CBI
/// model the state is (x1, 0) and f is read as the function x -> f(x, 0).
inline double generator_closed_form(GeneratorModel model, const AdmissibleParams& p, double l,
                                    double x1, double x2, TestFunction f) {
  using M = Moment;
  const JumpMeasure& m = p.m();
  const JumpMeasure& mu = p.mu();
  const UPoint u_neg{-1.0, 0.0};
  const UPoint u_mix{-1.0, cplx{0.0, 1.0}};
  if (model == GeneratorModel::Cbi) {
    x2 = 0.0;
    if (f == TestFunction::X2 || f == TestFunction::X2Sq || f == TestFunction::X1X2 ||
        f == TestFunction::ExpMixedIm)
      return 0.0;
    if (f == TestFunction::ExpMixedRe) f = TestFunction::ExpNegX1;
  }
  if (model == GeneratorModel::Affine || model == GeneratorModel::Cbi) {
    const double d1 = p.b1() + p.beta11() * x1;
    const double d2 = p.b2() + p.beta21() * x1 + p.beta22() * x2;
    switch (f) {
      case TestFunction::One: return 0.0;
      case TestFunction::X1: return d1 + jump_moment(m, M::Xi1);
      case TestFunction::X2: return d2;
      case TestFunction::X1Sq:
        return 2.0 * p.alpha11() * x1 + 2.0 * x1 * d1 + 2.0 * x1 * jump_moment(m, M::Xi1) +
               jump_moment(m, M::Xi1Sq) + x1 * jump_moment(mu, M::Xi1Sq);
      case TestFunction::X2Sq:
        return 2.0 * p.alpha22() * x1 + 2.0 * p.a() + 2.0 * x2 * d2 + jump_moment(m, M::Xi2Sq) +
               x1 * jump_moment(mu, M::Xi2Sq);
      case TestFunction::X1X2:
        return 2.0 * p.alpha12() * x1 + d1 * x2 + d2 * x1 + x2 * jump_moment(m, M::Xi1) +
               jump_moment(m, M::Xi1Xi2) + x1 * jump_moment(mu, M::Xi1Xi2);
      case TestFunction::ExpNegX1:
        return std::exp(-x1) * detail::affine_exp_symbol(p, x1, x2, u_neg).real();
      case TestFunction::ExpMixedRe:
      case TestFunction::ExpMixedIm: {
        const cplx v = std::exp(-x1 + cplx{0.0, x2}) * detail::affine_exp_symbol(p, x1, x2, u_mix);
        return f == TestFunction::ExpMixedRe ? v.real() : v.imag();
      }
    }
    return 0.0;
  }
  // Catalytic.
  const Region up = Region::Upper;
  const double lam = std::min(x1, l * x1 * x2);
  const double d1 = p.b1() + p.beta11() * x1;
  const double d2 = p.b2() + p.beta21() * x1 * x2 + p.beta22() * x2;
  switch (f) {
    case TestFunction::One: return 0.0;
    case TestFunction::X1: return d1 + jump_moment(m, M::Xi1);
    case TestFunction::X2: return d2 + jump_moment(m, M::Xi2, up);
    case TestFunction::X1Sq:
      return 2.0 * p.alpha11() * x1 + 2.0 * x1 * d1 + 2.0 * x1 * jump_moment(m, M::Xi1) +
             jump_moment(m, M::Xi1Sq) + x1 * jump_moment(mu, M::Xi1Sq);
    case TestFunction::X2Sq:
      return 2.0 * (p.alpha22() * x1 * x2 + p.a() * x2) + 2.0 * x2 * d2 +
             2.0 * x2 * jump_moment(m, M::Xi2, up) + jump_moment(m, M::Xi2Sq, up) +
             l * x1 * x2 * jump_moment(mu, M::Xi2Sq, up);
    case TestFunction::X1X2:
      return 2.0 * p.alpha12() * x1 * std::sqrt(x2) + d1 * x2 + d2 * x1 +
             x2 * jump_moment(m, M::Xi1) + x1 * jump_moment(m, M::Xi2, up) +
             jump_moment(m, M::Xi1Xi2, up) + lam * jump_moment(mu, M::Xi1Xi2, up);
    case TestFunction::ExpNegX1:
      return std::exp(-x1) * detail::catalytic_exp_symbol(p, l, x1, x2, u_neg).real();
    case TestFunction::ExpMixedRe:
    case TestFunction::ExpMixedIm: {
      const cplx v =
          std::exp(-x1 + cplx{0.0, x2}) * detail::catalytic_exp_symbol(p, l, x1, x2, u_mix);
      return f == TestFunction::ExpMixedRe ? v.real() : v.imag();
    }
  }
  return 0.0;
}

namespace detail {

/// Gradient of a catalog function at (x1, x2).
inline std::array<double, 2> test_function_gradient(TestFunction f, double x1, double x2) {
  const double e = std::exp(-x1);
  switch (f) {
    case TestFunction::One: return {0.0, 0.0};
    case TestFunction::X1: return {1.0, 0.0};
    case TestFunction::X2: return {0.0, 1.0};
    case TestFunction::X1Sq: return {2.0 * x1, 0.0};
    case TestFunction::X2Sq: return {0.0, 2.0 * x2};
    case TestFunction::X1X2: return {x2, x1};
    case TestFunction::ExpNegX1: return {-e, 0.0};
    case TestFunction::ExpMixedRe: return {-e * std::cos(x2), -e * std::sin(x2)};
    case TestFunction::ExpMixedIm: return {-e * std::sin(x2), e * std::cos(x2)};
  }
  return {0.0, 0.0};
}

/// Martingale part of one scheme step from a deterministic state: Brownian
/// terms plus jump sums minus their exact means. Each component has mean zero.
struct StepMartingale {
  GeneratorModel model;
  const AdmissibleParams& p;
  double l, x1, x2;
  double comp1 = 0.0, comp2 = 0.0;

  StepMartingale(GeneratorModel model_, const AdmissibleParams& p_, double l_, double x1_,
                 double x2_, double eps)
      : model(model_), p(p_), l(l_), x1(x1_), x2(x2_) {
    const double eps_m = std::max(eps, p.m().truncation_eps());
    const double eps_mu = std::max(eps, p.mu().truncation_eps());
    comp1 = band_moment(p.m(), eps_m, Region::All, BandWeight::Xi1) +
            x1 * band_moment(p.mu(), eps_mu, Region::All, BandWeight::Xi1);
    if (model != GeneratorModel::Cbi)
      comp2 = band_moment(p.m(), eps_m, region(), BandWeight::Xi2) +
              rate() * band_moment(p.mu(), eps_mu, region(), BandWeight::Xi2);
  }
  Region region() const { return model == GeneratorModel::Affine ? Region::All : Region::Upper; }
  double rate() const { return model == GeneratorModel::Affine ? x1 : l * x1 * x2; }

  std::array<double, 2> operator()(const NoiseSystem& ns) const {
    const double dt = ns.grid().dt;
    const auto dB = ns.increments(0);
    const Mat2& s = p.sigma();
    std::array<double, 2> out{};
    out[0] = std::sqrt(2.0 * x1) * (s.m11 * dB[1] + s.m12 * dB[2]) - dt * comp1;
    for (const auto& e : ns.n0_in_step(0)) out[0] += e.xi.xi1;
    for (const auto& e : ns.n1_in_step(0))
      if (e.umark <= x1) out[0] += e.xi.xi1;
    if (model == GeneratorModel::Cbi) return out;

    const Region reg = region();
    if (model == GeneratorModel::Affine)
      out[1] = std::sqrt(2.0) * p.sigma0() * dB[0] +
               std::sqrt(2.0 * x1) * (s.m21 * dB[1] + s.m22 * dB[2]);
    else
      out[1] = std::sqrt(2.0 * x2) *
               (p.sigma0() * dB[0] + std::sqrt(x1) * (s.m21 * dB[1] + s.m22 * dB[2]));
    out[1] -= dt * comp2;
    for (const auto& e : ns.n0_in_step(0))
      if (in_region(e.xi, reg)) out[1] += e.xi.xi2;
    for (const auto& e : ns.n1_in_step(0))
      if (e.umark <= rate() && in_region(e.xi, reg)) out[1] += e.xi.xi2;
    return out;
  }
};

}  // namespace detail

/// (E f(X(delta)) - f(x)) / delta against the closed-form generator for each f,
/// all functions sharing one ensemble of single-step paths. The estimator
/// subtracts grad f(x) . M with M the mean-zero martingale part of the step
/// (a control variate; the expectation is unchanged). Tolerance per row:
/// 3 stderr + C_gen * delta.
inline ExperimentReport check_generator(const AdmissibleParams& p, const Point& state,
                                        std::span<const TestFunction> functions, double delta,
                                        GeneratorModel model, const McSettings& mc,
                                        double l = 1.0) {
  const auto start = std::chrono::steady_clock::now();
  if (mc.n_paths < 2) throw ValidationError("need at least two paths");
  if (!(state.xi1 >= 0.0)) throw ValidationError("state x1 must be >= 0");
  if (model == GeneratorModel::Catalytic && !(state.xi2 >= 0.0))
    throw ValidationError("catalytic state needs x2 >= 0");
  const TimeGrid grid{delta, delta};
  grid.check();
  const double x1 = state.xi1;
  const double x2 = model == GeneratorModel::Cbi ? 0.0 : state.xi2;

  using Sample = std::array<double, 4>;  // end state, martingale part
  const detail::StepMartingale martingale(model, p, l, x1, x2, mc.eps);
  auto ends = parallel_map<Sample>(mc.n_paths, mc.workers, [&](std::size_t i) {
    return detail::with_retry(
        p.m(), p.mu(), grid, substream_seed(mc.seed, i), mc.u_bound, mc.eps,
        [&](const NoiseSystem& ns) -> std::optional<Sample> {
          PathBundle b;
          switch (model) {
            case GeneratorModel::Affine: b = simulate_affine(p, x1, x2, ns); break;
            case GeneratorModel::Cbi:
              b = simulate_generalized_cbi(cbi_spec_from_affine(p), x1, ns);
              break;
            case GeneratorModel::Catalytic: b = simulate_catalytic(p, x1, x2, l, ns); break;
          }
          if (b.aborted()) return std::nullopt;
          const auto mart = martingale(ns);
          return Sample{b.values[0].back(), b.values.size() > 1 ? b.values[1].back() : 0.0,
                        mart[0], mart[1]};
        });
  });

  ExperimentReport rep;
  rep.name = std::string("generator_") + generator_model_name(model);
  {
    std::ostringstream os;
    os << "generator|" << generator_model_name(model) << '|' << detail::describe_params(p)
       << "|state=" << fmt_num(x1) << ',' << fmt_num(x2) << "|l=" << fmt_num(l)
       << "|delta=" << fmt_num(delta) << '|' << detail::describe_mc(mc);
    rep.inputs_digest = detail::digest(os.str());
  }
  const double budget = kGeneratorBiasConstant * delta;
  std::vector<double> diffs(ends.size());
  for (TestFunction f : functions) {
    const double f0 = eval_test_function(f, x1, x2);
    const auto grad = detail::test_function_gradient(f, x1, x2);
    for (std::size_t i = 0; i < ends.size(); ++i) {
      const Sample& e = ends[i];
      diffs[i] = (eval_test_function(f, e[0], e[1]) - f0 - grad[0] * e[2] - grad[1] * e[3]) / delta;
    }
    const auto ms = detail::mean_se(diffs);
    const double exact = generator_closed_form(model, p, l, x1, x2, f);
    std::ostringstream q;
    q << "L[" << test_function_name(f) << "] at (" << detail::fmt_short(x1) << ","
      << detail::fmt_short(x2) << ")";
    auto& row = rep.add(q.str(), exact, ms.mean, 3.0 * ms.se + budget, RowKind::Within);
    row.std_error = ms.se;
    row.bias_budget = budget;
  }
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline ExperimentReport check_generator(const AdmissibleParams& p, const Point& state,
                                        TestFunction f, double delta, GeneratorModel model,
                                        const McSettings& mc, double l = 1.0) {
  const std::array<TestFunction, 1> one{f};
  return check_generator(p, state, one, delta, model, mc, l);
}

// ---------------------------------------------------------------------------
// Pathwise uniqueness.

/// Two x-solutions from x0_a and x0_b on shared noise. Rows: bitwise-equal
/// reruns over `n_rerun_seeds` seeds, monotone coupling, and the contraction
/// E|x_b(t) - x_a(t)| <= |x0_b - x0_a| exp(t |beta11|) + 3 se + C_u dt |dx0|.
inline ExperimentReport uniqueness_experiment(const AdmissibleParams& p, double x0_a, double x0_b,
                                              double t_max, const McSettings& mc,
                                              std::size_t n_rerun_seeds = 100) {
  const auto start = std::chrono::steady_clock::now();
  if (!(x0_a >= 0.0) || !(x0_b >= 0.0)) throw ValidationError("initial values must be >= 0");
  const TimeGrid grid{t_max, mc.dt};
  grid.check();
  const GeneralizedCbiSpec spec = cbi_spec_from_affine(p);
  const std::array<double, 4> check_times{t_max / 4, t_max / 2, 3 * t_max / 4, t_max};
  std::vector<std::size_t> idx;
  for (double t : check_times) idx.push_back(grid.index_of(t) == TimeGrid::npos
                                                 ? static_cast<std::size_t>(std::floor(t / mc.dt))
                                                 : grid.index_of(t));

  ExperimentReport rep;
  rep.name = "uniqueness";
  rep.inputs_digest = detail::digest("uniqueness|" + detail::describe_params(p) + "|a=" +
                                     fmt_num(x0_a) + "|b=" + fmt_num(x0_b) + "|T=" +
                                     fmt_num(t_max) + "|" + detail::describe_mc(mc));

  auto reruns = parallel_map<int>(n_rerun_seeds, mc.workers, [&](std::size_t i) {
    return detail::with_retry(p.m(), p.mu(), grid, substream_seed(mc.seed, i), mc.u_bound,
                              mc.eps, [&](const NoiseSystem& ns) -> std::optional<int> {
                                const PathBundle first = simulate_generalized_cbi(spec, x0_a, ns);
                                const PathBundle second = simulate_generalized_cbi(spec, x0_a, ns);
                                if (first.aborted() || second.aborted()) return std::nullopt;
                                return first.values == second.values ? 0 : 1;
                              });
  });
  int mismatches = 0;
  for (int r : reruns) mismatches += r;
  rep.add("bitwise-unequal reruns over " + std::to_string(n_rerun_seeds) + " seeds", 0.0,
          static_cast<double>(mismatches), 0.0, RowKind::Exact);

  struct PathDiff {
    std::vector<double> at;  // |x_b - x_a| at the check indices
    double sup = 0.0;
    int order_violations = 0;
  };
  auto diffs = parallel_map<PathDiff>(mc.n_paths, mc.workers, [&](std::size_t i) {
    return detail::with_retry(
        p.m(), p.mu(), grid, substream_seed(mc.seed, i), mc.u_bound, mc.eps,
        [&](const NoiseSystem& ns) -> std::optional<PathDiff> {
          const PathBundle a = simulate_generalized_cbi(spec, x0_a, ns);
          const PathBundle b = simulate_generalized_cbi(spec, x0_b, ns);
          if (a.aborted() || b.aborted()) return std::nullopt;
          PathDiff d;
          const auto& xa = a.values[0];
          const auto& xb = b.values[0];
          const bool a_low = x0_a <= x0_b;
          for (std::size_t k = 0; k < xa.size(); ++k) {
            d.sup = std::max(d.sup, std::abs(xb[k] - xa[k]));
            if (a_low ? xa[k] > xb[k] : xb[k] > xa[k]) ++d.order_violations;
          }
          for (std::size_t k : idx) d.at.push_back(std::abs(xb[k] - xa[k]));
          return d;
        });
  });

  const double dx0 = std::abs(x0_b - x0_a);
  if (dx0 == 0.0) {
    double sup = 0.0;
    for (const auto& d : diffs) sup = std::max(sup, d.sup);
    rep.add("sup |x_b - x_a| (equal inits)", 0.0, sup, 0.0, RowKind::Exact);
  }
  int violations = 0;
  for (const auto& d : diffs) violations += d.order_violations;
  rep.add("grid points breaking x_a <= x_b ordering", 0.0, static_cast<double>(violations), 0.0,
          RowKind::Exact);
  const double beta_bar = std::abs(p.beta11());
  const double budget = kUniquenessBiasConstant * mc.dt * dx0;
  std::vector<double> v(diffs.size());
  for (std::size_t c = 0; c < idx.size(); ++c) {
    for (std::size_t i = 0; i < diffs.size(); ++i) v[i] = diffs[i].at[c];
    const auto ms = detail::mean_se(v);
    const double t = grid.time(idx[c]);
    auto& row = rep.add("E|x_b - x_a| t=" + detail::fmt_short(t), dx0 * std::exp(t * beta_bar),
                        ms.mean, 3.0 * ms.se + budget, RowKind::AtMost);
    row.std_error = ms.se;
    row.bias_budget = budget;
  }
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Fluctuation limits.

struct FluctuationOptions {
  double t_max = 1.0;
  double x0 = 1.0;
  ReactantInit init;
  bool expect_inverse_theta = false;  // add rows e_{i+1}/e_i ~ theta_i/theta_{i+1} (10%)
};

/// For each theta: e_theta = mean over paths of sup_grid |z_k - z| with z the
/// limit equation on the same noise. Without a split the single-reactant
/// system is used, with a split the reactant pair.
inline ExperimentReport fluctuation_experiment(const AdmissibleParams& p,
                                               const std::optional<ReactantSplit>& split,
                                               std::span<const double> theta_ladder,
                                               const FluctuationOptions& opt,
                                               const McSettings& mc) {
  const auto start = std::chrono::steady_clock::now();
  if (!(p.beta22() < 0.0))
    throw ValidationError("fluctuation limits require beta22 < 0 (got beta22 = " +
                          detail::fmt_short(p.beta22()) + ")");
  if (theta_ladder.size() < 2) throw ValidationError("theta ladder needs at least two rungs");
  for (std::size_t i = 0; i < theta_ladder.size(); ++i) {
    if (!(theta_ladder[i] >= 1.0)) throw ValidationError("theta values must be >= 1");
    if (i > 0 && !(theta_ladder[i] > theta_ladder[i - 1]))
      throw ValidationError("theta ladder must be strictly increasing");
  }
  if (split) {
    const auto probs = split->problems(p);
    if (!probs.empty()) throw ValidationError("invalid decomposition: " + probs.front());
  }
  const TimeGrid grid{opt.t_max, mc.dt};
  grid.check();
  const GeneralizedCbiSpec spec = cbi_spec_from_affine(p);
  const std::size_t nt = theta_ladder.size();

  auto sups = parallel_map<std::vector<double>>(mc.n_paths, mc.workers, [&](std::size_t i) {
    return detail::with_retry(
        p.m(), p.mu(), grid, substream_seed(mc.seed, i), mc.u_bound, mc.eps,
        [&](const NoiseSystem& ns) -> std::optional<std::vector<double>> {
          const PathBundle xb = simulate_generalized_cbi(spec, opt.x0, ns);
          if (xb.aborted()) return std::nullopt;
          const auto& xs = xb.values[0];
          const std::vector<double> z = simulate_fluctuation_limit(p, split, opt.init, xs, ns);
          std::vector<double> out;
          out.reserve(nt);
          for (double theta : theta_ladder) {
            const PathBundle r = simulate_reactant_pair(p, split, theta, opt.init, xs, ns);
            if (r.aborted()) return std::nullopt;
            const auto& zk = r.component("z_k");
            double s = 0.0;
            for (std::size_t k = 0; k < zk.size(); ++k) s = std::max(s, std::abs(zk[k] - z[k]));
            out.push_back(s);
          }
          return out;
        });
  });

  ExperimentReport rep;
  rep.name = split ? "fluctuation_pair" : "fluctuation_single";
  {
    std::ostringstream os;
    os << rep.name << '|' << detail::describe_params(p) << "|ladder=";
    for (double th : theta_ladder) os << fmt_num(th) << ',';
    if (split)
      os << "|split=" << fmt_num(split->sigma0_plus) << ',' << fmt_num(split->sigma0_minus) << ','
         << fmt_num(split->sigma21_plus) << ',' << fmt_num(split->sigma21_minus) << ','
         << fmt_num(split->sigma22_plus) << ',' << fmt_num(split->sigma22_minus) << ','
         << fmt_num(split->b2_plus) << ',' << fmt_num(split->b2_minus) << ','
         << fmt_num(split->beta21_plus) << ',' << fmt_num(split->beta21_minus);
    os << "|T=" << fmt_num(opt.t_max) << "|x0=" << fmt_num(opt.x0) << "|z+=" << fmt_num(opt.init.z_plus0)
       << "|z-=" << fmt_num(opt.init.z_minus0) << '|' << detail::describe_mc(mc);
    rep.inputs_digest = detail::digest(os.str());
  }
  std::vector<double> e(nt);
  std::vector<double> v(sups.size());
  for (std::size_t j = 0; j < nt; ++j) {
    for (std::size_t i = 0; i < sups.size(); ++i) v[i] = sups[i][j];
    const auto ms = detail::mean_se(v);
    e[j] = ms.mean;
    auto& row = rep.add("e_theta theta=" + detail::fmt_short(theta_ladder[j]), 0.0, ms.mean, 0.0,
                        RowKind::Info);
    row.std_error = ms.se;
  }
  for (std::size_t j = 1; j < nt; ++j)
    rep.add("e(" + detail::fmt_short(theta_ladder[j]) + ") <= 1.05 e(" +
                detail::fmt_short(theta_ladder[j - 1]) + ")",
            kLadderSlack * e[j - 1], e[j], 0.0, RowKind::AtMost);
  rep.add("e(last) <= e(first) / 4", e.front() / kLadderTotalDrop, e.back(), 0.0, RowKind::AtMost);
  if (opt.expect_inverse_theta) {
    for (std::size_t j = 1; j < nt; ++j) {
      const double expected = theta_ladder[j - 1] / theta_ladder[j];
      const double ratio = e[j - 1] > 0.0 ? e[j] / e[j - 1] : std::numeric_limits<double>::infinity();
      rep.add("e ratio " + detail::fmt_short(theta_ladder[j]) + "/" +
                  detail::fmt_short(theta_ladder[j - 1]),
              expected, ratio, kInverseThetaTolerance * expected, RowKind::Within);
    }
  }
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Transform-level semigroup checks.

/// Flow residuals of psi and phi at (r, t) for each u, each <= 10 tol, plus the
/// Chapman-Kolmogorov composition of char_fn at state x.
inline ExperimentReport sc_semigroup_check(const AdmissibleParams& p, double r, double t,
                                           std::span<const UPoint> u_list, double tol = 1e-9,
                                           const Point& x = {1.0, 0.5}) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.name = "sc_semigroup";
  rep.inputs_digest = detail::digest("sc_semigroup|" + detail::describe_params(p) + "|r=" +
                                     fmt_num(r) + "|t=" + fmt_num(t) + "|tol=" + fmt_num(tol));
  for (const UPoint& u : u_list) {
    const FlowResidual fr = flow_residual(p, u, r, t, tol);
    const std::string at = " r=" + detail::fmt_short(r) + " t=" + detail::fmt_short(t) +
                           " u=" + detail::fmt_u(u);
    rep.add("psi flow residual" + at, 0.0, fr.psi, 10.0 * tol, RowKind::AtMost);
    rep.add("phi flow residual" + at, 0.0, fr.phi, 10.0 * tol, RowKind::AtMost);

    const std::array<double, 2> g{0.0, t};
    const TransformSolution inner = solve_transform(p, u, g, tol);
    const UPoint mid{inner.psi1.back(), inner.psi2.back()};
    cplx composed;
    if (r > 0.0) {
      const std::array<double, 2> gr{0.0, r};
      const TransformSolution outer = solve_transform(p, mid, gr, tol);
      composed = std::exp(x.xi1 * outer.psi1.back() + x.xi2 * outer.psi2.back() +
                          outer.phi.back() + inner.phi.back());
    } else {
      composed = std::exp(x.xi1 * mid.u1 + x.xi2 * mid.u2 + inner.phi.back());
    }
    const cplx direct = char_fn(p, x, r + t, u, tol);
    rep.add("Chapman-Kolmogorov" + at, composed, direct, 10.0 * tol, RowKind::Within, true);
  }
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace affine_lab
