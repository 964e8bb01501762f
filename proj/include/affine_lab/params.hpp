// Admissible parameter sets and jump measures on D = R+ x R.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace affine_lab {

using cplx = std::complex<double>;

/// A point of the state space D = R+ x R (also used for jump sizes).
struct Point {
  double xi1 = 0.0;
  double xi2 = 0.0;

  double norm() const { return std::hypot(xi1, xi2); }
  friend bool operator==(const Point&, const Point&) = default;
};

/// Frequency point u = (u1, u2) in U = C- x iR.
struct UPoint {
  cplx u1{0.0, 0.0};
  cplx u2{0.0, 0.0};

  bool in_domain() const { return u1.real() <= 0.0 && u2.real() == 0.0; }
  UPoint conj() const { return {std::conj(u1), std::conj(u2)}; }
  friend bool operator==(const UPoint&, const UPoint&) = default;
};

/// Sub-regions of D used by the catalytic and reactant equations.
/// Upper is D+ = {xi2 >= 0}; Lower is {xi2 < 0} so the two partition D.
enum class Region { All, Upper, Lower };

inline bool in_region(const Point& xi, Region region) {
  switch (region) {
    case Region::All: return true;
    case Region::Upper: return xi.xi2 >= 0.0;
    case Region::Lower: return xi.xi2 < 0.0;
  }
  return false;
}

struct Atom {
  Point xi;
  double weight = 0.0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Compensation applied inside the exponential jump integral.
enum class Compensation { None, Xi2Only, Full };

/// Moment functionals of a jump measure.
/// l1(x) = |x|, l12(x) = |x| ^ |x|^2 (the minimum).
enum class Moment { L1Xi1, L12Xi1, L12Xi2, Xi1, Xi2, Xi2Sq, Xi1Sq, Xi1Xi2, Mass };

inline double l1(double x) { return std::abs(x); }
inline double l12(double x) { return std::min(std::abs(x), x * x); }

/// A Levy measure on D. Two concrete kinds:
///  - FiniteAtomic: sum of weighted point masses;
///  - ProductExponential: total_rate * Exp(rate1)(xi1) * two-sided Exp(rate2)(xi2), where
///    the positive side carries probability sign_mix.
/// Construction never throws; `problems()` lists structural defects.
class JumpMeasure {
 public:
  enum class Kind { FiniteAtomic, ProductExponential };

  JumpMeasure() = default;

  static JumpMeasure empty() { return JumpMeasure{}; }

  static JumpMeasure finite_atomic(std::vector<Atom> atoms, double truncation_eps = 0.0) {
    JumpMeasure m;
    m.kind_ = Kind::FiniteAtomic;
    m.atoms_ = std::move(atoms);
    m.truncation_eps_ = truncation_eps;
    return m;
  }

  static JumpMeasure product_exponential(double total_rate, double rate1, double rate2,
                                         double sign_mix, double truncation_eps = 0.0) {
    JumpMeasure m;
    m.kind_ = Kind::ProductExponential;
    m.total_rate_ = total_rate;
    m.rate1_ = rate1;
    m.rate2_ = rate2;
    m.sign_mix_ = sign_mix;
    m.truncation_eps_ = truncation_eps;
    return m;
  }

  Kind kind() const { return kind_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  double total_rate() const { return total_rate_; }
  double rate1() const { return rate1_; }
  double rate2() const { return rate2_; }
  double sign_mix() const { return sign_mix_; }
  double truncation_eps() const { return truncation_eps_; }

  bool is_empty() const { return kind_ == Kind::FiniteAtomic && atoms_.empty(); }

  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (!(truncation_eps_ >= 0.0) || !std::isfinite(truncation_eps_))
      out.push_back("truncation_eps must be finite and >= 0");
    if (kind_ == Kind::FiniteAtomic) {
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        const Atom& a = atoms_[i];
        std::ostringstream where;
        where << "atom " << i;
        if (!std::isfinite(a.xi.xi1) || !std::isfinite(a.xi.xi2))
          out.push_back(where.str() + " has a non-finite location");
        else if (a.xi.xi1 < 0.0)
          out.push_back(where.str() + " lies outside D (xi1 < 0)");
        else if (a.xi.xi1 == 0.0 && a.xi.xi2 == 0.0)
          out.push_back(where.str() + " sits at the origin");
        if (!(a.weight > 0.0) || !std::isfinite(a.weight))
          out.push_back(where.str() + " must have a finite positive weight");
      }
    } else {
      if (!(total_rate_ > 0.0) || !std::isfinite(total_rate_))
        out.push_back("total_rate must be finite and > 0");
      if (!(rate1_ > 0.0) || !std::isfinite(rate1_)) out.push_back("rate1 must be finite and > 0");
      if (!(rate2_ > 0.0) || !std::isfinite(rate2_)) out.push_back("rate2 must be finite and > 0");
      if (!(sign_mix_ >= 0.0 && sign_mix_ <= 1.0)) out.push_back("sign_mix must lie in [0, 1]");
    }
    return out;
  }

  friend bool operator==(const JumpMeasure&, const JumpMeasure&) = default;

 private:
  Kind kind_ = Kind::FiniteAtomic;
  std::vector<Atom> atoms_;
  double total_rate_ = 0.0;
  double rate1_ = 0.0;
  double rate2_ = 0.0;
  double sign_mix_ = 0.0;
  double truncation_eps_ = 0.0;
};

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// E[xi2^q ; region] for the two-sided exponential factor of a ProductExponential.
inline double two_sided_moment(const JumpMeasure& m, int q, Region region) {
  const double base = factorial(q) / std::pow(m.rate2(), q);
  const double s = m.sign_mix();
  const double upper = s * base;
  const double lower = (1.0 - s) * base * ((q % 2 == 0) ? 1.0 : -1.0);
  switch (region) {
    case Region::All: return upper + lower;
    case Region::Upper: return upper;
    case Region::Lower: return lower;
  }
  return 0.0;
}

inline double region_fraction(const JumpMeasure& m, Region region) {
  return two_sided_moment(m, 0, region);
}

// E[min(X, X^2)] for X ~ Exp(rate).
inline double exp_l12(double rate) {
  const double r = rate;
  const double lower = 2.0 / (r * r) - std::exp(-r) * (1.0 + 2.0 / r + 2.0 / (r * r));
  const double upper = std::exp(-r) * (1.0 + 1.0 / r);
  return lower + upper;
}

// e^z - 1 - z, accurate for small |z|.
inline cplx exp_m1_m_lin(cplx z) {
  if (std::abs(z) < 0.1) {
    cplx term = z * z / 2.0;
    cplx sum = term;
    for (int k = 3; k < 20; ++k) {
      term *= z / static_cast<double>(k);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return std::exp(z) - 1.0 - z;
}

}  // namespace detail

/// Moment of the full measure (restricted to `region`).
inline double jump_moment(const JumpMeasure& m, Moment kind, Region region = Region::All) {
  if (m.kind() == JumpMeasure::Kind::FiniteAtomic) {
    double sum = 0.0;
    for (const Atom& a : m.atoms()) {
      if (!in_region(a.xi, region)) continue;
      const double x1 = a.xi.xi1;
      const double x2 = a.xi.xi2;
      double g = 0.0;
      switch (kind) {
        case Moment::L1Xi1: g = l1(x1); break;
        case Moment::L12Xi1: g = l12(x1); break;
        case Moment::L12Xi2: g = l12(x2); break;
        case Moment::Xi1: g = x1; break;
        case Moment::Xi2: g = x2; break;
        case Moment::Xi2Sq: g = x2 * x2; break;
        case Moment::Xi1Sq: g = x1 * x1; break;
        case Moment::Xi1Xi2: g = x1 * x2; break;
        case Moment::Mass: g = 1.0; break;
      }
      sum += a.weight * g;
    }
    return sum;
  }
  const double total = m.total_rate();
  const double r1 = m.rate1();
  const double frac = detail::region_fraction(m, region);
  switch (kind) {
    case Moment::L1Xi1:
    case Moment::Xi1: return total * frac / r1;
    case Moment::L12Xi1: return total * frac * detail::exp_l12(r1);
    case Moment::L12Xi2: return total * frac * detail::exp_l12(m.rate2());
    case Moment::Xi2: return total * detail::two_sided_moment(m, 1, region);
    case Moment::Xi2Sq: return total * detail::two_sided_moment(m, 2, region);
    case Moment::Xi1Sq: return total * frac * 2.0 / (r1 * r1);
    case Moment::Xi1Xi2: return total * detail::two_sided_moment(m, 1, region) / r1;
    case Moment::Mass: return total * frac;
  }
  return 0.0;
}

/// Weight functions available for band-restricted integrals.
enum class BandWeight { Mass, Xi1, Xi2 };

/// Integral of the weight over {|xi| > eps} intersected with `region`.
/// Used for sampler rates and for the compensators that match retained jumps.
inline double band_moment(const JumpMeasure& m, double eps, Region region, BandWeight weight) {
  if (m.kind() == JumpMeasure::Kind::FiniteAtomic) {
    double sum = 0.0;
    for (const Atom& a : m.atoms()) {
      if (!in_region(a.xi, region) || !(a.xi.norm() > eps)) continue;
      const double g = weight == BandWeight::Mass  ? 1.0
                       : weight == BandWeight::Xi1 ? a.xi.xi1
                                                   : a.xi.xi2;
      sum += a.weight * g;
    }
    return sum;
  }
  const Moment full_kind = weight == BandWeight::Mass  ? Moment::Mass
                           : weight == BandWeight::Xi1 ? Moment::Xi1
                                                       : Moment::Xi2;
  const double full = jump_moment(m, full_kind, region);
  if (eps <= 0.0) return full;

  // The disk quadrature is the expensive part and simulators ask for the
  // same few values on every path, so keep a small per-thread memo.
  struct Memo {
    std::array<double, 6> key;
    double value;
  };
  thread_local std::vector<Memo> memo;
  const std::array<double, 6> key{m.total_rate(), m.rate1(), m.rate2(), m.sign_mix(), eps,
                                  static_cast<double>(static_cast<int>(region) * 4 +
                                                      static_cast<int>(weight))};
  for (const Memo& e : memo)
    if (e.key == key) return e.value;

  // Disk part: integrate over xi1 in [0, eps] with the xi2 integral over
  // |xi2| <= sqrt(eps^2 - xi1^2) done in closed form.
  const double r1 = m.rate1();
  const double r2 = m.rate2();
  const double s = m.sign_mix();
  const double up_w = region == Region::Lower ? 0.0 : s;
  const double lo_w = region == Region::Upper ? 0.0 : 1.0 - s;
  auto inner = [&](double x1) {
    const double h = std::sqrt(std::max(eps * eps - x1 * x1, 0.0));
    const double density1 = r1 * std::exp(-r1 * x1);
    const double p = -std::expm1(-r2 * h);  // P(|xi2| <= h)
    const double first = (p - r2 * h * std::exp(-r2 * h)) / r2;  // E[|xi2|; |xi2| <= h]
    double g = 0.0;
    switch (weight) {
      case BandWeight::Mass: g = (up_w + lo_w) * p; break;
      case BandWeight::Xi1: g = (up_w + lo_w) * p * x1; break;
      case BandWeight::Xi2: g = (up_w - lo_w) * first; break;
    }
    return density1 * g;
  };
  const double disk =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(inner, 0.0, eps, 8, 1e-13);
  const double value = full - m.total_rate() * disk;
  if (memo.size() >= 64) memo.erase(memo.begin());
  memo.push_back({key, value});
  return value;
}

inline double mass_outside(const JumpMeasure& m, double eps, Region region = Region::All) {
  return band_moment(m, eps, region, BandWeight::Mass);
}

/// Integral of (e^{<u,xi>} - 1 - C(u,xi)) over `region`, with C = 0, xi2 u2 or <u,xi>.
inline cplx jump_exp_integral(const JumpMeasure& m, const UPoint& u, Compensation comp,
                              Region region = Region::All) {
  if (u.u1 == cplx{} && u.u2 == cplx{}) return {0.0, 0.0};
  if (m.kind() == JumpMeasure::Kind::FiniteAtomic) {
    cplx sum{0.0, 0.0};
    for (const Atom& a : m.atoms()) {
      if (!in_region(a.xi, region)) continue;
      const cplx z1 = u.u1 * a.xi.xi1;
      const cplx z2 = u.u2 * a.xi.xi2;
      const cplx full = detail::exp_m1_m_lin(z1 + z2);  // e^z - 1 - z
      cplx value;
      switch (comp) {
        case Compensation::None: value = full + z1 + z2; break;
        case Compensation::Xi2Only: value = full + z1; break;
        case Compensation::Full: value = full; break;
      }
      sum += a.weight * value;
    }
    return sum;
  }
  const double r1 = m.rate1();
  const double r2 = m.rate2();
  const double s = m.sign_mix();
  const cplx laplace1 = r1 / (r1 - u.u1);
  cplx laplace2{0.0, 0.0};
  if (region != Region::Lower) laplace2 += s * r2 / (r2 - u.u2);
  if (region != Region::Upper) laplace2 += (1.0 - s) * r2 / (r2 + u.u2);
  const double frac = detail::region_fraction(m, region);
  const double mean1 = frac / r1;
  const double mean2 = detail::two_sided_moment(m, 1, region);
  cplx value = laplace1 * laplace2 - frac;
  if (comp != Compensation::None) value -= u.u2 * mean2;
  if (comp == Compensation::Full) value -= u.u1 * mean1;
  return m.total_rate() * value;
}

/// Symmetric 2x2 matrix stored by its three distinct entries.
struct Sym2 {
  double m11 = 0.0;
  double m12 = 0.0;
  double m22 = 0.0;
  friend bool operator==(const Sym2&, const Sym2&) = default;
};

struct Mat2 {
  double m11 = 0.0;
  double m12 = 0.0;
  double m21 = 0.0;
  double m22 = 0.0;
  friend bool operator==(const Mat2&, const Mat2&) = default;
};

/// Raw, unvalidated parameter record as read from a configuration file.
struct ParamRecord {
  double a = 0.0;
  Mat2 alpha;  // must be symmetric
  double b1 = 0.0;
  double b2 = 0.0;
  Mat2 beta;  // beta.m12 must be zero
  JumpMeasure m;
  JumpMeasure mu;
  friend bool operator==(const ParamRecord&, const ParamRecord&) = default;
};

struct Violation {
  int clause = 0;  // 1..6, matching clauses (i)..(vi) of admissibility
  std::string message;
};

inline const char* clause_name(int clause) {
  static const char* names[] = {"?", "(i)", "(ii)", "(iii)", "(iv)", "(v)", "(vi)"};
  return (clause >= 1 && clause <= 6) ? names[clause] : names[0];
}

struct AdmissibilityReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has_clause(int clause) const {
    return std::any_of(violations.begin(), violations.end(),
                       [clause](const Violation& v) { return v.clause == clause; });
  }
  std::string describe() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
      if (i) os << "; ";
      os << "clause " << clause_name(violations[i].clause) << ": " << violations[i].message;
    }
    return os.str();
  }
};

class AdmissibilityError : public std::runtime_error {
 public:
  explicit AdmissibilityError(AdmissibilityReport report)
      : std::runtime_error("inadmissible parameters: " + report.describe()),
        report_(std::move(report)) {}
  const AdmissibilityReport& report() const { return report_; }

 private:
  AdmissibilityReport report_;
};

class AdmissibleParams;
struct AdmissibilityResult;
AdmissibilityResult validate_admissible(const ParamRecord& candidate);

/// A validated parameter set (a, alpha, b, beta, m, mu) with the derived
/// diffusion factors sigma0 = sqrt(a) and lower-triangular sigma, sigma sigma^T = alpha.
class AdmissibleParams {
 public:
  double a() const { return rec_.a; }
  const Sym2& alpha() const { return alpha_; }
  double alpha11() const { return alpha_.m11; }
  double alpha12() const { return alpha_.m12; }
  double alpha22() const { return alpha_.m22; }
  double b1() const { return rec_.b1; }
  double b2() const { return rec_.b2; }
  double beta11() const { return rec_.beta.m11; }
  double beta21() const { return rec_.beta.m21; }
  double beta22() const { return rec_.beta.m22; }
  const JumpMeasure& m() const { return rec_.m; }
  const JumpMeasure& mu() const { return rec_.mu; }
  double sigma0() const { return sigma0_; }
  const Mat2& sigma() const { return sigma_; }

  /// The record this set was validated from (alpha possibly clamped to PSD).
  const ParamRecord& record() const { return rec_; }

  static AdmissibleParams from_record(const ParamRecord& rec);

 private:
  friend AdmissibilityResult validate_admissible(const ParamRecord& candidate);
  AdmissibleParams() = default;

  ParamRecord rec_;
  Sym2 alpha_;
  double sigma0_ = 0.0;
  Mat2 sigma_;
};

struct AdmissibilityResult {
  std::optional<AdmissibleParams> params;
  AdmissibilityReport report;
};

namespace detail {

inline void check_measure(const JumpMeasure& measure, int clause, const char* label,
                          bool compensated_xi1, AdmissibilityReport& report) {
  for (const std::string& p : measure.problems())
    report.violations.push_back({clause, std::string(label) + ": " + p});
  if (!measure.problems().empty()) return;
  const double first = compensated_xi1 ? jump_moment(measure, Moment::L12Xi1)
                                       : jump_moment(measure, Moment::L1Xi1);
  const double second = jump_moment(measure, Moment::L12Xi2);
  if (!std::isfinite(first + second))
    report.violations.push_back({clause, std::string(label) + ": moment integral diverges"});
}

}  // namespace detail

inline AdmissibilityResult validate_admissible(const ParamRecord& c) {
  constexpr double kPsdTol = 1e-12;
  AdmissibilityReport report;

  if (!(c.a >= 0.0) || !std::isfinite(c.a))
    report.violations.push_back({1, "a must be a finite nonnegative constant"});

  Sym2 alpha{c.alpha.m11, c.alpha.m12, c.alpha.m22};
  const bool finite_alpha = std::isfinite(c.alpha.m11) && std::isfinite(c.alpha.m12) &&
                            std::isfinite(c.alpha.m21) && std::isfinite(c.alpha.m22);
  if (!finite_alpha) {
    report.violations.push_back({2, "alpha has non-finite entries"});
  } else if (std::abs(c.alpha.m12 - c.alpha.m21) > kPsdTol) {
    report.violations.push_back({2, "alpha must be symmetric"});
  } else {
    const double half_tr = 0.5 * (alpha.m11 + alpha.m22);
    const double rad = std::hypot(0.5 * (alpha.m11 - alpha.m22), alpha.m12);
    const double lo = half_tr - rad;
    const double hi = half_tr + rad;
    if (lo < -kPsdTol) {
      std::ostringstream os;
      os << "alpha must be nonnegative definite (smallest eigenvalue " << lo << ")";
      report.violations.push_back({2, os.str()});
    } else if (lo < 0.0) {
      // Rebuild from the clamped spectrum: alpha = hi * v v^T.
      double v1 = alpha.m12;
      double v2 = hi - alpha.m11;
      if (std::hypot(v1, v2) == 0.0) {
        v1 = hi - alpha.m22;
        v2 = alpha.m12;
      }
      const double n = std::hypot(v1, v2);
      if (n > 0.0) {
        v1 /= n;
        v2 /= n;
        alpha = {hi * v1 * v1, hi * v1 * v2, hi * v2 * v2};
      } else {
        alpha = {std::max(alpha.m11, 0.0), 0.0, std::max(alpha.m22, 0.0)};
      }
    }
  }

  if (!(c.b1 >= 0.0) || !std::isfinite(c.b1) || !std::isfinite(c.b2))
    report.violations.push_back({3, "(b1, b2) must lie in D (b1 >= 0, both finite)"});

  if (c.beta.m12 != 0.0)
    report.violations.push_back({4, "beta12 must be exactly 0"});
  if (!std::isfinite(c.beta.m11) || !std::isfinite(c.beta.m21) || !std::isfinite(c.beta.m22))
    report.violations.push_back({4, "beta has non-finite entries"});

  detail::check_measure(c.m, 5, "m", false, report);
  detail::check_measure(c.mu, 6, "mu", true, report);

  AdmissibilityResult result;
  if (!report.ok()) {
    result.report = std::move(report);
    return result;
  }

  AdmissibleParams p;
  p.rec_ = c;
  p.rec_.alpha = {alpha.m11, alpha.m12, alpha.m12, alpha.m22};
  p.alpha_ = alpha;
  p.sigma0_ = std::sqrt(c.a);
  // Lower-triangular factor; a zero pivot zeroes its column.
  const double s11 = std::sqrt(std::max(alpha.m11, 0.0));
  double s21 = 0.0;
  double s22 = 0.0;
  if (s11 > 0.0) {
    s21 = alpha.m12 / s11;
    s22 = std::sqrt(std::max(alpha.m22 - s21 * s21, 0.0));
  } else {
    s22 = std::sqrt(std::max(alpha.m22, 0.0));
  }
  p.sigma_ = {s11, 0.0, s21, s22};
  result.params = std::move(p);
  return result;
}

inline AdmissibleParams AdmissibleParams::from_record(const ParamRecord& rec) {
  AdmissibilityResult r = validate_admissible(rec);
  if (!r.params) throw AdmissibilityError(std::move(r.report));
  return *r.params;
}

}  // namespace affine_lab
