// Truncated Euler schemes for the CBI-type stochastic integral equations,
// with exact jump insertion and thinning of N1 over random sets.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "affine_lab/format.hpp"
#include "affine_lab/noise.hpp"
#include "affine_lab/params.hpp"

namespace affine_lab {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kStabilityMargin = 0.1;

/// Simulated paths on a grid. Stored values are post-jump (cadlag) states.
struct PathBundle {
  TimeGrid grid;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  std::uint64_t seed = 0;
  double u_bound = 0.0;
  double eps = 0.0;
  int refinement = 0;
  std::optional<double> aborted_at;
  std::size_t clamp_count = 0;  // steps where the nonnegativity clamp was active

  bool aborted() const { return aborted_at.has_value(); }

  const std::vector<double>& component(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return values[i];
    throw std::out_of_range("no component named " + std::string(name));
  }
  std::vector<double>& component(std::string_view name) {
    return const_cast<std::vector<double>&>(std::as_const(*this).component(name));
  }
};

namespace detail {

inline PathBundle make_bundle(const NoiseSystem& noise, std::vector<std::string> names) {
  PathBundle b;
  b.grid = noise.grid();
  b.seed = noise.seed();
  b.u_bound = noise.u_bound();
  b.eps = noise.eps();
  b.refinement = noise.refinement();
  b.values.resize(names.size());
  for (auto& v : b.values) v.reserve(noise.steps() + 1);
  b.names = std::move(names);
  return b;
}

inline double band_eps(const NoiseSystem& noise, const JumpMeasure& measure) {
  return std::max(noise.eps(), measure.truncation_eps());
}

inline void check_finite(double v, const char* what, double t) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << what << " became non-finite at t = " << t;
    throw SimulationError(os.str());
  }
}

inline void check_stability(double dt, double rate, const char* label) {
  if (dt * std::abs(rate) > kStabilityMargin) {
    std::ostringstream os;
    os << "dt = " << dt << " violates the stability rule dt*|" << label << "| <= "
       << kStabilityMargin;
    throw SimulationError(os.str());
  }
}

/// One step of a CBI-type component:
///   max(x + lin*x*dt + sqrt(2x)*diffusion, 0) + immigration + accepted branching jumps.
/// The clamp acts on the state-dependent part only, which keeps the map
/// nondecreasing in x under shared noise.
inline double branching_step(double x, double lin, double dt, double diffusion,
                             double immigration, double jumps, bool& clamped) {
  const double core = x + lin * x * dt + std::sqrt(2.0 * x) * diffusion;
  clamped = core < 0.0;
  return (clamped ? 0.0 : core) + immigration + jumps;
}

inline double dot_increments(std::span<const double> coef, std::span<const double> dB) {
  double s = 0.0;
  for (std::size_t j = 0; j < coef.size(); ++j) s += coef[j] * dB[j];
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Generalized CBI equation with time-dependent coefficients.

using Coefficient = std::function<double(double)>;

inline Coefficient constant_coefficient(double c) {
  return [c](double) { return c; };
}

/// Piecewise-constant coefficient read from a recorded path on `grid`.
inline Coefficient path_coefficient(TimeGrid grid, std::vector<double> values) {
  return [grid, v = std::move(values)](double t) {
    const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(t / grid.dt + 1e-9)));
    return v[std::min(k, v.size() - 1)];
  };
}

/// Nonnegative nondecreasing step function: value `values[i]` on [starts[i], starts[i+1]).
struct StepFunction {
  std::vector<double> starts{0.0};
  std::vector<double> values{0.0};

  static StepFunction constant(double c) { return {{0.0}, {c}}; }

  double operator()(double t) const {
    std::size_t i = 0;
    while (i + 1 < starts.size() && starts[i + 1] <= t) ++i;
    return values[i];
  }

  bool valid() const {
    if (starts.empty() || starts.size() != values.size()) return false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] >= 0.0)) return false;
      if (i > 0 && (values[i] < values[i - 1] || starts[i] <= starts[i - 1])) return false;
    }
    return true;
  }
};

struct CoefficientBounds {
  StepFunction sigma_bar;
  StepFunction b_bar;
  StepFunction beta_bar;
  StepFunction l_bar = StepFunction::constant(1.0);
};

/// Coefficients of the one-dimensional equation
///   x(t) = x(0) + int (b + beta x) ds + sum_j int sigma_j sqrt(2x) dB_j
///          + int theta0 xi N0(ds,dxi) + int_{u <= l x(s-)} theta1 xi N1~(ds,du,dxi).
/// Jump sizes are the xi1 coordinates of the marks of m and mu; sigma_j drives
/// Brownian component j of the noise.
struct GeneralizedCbiSpec {
  double theta0 = 1.0;
  double theta1 = 1.0;
  std::vector<Coefficient> sigma;
  Coefficient b = constant_coefficient(0.0);
  Coefficient beta = constant_coefficient(0.0);
  Coefficient l = constant_coefficient(1.0);
  JumpMeasure m;
  JumpMeasure mu;
  CoefficientBounds bounds;
};

/// The x-equation of an admissible set as a generalized CBI equation with
/// constant coefficients (sigma acting on B1, B2 through the lower-triangular factor).
inline GeneralizedCbiSpec cbi_spec_from_affine(const AdmissibleParams& p) {
  GeneralizedCbiSpec spec;
  spec.sigma = {constant_coefficient(0.0), constant_coefficient(p.sigma().m11),
                constant_coefficient(p.sigma().m12)};
  spec.b = constant_coefficient(p.b1());
  spec.beta = constant_coefficient(p.beta11());
  spec.l = constant_coefficient(1.0);
  spec.m = p.m();
  spec.mu = p.mu();
  spec.bounds.sigma_bar = StepFunction::constant(std::hypot(p.sigma().m11, p.sigma().m12));
  spec.bounds.b_bar = StepFunction::constant(p.b1());
  spec.bounds.beta_bar = StepFunction::constant(std::abs(p.beta11()));
  spec.bounds.l_bar = StepFunction::constant(1.0);
  return spec;
}

inline PathBundle simulate_generalized_cbi(const GeneralizedCbiSpec& spec, double x0,
                                           const NoiseSystem& noise) {
  if (!(x0 >= 0.0)) throw SimulationError("x0 must be >= 0");
  if (spec.theta0 < 0.0 || spec.theta1 < 0.0) throw SimulationError("theta0, theta1 must be >= 0");
  if (spec.sigma.size() > static_cast<std::size_t>(noise.components()))
    throw SimulationError("noise has fewer Brownian components than sigma");
  const auto& bd = spec.bounds;
  if (!bd.sigma_bar.valid() || !bd.b_bar.valid() || !bd.beta_bar.valid() || !bd.l_bar.valid())
    throw SimulationError("coefficient bounds must be nonnegative nondecreasing step functions");
  const TimeGrid& grid = noise.grid();
  const double dt = grid.dt;
  detail::check_stability(dt, bd.beta_bar(grid.t_max), "beta_bar(t_max)");

  const double comp_mu = band_moment(spec.mu, detail::band_eps(noise, spec.mu), Region::All,
                                     BandWeight::Xi1);
  PathBundle out = detail::make_bundle(noise, {"x"});
  auto& xs = out.values[0];
  double x = x0;
  xs.push_back(x);
  std::vector<double> sig(spec.sigma.size());
  const std::size_t n = noise.steps();
  for (std::size_t k = 0; k < n; ++k) {
    const double t = grid.time(k);
    const double b = spec.b(t);
    const double beta = spec.beta(t);
    const double l = spec.l(t);
    double sig_norm2 = 0.0;
    for (std::size_t j = 0; j < sig.size(); ++j) {
      sig[j] = spec.sigma[j](t);
      sig_norm2 += sig[j] * sig[j];
    }
    if (b < 0.0 || b > bd.b_bar(t) || std::abs(beta) > bd.beta_bar(t) || l < 0.0 ||
        l > bd.l_bar(t) || std::sqrt(sig_norm2) > bd.sigma_bar(t) * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "coefficient outside its bound at t = " << t;
      throw SimulationError(os.str());
    }
    const double intensity = l * x;
    if (intensity > noise.u_bound()) {
      out.aborted_at = t;
      return out;
    }
    double immigration = b * dt;
    for (const auto& e : noise.n0_in_step(k)) immigration += spec.theta0 * e.xi.xi1;
    double jumps = 0.0;
    for (const auto& e : noise.n1_in_step(k))
      if (e.umark <= intensity) jumps += spec.theta1 * e.xi.xi1;
    const double diffusion = detail::dot_increments(sig, noise.increments(k));
    bool clamped = false;
    x = detail::branching_step(x, beta - spec.theta1 * l * comp_mu, dt, diffusion, immigration,
                               jumps, clamped);
    if (clamped) ++out.clamp_count;
    detail::check_finite(x, "x", t);
    xs.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-dimensional affine process.

namespace detail {

/// Coefficients of a z-type (unconstrained, linear in z) equation.
struct LinearZCoefficients {
  double b2 = 0.0;
  double beta21 = 0.0;
  double beta22 = 0.0;
  double s0 = 0.0;   // coefficient of dB0
  double s21 = 0.0;  // coefficient of sqrt(2x) dB1
  double s22 = 0.0;  // coefficient of sqrt(2x) dB2
  Region region = Region::All;
  double sign = 1.0;  // -1 flips the jump terms (lower reactant)
  double comp_m = 0.0;
  double comp_mu = 0.0;
};

inline LinearZCoefficients z_coefficients(const AdmissibleParams& p, const NoiseSystem& noise,
                                          Region region) {
  LinearZCoefficients c;
  c.b2 = p.b2();
  c.beta21 = p.beta21();
  c.beta22 = p.beta22();
  c.s0 = std::sqrt(2.0) * p.sigma0();
  c.s21 = p.sigma().m21;
  c.s22 = p.sigma().m22;
  c.region = region;
  c.comp_m = band_moment(p.m(), band_eps(noise, p.m()), region, BandWeight::Xi2);
  c.comp_mu = band_moment(p.mu(), band_eps(noise, p.mu()), region, BandWeight::Xi2);
  return c;
}

/// Euler scheme for z given the x path on the same noise.
inline std::vector<double> euler_z(const LinearZCoefficients& c, std::span<const double> xs,
                                   double z0, const NoiseSystem& noise) {
  const double dt = noise.grid().dt;
  std::vector<double> zs;
  zs.reserve(xs.size());
  double z = z0;
  zs.push_back(z);
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double x = xs[k];
    const auto dB = noise.increments(k);
    double jumps = 0.0;
    for (const auto& e : noise.n0_in_step(k))
      if (in_region(e.xi, c.region)) jumps += e.xi.xi2;
    for (const auto& e : noise.n1_in_step(k))
      if (e.umark <= x && in_region(e.xi, c.region)) jumps += e.xi.xi2;
    const double comp = dt * c.comp_m + x * dt * c.comp_mu;
    z = z + (c.b2 + c.beta21 * x + c.beta22 * z) * dt + c.s0 * dB[0] +
        std::sqrt(2.0 * x) * (c.s21 * dB[1] + c.s22 * dB[2]) + c.sign * (jumps - comp);
    detail::check_finite(z, "z", noise.grid().time(k));
    zs.push_back(z);
  }
  return zs;
}

inline void check_affine_noise(const AdmissibleParams& p, const NoiseSystem& noise) {
  if (noise.components() < 3) throw SimulationError("affine simulation needs 3 Brownian components");
  check_stability(noise.grid().dt, p.beta11(), "beta11");
  check_stability(noise.grid().dt, p.beta22(), "beta22");
}

}  // namespace detail

/// x from the CBI equation, z by direct Euler on its linear equation; both share
/// the candidate set of N1 thinned against x(s-).
inline PathBundle simulate_affine(const AdmissibleParams& p, double x0, double z0,
                                  const NoiseSystem& noise) {
  if (!(x0 >= 0.0)) throw SimulationError("x0 must be >= 0");
  detail::check_affine_noise(p, noise);
  PathBundle xb = simulate_generalized_cbi(cbi_spec_from_affine(p), x0, noise);
  PathBundle out = detail::make_bundle(noise, {"x", "z"});
  out.aborted_at = xb.aborted_at;
  out.clamp_count = xb.clamp_count;
  out.values[1] = detail::euler_z(detail::z_coefficients(p, noise, Region::All), xb.values[0], z0,
                                  noise);
  out.values[0] = std::move(xb.values[0]);
  return out;
}

/// z from the variation-of-constants representation, discretized on the
/// same grid and consuming the same events (jumps weighted at their exact times).
inline std::vector<double> simulate_affine_voc(const AdmissibleParams& p,
                                               std::span<const double> xs, double z0,
                                               const NoiseSystem& noise) {
  if (xs.size() != noise.steps() + 1)
    throw SimulationError("x path does not match the noise grid");
  detail::check_affine_noise(p, noise);
  const auto c = detail::z_coefficients(p, noise, Region::All);
  const double dt = noise.grid().dt;
  const double beta22 = p.beta22();
  std::vector<double> zs;
  zs.reserve(xs.size());
  zs.push_back(z0);
  double acc = z0;  // z0 + weighted integrals up to t_k
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double t = noise.grid().time(k);
    const double x = xs[k];
    const auto dB = noise.increments(k);
    const double w = std::exp(-beta22 * t);
    double inc = (c.b2 + c.beta21 * x) * dt + c.s0 * dB[0] +
                 std::sqrt(2.0 * x) * (c.s21 * dB[1] + c.s22 * dB[2]) - dt * c.comp_m -
                 x * dt * c.comp_mu;
    acc += w * inc;
    for (const auto& e : noise.n0_in_step(k)) acc += std::exp(-beta22 * e.time) * e.xi.xi2;
    for (const auto& e : noise.n1_in_step(k))
      if (e.umark <= x) acc += std::exp(-beta22 * e.time) * e.xi.xi2;
    zs.push_back(std::exp(beta22 * noise.grid().time(k + 1)) * acc);
  }
  return zs;
}

// ---------------------------------------------------------------------------
// Catalytic CBI-process.

/// Catalyst x from the CBI equation; reactant y branches at a rate modulated by x.
/// N1 candidates are thinned against x(s-) for x and l x(s-) y(s-) for y.
inline PathBundle simulate_catalytic(const AdmissibleParams& p, double x0, double y0, double l,
                                     const NoiseSystem& noise) {
  if (!(y0 >= 0.0)) throw SimulationError("y0 must be >= 0");
  if (!(l >= 0.0)) throw SimulationError("l must be >= 0");
  if (p.b2() < 0.0) throw SimulationError("catalytic reactant needs b2 >= 0");
  detail::check_affine_noise(p, noise);
  PathBundle xb = simulate_generalized_cbi(cbi_spec_from_affine(p), x0, noise);
  PathBundle out = detail::make_bundle(noise, {"x", "y"});
  out.clamp_count = xb.clamp_count;
  const auto& xs = xb.values[0];
  auto& ys = out.values[1];
  const double dt = noise.grid().dt;
  const double comp_mu =
      band_moment(p.mu(), detail::band_eps(noise, p.mu()), Region::Upper, BandWeight::Xi2);
  const double s0 = p.sigma0();
  const double s21 = p.sigma().m21;
  const double s22 = p.sigma().m22;
  double y = y0;
  ys.push_back(y);
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double t = noise.grid().time(k);
    const double x = xs[k];
    const double intensity = l * x * y;
    if (intensity > noise.u_bound()) {
      out.aborted_at = t;
      break;
    }
    const auto dB = noise.increments(k);
    double immigration = p.b2() * dt;
    for (const auto& e : noise.n0_in_step(k))
      if (in_region(e.xi, Region::Upper)) immigration += e.xi.xi2;
    double jumps = 0.0;
    for (const auto& e : noise.n1_in_step(k))
      if (e.umark <= intensity && in_region(e.xi, Region::Upper)) jumps += e.xi.xi2;
    const double diffusion = s0 * dB[0] + std::sqrt(x) * (s21 * dB[1] + s22 * dB[2]);
    bool clamped = false;
    y = detail::branching_step(y, p.beta21() * x + p.beta22() - l * x * comp_mu, dt, diffusion,
                               immigration, jumps, clamped);
    if (clamped) ++out.clamp_count;
    detail::check_finite(y, "y", t);
    ys.push_back(y);
  }
  if (!out.aborted_at && xb.aborted_at) out.aborted_at = xb.aborted_at;
  auto xv = std::move(xb.values[0]);
  xv.resize(ys.size());
  out.values[0] = std::move(xv);
  return out;
}

// ---------------------------------------------------------------------------
// Catalytic CBI-process with reactant pair and its fluctuation limit.

/// Nonnegative parts with sigma0 = s0+ - s0-, sigma2j = s2j+ - s2j-,
/// b2 = b2+ - b2-, beta21 = beta21+ - beta21-.
struct ReactantSplit {
  double sigma0_plus = 0.0, sigma0_minus = 0.0;
  double sigma21_plus = 0.0, sigma21_minus = 0.0;
  double sigma22_plus = 0.0, sigma22_minus = 0.0;
  double b2_plus = 0.0, b2_minus = 0.0;
  double beta21_plus = 0.0, beta21_minus = 0.0;

  /// Positive/negative parts of each coefficient.
  static ReactantSplit canonical(const AdmissibleParams& p) {
    auto pos = [](double v) { return std::max(v, 0.0); };
    auto neg = [](double v) { return std::max(-v, 0.0); };
    return {pos(p.sigma0()),       neg(p.sigma0()),       pos(p.sigma().m21),
            neg(p.sigma().m21),    pos(p.sigma().m22),    neg(p.sigma().m22),
            pos(p.b2()),           neg(p.b2()),           pos(p.beta21()),
            neg(p.beta21())};
  }

  std::vector<std::string> problems(const AdmissibleParams& p) const {
    std::vector<std::string> out;
    const double parts[] = {sigma0_plus, sigma0_minus, sigma21_plus, sigma21_minus, sigma22_plus,
                            sigma22_minus, b2_plus, b2_minus, beta21_plus, beta21_minus};
    for (double v : parts)
      if (!(v >= 0.0) || !std::isfinite(v)) {
        out.push_back("all decomposition parts must be finite and >= 0");
        break;
      }
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
    if (!close(sigma0_plus - sigma0_minus, p.sigma0()))
      out.push_back("sigma0_plus - sigma0_minus must equal sqrt(a)");
    if (!close(sigma21_plus - sigma21_minus, p.sigma().m21))
      out.push_back("sigma21_plus - sigma21_minus must equal sigma21");
    if (!close(sigma22_plus - sigma22_minus, p.sigma().m22))
      out.push_back("sigma22_plus - sigma22_minus must equal sigma22");
    if (!close(b2_plus - b2_minus, p.b2())) out.push_back("b2_plus - b2_minus must equal b2");
    if (!close(beta21_plus - beta21_minus, p.beta21()))
      out.push_back("beta21_plus - beta21_minus must equal beta21");
    return out;
  }
};

/// Initial data: single mode uses z_plus0 as z_k(0); pair mode uses both.
struct ReactantInit {
  double z_plus0 = 0.0;
  double z_minus0 = 0.0;
};

namespace detail {

inline void check_reactant_inputs(const AdmissibleParams& p,
                                  const std::optional<ReactantSplit>& split, double theta) {
  if (!(p.beta22() < 0.0)) throw SimulationError("reactant equations require beta22 < 0");
  if (!(theta >= 1.0)) throw SimulationError("theta must be >= 1");
  if (split) {
    const auto probs = split->problems(p);
    if (!probs.empty()) throw SimulationError("invalid decomposition: " + probs.front());
  }
}

struct ReactantCoefficients {
  double b2 = 0.0, beta21 = 0.0, s0 = 0.0, s21 = 0.0, s22 = 0.0;
  Region region = Region::Upper;
  double sign = 1.0;
};

/// Reactant in centred coordinates z = y - theta, y~ = y / theta = 1 + z / theta.
/// Returns false if the thinning intensity x y~ exceeded u_bound (path cut at that step).
inline bool reactant_z(const ReactantCoefficients& c, double beta22, double theta,
                       std::span<const double> xs, double z0, const NoiseSystem& noise,
                       const JumpMeasure& m, const JumpMeasure& mu, std::vector<double>& zs,
                       std::size_t& clamps) {
  const double dt = noise.grid().dt;
  const double comp_m = band_moment(m, band_eps(noise, m), c.region, BandWeight::Xi2);
  const double comp_mu = band_moment(mu, band_eps(noise, mu), c.region, BandWeight::Xi2);
  zs.clear();
  zs.reserve(xs.size());
  double z = z0;
  zs.push_back(z);
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double x = xs[k];
    const double ytil = std::max(1.0 + z / theta, 0.0);
    const double intensity = x * ytil;
    if (intensity > noise.u_bound()) return false;
    const auto dB = noise.increments(k);
    double jumps = 0.0;
    for (const auto& e : noise.n0_in_step(k))
      if (in_region(e.xi, c.region)) jumps += e.xi.xi2;
    for (const auto& e : noise.n1_in_step(k))
      if (e.umark <= intensity && in_region(e.xi, c.region)) jumps += e.xi.xi2;
    const double comp = dt * comp_m + intensity * dt * comp_mu;
    z = z + (c.b2 * ytil + c.beta21 * x * ytil + beta22 * z) * dt + c.s0 * std::sqrt(ytil) * dB[0] +
        std::sqrt(2.0 * intensity) * (c.s21 * dB[1] + c.s22 * dB[2]) + c.sign * (jumps - comp);
    if (z < -theta) {
      z = -theta;
      ++clamps;
    }
    detail::check_finite(z, "reactant", noise.grid().time(k));
    zs.push_back(z);
  }
  return true;
}

}  // namespace detail

/// Simulates the reactant equations against a given catalyst path `xs`.
/// Without a split: one reactant (components x, y, z_k with z_k = y - theta).
/// With a split: the pair y+ (jumps from D+) and y- (sign-flipped jumps from D-),
/// components x, y_plus, y_minus, z_k = y_plus - y_minus.
inline PathBundle simulate_reactant_pair(const AdmissibleParams& p,
                                         const std::optional<ReactantSplit>& split, double theta,
                                         const ReactantInit& init, std::span<const double> xs,
                                         const NoiseSystem& noise) {
  detail::check_reactant_inputs(p, split, theta);
  detail::check_affine_noise(p, noise);
  if (xs.size() != noise.steps() + 1) throw SimulationError("x path does not match the noise grid");
  const double s2 = std::sqrt(2.0);
  std::vector<double> x_copy(xs.begin(), xs.end());
  if (!split) {
    PathBundle out = detail::make_bundle(noise, {"x", "y", "z_k"});
    detail::ReactantCoefficients c{p.b2(), p.beta21(), s2 * p.sigma0(), p.sigma().m21,
                                   p.sigma().m22, Region::Upper, 1.0};
    std::vector<double> zs;
    if (!detail::reactant_z(c, p.beta22(), theta, xs, init.z_plus0, noise, p.m(), p.mu(), zs,
                            out.clamp_count))
      out.aborted_at = noise.grid().time(zs.size() - 1);
    x_copy.resize(zs.size());
    out.values[0] = std::move(x_copy);
    for (double z : zs) out.values[1].push_back(theta + z);
    out.values[2] = std::move(zs);
    return out;
  }
  PathBundle out = detail::make_bundle(noise, {"x", "y_plus", "y_minus", "z_k"});
  const ReactantSplit& sp = *split;
  detail::ReactantCoefficients cp{sp.b2_plus, sp.beta21_plus, s2 * sp.sigma0_plus,
                                  sp.sigma21_plus, sp.sigma22_plus, Region::Upper, 1.0};
  detail::ReactantCoefficients cm{sp.b2_minus, sp.beta21_minus, s2 * sp.sigma0_minus,
                                  sp.sigma21_minus, sp.sigma22_minus, Region::Lower, -1.0};
  std::vector<double> zp, zm;
  const bool ok_p = detail::reactant_z(cp, p.beta22(), theta, xs, init.z_plus0, noise, p.m(),
                                       p.mu(), zp, out.clamp_count);
  const bool ok_m = detail::reactant_z(cm, p.beta22(), theta, xs, init.z_minus0, noise, p.m(),
                                       p.mu(), zm, out.clamp_count);
  const std::size_t len = std::min(zp.size(), zm.size());
  if (!ok_p || !ok_m) out.aborted_at = noise.grid().time(len - 1);
  x_copy.resize(len);
  out.values[0] = std::move(x_copy);
  for (std::size_t k = 0; k < len; ++k) {
    out.values[1].push_back(theta + zp[k]);
    out.values[2].push_back(theta + zm[k]);
    out.values[3].push_back(zp[k] - zm[k]);
  }
  return out;
}

/// Convenience overload: simulates the catalyst x first.
inline PathBundle simulate_reactant_pair(const AdmissibleParams& p,
                                         const std::optional<ReactantSplit>& split, double theta,
                                         const ReactantInit& init, double x0,
                                         const NoiseSystem& noise) {
  PathBundle xb = simulate_generalized_cbi(cbi_spec_from_affine(p), x0, noise);
  if (xb.aborted()) {
    detail::check_reactant_inputs(p, split, theta);
    return xb;
  }
  return simulate_reactant_pair(p, split, theta, init, xb.values[0], noise);
}

/// The limit equation of the reactant fluctuations on the same noise: jumps from
/// D+ only without a split, the full two-sided equation with a split (coefficients
/// taken as differences of the split parts).
inline std::vector<double> simulate_fluctuation_limit(const AdmissibleParams& p,
                                                      const std::optional<ReactantSplit>& split,
                                                      const ReactantInit& init,
                                                      std::span<const double> xs,
                                                      const NoiseSystem& noise) {
  detail::check_affine_noise(p, noise);
  if (!split) {
    return detail::euler_z(detail::z_coefficients(p, noise, Region::Upper), xs, init.z_plus0,
                           noise);
  }
  auto c = detail::z_coefficients(p, noise, Region::All);
  const ReactantSplit& sp = *split;
  c.b2 = sp.b2_plus - sp.b2_minus;
  c.beta21 = sp.beta21_plus - sp.beta21_minus;
  c.s0 = std::sqrt(2.0) * (sp.sigma0_plus - sp.sigma0_minus);
  c.s21 = sp.sigma21_plus - sp.sigma21_minus;
  c.s22 = sp.sigma22_plus - sp.sigma22_minus;
  return detail::euler_z(c, xs, init.z_plus0 - init.z_minus0, noise);
}

/// CSV: path_id, t, then one column per component (17 significant digits).
inline void write_paths_csv(std::ostream& os, std::span<const PathBundle> paths) {
  if (paths.empty()) return;
  os << "path_id,t";
  for (const auto& name : paths.front().names) os << ',' << name;
  os << '\n';
  for (std::size_t id = 0; id < paths.size(); ++id) {
    const PathBundle& b = paths[id];
    const std::size_t len = b.values.empty() ? 0 : b.values.front().size();
    for (std::size_t k = 0; k < len; ++k) {
      os << id << ',' << fmt_num(b.grid.time(k));
      for (const auto& v : b.values) os << ',' << fmt_num(v[k]);
      os << '\n';
    }
  }
}

}  // namespace affine_lab
