// Affine transform: F and R, the generalized Riccati system, and first-moment functionals.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "affine_lab/format.hpp"
#include "affine_lab/ode.hpp"
#include "affine_lab/params.hpp"

namespace affine_lab {

/// F(u) = b1 u1 + b2 u2 + a u2^2 + int (e^{<u,xi>} - 1 - xi2 u2) m(dxi).
inline cplx eval_F(const AdmissibleParams& p, const UPoint& u) {
  return p.b1() * u.u1 + p.b2() * u.u2 + p.a() * u.u2 * u.u2 +
         jump_exp_integral(p.m(), u, Compensation::Xi2Only);
}

/// R(u) = beta11 u1 + beta21 u2 + alpha11 u1^2 + 2 alpha12 u1 u2 + alpha22 u2^2
///        + int (e^{<u,xi>} - 1 - <u,xi>) mu(dxi).
inline cplx eval_R(const AdmissibleParams& p, const UPoint& u) {
  return p.beta11() * u.u1 + p.beta21() * u.u2 + p.alpha11() * u.u1 * u.u1 +
         2.0 * p.alpha12() * u.u1 * u.u2 + p.alpha22() * u.u2 * u.u2 +
         jump_exp_integral(p.mu(), u, Compensation::Full);
}

struct TransformSolution {
  UPoint u;
  std::vector<double> t_grid;
  std::vector<cplx> psi1;
  std::vector<cplx> psi2;
  std::vector<cplx> phi;
  double tol_used = 0.0;
  std::size_t steps_taken = 0;
};

class TransformError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solves psi1' = R(psi1, e^{beta22 s} u2), phi' = F(psi1, e^{beta22 s} u2) with
/// psi1(0) = u1, phi(0) = 0, and fills psi2 = e^{beta22 t} u2 in closed form.
/// Throws TransformError on bad input and SolverError on integration failure.
inline TransformSolution solve_transform(const AdmissibleParams& p, const UPoint& u,
                                         std::span<const double> t_grid, double tol = 1e-9) {
  if (!u.in_domain()) throw TransformError("u must lie in U: Re(u1) <= 0 and Re(u2) = 0");
  if (!(tol >= 1e-12 && tol <= 1e-4)) throw TransformError("tol must lie in [1e-12, 1e-4]");
  if (t_grid.empty() || t_grid.front() != 0.0)
    throw TransformError("t_grid must start at 0");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1])) throw TransformError("t_grid must be strictly increasing");

  TransformSolution sol;
  sol.u = u;
  sol.t_grid.assign(t_grid.begin(), t_grid.end());
  sol.tol_used = tol;

  const double beta22 = p.beta22();
  auto rhs = [&](double t, const std::array<double, 4>& y) {
    const UPoint v{{y[0], y[1]}, std::exp(beta22 * t) * u.u2};
    const cplx r = eval_R(p, v);
    const cplx f = eval_F(p, v);
    return std::array<double, 4>{r.real(), r.imag(), f.real(), f.imag()};
  };
  // Re(psi1) and Re(phi) stay <= 0 in exact arithmetic; clamp roundoff, abort on real breaches.
  auto on_accept = [&](double t, std::array<double, 4>& y) {
    bool changed = false;
    for (int idx : {0, 2}) {
      if (y[idx] > tol) {
        std::ostringstream os;
        os << (idx == 0 ? "Re(psi1)" : "Re(phi)") << " = " << y[idx]
           << " left the closed left half-plane at t = " << t;
        throw SolverError(os.str(), t);
      }
      if (y[idx] > 0.0) {
        y[idx] = 0.0;
        changed = true;
      }
    }
    return changed;
  };

  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  OdeStats stats;
  std::array<double, 4> y0{u.u1.real(), u.u1.imag(), 0.0, 0.0};
  const auto states = u.u1 == cplx{} && u.u2 == cplx{}
                          ? std::vector<std::array<double, 4>>(t_grid.size(), y0)
                          : integrate_dopri5<4>(rhs, y0, t_grid, opt, on_accept, &stats);
  sol.steps_taken = stats.accepted;
  sol.psi1.reserve(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    sol.psi1.emplace_back(std::min(states[k][0], 0.0), states[k][1]);
    sol.phi.emplace_back(std::min(states[k][2], 0.0), states[k][3]);
    sol.psi2.push_back(std::exp(beta22 * t_grid[k]) * u.u2);
  }
  sol.psi1.front() = u.u1;
  sol.phi.front() = 0.0;
  return sol;
}

/// Transition characteristic function exp(<x, psi(t,u)> + phi(t,u)).
inline cplx char_fn(const AdmissibleParams& p, const Point& x, double t, const UPoint& u,
                    double tol = 1e-9) {
  if (t == 0.0) return std::exp(x.xi1 * u.u1 + x.xi2 * u.u2);
  const std::array<double, 2> grid{0.0, t};
  const TransformSolution s = solve_transform(p, u, grid, tol);
  return std::exp(x.xi1 * s.psi1.back() + x.xi2 * s.psi2.back() + s.phi.back());
}

struct FlowResidual {
  double psi = 0.0;
  double phi = 0.0;
};

/// Residuals of psi(r+t,u) = psi(r, psi(t,u)) and phi(r+t,u) = phi(r, psi(t,u)) + phi(t,u).
inline FlowResidual flow_residual(const AdmissibleParams& p, const UPoint& u, double r,
                                  double t, double tol = 1e-9) {
  if (r < 0.0 || t < 0.0) throw TransformError("flow_residual needs r, t >= 0");
  if (u.u1 == cplx{} && u.u2 == cplx{}) return {};

  std::vector<double> grid{0.0};
  if (t > 0.0) grid.push_back(t);
  if (r > 0.0) grid.push_back(r + t);
  const TransformSolution direct = solve_transform(p, u, grid, tol);
  const std::size_t it = t > 0.0 ? 1 : 0;
  const UPoint mid{direct.psi1[it], direct.psi2[it]};
  const cplx phi_t = direct.phi[it];

  std::vector<double> grid_r{0.0};
  if (r > 0.0) grid_r.push_back(r);
  const TransformSolution composed = solve_transform(p, mid, grid_r, tol);

  return {std::abs(direct.psi1.back() - composed.psi1.back()),
          std::abs(direct.phi.back() - composed.phi.back() - phi_t)};
}

namespace detail {

// int_0^t e^{beta s} ds
inline double exp_integral(double beta, double t) {
  return beta == 0.0 ? t : std::expm1(beta * t) / beta;
}

}  // namespace detail

/// First-moment functionals of the transform, in closed form:
///   q11 = d psi1/d u1 at 0, q12 = d psi1/d u2 at 0,
///   h1 = d phi/d u1 at 0, h2 = d phi/d u2 at 0.
/// Mean of the process started at x: E[x1(t)] = x1 q11 + h1,
/// E[x2(t)] = x1 q12 + x2 e^{beta22 t} + h2.
class MomentFunctionals {
 public:
  explicit MomentFunctionals(const AdmissibleParams& p)
      : beta11_(p.beta11()),
        beta21_(p.beta21()),
        beta22_(p.beta22()),
        drift1_(p.b1() + jump_moment(p.m(), Moment::Xi1)),
        b2_(p.b2()) {}

  double q11(double t) const { return std::exp(beta11_ * t); }

  double q12(double t) const {
    return beta21_ * std::exp(beta22_ * t) * detail::exp_integral(beta11_ - beta22_, t);
  }

  double h1(double t) const { return drift1_ * detail::exp_integral(beta11_, t); }

  double h2(double t) const { return drift1_ * q12_integral(t) + b2_ * detail::exp_integral(beta22_, t); }

  double mean_x1(double x1, double t) const { return x1 * q11(t) + h1(t); }
  double mean_x2(double x1, double x2, double t) const {
    return x1 * q12(t) + x2 * std::exp(beta22_ * t) + h2(t);
  }

 private:
  // int_0^t q12(s) ds
  double q12_integral(double t) const {
    const double delta = beta11_ - beta22_;
    if (std::abs(delta * t) > 1e-3)
      return beta21_ * (detail::exp_integral(beta11_, t) - detail::exp_integral(beta22_, t)) /
             delta;
    // Near the removable singularity beta11 = beta22, integrate the stable closed form.
    auto integrand = [this](double s) { return q12(s); };
    return boost::math::quadrature::gauss<double, 30>::integrate(integrand, 0.0, t);
  }

  double beta11_;
  double beta21_;
  double beta22_;
  double drift1_;
  double b2_;
};

inline MomentFunctionals moment_functionals(const AdmissibleParams& p) {
  return MomentFunctionals(p);
}

/// CSV dump: t, re_psi1, im_psi1, re_psi2, im_psi2, re_phi, im_phi.
inline void write_transform_csv(std::ostream& os, const TransformSolution& s) {
  os << "t,re_psi1,im_psi1,re_psi2,im_psi2,re_phi,im_phi\n";
  for (std::size_t k = 0; k < s.t_grid.size(); ++k) {
    os << fmt_num(s.t_grid[k]) << ',' << fmt_num(s.psi1[k].real()) << ','
       << fmt_num(s.psi1[k].imag()) << ',' << fmt_num(s.psi2[k].real()) << ','
       << fmt_num(s.psi2[k].imag()) << ',' << fmt_num(s.phi[k].real()) << ','
       << fmt_num(s.phi[k].imag()) << '\n';
  }
}

}  // namespace affine_lab
