#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "affine_lab/presets.hpp"
#include "affine_lab/transform.hpp"
#include "oracles.hpp"

using namespace affine_lab;
using namespace std::complex_literals;

namespace {

AdmissibleParams admit(const ParamRecord& r) { return AdmissibleParams::from_record(r); }

oracle::Model to_oracle(const ParamRecord& r) {
  oracle::Model m;
  m.a = r.a;
  m.a11 = r.alpha.m11;
  m.a12 = r.alpha.m12;
  m.a22 = r.alpha.m22;
  m.b1 = r.b1;
  m.b2 = r.b2;
  m.beta11 = r.beta.m11;
  m.beta21 = r.beta.m21;
  m.beta22 = r.beta.m22;
  for (const Atom& a : r.m.atoms()) m.m.push_back({a.xi.xi1, a.xi.xi2, a.weight});
  for (const Atom& a : r.mu.atoms()) m.mu.push_back({a.xi.xi1, a.xi.xi2, a.weight});
  return m;
}

const std::vector<UPoint> kUs{{-0.5, 0.0}, {0.0, 1i}, {-1.0 + 0.5i, -0.7i}, {-0.2i, 2i}, {-2.0, 0.3i}};

}  // namespace

TEST(EvalFR, MatchIndependentFormulas) {
  const ParamRecord r = presets::jump_affine().record;
  const auto p = admit(r);
  const auto o = to_oracle(r);
  for (const UPoint& u : kUs) {
    EXPECT_LT(std::abs(eval_F(p, u) - oracle::F(o, u.u1, u.u2)), 1e-14);
    EXPECT_LT(std::abs(eval_R(p, u) - oracle::R(o, u.u1, u.u2)), 1e-14);
  }
}

TEST(EvalFR, SimpleValues) {
  ParamRecord r;
  r.b1 = 2.0;
  r.a = 1.0;
  r.beta.m11 = -1.0;
  r.alpha = {0.5, 0.0, 0.0, 0.0};
  const auto p = admit(r);
  EXPECT_EQ(eval_F(p, {-1.0, 0.0}), cplx(-2.0));
  EXPECT_EQ(eval_F(p, {0.0, 1i}), cplx(-1.0));
  EXPECT_EQ(eval_R(p, {-2.0, 0.0}), cplx(2.0 + 2.0));
  EXPECT_EQ(eval_R(p, {}), cplx(0.0));
}

TEST(SolveTransform, ZeroArgumentStaysZero) {
  const auto p = admit(presets::jump_affine().record);
  const std::vector<double> grid{0.0, 0.5, 1.0};
  const auto s = solve_transform(p, {}, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_EQ(s.psi1[k], cplx(0.0));
    EXPECT_EQ(s.psi2[k], cplx(0.0));
    EXPECT_EQ(s.phi[k], cplx(0.0));
  }
}

TEST(SolveTransform, OrnsteinUhlenbeckClosedForm) {
  const ParamRecord r = presets::ou().record;
  const auto p = admit(r);
  const std::vector<double> grid{0.0, 0.25, 0.5, 1.0, 2.0};
  for (double z : {0.5, 1.0, 2.0}) {
    const auto s = solve_transform(p, {0.0, cplx(0.0, z)}, grid, 1e-11);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      EXPECT_NEAR(std::abs(s.psi1[k]), 0.0, 1e-14);
      EXPECT_NEAR(s.phi[k].real(), oracle::ou_phi(r.a, r.beta.m22, z, grid[k]), 1e-9);
      EXPECT_NEAR(s.phi[k].imag(), 0.0, 1e-9);
      EXPECT_NEAR(s.psi2[k].imag(), z * std::exp(-grid[k]), 1e-15);
    }
  }
}

TEST(SolveTransform, CirRiccatiClosedForm) {
  const ParamRecord r = presets::cir().record;
  const auto p = admit(r);
  const std::vector<double> grid{0.0, 0.25, 0.5, 1.0, 2.0};
  for (double u1 : {-0.5, -1.0, -2.0}) {
    const auto s = solve_transform(p, {u1, 0.0}, grid, 1e-11);
    for (std::size_t k = 1; k < grid.size(); ++k) {
      const double t = grid[k];
      EXPECT_NEAR(s.psi1[k].real(), oracle::riccati_psi(r.beta.m11, r.alpha.m11, u1, t), 1e-8);
      EXPECT_NEAR(s.phi[k].real(),
                  r.b1 * oracle::riccati_psi_integral(r.beta.m11, r.alpha.m11, u1, t), 1e-8);
    }
  }
}

TEST(SolveTransform, MatchesIndependentRk4ForJumps) {
  const ParamRecord r = presets::jump_affine().record;
  const auto p = admit(r);
  const auto o = to_oracle(r);
  const std::vector<double> grid{0.0, 0.7, 1.5};
  for (const UPoint& u : kUs) {
    const auto s = solve_transform(p, u, grid, 1e-11);
    for (std::size_t k = 1; k < grid.size(); ++k) {
      const auto ref = oracle::transform_rk4(o, u.u1, u.u2, grid[k]);
      EXPECT_LT(std::abs(s.psi1[k] - ref[0]), 1e-8) << k;
      EXPECT_LT(std::abs(s.phi[k] - ref[1]), 1e-8) << k;
    }
  }
}

TEST(SolveTransform, Invariants) {
  std::vector<double> grid;
  for (int k = 0; k <= 40; ++k) grid.push_back(0.05 * k);
  for (const Preset& pr : presets::all()) {
    const auto p = admit(pr.record);
    for (const UPoint& u : kUs) {
      const auto s = solve_transform(p, u, grid);
      EXPECT_EQ(s.psi1.front(), u.u1);
      EXPECT_EQ(s.phi.front(), cplx(0.0));
      for (std::size_t k = 0; k < grid.size(); ++k) {
        EXPECT_NEAR(std::abs(s.psi2[k] - std::exp(pr.record.beta.m22 * grid[k]) * u.u2), 0.0, 1e-15);
        EXPECT_LE(s.psi1[k].real(), 1e-12) << pr.name;
        EXPECT_LE(s.phi[k].real(), 1e-12) << pr.name;
      }
    }
  }
}

TEST(SolveTransform, RejectsBadInput) {
  const auto p = admit(presets::ou().record);
  const std::vector<double> grid{0.0, 1.0};
  EXPECT_THROW(solve_transform(p, {0.5, 0.0}, grid), TransformError);
  EXPECT_THROW(solve_transform(p, {0.0, 0.1 + 1i}, grid), TransformError);
  EXPECT_THROW(solve_transform(p, {-1.0, 0.0}, grid, 1e-3), TransformError);
  EXPECT_THROW(solve_transform(p, {-1.0, 0.0}, grid, 1e-13), TransformError);
}

TEST(CharFn, AtTimeZeroIsTheExponential) {
  const auto p = admit(presets::jump_affine().record);
  const UPoint u{-1.0 + 1i, 2i};
  EXPECT_LT(std::abs(char_fn(p, {1.0, 0.5}, 0.0, u) - std::exp(-1.0 + 1i + 1i)), 1e-15);
}

TEST(CharFn, BoundedAndConjugateSymmetric) {
  for (const Preset& pr : presets::all()) {
    const auto p = admit(pr.record);
    for (const UPoint& u : kUs) {
      for (const Point x : {Point{0.0, 0.0}, Point{1.0, -0.5}, Point{2.5, 1.0}}) {
        const cplx v = char_fn(p, x, 0.8, u);
        EXPECT_LE(std::abs(v), 1.0 + 1e-12);
        EXPECT_LT(std::abs(char_fn(p, x, 0.8, u.conj()) - std::conj(v)), 1e-12);
      }
    }
  }
}

TEST(CharFn, OuGaussianLaw) {
  // x = 0 and z0 = 0.5: z(t) is normal with mean 0.5 e^{-t} and variance (1 - e^{-2t}).
  const auto p = admit(presets::ou().record);
  const double t = 0.6, m = 0.5 * std::exp(-t), v = 1.0 - std::exp(-2 * t);
  for (double z : {0.3, 1.0, 2.0}) {
    const cplx expect = std::exp(cplx(0.0, z * m) - z * z * v / 2.0);
    EXPECT_LT(std::abs(char_fn(p, {0.0, 0.5}, t, {0.0, cplx(0.0, z)}, 1e-11) - expect), 1e-9);
  }
}

TEST(FlowResidual, ZeroArgumentAndZeroTimes) {
  const auto p = admit(presets::jump_affine().record);
  const auto a = flow_residual(p, {}, 0.5, 0.5);
  EXPECT_EQ(a.psi, 0.0);
  EXPECT_EQ(a.phi, 0.0);
  const auto b = flow_residual(p, {-1.0, 1i}, 0.0, 0.0);
  EXPECT_NEAR(b.psi, 0.0, 1e-15);
  EXPECT_NEAR(b.phi, 0.0, 1e-15);
}

TEST(FlowResidual, SemiflowHoldsOnAGrid) {
  const double tol = 1e-9;
  const std::vector<UPoint> us{{-0.5, 0.0}, {-1.0 + 1i, 0.5i}, {0.0, 2i}};
  for (const char* name : {"ou", "cir", "jump_affine"}) {
    const auto p = admit(presets::by_name(name).record);
    for (const UPoint& u : us)
      for (double r : {0.1, 0.5, 1.0})
        for (double t : {0.2, 0.7, 1.3}) {
          const auto res = flow_residual(p, u, r, t, tol);
          EXPECT_LE(res.psi, 10 * tol) << name << " r=" << r << " t=" << t;
          EXPECT_LE(res.phi, 10 * tol) << name << " r=" << r << " t=" << t;
        }
  }
}

TEST(MomentFunctionals, InitialValues) {
  const auto mf = moment_functionals(admit(presets::jump_affine().record));
  EXPECT_EQ(mf.q11(0.0), 1.0);
  EXPECT_EQ(mf.q12(0.0), 0.0);
  EXPECT_EQ(mf.h1(0.0), 0.0);
  EXPECT_EQ(mf.h2(0.0), 0.0);
}

TEST(MomentFunctionals, SimpleClosedForms) {
  ParamRecord r;
  r.b1 = 1.0;
  auto mf = moment_functionals(admit(r));
  EXPECT_DOUBLE_EQ(mf.h1(2.0), 2.0);
  r.beta.m11 = -1.0;
  r.beta.m21 = 1.0;
  mf = moment_functionals(admit(r));
  EXPECT_DOUBLE_EQ(mf.q11(1.0), std::exp(-1.0));
  for (double t : {0.3, 1.0, 2.0}) EXPECT_NEAR(mf.q12(t), 1.0 - std::exp(-t), 1e-15);
  r.beta.m11 = 0.0;
  mf = moment_functionals(admit(r));
  for (double t : {0.3, 1.0, 2.0}) EXPECT_NEAR(mf.q12(t), t, 1e-15);
}

TEST(MomentFunctionals, EqualRateLimitMatchesQuadrature) {
  ParamRecord r;
  r.b1 = 0.7;
  r.beta = {-0.5, 0.0, 0.4, -0.5};
  const auto mf = moment_functionals(admit(r));
  for (double t : {0.5, 1.0, 3.0}) {
    EXPECT_NEAR(mf.q12(t), 0.4 * t * std::exp(-0.5 * t), 1e-15);
    const double int_q12 =
        oracle::simpson([](double s) { return 0.4 * s * std::exp(-0.5 * s); }, 0.0, t);
    EXPECT_NEAR(mf.h2(t), 0.7 * int_q12, 1e-12);
  }
}

TEST(MomentFunctionals, CocycleIdentities) {
  for (const Preset& pr : presets::all()) {
    const auto mf = moment_functionals(admit(pr.record));
    const double b22 = pr.record.beta.m22;
    for (double r : {0.2, 0.9})
      for (double t : {0.4, 1.1}) {
        EXPECT_NEAR(mf.q12(r + t), mf.q11(r) * mf.q12(t) + mf.q12(r) * std::exp(b22 * t), 1e-14);
        EXPECT_NEAR(mf.q11(r + t), mf.q11(r) * mf.q11(t), 1e-14);
        EXPECT_NEAR(mf.h1(r + t), mf.h1(r) * mf.q11(t) + mf.h1(t), 1e-14);
        EXPECT_NEAR(mf.h2(r + t), mf.h1(r) * mf.q12(t) + mf.h2(r) * std::exp(b22 * t) + mf.h2(t),
                    1e-14);
      }
  }
}

TEST(MomentFunctionals, MatchTransformDerivatives) {
  const double h = 1e-4, t = 0.9;
  const std::vector<double> grid{0.0, t};
  for (const Preset& pr : presets::all()) {
    const auto p = admit(pr.record);
    const auto mf = moment_functionals(p);
    auto d = [&](UPoint plus) {
      const auto a = solve_transform(p, plus, grid, 1e-12);
      const auto b = solve_transform(p, plus.conj(), grid, 1e-12);
      return std::array<double, 2>{(a.psi1[1] - b.psi1[1]).imag() / (2 * h),
                                   (a.phi[1] - b.phi[1]).imag() / (2 * h)};
    };
    const auto d1 = d({cplx(0.0, h), 0.0});
    const auto d2 = d({0.0, cplx(0.0, h)});
    EXPECT_NEAR(d1[0], mf.q11(t), 1e-6) << pr.name;
    EXPECT_NEAR(d1[1], mf.h1(t), 1e-6) << pr.name;
    EXPECT_NEAR(d2[0], mf.q12(t), 1e-6) << pr.name;
    EXPECT_NEAR(d2[1], mf.h2(t), 1e-6) << pr.name;
  }
}

TEST(TransformCsv, HeaderAndRows) {
  const auto p = admit(presets::ou().record);
  const std::vector<double> grid{0.0, 0.5, 1.0};
  std::ostringstream os;
  write_transform_csv(os, solve_transform(p, {0.0, 1i}, grid));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,re_psi1,im_psi1,re_psi2,im_psi2,re_phi,im_phi");
  int rows = 0;
  while (std::getline(is, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}
