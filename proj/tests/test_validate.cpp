#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "affine_lab/presets.hpp"
#include "affine_lab/validate.hpp"

using namespace affine_lab;
using namespace std::complex_literals;

namespace {

AdmissibleParams admit(const ParamRecord& r) { return AdmissibleParams::from_record(r); }

McSettings small_mc(std::size_t n, double dt = 1.0 / 64) {
  McSettings mc;
  mc.n_paths = n;
  mc.n_calibration = n;
  mc.seed = 11;
  mc.dt = dt;
  mc.workers = 1;
  return mc;
}

// Time derivative at 0 of E exp(<u, X_t>): forward differences, one Richardson step.
cplx char_fn_rate(const AdmissibleParams& p, Point x, UPoint u) {
  const cplx f0 = std::exp(x.xi1 * u.u1 + x.xi2 * u.u2);
  auto d = [&](double h) { return (char_fn(p, x, h, u, 1e-12) - f0) / h; };
  const double h = 1e-3;
  return 2.0 * d(h / 2) - d(h);
}

std::string failures(const ExperimentReport& rep) {
  std::string s;
  for (const auto& r : rep.rows)
    if (!r.pass) s += r.quantity + "; ";
  return s;
}

}  // namespace

TEST(EmpiricalCharFn, ZeroFrequencyIsOne) {
  const std::vector<double> x{0.3, 1.2, 2.0}, z{-1.0, 0.0, 4.0};
  const auto e = char_fn_estimate(x, z, 1.0, {});
  EXPECT_EQ(e.estimate, cplx(1.0));
  EXPECT_EQ(e.std_error, 0.0);
  EXPECT_EQ(e.n_paths, 3u);
}

TEST(EmpiricalCharFn, ConstantEnsemble) {
  const std::vector<double> x(10, 0.5), z(10, -0.25);
  const UPoint u{-1.0 + 0.5i, 2i};
  const auto e = char_fn_estimate(x, z, 1.0, u);
  EXPECT_LT(std::abs(e.estimate - std::exp(u.u1 * 0.5 - u.u2 * 0.25)), 1e-15);
  EXPECT_NEAR(e.std_error, 0.0, 1e-15);
}

TEST(EmpiricalCharFn, StandardErrorHalvesWithFourTimesThePaths) {
  const ParamRecord r = presets::jump_affine().record;
  const auto p = admit(r);
  const TimeGrid g{1.0, 1.0 / 32};
  auto ensemble = [&](std::size_t n) {
    std::vector<PathBundle> paths;
    for (std::size_t i = 0; i < n; ++i)
      paths.push_back(simulate_affine(p, 1.0, 0.5, generate_noise(r.m, r.mu, g, i, 32.0, 1e-4)));
    return paths;
  };
  const UPoint u{-0.5, 1i};
  const auto a = empirical_char_fn(ensemble(500), "x", "z", 1.0, u);
  const auto b = empirical_char_fn(ensemble(2000), "x", "z", 1.0, u);
  EXPECT_GE(b.std_error / a.std_error, 0.4);
  EXPECT_LE(b.std_error / a.std_error, 0.6);
}

TEST(EmpiricalCharFn, RejectsBadEnsembles) {
  const ParamRecord r = presets::ou().record;
  const auto p = admit(r);
  std::vector<PathBundle> one{simulate_affine(p, 0.0, 0.0, generate_noise(r.m, r.mu, {1.0, 0.0625}, 1, 1.0, 0.0))};
  EXPECT_THROW(empirical_char_fn(one, "x", "z", 1.0, {}), ValidationError);
  one.push_back(one.front());
  EXPECT_THROW(empirical_char_fn(one, "x", "z", 0.01, {}), ValidationError);
  EXPECT_NO_THROW(empirical_char_fn(one, "z", "", 0.5, {}));
}

TEST(AffineFormula, PassesOnPresets) {
  const std::vector<double> t_list{0.5, 1.0};
  const std::vector<UPoint> us{{-0.5, 0.0}, {0.0, 1i}, {-1.0, -0.5i}};
  for (const char* name : {"ou", "cir", "deterministic", "jump_affine"}) {
    const Preset pr = presets::by_name(name);
    const auto rep = check_affine_formula(admit(pr.record), pr.x0, pr.z0, t_list, us, small_mc(2000));
    EXPECT_TRUE(rep.pass()) << name << ": " << failures(rep);
    EXPECT_EQ(rep.rows.size(), t_list.size() * us.size() + 1);
  }
}

TEST(AffineFormula, RejectsBadInput) {
  const auto p = admit(presets::ou().record);
  const std::vector<double> t_list{1.0};
  const std::vector<UPoint> bad{{0.5, 0.0}};
  EXPECT_THROW(check_affine_formula(p, 0.0, 0.0, t_list, bad, small_mc(10)), ValidationError);
  const std::vector<UPoint> good{{-0.5, 0.0}};
  const std::vector<double> off{0.3};
  EXPECT_THROW(check_affine_formula(p, 0.0, 0.0, off, good, small_mc(10)), ValidationError);
  EXPECT_THROW(check_affine_formula(p, 0.0, 0.0, t_list, good, small_mc(1)), ValidationError);
}

TEST(Moments, ZeroParametersStayPut) {
  const auto rep = check_moments(admit(ParamRecord{}), 0.7, -0.2, std::vector<double>{0.5, 1.0}, small_mc(50));
  ASSERT_TRUE(rep.pass()) << failures(rep);
  for (const auto& row : rep.rows) {
    if (row.quantity.rfind("E[x] t=", 0) == 0) {
      EXPECT_EQ(row.observed.real(), 0.7);
    } else if (row.quantity.rfind("E[z] t=", 0) == 0) {
      EXPECT_EQ(row.observed.real(), -0.2);
    }
  }
}

TEST(Moments, ConstantImmigration) {
  ParamRecord r;
  r.b1 = 1.0;
  const auto rep = check_moments(admit(r), 0.5, 0.0, std::vector<double>{1.0}, small_mc(50));
  ASSERT_TRUE(rep.pass()) << failures(rep);
  EXPECT_NEAR(rep.rows[0].predicted.real(), 1.5, 1e-15);
  EXPECT_NEAR(rep.rows[0].observed.real(), 1.5, 1e-12);
}

TEST(Moments, MeanReversionAndPresets) {
  ParamRecord r;
  r.beta.m11 = -1.0;
  r.alpha = {0.5, 0.0, 0.0, 0.0};
  const auto rep = check_moments(admit(r), 1.0, 0.0, std::vector<double>{1.0}, small_mc(2000));
  EXPECT_TRUE(rep.pass()) << failures(rep);
  EXPECT_NEAR(rep.rows[0].predicted.real(), std::exp(-1.0), 1e-15);
  for (const char* name : {"jump_affine", "product_exponential"}) {
    const Preset pr = presets::by_name(name);
    const auto rp = check_moments(admit(pr.record), pr.x0, pr.z0, std::vector<double>{0.5, 1.0}, small_mc(2000));
    EXPECT_TRUE(rp.pass()) << name << ": " << failures(rp);
  }
}

TEST(GeneratorClosedForm, LinearFunctionsByHand) {
  const Preset pr = presets::jump_affine();
  const auto p = admit(pr.record);
  const auto& r = pr.record;
  const double x1 = 0.7, x2 = -0.4;
  double m_xi1 = 0.0;
  for (const Atom& a : r.m.atoms()) m_xi1 += a.weight * a.xi.xi1;
  EXPECT_EQ(generator_closed_form(GeneratorModel::Affine, p, 1.0, x1, x2, TestFunction::One), 0.0);
  EXPECT_NEAR(generator_closed_form(GeneratorModel::Affine, p, 1.0, x1, x2, TestFunction::X1),
              r.b1 + r.beta.m11 * x1 + m_xi1, 1e-15);
  EXPECT_NEAR(generator_closed_form(GeneratorModel::Affine, p, 1.0, x1, x2, TestFunction::X2),
              r.b2 + r.beta.m21 * x1 + r.beta.m22 * x2, 1e-15);
  EXPECT_EQ(generator_closed_form(GeneratorModel::Cbi, p, 1.0, x1, x2, TestFunction::X2), 0.0);
}

TEST(GeneratorClosedForm, CatalyticLinearFunctionsByHand) {
  const Preset pr = presets::catalytic();
  const auto p = admit(pr.record);
  const auto& r = pr.record;
  const double x1 = 0.7, x2 = 0.4, l = pr.l;
  double up = 0.0;
  for (const Atom& a : r.m.atoms())
    if (a.xi.xi2 >= 0) up += a.weight * a.xi.xi2;
  EXPECT_NEAR(generator_closed_form(GeneratorModel::Catalytic, p, l, x1, x2, TestFunction::X2),
              r.b2 + r.beta.m21 * x1 * x2 + r.beta.m22 * x2 + up, 1e-15);
  for (TestFunction f : {TestFunction::X1, TestFunction::X1Sq, TestFunction::ExpNegX1})
    EXPECT_NEAR(generator_closed_form(GeneratorModel::Catalytic, p, l, x1, x2, f),
                generator_closed_form(GeneratorModel::Cbi, p, l, x1, 0.0, f), 1e-14)
        << test_function_name(f);
}

TEST(GeneratorClosedForm, CatalyticExponentialWithoutJumps) {
  ParamRecord r = presets::catalytic().record;
  r.m = JumpMeasure::empty();
  r.mu = JumpMeasure::empty();
  const auto p = admit(r);
  const double x1 = 0.9, x2 = 0.6, l = 0.8;
  const double d1 = r.b1 + r.beta.m11 * x1;
  const double d2 = r.b2 + r.beta.m21 * x1 * x2 + r.beta.m22 * x2;
  const cplx sym = r.alpha.m11 * x1 - 2.0i * r.alpha.m12 * x1 * std::sqrt(x2) -
                   (r.alpha.m22 * x1 * x2 + r.a * x2) - d1 + 1i * d2;
  const cplx v = std::exp(-x1 + 1i * x2) * sym;
  EXPECT_NEAR(generator_closed_form(GeneratorModel::Catalytic, p, l, x1, x2, TestFunction::ExpMixedRe), v.real(), 1e-14);
  EXPECT_NEAR(generator_closed_form(GeneratorModel::Catalytic, p, l, x1, x2, TestFunction::ExpMixedIm), v.imag(), 1e-14);
}

TEST(GeneratorClosedForm, ExponentialsMatchTimeDerivativeOfTheTransform) {
  for (const char* name : {"jump_affine", "product_exponential", "cir"}) {
    const auto p = admit(presets::by_name(name).record);
    for (const Point x : {Point{0.5, 0.3}, Point{1.5, -1.0}}) {
      const cplx mix = char_fn_rate(p, x, {-1.0, 1i});
      const cplx neg = char_fn_rate(p, x, {-1.0, 0.0});
      auto g = [&](GeneratorModel m, TestFunction f) {
        return generator_closed_form(m, p, 1.0, x.xi1, x.xi2, f);
      };
      EXPECT_NEAR(g(GeneratorModel::Affine, TestFunction::ExpMixedRe), mix.real(), 1e-5) << name;
      EXPECT_NEAR(g(GeneratorModel::Affine, TestFunction::ExpMixedIm), mix.imag(), 1e-5) << name;
      EXPECT_NEAR(g(GeneratorModel::Affine, TestFunction::ExpNegX1), neg.real(), 1e-5) << name;
      EXPECT_NEAR(g(GeneratorModel::Cbi, TestFunction::ExpNegX1), neg.real(), 1e-5) << name;
      EXPECT_NEAR(g(GeneratorModel::Cbi, TestFunction::ExpMixedRe), neg.real(), 1e-5) << name;
    }
  }
}

TEST(GeneratorClosedForm, QuadraticsMatchSecondMomentRates) {
  // d/dt E[f(X_t)] at 0 for quadratic f from second derivatives of the transform in u.
  const auto p = admit(presets::jump_affine().record);
  const Point x{0.8, 0.2};
  const double h = 1e-2;
  auto mgf = [&](double a, double b, double t) {
    return char_fn(p, x, t, {cplx(0.0, a), cplx(0.0, b)}, 1e-12);
  };
  auto second = [&](double t, int i, int j) {
    auto e = [&](double s1, double s2) {
      const double a = (i == 0 ? s1 : 0.0) + (j == 0 ? s2 : 0.0);
      const double b = (i == 1 ? s1 : 0.0) + (j == 1 ? s2 : 0.0);
      return mgf(a * h, b * h, t);
    };
    // E[X_i X_j] = -d^2/da_i da_j E exp(i <a, X>)
    return -(e(1, 1) - e(1, -1) - e(-1, 1) + e(-1, -1)).real() / (4 * h * h);
  };
  auto rate = [&](int i, int j) {
    const double k = 1e-2;
    auto d = [&](double s) { return (second(s, i, j) - second(0.0, i, j)) / s; };
    return 2.0 * d(k / 2) - d(k);
  };
  auto g = [&](TestFunction f) {
    return generator_closed_form(GeneratorModel::Affine, p, 1.0, x.xi1, x.xi2, f);
  };
  EXPECT_NEAR(g(TestFunction::X1Sq), rate(0, 0), 1e-3);
  EXPECT_NEAR(g(TestFunction::X2Sq), rate(1, 1), 1e-3);
  EXPECT_NEAR(g(TestFunction::X1X2), rate(0, 1), 1e-3);
}

TEST(TestFunctionGradient, MatchesCentralDifferences) {
  const double x1 = 0.6, x2 = -0.3, h = 1e-6;
  for (TestFunction f : kGeneratorCatalog) {
    const auto g = detail::test_function_gradient(f, x1, x2);
    EXPECT_NEAR(g[0], (eval_test_function(f, x1 + h, x2) - eval_test_function(f, x1 - h, x2)) / (2 * h), 1e-8);
    EXPECT_NEAR(g[1], (eval_test_function(f, x1, x2 + h) - eval_test_function(f, x1, x2 - h)) / (2 * h), 1e-8);
  }
}

TEST(Generator, MonteCarloAgreesForAllModels) {
  McSettings mc = small_mc(20000);
  const double delta = 1.0 / 256;
  const auto ja = admit(presets::jump_affine().record);
  const auto rep_a = check_generator(ja, {1.0, 0.5}, kGeneratorCatalog, delta, GeneratorModel::Affine, mc);
  EXPECT_TRUE(rep_a.pass()) << failures(rep_a);
  EXPECT_EQ(rep_a.rows.size(), kGeneratorCatalog.size());
  const auto rep_c = check_generator(ja, {0.6, 0.0}, kGeneratorCatalog, delta, GeneratorModel::Cbi, mc);
  EXPECT_TRUE(rep_c.pass()) << failures(rep_c);
  const Preset cat = presets::catalytic();
  const auto rep_k = check_generator(admit(cat.record), {1.0, 0.5}, kGeneratorCatalog, delta,
                                     GeneratorModel::Catalytic, mc, cat.l);
  EXPECT_TRUE(rep_k.pass()) << failures(rep_k);
}

TEST(Generator, ConstantFunctionHasZeroEstimate) {
  const auto rep = check_generator(admit(presets::jump_affine().record), {1.0, 0.5}, TestFunction::One,
                                   1.0 / 128, GeneratorModel::Affine, small_mc(100));
  EXPECT_EQ(rep.rows[0].observed, cplx(0.0));
  EXPECT_TRUE(rep.pass());
}

TEST(Generator, RejectsBadStates) {
  const auto p = admit(presets::catalytic().record);
  EXPECT_THROW(check_generator(p, {-1.0, 0.0}, TestFunction::X1, 0.01, GeneratorModel::Affine, small_mc(10)),
               ValidationError);
  EXPECT_THROW(check_generator(p, {1.0, -0.5}, TestFunction::X1, 0.01, GeneratorModel::Catalytic, small_mc(10)),
               ValidationError);
}

TEST(Uniqueness, RowsPassOnPresets) {
  for (const char* name : {"cir", "jump_affine"}) {
    const auto rep = uniqueness_experiment(admit(presets::by_name(name).record), 1.0, 2.0, 1.0, small_mc(500), 20);
    EXPECT_TRUE(rep.pass()) << name << ": " << failures(rep);
    ASSERT_GE(rep.rows.size(), 6u);
    EXPECT_EQ(rep.rows[0].kind, RowKind::Exact);
    EXPECT_EQ(rep.rows[0].observed, cplx(0.0));
    EXPECT_EQ(rep.rows[1].observed, cplx(0.0));
  }
}

TEST(Uniqueness, EqualStartsGiveIdenticalPaths) {
  const auto rep = uniqueness_experiment(admit(presets::jump_affine().record), 1.0, 1.0, 1.0, small_mc(100), 5);
  EXPECT_TRUE(rep.pass()) << failures(rep);
  bool found = false;
  for (const auto& row : rep.rows)
    if (row.quantity == "sup |x_b - x_a| (equal inits)") {
      found = true;
      EXPECT_EQ(row.observed, cplx(0.0));
    }
  EXPECT_TRUE(found);
}

TEST(Uniqueness, DeterministicDifferenceDecaysExactly) {
  ParamRecord r;
  r.b1 = 1.0;
  r.beta.m11 = -1.0;
  const auto rep = uniqueness_experiment(admit(r), 0.5, 1.5, 1.0, small_mc(10, 1.0 / 1024), 3);
  ASSERT_TRUE(rep.pass()) << failures(rep);
  const auto& last = rep.rows.back();
  EXPECT_NEAR(last.observed.real(), std::pow(1.0 - 1.0 / 1024, 1024), 1e-12);
  EXPECT_NEAR(last.predicted.real(), std::exp(1.0), 1e-15);
}

TEST(Uniqueness, ZeroBranchingRateIsDriftOnly) {
  ParamRecord r;
  r.b1 = 0.3;
  const auto rep = uniqueness_experiment(admit(r), 0.0, 2.0, 1.0, small_mc(10), 3);
  ASSERT_TRUE(rep.pass()) << failures(rep);
  EXPECT_NEAR(rep.rows.back().observed.real(), 2.0, 1e-13);
}

TEST(Fluctuation, ZeroCaseHasNoError) {
  ParamRecord r;
  r.alpha = {0.5, 0.0, 0.0, 0.0};
  r.b1 = 0.5;
  r.beta = {-1.0, 0.0, 0.0, -1.0};
  const std::vector<double> ladder{4, 16, 64};
  const auto rep = fluctuation_experiment(admit(r), std::nullopt, ladder, {1.0, 1.0, {0.0, 0.0}, false},
                                          small_mc(20));
  EXPECT_TRUE(rep.pass()) << failures(rep);
  for (std::size_t j = 0; j < ladder.size(); ++j) {
    EXPECT_EQ(rep.rows[j].kind, RowKind::Info);
    EXPECT_EQ(rep.rows[j].observed, cplx(0.0));
  }
}

TEST(Fluctuation, DeterministicErrorsScaleLikeOneOverTheta) {
  ParamRecord r;
  r.b2 = 1.0;
  r.beta.m22 = -1.0;
  const std::vector<double> ladder{64, 256, 1024};
  const auto rep = fluctuation_experiment(admit(r), std::nullopt, ladder, {1.0, 0.0, {0.0, 0.0}, true},
                                          small_mc(4, 1.0 / 256));
  EXPECT_TRUE(rep.pass()) << failures(rep);
  EXPECT_EQ(rep.rows.size(), 3u + 2u + 1u + 2u);
  EXPECT_NEAR(rep.rows[1].observed.real() / rep.rows[0].observed.real(), 0.25, 0.025);
}

TEST(Fluctuation, NoisyLadderDecreases) {
  const Preset pr = presets::catalytic();
  const std::vector<double> ladder{4, 16, 64, 256};
  const auto rep = fluctuation_experiment(admit(pr.record), std::nullopt, ladder,
                                          {1.0, pr.x0, {0.2, 0.0}, false}, small_mc(200));
  EXPECT_TRUE(rep.pass()) << failures(rep);
}

TEST(Fluctuation, SymmetricSplitPair) {
  ParamRecord r = presets::catalytic().record;
  r.m = JumpMeasure::empty();
  r.mu = JumpMeasure::empty();
  r.a = 0.0;
  r.alpha = {0.4, 0.0, 0.0, 0.0};
  r.b2 = 0.0;
  r.beta.m21 = 0.0;
  ReactantSplit split;
  split.b2_plus = split.b2_minus = 0.3;
  const std::vector<double> ladder{2, 8};
  const auto rep = fluctuation_experiment(admit(r), split, ladder, {1.0, 1.0, {0.1, 0.1}, false}, small_mc(10));
  EXPECT_EQ(rep.name, "fluctuation_pair");
  EXPECT_TRUE(rep.pass()) << failures(rep);
  EXPECT_NEAR(rep.rows[0].observed.real(), 0.0, 1e-14);
}

TEST(Fluctuation, RejectsBadInput) {
  ParamRecord r = presets::catalytic().record;
  const std::vector<double> ladder{4, 16};
  const FluctuationOptions opt;
  EXPECT_THROW(fluctuation_experiment(admit(r), std::nullopt, std::vector<double>{4}, opt, small_mc(2)),
               ValidationError);
  EXPECT_THROW(fluctuation_experiment(admit(r), std::nullopt, std::vector<double>{16, 4}, opt, small_mc(2)),
               ValidationError);
  EXPECT_THROW(fluctuation_experiment(admit(r), std::nullopt, std::vector<double>{0.5, 4}, opt, small_mc(2)),
               ValidationError);
  ReactantSplit bad;
  EXPECT_THROW(fluctuation_experiment(admit(r), bad, ladder, opt, small_mc(2)), ValidationError);
  r.beta.m22 = 0.0;
  EXPECT_THROW(fluctuation_experiment(admit(r), std::nullopt, ladder, opt, small_mc(2)), ValidationError);
}

TEST(Semigroup, HoldsOnPresets) {
  const std::vector<UPoint> us{{-0.5, 0.0}, {-1.0 + 1i, 0.5i}, {0.0, 2i}};
  for (const Preset& pr : presets::all()) {
    const auto rep = sc_semigroup_check(admit(pr.record), 0.4, 0.8, us);
    EXPECT_TRUE(rep.pass()) << pr.name << ": " << failures(rep);
    EXPECT_EQ(rep.rows.size(), 3 * us.size());
  }
}

TEST(Semigroup, DegenerateArguments) {
  const auto p = admit(presets::cir().record);
  const std::vector<UPoint> us{{}, {-1.0, 0.0}};
  const auto rep = sc_semigroup_check(p, 0.0, 1.0, us);
  EXPECT_TRUE(rep.pass()) << failures(rep);
  EXPECT_EQ(rep.rows[0].observed, cplx(0.0));
}

TEST(Reports, JsonIsDeterministicAndWorkerInvariant) {
  const Preset pr = presets::jump_affine();
  const auto p = admit(pr.record);
  const std::vector<double> t_list{0.5};
  McSettings mc = small_mc(300);
  const auto a = check_moments(p, pr.x0, pr.z0, t_list, mc);
  const auto b = check_moments(p, pr.x0, pr.z0, t_list, mc);
  mc.workers = 3;
  const auto c = check_moments(p, pr.x0, pr.z0, t_list, mc);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_EQ(a.to_json().dump(), c.to_json().dump());
  EXPECT_EQ(a.inputs_digest, c.inputs_digest);
  EXPECT_EQ(a.to_json().dump().find("runtime"), std::string::npos);
}

TEST(Reports, DigestTracksInputs) {
  const auto p = admit(presets::jump_affine().record);
  const std::vector<double> t_list{0.5};
  McSettings mc = small_mc(20);
  const auto a = check_moments(p, 1.0, 0.5, t_list, mc);
  mc.seed = 12;
  EXPECT_NE(a.inputs_digest, check_moments(p, 1.0, 0.5, t_list, mc).inputs_digest);
  EXPECT_NE(a.inputs_digest, check_moments(p, 1.1, 0.5, t_list, small_mc(20)).inputs_digest);
}

TEST(Reports, RowKinds) {
  ExperimentReport rep;
  EXPECT_TRUE(rep.add("w", 1.0, 1.05, 0.1, RowKind::Within).pass);
  EXPECT_FALSE(rep.add("w2", 1.0, 1.2, 0.1, RowKind::Within).pass);
  EXPECT_TRUE(rep.add("a", 1.0, 0.5, 0.0, RowKind::AtMost).pass);
  EXPECT_FALSE(rep.add("a2", 1.0, 1.5, 0.0, RowKind::AtMost).pass);
  EXPECT_TRUE(rep.add("e", 2.0, 2.0, 0.0, RowKind::Exact).pass);
  EXPECT_TRUE(rep.add("i", 0.0, 99.0, 0.0, RowKind::Info).pass);
  EXPECT_FALSE(rep.pass());
  EXPECT_EQ(rep.first_failure()->quantity, "w2");
}
