#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "anderson/error.hpp"
#include "anderson/experiments.hpp"
#include "oracles.hpp"

using namespace anderson;

namespace {

constexpr double kPi = std::numbers::pi;

double ground_state_mass() {
  const oracle::GroundState g = oracle::ground_state();
  // The shot follows Q until it peels off where Q is already tiny.
  EXPECT_GT(g.reach, 10.0);
  EXPECT_NEAR(g.q0, 2.2062, 1e-3);
  return g.mass;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.ladder = {1, 2, 4};
  c.eps = 0.5;
  c.modes_per_unit = 8;
  c.replicas = 20;
  return c;
}

}  // namespace

TEST(Config, ItemsRoundTrip) {
  ExperimentConfig c;
  c.ladder = {1, 3, 9};
  c.eps = 0.1;
  c.seed = 77;
  c.profile = CutoffProfile::indicator();
  c.renorm = Renormalization::LogConstant;
  c.record_timing = true;
  c.solver.tol = 1e-9;
  ExperimentConfig d;
  for (const auto& [k, v] : config_items(c)) set_config_value(d, k, v);
  EXPECT_EQ(config_items(c), config_items(d));
  EXPECT_EQ(d.ladder, c.ladder);
  EXPECT_EQ(d.seed, 77u);
  EXPECT_EQ(d.renorm, Renormalization::LogConstant);
  EXPECT_EQ(d.solver.tol, 1e-9);
}

TEST(Config, DoublesSurviveTextExactly) {
  ExperimentConfig c, d;
  c.eps = 0.1 + 0.2;
  c.beta = std::nextafter(1.0, 2.0);
  for (const auto& [k, v] : config_items(c)) set_config_value(d, k, v);
  EXPECT_EQ(d.eps, c.eps);
  EXPECT_EQ(d.beta, c.beta);
}

TEST(Config, ErrorsNameTheKey) {
  ExperimentConfig c;
  auto message = [&](const std::string& k, const std::string& v) {
    try {
      set_config_value(c, k, v);
    } catch (const ContractError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("eps", "abc").find("eps"), std::string::npos);
  EXPECT_NE(message("replicas", "0").find("replicas"), std::string::npos);
  EXPECT_NE(message("replicas", "2.5").find("replicas"), std::string::npos);
  EXPECT_NE(message("profile", "box").find("profile"), std::string::npos);
  EXPECT_NE(message("bogus", "1").find("bogus"), std::string::npos);
  EXPECT_NE(message("record_timing", "yes").find("record_timing"), std::string::npos);
  EXPECT_NE(message("ladder", "").find("ladder"), std::string::npos);
}

TEST(Config, Validation) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.ladder = {2, 1};
  EXPECT_THROW(c.validate(), ContractError);
  c = {};
  c.replicas = 0;
  EXPECT_THROW(c.validate(), ContractError);
  c = {};
  c.a = 3;
  EXPECT_THROW(c.validate(), ContractError);
  c = {};
  c.ladder = {1, 1};
  EXPECT_THROW(growth_study(c), ContractError);
}

TEST(Parallel, RunsEveryIndexOnce) {
  std::vector<int> hits(97, 0);
  parallel_for(97, 4, [&](int i) { hits[i]++; });
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

TEST(Parallel, PropagatesFailure) {
  EXPECT_THROW(parallel_for(50, 3, [](int i) {
                 if (i == 17) throw NumericError("boom");
               }),
               NumericError);
  EXPECT_THROW(parallel_for(5, 1, [](int) { throw std::runtime_error("x"); }), std::runtime_error);
}

TEST(Growth, ZeroNoiseMatchesLaplacian) {
  ExperimentConfig c = small_config();
  c.beta = 0.0;
  c.replicas = 3;
  const StudyRecord r = growth_study(c);
  EXPECT_EQ(r.rows.size(), 9u);
  for (double L : c.ladder) {
    EXPECT_NEAR(r.get("mean_" + std::to_string(static_cast<int>(L))), -2 * kPi * kPi / (L * L), 1e-9);
    if (L > 1)
      EXPECT_NEAR(r.get("ratio_" + std::to_string(static_cast<int>(L))),
                  -2 * kPi * kPi / (L * L * std::log(L)), 1e-9);
  }
  EXPECT_EQ(r.get("monotone_violations"), 0.0);
}

TEST(Growth, PathwiseMonotone) {
  ExperimentConfig c = small_config();
  c.eps = 0.25;
  c.modes_per_unit = 16;
  c.replicas = 100;
  const StudyRecord r = growth_study(c);
  EXPECT_EQ(r.get("monotone_violations"), 0.0);
  const auto l1 = r.lambdas(1), l2 = r.lambdas(2), l4 = r.lambdas(4);
  ASSERT_EQ(l4.size(), 100u);
  for (int i = 0; i < 100; ++i) {
    EXPECT_LE(l1[i], l2[i] + 1e-4);
    EXPECT_LE(l2[i], l4[i] + 1e-4);
  }
  EXPECT_GT(r.get("trend_slope"), 0.0);
}

TEST(Growth, ReproducibleAcrossWorkers) {
  ExperimentConfig c = small_config();
  c.levels = 2;
  const StudyRecord a = growth_study(c);
  c.workers = 3;
  const StudyRecord b = growth_study(c);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].lambda, b.rows[i].lambda);
    EXPECT_EQ(a.rows[i].seed, b.rows[i].seed);
    EXPECT_EQ(a.rows[i].n, b.rows[i].n);
    EXPECT_EQ(a.rows[i].wall_ms, 0.0);
  }
  c.seed = 2;
  EXPECT_NE(growth_study(c).rows[0].lambda, a.rows[0].lambda);
}

TEST(Scaling, ZeroNoiseIsExact) {
  ExperimentConfig c;
  c.beta = 0.0;
  c.L = 4;
  c.modes_per_unit = 4;
  c.replicas = 5;
  c.levels = 3;
  const StudyRecord r = scaling_law_test(c);
  EXPECT_EQ(r.get("shift"), 0.0);
  const auto a = r.lambdas(4, 3), b = r.lambdas(2, 3);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  EXPECT_NEAR(a[0], -5 * kPi * kPi / 16, 1e-10);
}

TEST(Scaling, UnitDilationPValuesSpread) {
  ExperimentConfig c;
  c.alpha = 1.0;
  c.L = 2;
  c.eps = 0.5;
  c.modes_per_unit = 8;
  c.replicas = 100;
  std::vector<double> p;
  for (int s = 0; s < 20; ++s) {
    c.seed = 1000 + s;
    const StudyRecord r = scaling_law_test(c);
    EXPECT_EQ(r.get("shift"), 0.0);
    p.push_back(r.get("ks_p"));
  }
  // Twenty draws of a (near) uniform p: mean within 3 sd of 1/2, few small values.
  EXPECT_NEAR(mean(p), 0.5, 3 * std::sqrt(1.0 / 12 / 20));
  EXPECT_LE(std::count_if(p.begin(), p.end(), [](double x) { return x < 0.05; }), 4);
  EXPECT_GT(*std::max_element(p.begin(), p.end()) - *std::min_element(p.begin(), p.end()), 0.3);
}

TEST(Scaling, ConstantModeShiftIsExactDifference) {
  ExperimentConfig c;
  c.renorm = Renormalization::ConstantC;
  c.L = 8;
  c.eps = 0.25;
  c.beta = 1.5;
  c.modes_per_unit = 1;
  c.replicas = 2;
  const StudyRecord r = scaling_law_test(c);
  const double want = 1.5 * 1.5 *
                      (renorm_constant(BoxDomain::square(4), 0.125, c.profile) -
                       renorm_constant(BoxDomain::square(8), 0.25, c.profile));
  EXPECT_DOUBLE_EQ(r.get("shift"), want);
  // On large boxes the box-dependent part cancels and the log(2) / 2 pi shift remains.
  EXPECT_NEAR(r.get("shift") / (1.5 * 1.5), std::log(2.0) / (2 * kPi), 2e-3);
  // On small boxes it does not.
  c.L = 2;
  c.eps = 0.5;
  EXPECT_GT(scaling_law_test(c).get("shift") / (1.5 * 1.5), 1.5 * std::log(2.0) / (2 * kPi));
}

TEST(Scaling, LogModeShiftIsExactInLaw) {
  // With only log(1/eps) / 2 pi subtracted the identity holds exactly in law.
  ExperimentConfig c;
  c.renorm = Renormalization::LogConstant;
  c.L = 2;
  c.eps = 0.5;
  c.modes_per_unit = 8;
  c.replicas = 200;
  const StudyRecord r = scaling_law_test(c);
  EXPECT_DOUBLE_EQ(r.get("shift"), std::log(2.0) / (2 * kPi));
  EXPECT_GE(r.get("ks_p"), 0.01);
}

TEST(Tails, FrequencyBasics) {
  const std::vector<double> x{3, 1, 4, 1, 5, 9, 2, 6};
  EXPECT_EQ(upper_tail_frequency(x, 0.5), 1.0);
  EXPECT_EQ(upper_tail_frequency(x, 1.0), 1.0);
  EXPECT_EQ(upper_tail_frequency(x, 9.0), 1.0 / 8);
  EXPECT_EQ(upper_tail_frequency(x, 10.0), 0.0);
  double prev = 1.0;
  for (double t = 0; t < 11; t += 0.25) {
    const double f = upper_tail_frequency(x, t);
    EXPECT_LE(f, prev);
    prev = f;
  }
  EXPECT_THROW(upper_tail_frequency(std::vector<double>{}, 0.0), ContractError);
}

TEST(Tails, RatePositiveWithInterval) {
  ExperimentConfig c;
  c.L = 2;
  c.eps = 0.5;
  c.modes_per_unit = 8;
  c.replicas = 10000;
  c.bootstrap = 500;
  const StudyRecord r = tail_study(c);
  EXPECT_EQ(r.rows.size(), 10000u);
  EXPECT_GT(r.get("rate"), 0.0);
  EXPECT_GT(r.get("rate_lo"), 0.0);
  EXPECT_LE(r.get("rate_lo"), r.get("rate"));
  EXPECT_GE(r.get("rate_hi"), r.get("rate"));
  const auto lam = r.lambdas(2);
  EXPECT_EQ(upper_tail_frequency(lam, r.get("min") - 1), 1.0);
  // Empirical tail decreases across the sample range.
  double prev = 1.0;
  for (int k = 0; k <= 50; ++k) {
    const double x = r.get("min") + (r.get("max") - r.get("min")) * k / 50.0;
    const double f = upper_tail_frequency(lam, x);
    EXPECT_LE(f, prev);
    prev = f;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(SmallNoise, ZeroIntensityIsLaplacian) {
  ExperimentConfig c;
  c.L = 1;
  c.replicas = 3;
  c.levels = 3;
  c.noise_levels = {0.0};
  const StudyRecord r = small_noise_study(c);
  const auto l1 = r.lambdas(1, 1), l2 = r.lambdas(1, 2), l3 = r.lambdas(1, 3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(l1[i], -2 * kPi * kPi, 1e-9);
    EXPECT_NEAR(l2[i], -5 * kPi * kPi, 1e-9);
    EXPECT_NEAR(l3[i], -5 * kPi * kPi, 1e-9);
  }
}

TEST(SmallNoise, ConcentratesLinearly) {
  ExperimentConfig c;
  c.L = 1;
  c.replicas = 200;
  const StudyRecord r = small_noise_study(c);
  EXPECT_LT(std::abs(r.get("z_0.001")), 3.0);
  EXPECT_GE(r.get("var_slope"), 0.8);
  EXPECT_LE(r.get("var_slope"), 1.2);
  EXPECT_LT(r.get("var_0.001"), r.get("var_0.01"));
}

TEST(Chi, SingleModeClosedForm) {
  for (double L : {1.0, 3.0, 10.0}) {
    const auto psi = SpectralField::mode(BoxDomain::square(L), kDirichlet, {6, 6}, {1, 1});
    EXPECT_NEAR(chi_objective(psi), 1.5 / L - 2 * kPi * kPi / (L * L), 1e-12);
    EXPECT_NEAR(chi_objective(2.5 * psi, 2.0), 3.0 / L - 2 * kPi * kPi / (L * L), 1e-12);
  }
  EXPECT_THROW(chi_objective(SpectralField(BoxDomain::square(1), kDirichlet, {2, 2})), ContractError);
}

TEST(Chi, AscentAndFixedPoint) {
  const double L = 20;
  const ChiLevel lv = chi_at(L, {20, 20}, 300, 1e-11);
  for (std::size_t i = 1; i < lv.trace.size(); ++i) EXPECT_GE(lv.trace[i], lv.trace[i - 1] - 1e-12);
  // Any single trial bounds the supremum from below.
  EXPECT_GE(lv.trace.back(), 1.5 / L - 2 * kPi * kPi / (L * L));
  // At the fixed point lambda_1 equals J of its own eigenfunction.
  EXPECT_NEAR(chi_objective(lv.psi), lv.trace.back(), 1e-8);
  EXPECT_DOUBLE_EQ(lv.value, 4 * lv.trace.back());
}

TEST(Chi, AgreesWithShootingOracle) {
  const double oracle = 2.0 / ground_state_mass();
  EXPECT_NEAR(oracle, 0.1709, 5e-4);
  const ChiResult r = chi_estimate({10, 20, 40}, 1.0, 300, 1e-11);
  ASSERT_EQ(r.levels.size(), 3u);
  EXPECT_LE(r.levels[0].value, r.levels[1].value);
  EXPECT_LE(r.levels[1].value, r.levels[2].value);
  EXPECT_LT(std::abs(r.best() - oracle) / oracle, 0.01);
  EXPECT_LE(r.best(), oracle * 1.01);
}

TEST(Chi, BudgetExhaustionThrows) {
  EXPECT_THROW(chi_at(20, {20, 20}, 2, 1e-14), ConvergenceError);
  EXPECT_THROW(chi_at(20, {20, 20}, 10, 1e-11, -1.0), ContractError);
}

TEST(Rate, NonincreasingInBoxSize) {
  double prev = INFINITY;
  for (double L : {1.0, 2.0, 4.0}) {
    const RateResult r = rate_infimum_estimate(L, 1, 1.0, 8, 200, 1e-10);
    ASSERT_TRUE(r.attained);
    EXPECT_LE(r.primal, prev);
    prev = r.primal;
    // Constant potential a + 2 pi^2 / L^2 is feasible.
    const double c = 1.0 + 2 * kPi * kPi / (L * L);
    EXPECT_LE(r.primal, 0.5 * c * c * L * L + 1e-9);
    for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1] + 1e-9);
  }
}

TEST(Rate, PotentialMeetsTarget) {
  const RateResult r = rate_infimum_estimate(2, 1, 1.0, 8, 200, 1e-10);
  ASSERT_TRUE(r.potential.has_value());
  EXPECT_NEAR(0.5 * r.potential->norm() * r.potential->norm(), r.primal, 1e-9 * r.primal);
  const double lam = top_eigenvalue(GalerkinOperator(*r.potential, {16, 16}));
  EXPECT_NEAR(lam, 1.0, 1e-8);
}

TEST(Rate, SmallTargetKeepsPositiveCost) {
  // Lifting the Dirichlet ground energy -2 pi^2 / L^2 to 0 already costs a positive amount.
  const double L = 2;
  const RateResult r0 = rate_infimum_estimate(L, 1, 1e-6, 8, 200, 1e-10);
  const RateResult r1 = rate_infimum_estimate(L, 1, 0.1, 8, 200, 1e-10);
  EXPECT_GT(r0.primal, 1.0);
  EXPECT_LT(r0.primal, r1.primal);
  const double c = 2 * kPi * kPi / (L * L);
  EXPECT_LE(r0.primal, 0.5 * c * c * L * L);
}

TEST(Rate, DualRelation) {
  const RateResult r = rate_infimum_estimate(20, 1, 1.0, 3, 200, 1e-10);
  ASSERT_TRUE(r.attained);
  EXPECT_TRUE(r.relation_applicable);
  EXPECT_GT(r.dual_objective, 0.0);
  EXPECT_LE(r.primal, r.dual_bound + 1e-8);
  // The optimiser approaches the ground state mass as the box grows.
  EXPECT_NEAR(r.primal, ground_state_mass(), 0.02 * r.primal);
}

TEST(Rate, InfeasibleIsReported) {
  const RateResult r = rate_infimum_estimate(1, 1, 1e7, 2, 50, 1e-10);
  EXPECT_FALSE(r.attained);
  EXPECT_THROW(rate_infimum_estimate(1, 0, 1.0, 2, 50, 1e-10), ContractError);
}

TEST(BoxBounds, StudyHasNoViolations) {
  ExperimentConfig c;
  c.L = 4;
  c.eps = 0.5;
  c.modes_per_unit = 8;
  c.replicas = 10;
  c.levels = 2;
  const StudyRecord r = box_bounds_study(c);
  EXPECT_EQ(r.get("draws_with_violation"), 0.0);
  EXPECT_EQ(r.rows.size(), 20u);
  EXPECT_GT(r.get("phi_sup"), 0.0);
}

TEST(Scaling, SharedDrawGivesPathwiseIdentity) {
  // Dilation maps mode k of Q_L to mode k of Q_{L/alpha}, so one coefficient draw serves both.
  const auto tau = CutoffProfile::smooth();
  const double L = 4, al = 2, eps = 0.25, beta = 1.3;
  const BoxDomain big = BoxDomain::square(L), small = BoxDomain::square(L / al);
  const Truncation n = truncation_for(big, 4);
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const NoiseDraw d1 = sample(big, mollifier_truncation(big, eps, tau), seed);
    const NoiseDraw d2 = sample(small, mollifier_truncation(small, eps / al, tau), seed);
    const auto v1 = noise_potential(d1, eps, tau, beta, Renormalization::LogConstant);
    const auto v2 = noise_potential(d2, eps / al, tau, al * beta, Renormalization::LogConstant);
    const EigenResult e1 = eigenvalues(GalerkinOperator(v1, n), 3);
    const EigenResult e2 = eigenvalues(GalerkinOperator(v2, n), 3);
    for (int k = 0; k < 3; ++k)
      EXPECT_NEAR(e1.values[k], e2.values[k] / (al * al) + beta * beta * std::log(al) / (2 * kPi),
                  1e-9 * std::abs(e1.values[k]));
  }
}
