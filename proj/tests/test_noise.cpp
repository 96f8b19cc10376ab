#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "anderson/error.hpp"
#include "anderson/noise.hpp"
#include "anderson/paraproducts.hpp"
#include "anderson/stats.hpp"
#include "oracles.hpp"

using namespace anderson;

namespace {

constexpr double kPi = std::numbers::pi;

using oracle::b_quadrature;

}  // namespace

TEST(Sample, Deterministic) {
  const BoxDomain box = BoxDomain::square(2.0);
  NoiseDraw a = sample(box, {6, 6}, 99);
  NoiseDraw b = sample(box, {6, 6}, 99);
  EXPECT_EQ(a.z, b.z);
  NoiseDraw c = sample(box, {6, 6}, 100);
  EXPECT_NE(a.z, c.z);
}

TEST(Sample, NestedAcrossTruncation) {
  const BoxDomain box = BoxDomain::square(2.0);
  NoiseDraw a = sample(box, {4, 5}, 7);
  NoiseDraw b = sample(box, {9, 8}, 7);
  for (int k1 = 0; k1 <= 4; ++k1)
    for (int k2 = 0; k2 <= 5; ++k2) EXPECT_EQ(a.at(k1, k2), b.at(k1, k2));
}

TEST(Sample, RejectsZeroTruncation) {
  EXPECT_THROW(sample(BoxDomain::square(1.0), {0, 3}, 1), ContractError);
}

TEST(Sample, MomentsAcrossSeeds) {
  const BoxDomain box = BoxDomain::square(1.0);
  const int n = 10000;
  std::vector<double> z11, z10, z01, prod;
  for (int s = 0; s < n; ++s) {
    NoiseDraw d = sample(box, {1, 1}, 1000 + s);
    z11.push_back(d.at(1, 1));
    z10.push_back(d.at(1, 0));
    z01.push_back(d.at(0, 1));
    prod.push_back(d.at(1, 0) * d.at(0, 1));
  }
  EXPECT_LE(std::abs(mean(z11)), 4.0 / std::sqrt(n));
  EXPECT_NEAR(variance(z11), 1.0, 3.0 * std::sqrt(2.0 / n));
  EXPECT_LE(std::abs(mean(prod)), 0.05);
  // Gaussianity at 3 sigma.
  EXPECT_LE(std::abs(skewness(z10)), 3.0 * std::sqrt(6.0 / n));
  EXPECT_LE(std::abs(excess_kurtosis(z10)), 3.0 * std::sqrt(24.0 / n));
  EXPECT_LE(std::abs(skewness(z01)), 3.0 * std::sqrt(6.0 / n));
  EXPECT_LE(std::abs(excess_kurtosis(z01)), 3.0 * std::sqrt(24.0 / n));
}

TEST(Profile, Shape) {
  CutoffProfile s = CutoffProfile::smooth();
  EXPECT_EQ(s(0.0, 0.0), 1.0);
  EXPECT_EQ(s(0.3, 0.3), 1.0);
  EXPECT_EQ(s(0.8, 0.7), 0.0);
  for (double r = 0.0; r < 1.2; r += 0.01) {
    EXPECT_GE(s(r, 0.0), 0.0);
    EXPECT_LE(s(r, 0.0), 1.0);
    EXPECT_EQ(s(r, 0.0), s(-r, 0.0));
  }
  CutoffProfile ind = CutoffProfile::indicator();
  EXPECT_EQ(ind(0.99, -0.99), 1.0);
  EXPECT_EQ(ind(1.0, 0.0), 0.0);
  EXPECT_THROW(CutoffProfile::smooth(1.0, 0.5), ContractError);
  EXPECT_THROW(parse_profile("gauss"), ContractError);
}

TEST(Mollify, TinyEpsilonIsIdentity) {
  const BoxDomain box = BoxDomain::square(1.0);
  NoiseDraw d = sample(box, {8, 8}, 3);
  SpectralField xi = mollify(d, 1e-3, CutoffProfile::smooth());
  EXPECT_EQ(xi.truncation(), (Truncation{8, 8}));
  for (std::size_t i = 0; i < d.z.size(); ++i) EXPECT_EQ(xi.coeffs()[i], d.z[i]);
}

TEST(Mollify, IndicatorAtBoxScaleKeepsOnlyConstant) {
  const double L = 3.0;
  NoiseDraw d = sample(BoxDomain::square(L), {5, 5}, 4);
  SpectralField xi = mollify(d, L, CutoffProfile::indicator());
  EXPECT_EQ(xi.truncation(), (Truncation{0, 0}));
  EXPECT_EQ(xi.at(0, 0), d.at(0, 0));
}

TEST(Mollify, NormNondecreasingAsEpsilonShrinks) {
  const BoxDomain box = BoxDomain::square(2.0);
  NoiseDraw d = sample(box, {40, 40}, 5);
  double prev = 0.0;
  for (double eps : {1.0, 0.5, 0.3, 0.2, 0.1, 0.05}) {
    const double n = mollify(d, eps, CutoffProfile::indicator()).norm();
    EXPECT_GE(n, prev);
    prev = n;
  }
}

TEST(Renorm, IndicatorAtBoxScale) {
  for (double L : {1.0, 2.5})
    EXPECT_NEAR(renorm_constant(L, L, CutoffProfile::indicator()), 1.0 / (4 * L * L), 1e-15);
}

TEST(Renorm, MatchesDirectLatticeSum) {
  // Brute force over the full square lattice without symmetry folding.
  const double L = 1.5, eps = 0.2;
  const CutoffProfile tau = CutoffProfile::smooth();
  double s = 0.0;
  for (int k1 = -20; k1 <= 20; ++k1)
    for (int k2 = -20; k2 <= 20; ++k2) {
      const double t = tau(eps * k1 / L, eps * k2 / L);
      s += t * t / (1.0 + kPi * kPi * (k1 * k1 + k2 * k2) / (L * L));
    }
  EXPECT_NEAR(renorm_constant(eps, L, tau), s / (4 * L * L), 1e-13);
}

TEST(Renorm, LogarithmicSlope) {
  for (CutoffProfile tau : {CutoffProfile::smooth(), CutoffProfile::indicator()}) {
    std::vector<double> x, y;
    for (int p = 4; p <= 10; ++p) {
      const double eps = std::ldexp(1.0, -p);
      x.push_back(std::log(1.0 / eps));
      y.push_back(renorm_constant(eps, 1.0, tau));
    }
    const double slope = linear_fit(x, y).slope;
    EXPECT_NEAR(slope / (1.0 / (2.0 * kPi)), 1.0, 0.02) << tau.name();
  }
}

TEST(Renorm, BoxDependenceFades) {
  const double eps = std::ldexp(1.0, -8);
  const CutoffProfile tau = CutoffProfile::smooth();
  auto d = [&](double L) { return renorm_constant(eps, L, tau) - log_renorm_constant(eps); };
  EXPECT_LT(std::abs(d(4) - d(8)), std::abs(d(1) - d(2)));
  // Remaining box term C_L after removing the profile constant.
  const double ct = profile_constant(tau);
  EXPECT_LT(std::abs(d(8) - ct), std::abs(d(1) - ct));
  EXPECT_LT(std::abs(d(8) - ct), 0.02);
}

TEST(Renorm, ProfileConstantAgainstDirectIntegral) {
  // (1/4) int tau(eps y)^2 / (1 + pi^2 |y|^2) dy - (1/2pi) log(1/eps) on a fine polar grid.
  for (CutoffProfile tau : {CutoffProfile::smooth(), CutoffProfile::indicator()}) {
    const double eps = 1e-4;
    const int nr = 400000, nt = 720;
    const double rmax = 2.0 / eps;
    double s = 0.0;
    for (int i = 0; i < nr; ++i) {
      // Logarithmic radial grid.
      const double a = std::log(1e-6), b = std::log(rmax);
      const double u = a + (b - a) * (i + 0.5) / nr;
      const double r = std::exp(u);
      const double dr = r * (b - a) / nr;
      double ang = 0.0;
      if (tau.kind == ProfileKind::SmoothBump) {
        const double t = tau(eps * r, 0.0);
        ang = 2 * kPi * t * t;
      } else {
        for (int j = 0; j < nt; ++j) {
          const double th = 2 * kPi * (j + 0.5) / nt;
          const double t = tau(eps * r * std::cos(th), eps * r * std::sin(th));
          ang += t * t;
        }
        ang *= 2 * kPi / nt;
      }
      s += ang * r * dr / (1.0 + kPi * kPi * r * r);
    }
    const double direct = 0.25 * s - log_renorm_constant(eps);
    EXPECT_NEAR(profile_constant(tau), direct, 2e-3) << tau.name();
  }
}

TEST(Expectation, CornerValueIsFourC) {
  for (CutoffProfile tau : {CutoffProfile::smooth(), CutoffProfile::indicator()})
    for (double L : {1.0, 2.0}) {
      const double eps = 0.1;
      const BoxDomain box = BoxDomain::square(L);
      SpectralField E = expectation_field(eps, L, tau, mollifier_truncation(box, eps, tau));
      EXPECT_NEAR(evaluate(E, {0.0, 0.0}), 4.0 * renorm_constant(eps, L, tau), 1e-12);
      // Spatial mean: each squared orthonormal mode averages to 1/L^2, so every
      // lattice point of N0^2 counts once (no corner weights).
      const Truncation n = mollifier_truncation(box, eps, tau);
      double mean_direct = 0.0;
      for (int k1 = 0; k1 <= n[0]; ++k1)
        for (int k2 = 0; k2 <= n[1]; ++k2) {
          const auto f = frequency({k1, k2}, box);
          const double t = tau(eps * f[0], eps * f[1]);
          mean_direct += t * t * resolvent_symbol(f[0], f[1]) / (L * L);
        }
      EXPECT_NEAR(E.at(0, 0) / L, mean_direct, 1e-12);
      EXPECT_GT(mean_direct, renorm_constant(eps, L, tau));
    }
}

TEST(Expectation, PointwiseDefinition) {
  const double L = 1.3, eps = 0.2;
  const BoxDomain box({0.4, -1.0}, {L, 0.8});
  const CutoffProfile tau = CutoffProfile::smooth();
  const Truncation n = mollifier_truncation(box, eps, tau);
  SpectralField E = expectation_field(box, eps, tau, n);
  for (Point x : {Point{0.5, -0.9}, Point{1.2, -0.5}}) {
    double direct = 0.0;
    for (int k1 = 0; k1 <= n[0]; ++k1)
      for (int k2 = 0; k2 <= n[1]; ++k2) {
        const auto f = frequency({k1, k2}, box);
        const double t = tau(eps * f[0], eps * f[1]);
        const double e = basis_value({k1, k2}, kNeumann, box, x);
        direct += t * t * resolvent_symbol(f[0], f[1]) * e * e;
      }
    EXPECT_NEAR(evaluate(E, x), direct, 1e-12);
  }
}

TEST(Expectation, MonteCarloAtProbePoints) {
  const double L = 1.0, eps = 0.25;
  const BoxDomain box = BoxDomain::square(L);
  const CutoffProfile tau = CutoffProfile::smooth();
  const DyadicPartition P = make_partition(4);
  const Truncation n = mollifier_truncation(box, eps, tau);
  SpectralField E = expectation_field(box, eps, tau, n);
  std::vector<Point> probes;
  for (double a : {0.0, 0.37, 0.8})
    for (double b : {0.1, 0.5, 1.0}) probes.push_back({a, b});
  std::vector<std::vector<double>> vals(probes.size());
  for (int s = 0; s < 4000; ++s) {
    SpectralField xi = mollify(sample(box, n, 500 + s), eps, tau);
    SpectralField r = resonance(xi, resolvent(xi), P);
    for (std::size_t p = 0; p < probes.size(); ++p) vals[p].push_back(evaluate(r, probes[p]));
  }
  for (std::size_t p = 0; p < probes.size(); ++p)
    EXPECT_LE(std::abs(mean(vals[p]) - evaluate(E, probes[p])), 3.0 * standard_error(vals[p]));
}

TEST(Enhance, ReproducibleAndRecentred) {
  const double L = 1.0, eps = 0.25;
  const BoxDomain box = BoxDomain::square(L);
  const CutoffProfile tau = CutoffProfile::smooth();
  const DyadicPartition P = make_partition(4);
  const Truncation n = mollifier_truncation(box, eps, tau);
  EnhancedNoise a = enhance(sample(box, n, 77), eps, tau, P);
  EnhancedNoise b = enhance(sample(box, n, 77), eps, tau, P);
  EXPECT_EQ(std::vector<double>(a.Xi.coeffs().begin(), a.Xi.coeffs().end()),
            std::vector<double>(b.Xi.coeffs().begin(), b.Xi.coeffs().end()));
  EXPECT_EQ(a.c_subtracted, renorm_constant(eps, L, tau));

  const int draws = 10000;
  const std::size_t nc = a.Xi.coeffs().size();
  std::vector<std::vector<double>> c(nc);
  for (int s = 0; s < draws; ++s) {
    EnhancedNoise e = enhance(sample(box, n, 20000 + s), eps, tau, P);
    for (std::size_t i = 0; i < nc; ++i) c[i].push_back(e.Xi.coeffs()[i]);
  }
  for (std::size_t i = 0; i < nc; ++i) {
    if (variance(c[i]) == 0.0) continue;
    EXPECT_LE(std::abs(mean(c[i])), 3.0 * standard_error(c[i])) << "coefficient " << i;
  }
}

TEST(Enhance, RenormalizationModes) {
  const double L = 2.0, eps = 0.3;
  const BoxDomain box = BoxDomain::square(L);
  const CutoffProfile tau = CutoffProfile::smooth();
  const DyadicPartition P = make_partition(4);
  NoiseDraw d = sample(box, {10, 10}, 5);
  EnhancedNoise full = enhance(d, eps, tau, P, Renormalization::FullExpectation);
  EnhancedNoise cst = enhance(d, eps, tau, P, Renormalization::ConstantC);
  EnhancedNoise lg = enhance(d, eps, tau, P, Renormalization::LogConstant);
  EXPECT_NEAR(cst.Xi.at(0, 0) - lg.Xi.at(0, 0),
              (log_renorm_constant(eps) - renorm_constant(eps, L, tau)) * L, 1e-12);
  SpectralField diff = cst.Xi - full.Xi;
  SpectralField e = expectation_field(box, eps, tau, full.xi.truncation());
  e.set(0, 0, e.at(0, 0) - renorm_constant(eps, L, tau) * L);
  EXPECT_LE((diff - e).max_abs(), 1e-12);
  EXPECT_EQ(parse_renormalization("log"), Renormalization::LogConstant);
  EXPECT_THROW(parse_renormalization("x"), ContractError);
}

TEST(Enhance, ProfileIndependenceAsEpsilonShrinks) {
  // Mean H^{-1/2} distance between the smooth and indicator enhanced noises decreases with eps.
  const double L = 1.0;
  const BoxDomain box = BoxDomain::square(L);
  const DyadicPartition P = make_partition(6);
  const CutoffProfile t1 = CutoffProfile::smooth(), t2 = CutoffProfile::indicator();
  std::vector<double> means;
  for (double eps : {1.0 / 4, 1.0 / 8, 1.0 / 16}) {
    const Truncation n = max_truncation(mollifier_truncation(box, eps, t1), mollifier_truncation(box, eps, t2));
    std::vector<double> dist;
    for (int s = 0; s < 40; ++s) {
      NoiseDraw d = sample(box, n, 900 + s);
      SpectralField diff = enhance(d, eps, t1, P).Xi - enhance(d, eps, t2, P).Xi;
      dist.push_back(besov_norm(diff, {-0.5, 2.0, 2.0}, P));
    }
    means.push_back(mean(dist));
  }
  EXPECT_LT(means[1], means[0]);
  EXPECT_LT(means[2], means[1]);
}

TEST(Enhance, BlockVarianceGrowthBound) {
  const double L = 1.0, eps = 1.0 / 24;
  const BoxDomain box = BoxDomain::square(L);
  const CutoffProfile tau = CutoffProfile::smooth();
  const DyadicPartition P = make_partition(6);
  const Truncation n = mollifier_truncation(box, eps, tau);
  const Point x{0.43, 0.61};
  const int top = 5;
  std::vector<std::vector<double>> v(top + 2);
  for (int s = 0; s < 600; ++s) {
    EnhancedNoise e = enhance(sample(box, n, 3000 + s), eps, tau, P);
    for (int i = -1; i <= top; ++i) v[i + 1].push_back(evaluate(apply_block(e.Xi, i, P), x));
  }
  const double gamma = 0.5;
  double c = 0.0;
  for (int i = -1; i <= 1; ++i) c = std::max(c, variance(v[i + 1]) / std::pow(2.0, gamma * i));
  for (int i = 2; i <= top; ++i) {
    const double var = variance(v[i + 1]);
    // Sampling error of a variance estimate with 600 draws.
    const double se = var * std::sqrt(2.0 / 599.0);
    EXPECT_LE(var - 3.0 * se, c * std::pow(2.0, gamma * i)) << "level " << i;
  }
}

TEST(Chaos, BlockDifferenceVarianceMatchesMonteCarlo) {
  const double L = 1.0, eps = 0.25, delta = 0.15;
  const BoxDomain box = BoxDomain::square(L);
  const CutoffProfile tau = CutoffProfile::smooth();
  const DyadicPartition P = make_partition(5);
  const Point x{0.3, 0.55};
  const int level = 2;
  const double exact = block_difference_variance(box, level, eps, delta, tau, x, P);
  const Truncation n = mollifier_truncation(box, delta, tau);
  std::vector<double> sq;
  for (int s = 0; s < 4000; ++s) {
    NoiseDraw d = sample(box, n, 40000 + s);
    SpectralField diff = mollify(d, eps, tau).resized(n) - mollify(d, delta, tau);
    const double v = evaluate(apply_block(diff, level, P), x);
    sq.push_back(v * v);
  }
  EXPECT_GT(exact, 0.0);
  EXPECT_LE(std::abs(mean(sq) - exact), 3.0 * standard_error(sq));
}

TEST(Chaos, DecaySlopeInEpsilonGap) {
  const double L = 1.0, eps = 0.1;
  const BoxDomain box = BoxDomain::square(L);
  const CutoffProfile tau = CutoffProfile::smooth();
  const DyadicPartition P = make_partition(8);
  const Point x{0.5, 0.5};
  const double gamma = 0.5;
  for (int level = 2; level <= 4; ++level) {
    std::vector<double> lx, ly;
    for (double gap : {0.02, 0.01, 0.005, 0.0025}) {
      const double v = block_difference_variance(box, level, eps, eps - gap, tau, x, P);
      if (v <= 0.0) continue;
      lx.push_back(std::log(gap));
      ly.push_back(std::log(v / std::pow(2.0, (2 + 2 * gamma) * level)));
    }
    if (lx.size() < 2) continue;
    EXPECT_GE(linear_fit(lx, ly).slope, gamma) << "level " << level;
  }
}

TEST(BCoeff, SameBoxIsIdentity) {
  for (int m = 0; m < 12; ++m)
    for (int l = 0; l < 12; ++l) EXPECT_NEAR(b_coeff(m, l, 0.0, 2.0, 2.0), m == l ? 1.0 : 0.0, 1e-14);
}

TEST(BCoeff, MatchesQuadrature) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> md(0, 40), ld(0, 20);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const double L = 1.0 + 7.0 * u(rng);
    const double r = (0.1 + 0.9 * u(rng)) * L;
    const double z = u(rng) * (L - r);
    const int m = md(rng), l = ld(rng);
    worst = std::max(worst, std::abs(b_coeff(m, l, z, r, L) - b_quadrature(m, l, z, r, L, 2000)));
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(BCoeff, RejectsOffsetOutsideParent) {
  EXPECT_THROW(b_coeff(1, 1, 1.5, 1.0, 2.0), ContractError);
  EXPECT_THROW(b_coeff(1, 1, 0.0, 3.0, 2.0), ContractError);
}

TEST(Restrict, SameBoxIsIdentity) {
  const BoxDomain box = BoxDomain::square(2.0);
  NoiseDraw d = sample(box, {10, 10}, 8);
  SpectralField xi = mollify(d, 0.3, CutoffProfile::indicator());
  SpectralField th = restrict(d, 0.3, CutoffProfile::indicator(), box, xi.truncation());
  EXPECT_LE((th - xi).max_abs(), 1e-13);
}

TEST(Restrict, ContractionAndPointwiseAgreement) {
  const BoxDomain parent = BoxDomain::square(4.0);
  const BoxDomain sub({1.0, 0.5}, {2.0, 3.0});
  NoiseDraw d = sample(parent, {20, 20}, 9);
  const double eps = 0.5;
  SpectralField xi = mollify(d, eps, CutoffProfile::smooth());
  SpectralField th = restrict(d, eps, CutoffProfile::smooth(), sub, {160, 240});
  EXPECT_LE(th.norm(), xi.norm());
  for (Point x : {Point{2.0, 2.0}, Point{1.7, 1.1}, Point{2.6, 3.1}})
    EXPECT_NEAR(evaluate(th, x), evaluate(xi, x), 2e-2 * std::max(1.0, std::abs(evaluate(xi, x))));
  EXPECT_THROW(restrict(d, eps, CutoffProfile::smooth(), BoxDomain({3.0, 0.0}, {2.0, 2.0}), {4, 4}),
               ContractError);
}

TEST(Restrict, RectangularParentAndSubBox) {
  const BoxDomain parent({1.0, 2.0}, {3.0, 1.5});
  const BoxDomain sub({2.0, 2.5}, {1.5, 1.0});
  SpectralField v = SpectralField::mode(parent, kNeumann, {4, 4}, {2, 3});
  SpectralField th = restrict_field(v, sub, {3, 2});
  for (int k1 = 0; k1 <= 3; ++k1)
    for (int k2 = 0; k2 <= 2; ++k2)
      EXPECT_NEAR(th.at(k1, k2),
                  b_coeff(2, k1, 1.0, 1.5, 3.0) * b_coeff(3, k2, 0.5, 1.0, 1.5), 1e-14);
}

TEST(Dump, RoundTrip) {
  NoiseDraw d = sample(BoxDomain({0.5, 1.0}, {2.0, 3.0}), {5, 7}, 1234);
  std::stringstream buf;
  write_draw(buf, d, CutoffProfile::indicator());
  CutoffProfile tau;
  NoiseDraw back = read_draw(buf, &tau);
  EXPECT_EQ(back.box, d.box);
  EXPECT_EQ(back.n, d.n);
  EXPECT_EQ(back.seed, d.seed);
  EXPECT_EQ(back.z, d.z);
  EXPECT_EQ(tau.kind, ProfileKind::IndicatorSquare);
  std::stringstream junk("garbage");
  EXPECT_THROW(read_draw(junk), ContractError);
}
