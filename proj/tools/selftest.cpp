#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "anderson/hamiltonian.hpp"
#include "anderson/paraproducts.hpp"
#include "anderson/stats.hpp"
#include "cli.hpp"

namespace anderson::cli {

namespace {

constexpr double kPi = std::numbers::pi;

std::string show(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

SpectralField random_neumann(const BoxDomain& box, Truncation n, std::mt19937_64& rng, double amp) {
  std::normal_distribution<double> g;
  SpectralField v(box, kNeumann, n);
  for (double& c : v.data()) c = amp * g(rng);
  return v;
}

CheckResult laplacian_spectrum() {
  double worst = 0.0;
  for (double L : {1.0, 2.0, 4.0}) {
    const BoxDomain box = BoxDomain::square(L);
    const EigenResult e = eigenvalues(GalerkinOperator(SpectralField(box, kNeumann, {0, 0}), {16, 16}), 3);
    const double want[3] = {-2 * kPi * kPi / (L * L), -5 * kPi * kPi / (L * L), -5 * kPi * kPi / (L * L)};
    for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(e.values[i] - want[i]));
  }
  return {"zero potential spectrum", worst <= 1e-8, "max error " + show(worst)};
}

CheckResult scaling_identity() {
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const SpectralField v = random_neumann(BoxDomain::square(2.0), {4, 4}, rng, 3.0);
    for (double beta : {2.0, 0.5}) {
      const EigenResult a = eigenvalues(GalerkinOperator(v, {12, 12}), 3);
      const EigenResult b = eigenvalues(GalerkinOperator(dilate(v, beta), {12, 12}), 3);
      for (int i = 0; i < 3; ++i)
        worst = std::max(worst, std::abs(a.values[i] - b.values[i] / (beta * beta)) / std::abs(a.values[i]));
    }
  }
  return {"dilation scaling identity", worst <= 1e-8, "max relative error " + show(worst)};
}

CheckResult shift_equivariance() {
  std::mt19937_64 rng(2);
  const SpectralField v = random_neumann(BoxDomain::square(1.5), {4, 4}, rng, 2.0);
  const EigenResult a = eigenvalues(GalerkinOperator(v, {10, 10}), 4);
  const EigenResult b = eigenvalues(GalerkinOperator(v, {10, 10}, 3.25), 4);
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(a.values[i] - 3.25 - b.values[i]));
  return {"constant shift equivariance", worst <= 1e-10, "max error " + show(worst)};
}

CheckResult bony_exactness() {
  std::mt19937_64 rng(3);
  const DyadicPartition P = make_partition(4);
  const BoxDomain box = BoxDomain::square(2.0);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    SpectralField u = random_neumann(box, {16, 16}, rng, 1.0);
    SpectralField v = random_neumann(box, {16, 16}, rng, 1.0);
    worst = std::max(worst, (bony_split(u, v, P).sum() - pointwise_product(u, v)).max_abs());
  }
  return {"paraproduct decomposition", worst <= 1e-10, "max coefficient error " + show(worst)};
}

CheckResult partition_of_unity() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 7.0);
  const ImsPartition p(2.0, 0.5);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) worst = std::max(worst, std::abs(p.sum_of_squares({u(rng), u(rng)}) - 1.0));
  return {"squared partition of unity", worst <= 1e-12, "max error " + show(worst)};
}

CheckResult renorm_slope() {
  std::vector<double> x, y;
  for (int p = 4; p <= 10; ++p) {
    const double eps = std::ldexp(1.0, -p);
    x.push_back(std::log(1.0 / eps));
    y.push_back(renorm_constant(eps, 1.0, CutoffProfile::smooth()));
  }
  const double ratio = linear_fit(x, y).slope * 2 * kPi;
  return {"log divergence of the renormalization constant", std::abs(ratio - 1.0) <= 0.02,
          "slope / (1/2pi) = " + show(ratio)};
}

CheckResult corner_expectation() {
  const double eps = 0.1, L = 1.0;
  const CutoffProfile tau = CutoffProfile::smooth();
  const BoxDomain box = BoxDomain::square(L);
  const SpectralField E = expectation_field(eps, L, tau, mollifier_truncation(box, eps, tau));
  const double err = std::abs(evaluate(E, {0.0, 0.0}) - 4 * renorm_constant(eps, L, tau));
  return {"expectation field at the corner", err <= 1e-12, "error " + show(err)};
}

CheckResult coupled_monotonicity() {
  const BoxDomain parent = BoxDomain::square(2.0), sub({0.5, 0.25}, {1.0, 1.0});
  const CutoffProfile tau = CutoffProfile::smooth();
  int bad = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const NoiseDraw d = sample(parent, mollifier_truncation(parent, 0.5, tau), 40 + s);
    const SpectralField v = noise_potential(d, 0.5, tau, 1.0);
    const double big = top_eigenvalue(GalerkinOperator(v, truncation_for(parent, 8)));
    const double small = top_eigenvalue(sub_operator(v, sub, truncation_for(sub, 8)));
    if (small > big + 1e-4) ++bad;
  }
  return {"domain monotonicity under coupling", bad == 0, std::to_string(bad) + " violations in 10 draws"};
}

CheckResult reproducibility(int workers) {
  ExperimentConfig c;
  c.ladder = {1, 2};
  c.eps = 0.5;
  c.modes_per_unit = 6;
  c.replicas = 6;
  const StudyRecord a = growth_study(c);
  c.workers = std::max(2, workers);
  const StudyRecord b = growth_study(c);
  bool same = a.rows.size() == b.rows.size();
  for (std::size_t i = 0; same && i < a.rows.size(); ++i) same = a.rows[i].lambda == b.rows[i].lambda;
  return {"bit-exact reruns across worker counts", same, same ? "identical" : "rows differ"};
}

CheckResult chi_ascent() {
  const ChiLevel lv = chi_at(10.0, {10, 10}, 200, 1e-10);
  bool monotone = true;
  for (std::size_t i = 1; i < lv.trace.size(); ++i) monotone = monotone && lv.trace[i] >= lv.trace[i - 1];
  return {"alternating maximisation ascent", monotone,
          std::to_string(lv.trace.size()) + " iterations, lambda " + show(lv.trace.back())};
}

CheckResult b_identity() {
  double worst = 0.0;
  for (int m = 0; m < 10; ++m)
    for (int l = 0; l < 10; ++l) worst = std::max(worst, std::abs(b_coeff(m, l, 0.0, 1.5, 1.5) - (m == l)));
  return {"restriction coefficients on the same box", worst <= 1e-13, "max error " + show(worst)};
}

}  // namespace

std::vector<CheckResult> selftest(int workers) {
  const std::vector<std::function<CheckResult()>> checks{
      laplacian_spectrum, scaling_identity, shift_equivariance, bony_exactness,
      partition_of_unity, renorm_slope,     corner_expectation, coupled_monotonicity,
      [workers] { return reproducibility(workers); }, chi_ascent, b_identity};
  std::vector<CheckResult> out;
  for (const auto& c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      out.push_back({"check raised", false, e.what()});
    }
  }
  return out;
}

}  // namespace anderson::cli
