#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

#include "anderson/error.hpp"
#include "anderson/geometry.hpp"

namespace anderson {

namespace {

using PlanKey = std::tuple<int, int, int, int>;

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// Plans are created once per (shape, kinds) and kept for the process lifetime.
fftw_plan cached_plan(int m1, int m2, fftw_r2r_kind k1, fftw_r2r_kind k2) {
  static std::map<PlanKey, fftw_plan> plans;
  const PlanKey key{m1, m2, static_cast<int>(k1), static_cast<int>(k2)};
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  const std::size_t n = static_cast<std::size_t>(m1) * static_cast<std::size_t>(m2);
  double* in = fftw_alloc_real(n);
  double* out = fftw_alloc_real(n);
  fftw_plan p = fftw_plan_r2r_2d(m1, m2, in, out, k1, k2, FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT);
  fftw_free(in);
  fftw_free(out);
  if (p == nullptr) throw NumericError("FFTW planning failed");
  plans.emplace(key, p);
  return p;
}

void check_sampling(Truncation n, GridSize m) {
  for (int i = 0; i < 2; ++i)
    if (m[i] < n[i] + 1)
      throw AliasingError("grid of " + std::to_string(m[i]) + " points cannot resolve truncation " +
                          std::to_string(n[i]) + " on axis " + std::to_string(i + 1));
}

// Storage offset of mode k in the transform array.
inline int slot(int k, Parity p) { return p == Parity::Odd ? k - 1 : k; }

}  // namespace

SpectralField forward_transform(const GridField& g, ParityPair parity, Truncation n) {
  const GridSize m = g.size();
  check_sampling(n, m);
  const BoxDomain& box = g.box();
  std::vector<double> y(static_cast<std::size_t>(m[0]) * m[1]);
  fftw_plan p = cached_plan(m[0], m[1], parity[0] == Parity::Odd ? FFTW_RODFT10 : FFTW_REDFT10,
                            parity[1] == Parity::Odd ? FFTW_RODFT10 : FFTW_REDFT10);
  fftw_execute_r2r(p, const_cast<double*>(g.samples().data()), y.data());

  std::array<std::vector<double>, 2> f;
  for (int i = 0; i < 2; ++i) {
    const double s = box.side(i);
    const double base = std::sqrt(2.0 / s) * (s / m[i]) * 0.5;
    f[i].assign(n[i] + 1, base);
    if (parity[i] == Parity::Odd)
      f[i][0] = 0.0;
    else
      f[i][0] = base * std::numbers::sqrt2 / 2.0;
  }
  SpectralField u(box, parity, n);
  auto c = u.data();
  for (int k1 = 0; k1 <= n[0]; ++k1) {
    if (f[0][k1] == 0.0) continue;
    const std::size_t row = static_cast<std::size_t>(slot(k1, parity[0])) * m[1];
    for (int k2 = 0; k2 <= n[1]; ++k2) {
      if (f[1][k2] == 0.0) continue;
      c[u.index(k1, k2)] = f[0][k1] * f[1][k2] * y[row + slot(k2, parity[1])];
    }
  }
  return u;
}

GridField inverse_transform(const SpectralField& u, GridSize m) {
  const Truncation n = u.truncation();
  check_sampling(n, m);
  const BoxDomain& box = u.box();
  const ParityPair parity = u.parity();
  std::array<std::vector<double>, 2> f;
  for (int i = 0; i < 2; ++i) {
    const double a = std::sqrt(2.0 / box.side(i));
    f[i].assign(n[i] + 1, 0.5 * a);
    f[i][0] = (parity[i] == Parity::Odd) ? 0.0 : a * std::numbers::sqrt2 / 2.0;
  }
  std::vector<double> x(static_cast<std::size_t>(m[0]) * m[1], 0.0);
  for (int k1 = 0; k1 <= n[0]; ++k1) {
    if (f[0][k1] == 0.0) continue;
    const std::size_t row = static_cast<std::size_t>(slot(k1, parity[0])) * m[1];
    for (int k2 = 0; k2 <= n[1]; ++k2) {
      if (f[1][k2] == 0.0) continue;
      x[row + slot(k2, parity[1])] = f[0][k1] * f[1][k2] * u.at(k1, k2);
    }
  }
  GridField g(box, m);
  fftw_plan p = cached_plan(m[0], m[1], parity[0] == Parity::Odd ? FFTW_RODFT01 : FFTW_REDFT01,
                            parity[1] == Parity::Odd ? FFTW_RODFT01 : FFTW_REDFT01);
  fftw_execute_r2r(p, x.data(), g.samples().data());
  return g;
}

}  // namespace anderson
