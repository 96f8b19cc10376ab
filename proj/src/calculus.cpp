#include "anderson/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "anderson/error.hpp"

namespace anderson {

namespace {

constexpr double kInner = 0.75;
constexpr double kOuter = 4.0 / 3.0;

double bump_exp(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

}  // namespace

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = bump_exp(t);
  return a / (a + bump_exp(1.0 - t));
}

double smooth_step_derivative(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = bump_exp(t), b = bump_exp(1.0 - t);
  return a * b * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t))) / ((a + b) * (a + b));
}

DyadicPartition::DyadicPartition(int max_level) : max_level_(max_level) {
  if (max_level < 1) throw ContractError("partition needs max level >= 1");
}

double DyadicPartition::low(double r) const {
  if (r <= kInner) return 1.0;
  if (r >= kOuter) return 0.0;
  return smooth_step((kOuter - r) / (kOuter - kInner));
}

double DyadicPartition::rho(int j, double r) const {
  if (j < -1) throw ContractError("block level must be >= -1");
  if (j == -1) return low(r);
  const double s = std::ldexp(r, -j);
  return low(0.5 * s) - low(s);
}

double DyadicPartition::rho(int j, double y1, double y2) const {
  return rho(j, std::hypot(y1, y2));
}

double DyadicPartition::sum(double y1, double y2) const {
  double s = 0.0;
  for (int j = -1; j <= max_level_; ++j) s += rho(j, y1, y2);
  return s;
}

double DyadicPartition::sum_of_squares(double y1, double y2) const {
  double s = 0.0;
  for (int j = -1; j <= max_level_; ++j) {
    const double v = rho(j, y1, y2);
    s += v * v;
  }
  return s;
}

int DyadicPartition::top_level(double r) const {
  int j = -1;
  while (kInner * std::ldexp(1.0, j + 1) < r) ++j;
  return j;
}

int DyadicPartition::top_level(const SpectralField& u) const { return top_level(max_frequency(u)); }

DyadicPartition make_partition(int max_level) { return DyadicPartition(max_level); }

std::array<double, 2> frequency(ModeIndex k, const BoxDomain& box) {
  return {k[0] / box.side(0), k[1] / box.side(1)};
}

double max_frequency(const SpectralField& u) {
  return std::hypot(u.n(0) / u.box().side(0), u.n(1) / u.box().side(1));
}

SpectralField multiplier(const SpectralField& u, const Symbol& sigma) {
  SpectralField out = u;
  auto c = out.data();
  const double s1 = u.box().side(0), s2 = u.box().side(1);
  for (int k1 = 0; k1 <= u.n(0); ++k1)
    for (int k2 = 0; k2 <= u.n(1); ++k2) {
      const double v = sigma(k1 / s1, k2 / s2);
      if (!std::isfinite(v)) throw NumericError("multiplier symbol is not finite");
      c[u.index(k1, k2)] *= v;
    }
  return out;
}

SpectralField apply_block(const SpectralField& u, int j, const DyadicPartition& P) {
  if (j < -1) throw ContractError("block level must be >= -1");
  return multiplier(u, [&](double x1, double x2) { return P.rho(j, x1, x2); });
}

std::vector<SpectralField> blocks(const SpectralField& u, const DyadicPartition& P) {
  std::vector<SpectralField> out;
  const int top = P.top_level(u);
  for (int j = -1; j <= top; ++j) out.push_back(apply_block(u, j, P));
  return out;
}

SpectralField laplacian(const SpectralField& u) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  return multiplier(u, [](double x1, double x2) { return -pi2 * (x1 * x1 + x2 * x2); });
}

SpectralField resolvent(const SpectralField& u, double a) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  return multiplier(u, [a](double x1, double x2) { return 1.0 / (a + pi2 * (x1 * x1 + x2 * x2)); });
}

double resolvent_symbol(double x1, double x2) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  return 1.0 / (1.0 + pi2 * (x1 * x1 + x2 * x2));
}

double grid_lp_norm(const SpectralField& u, double p) {
  if (!(p >= 1.0)) throw ContractError("L^p exponent must be >= 1");
  const GridField g = inverse_transform(u, default_grid(u.truncation()));
  const auto s = g.samples();
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : s) m = std::max(m, std::abs(v));
    return m;
  }
  double acc = 0.0;
  for (double v : s) acc += std::pow(std::abs(v), p);
  acc *= g.box().area() / static_cast<double>(s.size());
  return std::pow(acc, 1.0 / p);
}

std::vector<double> besov_sequence(const SpectralField& u, const BesovSpec& spec,
                                   const DyadicPartition& P) {
  if (spec.parity && *spec.parity != u.parity())
    throw ContractError("Besov parity does not match the field");
  // The low-frequency block carries weight 1 so the norm is monotone in alpha.
  std::vector<double> seq;
  const int top = P.top_level(u);
  for (int j = -1; j <= top; ++j)
    seq.push_back(std::pow(2.0, std::max(j, 0) * spec.alpha) *
                  grid_lp_norm(apply_block(u, j, P), spec.p));
  return seq;
}

double besov_norm(const SpectralField& u, const BesovSpec& spec, const DyadicPartition& P) {
  if (!(spec.q >= 1.0)) throw ContractError("l^q exponent must be >= 1");
  const std::vector<double> seq = besov_sequence(u, spec, P);
  if (std::isinf(spec.q)) return *std::max_element(seq.begin(), seq.end());
  double acc = 0.0;
  for (double v : seq) acc += std::pow(v, spec.q);
  return std::pow(acc, 1.0 / spec.q);
}

double sobolev_norm(const SpectralField& u, double alpha) {
  double acc = 0.0;
  const double s1 = u.box().side(0), s2 = u.box().side(1);
  for (int k1 = 0; k1 <= u.n(0); ++k1)
    for (int k2 = 0; k2 <= u.n(1); ++k2) {
      const double c = u.at(k1, k2);
      const double f = (k1 / s1) * (k1 / s1) + (k2 / s2) * (k2 / s2);
      acc += std::pow(1.0 + f, alpha) * c * c;
    }
  return std::sqrt(acc);
}

}  // namespace anderson
