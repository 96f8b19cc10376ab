#include "anderson/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "anderson/error.hpp"

namespace anderson {

namespace {

constexpr double kPi = std::numbers::pi;

void require_same_frame(const SpectralField& a, const SpectralField& b, const char* op) {
  if (!(a.box() == b.box())) throw ContractError(std::string(op) + ": box mismatch");
  if (a.parity() != b.parity()) throw ContractError(std::string(op) + ": parity mismatch");
}

}  // namespace

BoxDomain::BoxDomain(std::array<double, 2> origin, std::array<double, 2> sides)
    : origin_(origin), sides_(sides) {
  for (int i = 0; i < 2; ++i) {
    if (!(sides[i] > 0.0) || !std::isfinite(sides[i]))
      throw ContractError("box side must be positive and finite");
    if (!std::isfinite(origin[i])) throw ContractError("box origin must be finite");
  }
}

BoxDomain BoxDomain::square(double side, std::array<double, 2> origin) {
  return BoxDomain(origin, {side, side});
}

bool BoxDomain::contains(Point x, double tol) const {
  const double p[2] = {x.x1, x.x2};
  for (int i = 0; i < 2; ++i) {
    const double t = sides_[i] * tol;
    if (p[i] < origin_[i] - t || p[i] > origin_[i] + sides_[i] + t) return false;
  }
  return true;
}

bool BoxDomain::contains(const BoxDomain& other, double tol) const {
  for (int i = 0; i < 2; ++i) {
    const double t = sides_[i] * tol;
    if (other.origin_[i] < origin_[i] - t) return false;
    if (other.origin_[i] + other.sides_[i] > origin_[i] + sides_[i] + t) return false;
  }
  return true;
}

ParityPair product_parity(ParityPair a, ParityPair b) {
  ParityPair out{};
  for (int i = 0; i < 2; ++i) out[i] = (a[i] == b[i]) ? Parity::Even : Parity::Odd;
  return out;
}

Truncation max_truncation(Truncation a, Truncation b) {
  return {std::max(a[0], b[0]), std::max(a[1], b[1])};
}

SpectralField::SpectralField(BoxDomain box, ParityPair parity, Truncation n)
    : box_(box), parity_(parity), n_(n) {
  if (n[0] < 0 || n[1] < 0) throw ContractError("truncation must be non-negative");
  coeffs_.assign(static_cast<std::size_t>(n[0] + 1) * static_cast<std::size_t>(n[1] + 1), 0.0);
}

SpectralField::SpectralField(BoxDomain box, ParityPair parity, Truncation n,
                             std::vector<double> coeffs)
    : SpectralField(box, parity, n) {
  if (coeffs.size() != coeffs_.size())
    throw ContractError("coefficient array does not match truncation");
  coeffs_ = std::move(coeffs);
  for (int k1 = 0; k1 <= n_[0]; ++k1) {
    for (int k2 = 0; k2 <= n_[1]; ++k2) {
      const double v = coeffs_[index(k1, k2)];
      if (!std::isfinite(v)) throw NumericError("non-finite coefficient");
      const bool zero_row = (parity_[0] == Parity::Odd && k1 == 0) ||
                            (parity_[1] == Parity::Odd && k2 == 0);
      if (zero_row && v != 0.0)
        throw InvalidIndexError("non-zero coefficient at k_i = 0 on a sine axis");
    }
  }
}

SpectralField SpectralField::mode(BoxDomain box, ParityPair parity, Truncation n, ModeIndex k,
                                  double value) {
  SpectralField f(box, parity, n);
  f.set(k[0], k[1], value);
  return f;
}

void SpectralField::check_index(int k1, int k2) const {
  if (k1 < 0 || k2 < 0 || k1 > n_[0] || k2 > n_[1])
    throw InvalidIndexError("mode index outside truncation");
}

double SpectralField::at(int k1, int k2) const {
  check_index(k1, k2);
  return coeffs_[index(k1, k2)];
}

double SpectralField::get(int k1, int k2) const {
  if (k1 < 0 || k2 < 0 || k1 > n_[0] || k2 > n_[1]) return 0.0;
  return coeffs_[index(k1, k2)];
}

void SpectralField::set(int k1, int k2, double value) {
  check_index(k1, k2);
  const bool zero_row =
      (parity_[0] == Parity::Odd && k1 == 0) || (parity_[1] == Parity::Odd && k2 == 0);
  if (zero_row && value != 0.0)
    throw InvalidIndexError("k_i = 0 is not a sine mode");
  coeffs_[index(k1, k2)] = value;
}

SpectralField SpectralField::resized(Truncation n) const {
  SpectralField out(box_, parity_, n);
  const int m1 = std::min(n[0], n_[0]);
  const int m2 = std::min(n[1], n_[1]);
  for (int k1 = 0; k1 <= m1; ++k1)
    for (int k2 = 0; k2 <= m2; ++k2) out.coeffs_[out.index(k1, k2)] = coeffs_[index(k1, k2)];
  return out;
}

double SpectralField::norm() const {
  double s = 0.0;
  for (double c : coeffs_) s += c * c;
  return std::sqrt(s);
}

double SpectralField::max_abs() const {
  double m = 0.0;
  for (double c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  require_same_frame(*this, other, "add");
  if (other.n_[0] > n_[0] || other.n_[1] > n_[1]) *this = resized(max_truncation(n_, other.n_));
  for (int k1 = 0; k1 <= other.n_[0]; ++k1)
    for (int k2 = 0; k2 <= other.n_[1]; ++k2) coeffs_[index(k1, k2)] += other.at(k1, k2);
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  require_same_frame(*this, other, "subtract");
  if (other.n_[0] > n_[0] || other.n_[1] > n_[1]) *this = resized(max_truncation(n_, other.n_));
  for (int k1 = 0; k1 <= other.n_[0]; ++k1)
    for (int k2 = 0; k2 <= other.n_[1]; ++k2) coeffs_[index(k1, k2)] -= other.at(k1, k2);
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (double& c : coeffs_) c *= s;
  return *this;
}

SpectralField operator+(const SpectralField& a, const SpectralField& b) {
  SpectralField out = a;
  out += b;
  return out;
}

SpectralField operator-(const SpectralField& a, const SpectralField& b) {
  SpectralField out = a;
  out -= b;
  return out;
}

SpectralField operator*(double s, const SpectralField& a) {
  SpectralField out = a;
  out *= s;
  return out;
}

GridField::GridField(BoxDomain box, GridSize m) : box_(box), m_(m) {
  if (m[0] < 1 || m[1] < 1) throw ContractError("grid size must be positive");
  samples_.assign(static_cast<std::size_t>(m[0]) * static_cast<std::size_t>(m[1]), 0.0);
}

GridField::GridField(BoxDomain box, GridSize m, std::vector<double> samples) : GridField(box, m) {
  if (samples.size() != samples_.size()) throw ContractError("sample count does not match grid");
  samples_ = std::move(samples);
}

Point GridField::node(int j1, int j2) const {
  return {box_.origin()[0] + (j1 + 0.5) * box_.side(0) / m_[0],
          box_.origin()[1] + (j2 + 0.5) * box_.side(1) / m_[1]};
}

double GridField::integral() const {
  double s = 0.0;
  for (double v : samples_) s += v;
  return s * box_.area() / (static_cast<double>(m_[0]) * m_[1]);
}

GridField sample_function(const BoxDomain& box, GridSize m, const std::function<double(Point)>& f) {
  GridField g(box, m);
  for (int j1 = 0; j1 < m[0]; ++j1)
    for (int j2 = 0; j2 < m[1]; ++j2) g(j1, j2) = f(g.node(j1, j2));
  return g;
}

double basis_value_1d(int k, Parity parity, double side, double t) {
  if (k < 0) throw InvalidIndexError("negative mode index");
  const double a = std::sqrt(2.0 / side);
  if (parity == Parity::Odd) {
    if (k == 0) throw InvalidIndexError("k = 0 on a sine axis");
    return a * std::sin(kPi * k * t / side);
  }
  const double nu = (k == 0) ? std::numbers::sqrt2 / 2.0 : 1.0;
  return nu * a * std::cos(kPi * k * t / side);
}

double basis_value(ModeIndex k, ParityPair parity, const BoxDomain& box, Point x) {
  if (!box.contains(x)) throw ContractError("evaluation point outside the box");
  return basis_value_1d(k[0], parity[0], box.side(0), x.x1 - box.origin()[0]) *
         basis_value_1d(k[1], parity[1], box.side(1), x.x2 - box.origin()[1]);
}

double evaluate(const SpectralField& u, Point x) {
  const BoxDomain& box = u.box();
  if (!box.contains(x)) throw ContractError("evaluation point outside the box");
  std::vector<double> b1(u.n(0) + 1, 0.0), b2(u.n(1) + 1, 0.0);
  for (int k = 0; k <= u.n(0); ++k)
    if (!(u.parity()[0] == Parity::Odd && k == 0))
      b1[k] = basis_value_1d(k, u.parity()[0], box.side(0), x.x1 - box.origin()[0]);
  for (int k = 0; k <= u.n(1); ++k)
    if (!(u.parity()[1] == Parity::Odd && k == 0))
      b2[k] = basis_value_1d(k, u.parity()[1], box.side(1), x.x2 - box.origin()[1]);
  double s = 0.0;
  for (int k1 = 0; k1 <= u.n(0); ++k1) {
    double row = 0.0;
    for (int k2 = 0; k2 <= u.n(1); ++k2) row += u.at(k1, k2) * b2[k2];
    s += row * b1[k1];
  }
  return s;
}

GridSize default_grid(Truncation n) {
  return {std::max(2 * n[0], n[0] + 1), std::max(2 * n[1], n[1] + 1)};
}

int fft_friendly_size(int n) {
  if (n <= 1) return 1;
  for (int m = n;; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

double inner_product(const SpectralField& u, const SpectralField& v) {
  require_same_frame(u, v, "inner_product");
  const int m1 = std::min(u.n(0), v.n(0));
  const int m2 = std::min(u.n(1), v.n(1));
  double s = 0.0;
  for (int k1 = 0; k1 <= m1; ++k1)
    for (int k2 = 0; k2 <= m2; ++k2) s += u.at(k1, k2) * v.at(k1, k2);
  return s;
}

double gram_1d(int k, Parity pk, int l, Parity pl, double side) {
  (void)side;  // orthonormal factors make the pairing scale-free
  if (pk == pl) return k == l ? 1.0 : 0.0;
  // Arrange as cosine index m against sine index s.
  const int m = (pk == Parity::Even) ? k : l;
  const int s = (pk == Parity::Even) ? l : k;
  if (s == m || ((s + m) % 2 == 0)) return 0.0;
  const double nu = (m == 0) ? std::numbers::sqrt2 / 2.0 : 1.0;
  return nu * (2.0 / kPi) * 2.0 * s / (static_cast<double>(s) * s - static_cast<double>(m) * m);
}

double cross_inner_product(const SpectralField& u, const SpectralField& v) {
  if (!(u.box() == v.box())) throw ContractError("cross_inner_product: box mismatch");
  const double s1 = u.box().side(0), s2 = u.box().side(1);
  const auto pu = u.parity(), pv = v.parity();
  // t(k1, l2) = sum_{l1} G1(k1,l1) v(l1,l2)
  std::vector<double> t(static_cast<std::size_t>(u.n(0) + 1) * (v.n(1) + 1), 0.0);
  for (int k1 = 0; k1 <= u.n(0); ++k1)
    for (int l1 = 0; l1 <= v.n(0); ++l1) {
      const double g = gram_1d(k1, pu[0], l1, pv[0], s1);
      if (g == 0.0) continue;
      for (int l2 = 0; l2 <= v.n(1); ++l2) t[k1 * (v.n(1) + 1) + l2] += g * v.at(l1, l2);
    }
  double s = 0.0;
  for (int k1 = 0; k1 <= u.n(0); ++k1)
    for (int k2 = 0; k2 <= u.n(1); ++k2) {
      const double uk = u.at(k1, k2);
      if (uk == 0.0) continue;
      double row = 0.0;
      for (int l2 = 0; l2 <= v.n(1); ++l2) {
        const double g = gram_1d(k2, pu[1], l2, pv[1], s2);
        if (g != 0.0) row += g * t[k1 * (v.n(1) + 1) + l2];
      }
      s += uk * row;
    }
  return s;
}

}  // namespace anderson
