#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace anderson {

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

// Axis-aligned rectangle origin + [0,s1] x [0,s2].
class BoxDomain {
 public:
  BoxDomain(std::array<double, 2> origin, std::array<double, 2> sides);
  static BoxDomain square(double side, std::array<double, 2> origin = {0.0, 0.0});

  const std::array<double, 2>& origin() const { return origin_; }
  const std::array<double, 2>& sides() const { return sides_; }
  double side(int axis) const { return sides_[axis]; }
  double area() const { return sides_[0] * sides_[1]; }

  bool contains(Point x, double tol = 1e-12) const;
  bool contains(const BoxDomain& other, double tol = 1e-12) const;

  bool operator==(const BoxDomain& other) const = default;

 private:
  std::array<double, 2> origin_;
  std::array<double, 2> sides_;
};

// Odd axes carry the sine basis (Dirichlet), even axes the cosine basis (Neumann).
enum class Parity { Odd, Even };
using ParityPair = std::array<Parity, 2>;

inline constexpr ParityPair kDirichlet{Parity::Odd, Parity::Odd};
inline constexpr ParityPair kNeumann{Parity::Even, Parity::Even};

// even*even = even, odd*even = odd, odd*odd = even, per axis.
ParityPair product_parity(ParityPair a, ParityPair b);

using Truncation = std::array<int, 2>;
using GridSize = std::array<int, 2>;
using ModeIndex = std::array<int, 2>;

class SpectralField {
 public:
  SpectralField(BoxDomain box, ParityPair parity, Truncation n);
  SpectralField(BoxDomain box, ParityPair parity, Truncation n, std::vector<double> coeffs);

  static SpectralField mode(BoxDomain box, ParityPair parity, Truncation n, ModeIndex k,
                            double value = 1.0);

  const BoxDomain& box() const { return box_; }
  ParityPair parity() const { return parity_; }
  Truncation truncation() const { return n_; }
  int n(int axis) const { return n_[axis]; }

  std::size_t index(int k1, int k2) const {
    return static_cast<std::size_t>(k1) * static_cast<std::size_t>(n_[1] + 1) +
           static_cast<std::size_t>(k2);
  }
  double at(int k1, int k2) const;
  // Zero outside the stored range instead of throwing.
  double get(int k1, int k2) const;
  void set(int k1, int k2, double value);

  std::span<const double> coeffs() const { return coeffs_; }
  // Raw writable storage; callers must keep odd-axis zero rows at zero.
  std::span<double> data() { return coeffs_; }

  SpectralField resized(Truncation n) const;
  double norm() const;
  double max_abs() const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);

 private:
  void check_index(int k1, int k2) const;

  BoxDomain box_;
  ParityPair parity_;
  Truncation n_;
  std::vector<double> coeffs_;
};

SpectralField operator+(const SpectralField& a, const SpectralField& b);
SpectralField operator-(const SpectralField& a, const SpectralField& b);
SpectralField operator*(double s, const SpectralField& a);

// Largest per-axis truncation of the two.
Truncation max_truncation(Truncation a, Truncation b);

enum class GridRule { Midpoint };

// Samples on the midpoint grid x_j = origin + (j + 1/2) s / M, row-major (j1, j2).
class GridField {
 public:
  GridField(BoxDomain box, GridSize m);
  GridField(BoxDomain box, GridSize m, std::vector<double> samples);

  const BoxDomain& box() const { return box_; }
  GridSize size() const { return m_; }
  GridRule rule() const { return GridRule::Midpoint; }
  Point node(int j1, int j2) const;

  double operator()(int j1, int j2) const { return samples_[idx(j1, j2)]; }
  double& operator()(int j1, int j2) { return samples_[idx(j1, j2)]; }
  std::span<const double> samples() const { return samples_; }
  std::span<double> samples() { return samples_; }

  // Midpoint-rule integral over the box.
  double integral() const;

 private:
  std::size_t idx(int j1, int j2) const {
    return static_cast<std::size_t>(j1) * static_cast<std::size_t>(m_[1]) +
           static_cast<std::size_t>(j2);
  }

  BoxDomain box_;
  GridSize m_;
  std::vector<double> samples_;
};

GridField sample_function(const BoxDomain& box, GridSize m, const std::function<double(Point)>& f);

// Normalisation factor nu: 2^{-1/2} for a zero index on a cosine axis.
double basis_value_1d(int k, Parity parity, double side, double t);
double basis_value(ModeIndex k, ParityPair parity, const BoxDomain& box, Point x);

// Pointwise evaluation of the represented function.
double evaluate(const SpectralField& u, Point x);

// 2N per axis, never below N+1.
GridSize default_grid(Truncation n);
// Smallest size >= n whose only prime factors are 2, 3, 5, 7.
int fft_friendly_size(int n);

SpectralField forward_transform(const GridField& g, ParityPair parity, Truncation n);
GridField inverse_transform(const SpectralField& u, GridSize m);

double inner_product(const SpectralField& u, const SpectralField& v);
// L2 pairing of fields with possibly different parities, via exact 1D Gram factors.
double cross_inner_product(const SpectralField& u, const SpectralField& v);
// Integral over [0,s] of the 1D basis functions (k, pk) and (l, pl).
double gram_1d(int k, Parity pk, int l, Parity pl, double side);

}  // namespace anderson
