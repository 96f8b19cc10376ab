#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "anderson/geometry.hpp"

namespace anderson {

// Smooth monotone step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t).
double smooth_step(double t);
double smooth_step_derivative(double t);

// Radial dyadic partition of unity. rho_{-1} is 1 on |y| <= 3/4 and 0 on |y| >= 4/3;
// rho_0 = rho_{-1}(./2) - rho_{-1}; rho_j = rho_0(2^{-j} .).
class DyadicPartition {
 public:
  explicit DyadicPartition(int max_level);

  int max_level() const { return max_level_; }
  double low(double r) const;
  double rho(int j, double r) const;
  double rho(int j, double y1, double y2) const;
  // Sum of rho_j for j = -1..max_level.
  double sum(double y1, double y2) const;
  double sum_of_squares(double y1, double y2) const;
  // Largest j whose block can be non-zero for frequencies of modulus <= r.
  int top_level(double r) const;
  int top_level(const SpectralField& u) const;

 private:
  int max_level_;
};

DyadicPartition make_partition(int max_level);

// Frequency vector (k1/s1, k2/s2) of mode k on the box.
std::array<double, 2> frequency(ModeIndex k, const BoxDomain& box);
double max_frequency(const SpectralField& u);

using Symbol = std::function<double(double, double)>;

SpectralField multiplier(const SpectralField& u, const Symbol& sigma);
SpectralField apply_block(const SpectralField& u, int j, const DyadicPartition& P);
// Blocks -1..top_level(u).
std::vector<SpectralField> blocks(const SpectralField& u, const DyadicPartition& P);

SpectralField laplacian(const SpectralField& u);
// (a - Laplacian)^{-1}
SpectralField resolvent(const SpectralField& u, double a = 1.0);
// Symbol of (1 - Laplacian)^{-1}.
double resolvent_symbol(double x1, double x2);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct BesovSpec {
  double alpha = 0.0;
  double p = 2.0;
  double q = 2.0;
  std::optional<ParityPair> parity;
};

// L^p norm of the represented function from its samples on the 2N grid.
double grid_lp_norm(const SpectralField& u, double p);
// Sequence 2^{max(j,0) alpha} ||Delta_j u||_{L^p}, j = -1, 0, ...
std::vector<double> besov_sequence(const SpectralField& u, const BesovSpec& spec,
                                   const DyadicPartition& P);
double besov_norm(const SpectralField& u, const BesovSpec& spec, const DyadicPartition& P);
// sqrt(sum (1 + |k/s|^2)^alpha u_k^2)
double sobolev_norm(const SpectralField& u, double alpha);

}  // namespace anderson
