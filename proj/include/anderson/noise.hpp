#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "anderson/calculus.hpp"
#include "anderson/geometry.hpp"

namespace anderson {

enum class ProfileKind { SmoothBump, IndicatorSquare };

// Fourier cutoff tau: equal to 1 near 0, compactly supported, values in [0,1].
struct CutoffProfile {
  ProfileKind kind = ProfileKind::SmoothBump;
  double inner = 0.5;  // smooth: 1 on |y| <= inner; indicator: half-width of the square
  double outer = 1.0;  // smooth: 0 on |y| >= outer

  static CutoffProfile smooth(double inner = 0.5, double outer = 1.0);
  static CutoffProfile indicator(double half_width = 1.0);

  double operator()(double y1, double y2) const;
  // Largest |y_i| at which the profile can be non-zero.
  double axis_reach() const;
  std::string name() const;
};

CutoffProfile parse_profile(const std::string& name);

// White-noise pairings Z_k with the Neumann basis of the box, keyed by (seed, k).
struct NoiseDraw {
  BoxDomain box;
  Truncation n;
  std::uint64_t seed;
  std::vector<double> z;

  double at(int k1, int k2) const {
    return z[static_cast<std::size_t>(k1) * (n[1] + 1) + static_cast<std::size_t>(k2)];
  }
  SpectralField field() const;
};

double noise_coefficient(std::uint64_t seed, int k1, int k2);
NoiseDraw sample(const BoxDomain& box, Truncation n, std::uint64_t seed);

// Smallest truncation holding every mode with tau(eps k / s) > 0.
Truncation mollifier_truncation(const BoxDomain& box, double eps, const CutoffProfile& tau);

// Coefficients tau(eps k1/s1, eps k2/s2) Z_k, cropped to the modes the cutoff keeps.
SpectralField mollify(const NoiseDraw& draw, double eps, const CutoffProfile& tau);

// (1 / 4 s1 s2) sum_{k in Z^2} tau(eps k/s)^2 / (1 + pi^2 |k/s|^2)
double renorm_constant(const BoxDomain& box, double eps, const CutoffProfile& tau);
double renorm_constant(double eps, double L, const CutoffProfile& tau);
// (1/2 pi) log(1/eps)
double log_renorm_constant(double eps);
// Limit of c_{eps,L} - (1/2 pi) log(1/eps) - C_L, with C_L -> 0 as L grows.
double profile_constant(const CutoffProfile& tau);

// E[xi_eps o s(D) xi_eps](x) = sum_{k <= n} tau^2 / (1 + pi^2 |k/s|^2) n_k(x)^2, assembled exactly.
SpectralField expectation_field(const BoxDomain& box, double eps, const CutoffProfile& tau,
                                Truncation n);
SpectralField expectation_field(double eps, double L, const CutoffProfile& tau, Truncation n);

enum class Renormalization { FullExpectation, ConstantC, LogConstant };
std::string renormalization_name(Renormalization r);
Renormalization parse_renormalization(const std::string& name);

struct EnhancedNoise {
  SpectralField xi;
  SpectralField Xi;
  double epsilon;
  double c_subtracted;
  CutoffProfile profile;
  Renormalization mode = Renormalization::FullExpectation;
};

// Renormalization term subtracted from xi o s(D) xi (a field, or a constant as a field).
SpectralField renormalization_field(const BoxDomain& box, double eps, const CutoffProfile& tau,
                                    Truncation n, Renormalization mode);
// Constant associated with a mode: c_{eps,box} for the first two, log constant for the third.
double renormalization_constant(const BoxDomain& box, double eps, const CutoffProfile& tau,
                                Renormalization mode);

EnhancedNoise enhance(const NoiseDraw& draw, double eps, const CutoffProfile& tau,
                      const DyadicPartition& P,
                      Renormalization mode = Renormalization::FullExpectation);

// <n_{m,L}, n_{l,r}(. - z)> in one dimension.
double b_coeff(int m, int l, double z, double r, double L);

// Neumann coefficients on the sub-box of a Neumann field on the parent box.
SpectralField restrict_field(const SpectralField& parent, const BoxDomain& sub, Truncation n);
SpectralField restrict(const NoiseDraw& draw, double eps, const CutoffProfile& tau,
                       const BoxDomain& sub, Truncation n);

// Exact E|D_i (xi_eps - xi_delta)(x)|^2.
double block_difference_variance(const BoxDomain& box, int level, double eps, double delta,
                                 const CutoffProfile& tau, Point x, const DyadicPartition& P);

// Binary dump: fixed header (magic, box, truncation, seed, profile) then coefficients.
void write_draw(std::ostream& out, const NoiseDraw& draw, const CutoffProfile& tau);
NoiseDraw read_draw(std::istream& in, CutoffProfile* tau = nullptr);

}  // namespace anderson
