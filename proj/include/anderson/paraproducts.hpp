#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anderson/calculus.hpp"
#include "anderson/geometry.hpp"

namespace anderson {

struct EnhancedNoise;

// u < v (lo), u o v (reso), u > v (hi).
struct ProductTriple {
  SpectralField lo;
  SpectralField reso;
  SpectralField hi;
  SpectralField sum() const;
};

// Grid product on a padded grid; exact at the default truncation N_u + N_v.
SpectralField pointwise_product(const SpectralField& u, const SpectralField& v,
                                std::optional<Truncation> n = std::nullopt);

// lo = sum_{i <= j-2} D_i u D_j v, reso = sum_{|i-j| <= 1}, hi = sum_{j <= i-2}.
ProductTriple bony_split(const SpectralField& u, const SpectralField& v, const DyadicPartition& P);
SpectralField paraproduct(const SpectralField& u, const SpectralField& v, const DyadicPartition& P);
SpectralField resonance(const SpectralField& u, const SpectralField& v, const DyadicPartition& P);

// (f < g) o h - f (g o h)
SpectralField commutator(const SpectralField& f, const SpectralField& g, const SpectralField& h,
                         const DyadicPartition& P);

// f < xi + f# o xi + R(f, s(D)xi, xi) + f Xi + f > xi with f# = f - f < s(D)xi,
// s(D) = (1 - Laplacian)^{-1}.
SpectralField enhanced_product(const SpectralField& f, const SpectralField& xi,
                               const SpectralField& Xi, const DyadicPartition& P);
SpectralField enhanced_product(const SpectralField& f, const EnhancedNoise& noise,
                               const DyadicPartition& P);

struct BonyRatioSpec {
  double alpha = -0.5;  // regularity of the Neumann factor
  double gamma = 0.75;  // regularity of the Dirichlet factor
  double delta = 0.1;   // loss in the paraproduct and product bounds
  Truncation n{16, 16};
  double side = 1.0;
  std::uint64_t seed = 1;
};

struct BonyRatioRow {
  std::string name;
  double max_ratio = 0.0;
  int used = 0;
  int skipped = 0;
};

// Ratios for one pair; nullopt when a denominator vanishes.
struct BonyRatios {
  double hi;
  double lo;
  double reso;
  double product;
};
std::optional<BonyRatios> bony_ratios(const SpectralField& f, const SpectralField& xi,
                                      const BonyRatioSpec& spec, const DyadicPartition& P);

// Max over random pairs of ||f > xi||_{H^{a+g}}, ||f < xi||_{H^{a-d}}, ||f o xi||_{H^{a+g}},
// ||f xi||_{H^{min(a,g)-d}}, each divided by ||f||_{H^g} ||xi||_{C^a}.
std::vector<BonyRatioRow> bony_ratio_report(int samples, const BonyRatioSpec& spec);

}  // namespace anderson
