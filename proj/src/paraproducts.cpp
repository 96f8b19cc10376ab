#include "anderson/paraproducts.hpp"

#include <algorithm>
#include <cmath>

#include "anderson/error.hpp"
#include "anderson/noise.hpp"
#include "anderson/rng.hpp"

namespace anderson {

namespace {

void require_same_box(const SpectralField& u, const SpectralField& v) {
  if (!(u.box() == v.box())) throw ContractError("product of fields on different boxes");
}

Truncation sum_truncation(const SpectralField& u, const SpectralField& v) {
  return {u.n(0) + v.n(0), u.n(1) + v.n(1)};
}

GridSize product_grid(Truncation out) {
  return {fft_friendly_size(std::max(2 * out[0], out[0] + 1)),
          fft_friendly_size(std::max(2 * out[1], out[1] + 1))};
}

std::vector<GridField> block_grids(const SpectralField& u, const DyadicPartition& P, int top,
                                   GridSize m) {
  std::vector<GridField> out;
  for (int j = -1; j <= top; ++j) out.push_back(inverse_transform(apply_block(u, j, P), m));
  return out;
}

void accumulate_product(std::span<double> acc, const GridField& a, const GridField& b) {
  const auto x = a.samples();
  const auto y = b.samples();
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i] * y[i];
}

void add_into(std::span<double> acc, const GridField& a) {
  const auto x = a.samples();
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

}  // namespace

SpectralField ProductTriple::sum() const { return lo + reso + hi; }

SpectralField pointwise_product(const SpectralField& u, const SpectralField& v,
                                std::optional<Truncation> n) {
  require_same_box(u, v);
  const Truncation full = sum_truncation(u, v);
  const Truncation out = n.value_or(full);
  const GridSize m = product_grid(max_truncation(full, out));
  GridField a = inverse_transform(u, m);
  const GridField b = inverse_transform(v, m);
  auto x = a.samples();
  const auto y = b.samples();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= y[i];
  return forward_transform(a, product_parity(u.parity(), v.parity()), out);
}

ProductTriple bony_split(const SpectralField& u, const SpectralField& v, const DyadicPartition& P) {
  require_same_box(u, v);
  const Truncation out = sum_truncation(u, v);
  const GridSize m = product_grid(out);
  const int top = std::max(P.top_level(u), P.top_level(v));
  const std::vector<GridField> ub = block_grids(u, P, top, m);
  const std::vector<GridField> vb = block_grids(v, P, top, m);
  const BoxDomain& box = u.box();
  GridField lo(box, m), reso(box, m), hi(box, m);
  // Storage index a holds level a - 1; su, sv accumulate the blocks with index <= a - 2.
  GridField su(box, m), sv(box, m);
  const int levels = top + 2;
  for (int a = 0; a < levels; ++a) {
    if (a >= 2) {
      add_into(su.samples(), ub[a - 2]);
      add_into(sv.samples(), vb[a - 2]);
    }
    accumulate_product(lo.samples(), su, vb[a]);
    accumulate_product(hi.samples(), ub[a], sv);
    for (int b = std::max(0, a - 1); b <= std::min(levels - 1, a + 1); ++b)
      accumulate_product(reso.samples(), ub[a], vb[b]);
  }
  const ParityPair p = product_parity(u.parity(), v.parity());
  return {forward_transform(lo, p, out), forward_transform(reso, p, out),
          forward_transform(hi, p, out)};
}

SpectralField paraproduct(const SpectralField& u, const SpectralField& v, const DyadicPartition& P) {
  return bony_split(u, v, P).lo;
}

SpectralField resonance(const SpectralField& u, const SpectralField& v, const DyadicPartition& P) {
  return bony_split(u, v, P).reso;
}

SpectralField commutator(const SpectralField& f, const SpectralField& g, const SpectralField& h,
                         const DyadicPartition& P) {
  SpectralField first = resonance(paraproduct(f, g, P), h, P);
  SpectralField second = pointwise_product(f, resonance(g, h, P));
  return first - second;
}

SpectralField enhanced_product(const SpectralField& f, const SpectralField& xi,
                               const SpectralField& Xi, const DyadicPartition& P) {
  require_same_box(f, xi);
  require_same_box(f, Xi);
  if (xi.parity() != kNeumann || Xi.parity() != kNeumann)
    throw ContractError("enhanced noise must be Neumann");
  const SpectralField sxi = resolvent(xi);
  const ProductTriple fx = bony_split(f, xi, P);
  const SpectralField fsharp = f - paraproduct(f, sxi, P);
  SpectralField out = fx.lo;
  out += resonance(fsharp, xi, P);
  out += commutator(f, sxi, xi, P);
  out += pointwise_product(f, Xi);
  out += fx.hi;
  return out;
}

SpectralField enhanced_product(const SpectralField& f, const EnhancedNoise& noise,
                               const DyadicPartition& P) {
  return enhanced_product(f, noise.xi, noise.Xi, P);
}

std::optional<BonyRatios> bony_ratios(const SpectralField& f, const SpectralField& xi,
                                      const BonyRatioSpec& spec, const DyadicPartition& P) {
  const double a = spec.alpha, g = spec.gamma, d = spec.delta;
  const double denom = besov_norm(f, {g, 2.0, 2.0}, P) * besov_norm(xi, {a, kInfinity, kInfinity}, P);
  if (!(denom > 0.0)) return std::nullopt;
  const ProductTriple t = bony_split(f, xi, P);
  BonyRatios r{};
  r.hi = besov_norm(t.hi, {a + g, 2.0, 2.0}, P) / denom;
  r.lo = besov_norm(t.lo, {a - d, 2.0, 2.0}, P) / denom;
  r.reso = besov_norm(t.reso, {a + g, 2.0, 2.0}, P) / denom;
  r.product = besov_norm(t.sum(), {std::min(a, g) - d, 2.0, 2.0}, P) / denom;
  return r;
}

std::vector<BonyRatioRow> bony_ratio_report(int samples, const BonyRatioSpec& spec) {
  if (samples < 1) throw ContractError("bony_ratio_report needs at least one sample");
  const BoxDomain box = BoxDomain::square(spec.side);
  const DyadicPartition P = make_partition(8);
  // Coefficient decay chosen so both norms converge as the truncation grows.
  const double sf = spec.gamma + 1.5, sx = spec.alpha + 1.5;
  std::vector<BonyRatioRow> rows = {{"hi", 0, 0, 0}, {"lo", 0, 0, 0}, {"reso", 0, 0, 0}, {"product", 0, 0, 0}};
  for (int s = 0; s < samples; ++s) {
    SpectralField f(box, kDirichlet, spec.n), xi(box, kNeumann, spec.n);
    for (int k1 = 0; k1 <= spec.n[0]; ++k1)
      for (int k2 = 0; k2 <= spec.n[1]; ++k2) {
        const auto w = frequency({k1, k2}, box);
        const double r2 = 1.0 + w[0] * w[0] + w[1] * w[1];
        if (k1 > 0 && k2 > 0)
          f.set(k1, k2, keyed_normal(stream_key(spec.seed, s, k1 * 65536 + k2, 1)) * std::pow(r2, -0.5 * sf));
        xi.set(k1, k2, keyed_normal(stream_key(spec.seed, s, k1 * 65536 + k2, 2)) * std::pow(r2, -0.5 * sx));
      }
    const auto r = bony_ratios(f, xi, spec, P);
    if (!r) {
      for (auto& row : rows) ++row.skipped;
      continue;
    }
    const double vals[4] = {r->hi, r->lo, r->reso, r->product};
    for (int i = 0; i < 4; ++i) {
      rows[i].max_ratio = std::max(rows[i].max_ratio, vals[i]);
      ++rows[i].used;
    }
  }
  return rows;
}

}  // namespace anderson
