#include "anderson/noise.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>

#include "anderson/error.hpp"
#include "anderson/paraproducts.hpp"
#include "anderson/rng.hpp"

namespace anderson {

namespace {

constexpr double kPi = std::numbers::pi;

double nu(int k) { return k == 0 ? std::numbers::sqrt2 / 2.0 : 1.0; }

// sin(pi x)/x and (1 - cos(pi x))/x with their limits at 0.
double sinc_term(double x) { return x == 0.0 ? kPi : std::sin(kPi * x) / x; }
double cosc_term(double x) {
  if (x == 0.0) return 0.0;
  const double s = std::sin(0.5 * kPi * x);
  return 2.0 * s * s / x;
}

// Angular average of tau(u theta)^2 over the unit circle.
double angular_mean_square(const CutoffProfile& tau, double u) {
  if (tau.kind == ProfileKind::SmoothBump) {
    const double t = tau(u, 0.0);
    return t * t;
  }
  const double v = u / tau.inner;
  if (v < 1.0) return 1.0;
  if (v >= std::numbers::sqrt2) return 0.0;
  return 1.0 - (4.0 / kPi) * std::acos(1.0 / v);
}

constexpr char kMagic[8] = {'A', 'N', 'D', 'N', 'O', 'I', 'S', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ContractError("truncated noise dump");
  return v;
}

}  // namespace

CutoffProfile CutoffProfile::smooth(double inner, double outer) {
  if (!(inner > 0.0 && outer > inner)) throw ContractError("smooth profile needs 0 < inner < outer");
  return {ProfileKind::SmoothBump, inner, outer};
}

CutoffProfile CutoffProfile::indicator(double half_width) {
  if (!(half_width > 0.0)) throw ContractError("indicator half-width must be positive");
  return {ProfileKind::IndicatorSquare, half_width, half_width};
}

double CutoffProfile::operator()(double y1, double y2) const {
  if (kind == ProfileKind::IndicatorSquare)
    return (std::abs(y1) < inner && std::abs(y2) < inner) ? 1.0 : 0.0;
  const double r = std::hypot(y1, y2);
  return 1.0 - smooth_step((r - inner) / (outer - inner));
}

double CutoffProfile::axis_reach() const { return kind == ProfileKind::IndicatorSquare ? inner : outer; }

std::string CutoffProfile::name() const {
  return kind == ProfileKind::IndicatorSquare ? "indicator" : "smooth";
}

CutoffProfile parse_profile(const std::string& name) {
  if (name == "smooth") return CutoffProfile::smooth();
  if (name == "indicator") return CutoffProfile::indicator();
  throw ContractError("unknown cutoff profile '" + name + "' (expected smooth or indicator)");
}

SpectralField NoiseDraw::field() const { return SpectralField(box, kNeumann, n, z); }

double noise_coefficient(std::uint64_t seed, int k1, int k2) {
  return keyed_normal(stream_key(seed, k1, k2));
}

NoiseDraw sample(const BoxDomain& box, Truncation n, std::uint64_t seed) {
  if (n[0] < 1 || n[1] < 1) throw ContractError("noise truncation must be >= 1");
  NoiseDraw d{box, n, seed, {}};
  d.z.resize(static_cast<std::size_t>(n[0] + 1) * (n[1] + 1));
  for (int k1 = 0; k1 <= n[0]; ++k1)
    for (int k2 = 0; k2 <= n[1]; ++k2)
      d.z[static_cast<std::size_t>(k1) * (n[1] + 1) + k2] = noise_coefficient(seed, k1, k2);
  return d;
}

Truncation mollifier_truncation(const BoxDomain& box, double eps, const CutoffProfile& tau) {
  if (!(eps > 0.0)) throw ContractError("mollification scale must be positive");
  Truncation n{};
  for (int i = 0; i < 2; ++i) {
    const double reach = box.side(i) * tau.axis_reach() / eps;
    n[i] = std::max(0, static_cast<int>(std::ceil(reach * (1.0 - 1e-12))) - 1);
  }
  return n;
}

SpectralField mollify(const NoiseDraw& draw, double eps, const CutoffProfile& tau) {
  const Truncation reach = mollifier_truncation(draw.box, eps, tau);
  const Truncation n{std::min(draw.n[0], reach[0]), std::min(draw.n[1], reach[1])};
  SpectralField out(draw.box, kNeumann, n);
  auto c = out.data();
  const double s1 = draw.box.side(0), s2 = draw.box.side(1);
  for (int k1 = 0; k1 <= n[0]; ++k1)
    for (int k2 = 0; k2 <= n[1]; ++k2)
      c[out.index(k1, k2)] = tau(eps * k1 / s1, eps * k2 / s2) * draw.at(k1, k2);
  return out;
}

double renorm_constant(const BoxDomain& box, double eps, const CutoffProfile& tau) {
  const Truncation n = mollifier_truncation(box, eps, tau);
  const double s1 = box.side(0), s2 = box.side(1);
  long double total = 0.0L;
  for (int k1 = 0; k1 <= n[0]; ++k1) {
    long double row = 0.0L;
    const double f1 = k1 / s1;
    for (int k2 = 0; k2 <= n[1]; ++k2) {
      const double f2 = k2 / s2;
      const double t = tau(eps * f1, eps * f2);
      if (t == 0.0) continue;
      const double w = t * t / (1.0 + kPi * kPi * (f1 * f1 + f2 * f2));
      row += (k2 > 0 ? 2.0L : 1.0L) * w;
    }
    total += (k1 > 0 ? 2.0L : 1.0L) * row;
  }
  return static_cast<double>(total / (4.0L * s1 * s2));
}

double renorm_constant(double eps, double L, const CutoffProfile& tau) {
  return renorm_constant(BoxDomain::square(L), eps, tau);
}

double log_renorm_constant(double eps) { return std::log(1.0 / eps) / (2.0 * kPi); }

double profile_constant(const CutoffProfile& tau) {
  using boost::math::quadrature::gauss_kronrod;
  const double lo = std::min(tau.inner, 1.0);
  const double hi = std::max(tau.axis_reach() * (tau.kind == ProfileKind::IndicatorSquare ? std::numbers::sqrt2 : 1.0), 1.0);
  auto below = [&](double u) { return (angular_mean_square(tau, u) - 1.0) / u; };
  auto above = [&](double u) { return angular_mean_square(tau, u) / u; };
  double a = 0.0, b = 0.0;
  if (lo < 1.0) a = gauss_kronrod<double, 61>::integrate(below, lo, 1.0, 12, 1e-14);
  if (hi > 1.0) b = gauss_kronrod<double, 61>::integrate(above, 1.0, hi, 12, 1e-14);
  return std::log(kPi) / (2.0 * kPi) + (a + b) / (2.0 * kPi);
}

SpectralField expectation_field(const BoxDomain& box, double eps, const CutoffProfile& tau,
                                Truncation n) {
  const double s1 = box.side(0), s2 = box.side(1);
  SpectralField out(box, kNeumann, {2 * n[0], 2 * n[1]});
  auto c = out.data();
  for (int k1 = 0; k1 <= n[0]; ++k1)
    for (int k2 = 0; k2 <= n[1]; ++k2) {
      const double f1 = k1 / s1, f2 = k2 / s2;
      const double t = tau(eps * f1, eps * f2);
      if (t == 0.0) continue;
      const double w = t * t / (1.0 + kPi * kPi * (f1 * f1 + f2 * f2));
      const double scale = w * nu(k1) * nu(k1) * nu(k2) * nu(k2) * 4.0 / (s1 * s2);
      // cos^2(pi k t / s) in the 1D cosine basis.
      const double a0 = (k1 == 0) ? std::sqrt(s1) : 0.5 * std::sqrt(s1);
      const double a2 = (k1 == 0) ? 0.0 : 0.5 * std::sqrt(s1 / 2.0);
      const double b0 = (k2 == 0) ? std::sqrt(s2) : 0.5 * std::sqrt(s2);
      const double b2 = (k2 == 0) ? 0.0 : 0.5 * std::sqrt(s2 / 2.0);
      c[out.index(0, 0)] += scale * a0 * b0;
      if (a2 != 0.0) c[out.index(2 * k1, 0)] += scale * a2 * b0;
      if (b2 != 0.0) c[out.index(0, 2 * k2)] += scale * a0 * b2;
      if (a2 != 0.0 && b2 != 0.0) c[out.index(2 * k1, 2 * k2)] += scale * a2 * b2;
    }
  return out;
}

SpectralField expectation_field(double eps, double L, const CutoffProfile& tau, Truncation n) {
  return expectation_field(BoxDomain::square(L), eps, tau, n);
}

std::string renormalization_name(Renormalization r) {
  switch (r) {
    case Renormalization::FullExpectation: return "expectation";
    case Renormalization::ConstantC: return "constant";
    case Renormalization::LogConstant: return "log";
  }
  return "expectation";
}

Renormalization parse_renormalization(const std::string& name) {
  if (name == "expectation") return Renormalization::FullExpectation;
  if (name == "constant") return Renormalization::ConstantC;
  if (name == "log") return Renormalization::LogConstant;
  throw ContractError("unknown renormalization '" + name + "' (expected expectation, constant or log)");
}

double renormalization_constant(const BoxDomain& box, double eps, const CutoffProfile& tau,
                                Renormalization mode) {
  if (mode == Renormalization::LogConstant) return log_renorm_constant(eps);
  return renorm_constant(box, eps, tau);
}

SpectralField renormalization_field(const BoxDomain& box, double eps, const CutoffProfile& tau,
                                    Truncation n, Renormalization mode) {
  if (mode == Renormalization::FullExpectation) return expectation_field(box, eps, tau, n);
  SpectralField out(box, kNeumann, {2 * n[0], 2 * n[1]});
  out.set(0, 0, renormalization_constant(box, eps, tau, mode) * std::sqrt(box.area()));
  return out;
}

EnhancedNoise enhance(const NoiseDraw& draw, double eps, const CutoffProfile& tau,
                      const DyadicPartition& P, Renormalization mode) {
  SpectralField xi = mollify(draw, eps, tau);
  SpectralField Xi = resonance(xi, resolvent(xi), P);
  Xi -= renormalization_field(draw.box, eps, tau, xi.truncation(), mode);
  return {std::move(xi), std::move(Xi), eps, renormalization_constant(draw.box, eps, tau, mode),
          tau, mode};
}

double b_coeff(int m, int l, double z, double r, double L) {
  if (m < 0 || l < 0) throw InvalidIndexError("b coefficient indices must be >= 0");
  if (!(r > 0.0 && L >= r)) throw ContractError("b coefficient needs 0 < r <= L");
  if (z < -1e-12 * L || z > L - r + 1e-12 * L) throw ContractError("offset outside [0, L - r]");
  const double x = r * m / L;
  const double f = sinc_term(x + l) + sinc_term(x - l);
  const double g = cosc_term(x + l) + cosc_term(x - l);
  const double ang = kPi * m * z / L;
  return std::sqrt(r / L) / kPi * nu(m) * nu(l) * (f * std::cos(ang) - g * std::sin(ang));
}

SpectralField restrict_field(const SpectralField& parent, const BoxDomain& sub, Truncation n) {
  if (parent.parity() != kNeumann) throw ContractError("restriction expects a Neumann field");
  const BoxDomain& box = parent.box();
  if (!box.contains(sub)) throw ContractError("sub-box escapes the parent box");
  Eigen::MatrixXd B[2];
  for (int i = 0; i < 2; ++i) {
    const double z = std::clamp(sub.origin()[i] - box.origin()[i], 0.0, box.side(i) - sub.side(i));
    B[i].resize(n[i] + 1, parent.n(i) + 1);
    for (int k = 0; k <= n[i]; ++k)
      for (int m = 0; m <= parent.n(i); ++m) B[i](k, m) = b_coeff(m, k, z, sub.side(i), box.side(i));
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> V(
      parent.coeffs().data(), parent.n(0) + 1, parent.n(1) + 1);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> T = B[0] * V * B[1].transpose();
  return SpectralField(sub, kNeumann, n, std::vector<double>(T.data(), T.data() + T.size()));
}

SpectralField restrict(const NoiseDraw& draw, double eps, const CutoffProfile& tau,
                       const BoxDomain& sub, Truncation n) {
  if (!draw.box.contains(sub)) throw ContractError("sub-box escapes the parent box");
  return restrict_field(mollify(draw, eps, tau), sub, n);
}

double block_difference_variance(const BoxDomain& box, int level, double eps, double delta,
                                 const CutoffProfile& tau, Point x, const DyadicPartition& P) {
  const Truncation a = mollifier_truncation(box, eps, tau);
  const Truncation b = mollifier_truncation(box, delta, tau);
  const Truncation n = max_truncation(a, b);
  double s = 0.0;
  for (int k1 = 0; k1 <= n[0]; ++k1)
    for (int k2 = 0; k2 <= n[1]; ++k2) {
      const auto f = frequency({k1, k2}, box);
      const double r = P.rho(level, f[0], f[1]);
      if (r == 0.0) continue;
      const double d = tau(eps * f[0], eps * f[1]) - tau(delta * f[0], delta * f[1]);
      if (d == 0.0) continue;
      const double e = basis_value({k1, k2}, kNeumann, box, x);
      s += r * r * d * d * e * e;
    }
  return s;
}

void write_draw(std::ostream& out, const NoiseDraw& draw, const CutoffProfile& tau) {
  out.write(kMagic, sizeof(kMagic));
  put(out, draw.box.origin()[0]);
  put(out, draw.box.origin()[1]);
  put(out, draw.box.side(0));
  put(out, draw.box.side(1));
  put(out, static_cast<std::int32_t>(draw.n[0]));
  put(out, static_cast<std::int32_t>(draw.n[1]));
  put(out, draw.seed);
  put(out, static_cast<std::int32_t>(tau.kind == ProfileKind::IndicatorSquare ? 1 : 0));
  put(out, tau.inner);
  put(out, tau.outer);
  out.write(reinterpret_cast<const char*>(draw.z.data()),
            static_cast<std::streamsize>(draw.z.size() * sizeof(double)));
}

NoiseDraw read_draw(std::istream& in, CutoffProfile* tau) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ContractError("not a noise dump");
  const double o1 = take<double>(in), o2 = take<double>(in);
  const double s1 = take<double>(in), s2 = take<double>(in);
  const int n1 = take<std::int32_t>(in), n2 = take<std::int32_t>(in);
  const auto seed = take<std::uint64_t>(in);
  const int kind = take<std::int32_t>(in);
  const double inner = take<double>(in), outer = take<double>(in);
  if (tau != nullptr)
    *tau = {kind == 1 ? ProfileKind::IndicatorSquare : ProfileKind::SmoothBump, inner, outer};
  NoiseDraw d{BoxDomain({o1, o2}, {s1, s2}), {n1, n2}, seed, {}};
  d.z.resize(static_cast<std::size_t>(n1 + 1) * (n2 + 1));
  in.read(reinterpret_cast<char*>(d.z.data()), static_cast<std::streamsize>(d.z.size() * sizeof(double)));
  if (!in) throw ContractError("truncated noise dump");
  return d;
}

}  // namespace anderson
