#include "anderson/stats.hpp"

#include <algorithm>
#include <cmath>

#include "anderson/error.hpp"
#include "anderson/rng.hpp"

namespace anderson {

double mean(std::span<const double> x) {
  if (x.empty()) throw ContractError("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw ContractError("variance needs at least two values");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double standard_error(std::span<const double> x) {
  return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

double skewness(std::span<const double> x) {
  const double m = mean(x);
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(x.size());
  m2 /= n;
  m3 /= n;
  return m3 / std::pow(m2, 1.5);
}

double excess_kurtosis(std::span<const double> x) {
  const double m = mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double n = static_cast<double>(x.size());
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2) - 3.0;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("linear fit needs matched samples");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ContractError("linear fit needs distinct abscissae");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - intercept - slope * x[i];
    rss += r * r;
  }
  const double dof = static_cast<double>(x.size()) - 2.0;
  const double se = dof > 0 ? std::sqrt(rss / dof / sxx) : 0.0;
  return {slope, intercept, se};
}

double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double s = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double t = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 ? 2.0 : -2.0) * t;
    if (t < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ContractError("KS test needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

Interval bootstrap_interval(std::span<const double> x,
                            const std::function<double(std::span<const double>)>& stat,
                            int resamples, double level, std::uint64_t seed) {
  if (x.empty() || resamples < 2 || !(level > 0.0 && level < 1.0))
    throw ContractError("bootstrap needs data, >= 2 resamples and a level in (0,1)");
  KeyedEngine eng(seed);
  std::vector<double> buf(x.size()), stats(resamples);
  for (int b = 0; b < resamples; ++b) {
    for (double& v : buf) v = x[eng() % x.size()];
    stats[b] = stat(buf);
  }
  std::sort(stats.begin(), stats.end());
  const double tail = 0.5 * (1.0 - level);
  auto q = [&](double p) {
    const double pos = p * (resamples - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - i;
    return i + 1 < stats.size() ? stats[i] * (1 - f) + stats[i + 1] * f : stats[i];
  };
  return {q(tail), q(1.0 - tail)};
}

}  // namespace anderson
