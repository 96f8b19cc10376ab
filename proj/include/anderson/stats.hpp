#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace anderson {

double mean(std::span<const double> x);
// Unbiased sample variance.
double variance(std::span<const double> x);
double standard_error(std::span<const double> x);
double skewness(std::span<const double> x);
// Excess kurtosis.
double excess_kurtosis(std::span<const double> x);

struct LinearFit {
  double slope;
  double intercept;
  double slope_se;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct KsResult {
  double statistic;
  double p_value;
};
// Two-sample Kolmogorov-Smirnov test with the asymptotic distribution.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
double kolmogorov_q(double lambda);

struct Interval {
  double lo;
  double hi;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

// Percentile bootstrap interval, resampling with a keyed engine.
Interval bootstrap_interval(std::span<const double> x,
                            const std::function<double(std::span<const double>)>& stat,
                            int resamples, double level, std::uint64_t seed);

}  // namespace anderson
