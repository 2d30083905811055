#pragma once

#include <functional>
#include <span>
#include <vector>

namespace pot::stats {

// Median of the values; the input is copied. Even length averages the two
// middle order statistics.
double median(std::span<const double> values);

// Median absolute deviation about the median, multiplied by 1.4826 so it
// estimates the standard deviation for normal data.
double mad(std::span<const double> values);
inline constexpr double kMadNormalConsistency = 1.4826;

// Linear-interpolation sample quantile (R type 7), used for percentile
// intervals and envelopes.
double quantile_linear(std::span<const double> values, double p);

double mean(std::span<const double> values);
// Unbiased sample variance; returns 0 for fewer than two values.
double variance(std::span<const double> values);

/// Upper critical value of chi-squared(1) at the 5% level.
inline constexpr double kChi2_1_Crit95 = 3.841458820694124;

double chi2_1_cdf(double x);
double chi2_1_sf(double x);

// Kolmogorov-Smirnov distance between the empirical CDF of the sample and
// a continuous model CDF.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

// Autocorrelation at the given lag, normalised by the lag-0 sum of squares.
double autocorrelation(std::span<const double> values, std::size_t lag);

}  // namespace pot::stats
