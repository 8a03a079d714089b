#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace robust_debias {

// Standard normal CDF.
double normal_cdf(double x);

// Standard normal quantile, Wichura's AS241 rational approximation
// (absolute error well below 1e-9 over (0,1)).
double normal_quantile(double p);

// One-sample Kolmogorov-Smirnov distance of `samples` to the standard
// normal CDF. Samples need not be sorted.
double ks_statistic_normal(std::span<const double> samples);

// Asymptotic Kolmogorov tail probability Q(x) = 2 sum_k (-1)^{k-1} e^{-2 k^2 x^2},
// evaluated with at least `terms` terms of the series.
double kolmogorov_tail(double x, int terms = 100);

double mean(std::span<const double> v);
// Sample standard deviation with the unbiased (n-1) divisor.
double sample_sd(std::span<const double> v);

// Quantile of a sorted vector with linear interpolation between order
// statistics (the common "type 7" rule).
double sorted_quantile(std::span<const double> sorted, double q);

}  // namespace robust_debias
