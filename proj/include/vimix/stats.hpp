#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace vimix {

// regularized lower incomplete gamma P(s, x)
double gamma_p(double s, double x);

// chi-square CDF with df degrees of freedom
double chi2_cdf(double df, double x);

// standard normal quantile, Wichura AS241 (double precision)
double normal_quantile(double p);

double normal_cdf(double x);

struct KsResult {
  double statistic;  // sup |F_n - F|
  double p_value;    // asymptotic, with small-sample correction
};

// Kolmogorov-Smirnov one-sample test; samples need not be sorted.
KsResult ks_test(std::span<double> samples, const std::function<double(double)>& cdf);

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);  // denominator n-1
double skewness(std::span<const double> xs);  // standardized third moment

// log2(n!) by direct summation, exact to double rounding
double log2_factorial(std::uint64_t n);

}  // namespace vimix
