#pragma once

// Small statistics toolbox: Kolmogorov-Smirnov distances, median-of-means and
// plain mean estimates.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace perp {

struct MeanEstimate {
  double value = 0.0;
  double std_err = 0.0;
};

/// sup_x |F_n(x) - F(x)| for a sorted sample against a continuous cdf.
double ks_one_sample(std::span<const double> sorted, const std::function<double(double)>& cdf);

/// sup_x |F_n(x) - G_m(x)| for two sorted samples.
double ks_two_sample(std::span<const double> sorted_a, std::span<const double> sorted_b);

/// Asymptotic two-sample KS rejection threshold at significance `alpha`.
double ks_two_sample_critical(std::size_t n, std::size_t m, double alpha);

/// Sample mean with its standard error.
MeanEstimate mean_estimate(std::span<const double> values);

/// Median of `blocks` contiguous block means. The standard error is the
/// asymptotic sd of a sample median of normal block means,
/// sqrt(pi/2) * sd(block means) / sqrt(blocks).
MeanEstimate median_of_means(std::span<const double> values, std::size_t blocks = 32);

/// sqrt(p (1 - p) / n).
double binomial_sigma(double p, std::size_t n);

}  // namespace perp
