#pragma once

#include <span>
#include <vector>

namespace imcmc {

/// Standard normal CDF.
double normal_cdf(double z);

/// Unbiased sample variance (divisor n - 1), about the sample mean.
double sample_variance(std::span<const double> values);

/// Kolmogorov distance between the empirical CDF of `samples` and N(0, 1).
/// Throws PreconditionError with fewer than two samples.
double ks_distance(std::span<const double> samples);

/// 1% critical value 1.63 / sqrt(R) of the one-sample KS statistic.
double ks_critical_value(std::size_t n_samples, double coefficient = 1.63);

/// Batch-means estimate of the asymptotic variance of n^{-1/2} sum (x_k - mean).
/// The tail beyond n_batches * floor(n / n_batches) is dropped.
/// Throws PreconditionError when n_batches < 10 or a batch would be empty.
double batch_means_variance(std::span<const double> values, std::size_t n_batches);

/// Least-squares slope of log|y| against log x over the tail half of the
/// points (at least two). Zero entries of y are skipped; returns NaN when
/// fewer than two usable points remain.
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace imcmc
