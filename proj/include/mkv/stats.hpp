#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace mkv {

// Standard normal CDF via erfc; accurate to ~1e-16 over the double range.
double normal_cdf(double x);

// Standard normal quantile, rational approximation (Wichura's AS241 "PPND16"
// scheme). Fast enough for per-draw use in the simulator; |error| below 1e-15
// over (0, 1). Returns +/-inf at the endpoints.
double normal_quantile(double p);

// Standard normal quantile by bisection on normal_cdf, refined until the
// bracket width falls below 1e-12. Used for critical values in tests where
// the tolerance is part of the contract.
double normal_quantile_bisect(double p);

// One-sample Kolmogorov-Smirnov statistic D = sup |F_n - Phi| against the
// standard normal. `sample` is copied and sorted internally.
double ks_statistic_normal(std::span<const double> sample);

// Asymptotic KS p-value: Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)
// evaluated at lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) * d (Stephens' form).
double ks_pvalue(double d, std::size_t n);

// Convenience: (statistic, p-value) for a sample against N(0,1).
std::pair<double, double> ks_test_normal(std::span<const double> sample);

// Sum with pairwise (cascade) reduction; order-deterministic and keeps the
// rounding error at O(log n) for the long Monte Carlo accumulations.
double pairwise_sum(std::span<const double> values);

} // namespace mkv
