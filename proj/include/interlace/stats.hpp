#pragma once

#include <cstdint>
#include <span>

namespace interlace {

struct Interval {
  double low = 0;
  double high = 0;
};

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence = 0.95);

/// Standardized deviation of successes / trials from p0. Uses the normal
/// approximation only with at least 30 successes and 30 failures; below that
/// the exact two-sided binomial tail is mapped back to a z value.
double binomial_z(std::uint64_t successes, std::uint64_t trials, double p0);

double normal_quantile(double p);
/// P[chi^2_dof >= stat].
double chi_square_sf(double stat, double dof);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace interlace
