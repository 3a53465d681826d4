#include "interlace/stats.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace interlace {

double normal_quantile(double p) { return gsl_cdf_ugaussian_Pinv(p); }

double chi_square_sf(double stat, double dof) { return gsl_cdf_chisq_Q(stat, dof); }

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence) {
  if (trials == 0) return {0.0, 1.0};
  if (successes > trials) throw std::invalid_argument("successes exceed trials");
  const double z = normal_quantile(0.5 + confidence / 2.0);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  Interval iv{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (successes == 0) iv.low = 0.0;
  if (successes == trials) iv.high = 1.0;
  iv.low = std::min(iv.low, p);
  iv.high = std::max(iv.high, p);
  return iv;
}

double binomial_z(std::uint64_t successes, std::uint64_t trials, double p0) {
  if (trials == 0) return 0.0;
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  if (p0 <= 0.0 || p0 >= 1.0) {
    if (phat == p0) return 0.0;
    return phat > p0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  const std::uint64_t failures = trials - successes;
  if (successes >= 30 && failures >= 30) return (phat - p0) / std::sqrt(p0 * (1.0 - p0) / n);
  const auto k = static_cast<unsigned>(successes);
  const auto nn = static_cast<unsigned>(trials);
  const double lower = gsl_cdf_binomial_P(k, p0, nn);
  const double upper = k == 0 ? 1.0 : gsl_cdf_binomial_Q(k - 1, p0, nn);
  const double two_sided = std::min(1.0, 2.0 * std::min(lower, upper));
  if (two_sided >= 1.0) return 0.0;
  const double z = normal_quantile(1.0 - two_sided / 2.0);
  return phat >= p0 ? z : -z;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs two or more points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

}  // namespace interlace
