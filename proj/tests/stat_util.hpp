#ifndef NBCAR_TESTS_STAT_UTIL_HPP
#define NBCAR_TESTS_STAT_UTIL_HPP

#include <cmath>
#include <stdexcept>

// Test-side special functions, independent of the library under test.
namespace nbcar_tests {

// Regularized lower incomplete gamma P(a, x) by series / continued fraction.
inline double reg_lower_gamma(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("reg_lower_gamma: bad arguments");
  if (x == 0.0) return 0.0;
  const double log_gamma_a = std::lgamma(a);
  if (x < a + 1.0) {
    // series expansion
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int it = 0; it < 1000; ++it) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - log_gamma_a);
  }
  // continued fraction (modified Lentz)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  const double q = std::exp(-x + a * std::log(x) - log_gamma_a) * h;
  return 1.0 - q;
}

// Survival function of the chi-square distribution.
inline double chi2_sf(double x, double df) { return 1.0 - reg_lower_gamma(0.5 * df, 0.5 * x); }

}  // namespace nbcar_tests

#endif  // NBCAR_TESTS_STAT_UTIL_HPP
