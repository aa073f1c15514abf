#pragma once

#include <cmath>

namespace gcrit::special {

/// J_n(w) / w^n for integer n >= 0 and w >= 0, continuous at w = 0 where it
/// equals 1 / (2^n n!). Power series below w = 8, library Bessel above.
inline long double bessel_j_ratio(int n, long double w) {
  w = std::fabs(w);
  if (w < 8.0L) {
    const long double q = -0.25L * w * w;
    long double term = 1.0L;
    for (int i = 1; i <= n; ++i) term /= (2.0L * static_cast<long double>(i));
    long double sum = term;
    for (int j = 1; j < 200; ++j) {
      term *= q / (static_cast<long double>(j) * static_cast<long double>(j + n));
      sum += term;
      if (std::fabs(term) < 1e-22L * std::fabs(sum)) break;
    }
    return sum;
  }
  return std::cyl_bessel_j(static_cast<long double>(n), w) / std::pow(w, static_cast<long double>(n));
}

inline double bessel_j0(double x) { return static_cast<double>(bessel_j_ratio(0, x)); }

inline long double factorial(int n) {
  long double f = 1.0L;
  for (int i = 2; i <= n; ++i) f *= static_cast<long double>(i);
  return f;
}

/// (n-1)!! with (-1)!! = 1.
inline long double double_factorial_odd(int n) {
  long double f = 1.0L;
  for (int i = n - 1; i > 1; i -= 2) f *= static_cast<long double>(i);
  return f;
}

}  // namespace gcrit::special
