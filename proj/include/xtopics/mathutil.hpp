#pragma once

#include <cmath>

namespace xtopics {

// Digamma via upward recurrence + asymptotic series.
inline double digamma(double x) {
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
  return result;
}

// Regularized upper incomplete gamma Q(a, x); used for chi-square p-values.
double gamma_q(double a, double x);

// P-value of a chi-square statistic with df degrees of freedom.
inline double chi_square_pvalue(double stat, int df) {
  return gamma_q(0.5 * df, 0.5 * stat);
}

}  // namespace xtopics
