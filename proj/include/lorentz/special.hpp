#pragma once
// Gamma machinery, terminating hypergeometric sums and zonal polynomials.

#include "lorentz/common.hpp"

#include <cmath>
#include <string>

namespace lorentz::special {

inline double log_gamma(double x) {
  if (!(x > 0)) throw Error(Errc::pole, "log_gamma needs x > 0, got " + std::to_string(x));
  return std::lgamma(x);
}

inline bool is_nonpositive_integer(double a) { return a <= 0 && a == std::floor(a); }

/// Pochhammer symbol (a)_m. Short products are multiplied out; long ones go through
/// log-Gamma with sign tracking.
inline double pochhammer(double a, int m) {
  if (m < 0) throw Error(Errc::invalid_input, "pochhammer needs m >= 0");
  if (m == 0) return 1.0;
  if (is_nonpositive_integer(a) && m > -a) return 0.0;
  if (m <= 64) {
    double p = 1.0;
    for (int j = 0; j < m; ++j) p *= a + j;
    return p;
  }
  int s1 = 1, s2 = 1;
  double l1 = lgamma_r(a + m, &s1);
  double l2 = lgamma_r(a, &s2);
  return s1 * s2 * std::exp(l1 - l2);
}

/// log |(a)_m| for a > 0.
inline double log_pochhammer(double a, int m) {
  if (!(a > 0)) throw Error(Errc::domain_error, "log_pochhammer needs a > 0");
  return log_gamma(a + m) - log_gamma(a);
}

/// Terminating Gauss series 2F1(a,b;c;x); a or b must be a nonpositive integer.
inline double gauss_2f1_terminating(double a, double b, double c, double x) {
  if (!is_nonpositive_integer(a) && !is_nonpositive_integer(b))
    throw Error(Errc::invalid_input, "2F1 series does not terminate");
  const int stop = static_cast<int>(std::min(is_nonpositive_integer(a) ? -a : 1e9,
                                             is_nonpositive_integer(b) ? -b : 1e9));
  CompensatedSum sum;
  double t = 1.0;
  sum.add(t);
  for (int k = 0; k < stop; ++k) {
    if (c + k == 0.0) throw Error(Errc::pole, "c hits a nonpositive integer before termination");
    t *= (a + k) * (b + k) / ((c + k) * (k + 1)) * x;
    sum.add(t);
  }
  return sum.value();
}

/// Zonal polynomial of S^{n-1} normalized to 1 at x = 1:
/// cos^m(xi) 2F1(-m/2, -(m-1)/2; (n-1)/2; -tan^2 xi), x = cos xi, written in the
/// finite form sum_k c_k x^{m-2k} (x^2-1)^k so that x = 0 needs no limit.
inline double phi_poly(int n, int m, double x) {
  if (n < 2 || m < 0) throw Error(Errc::invalid_input, "phi_poly needs n >= 2, m >= 0");
  if (std::abs(x) > 1.0) throw Error(Errc::domain_error, "phi_poly needs |x| <= 1");
  const double a = -0.5 * m, b = -0.5 * (m - 1), c = 0.5 * (n - 1);
  const double q = x * x - 1.0;
  CompensatedSum sum;
  double coef = 1.0;
  for (int k = 0; 2 * k <= m; ++k) {
    if (k > 0) coef *= (a + k - 1) * (b + k - 1) / ((c + k - 1) * k);
    sum.add(coef * std::pow(x, m - 2 * k) * std::pow(q, k));
  }
  return sum.value();
}

/// Normalized Gegenbauer values P_k(t) = C^lambda_k(t) / C^lambda_k(1), k = 0..kmax,
/// by the recurrence P_{k+1} = (2(k+lambda) t P_k - k P_{k-1}) / (k + 2 lambda).
/// lambda = 0 is the Chebyshev limit. phi_poly(N, k, t) equals P_k with lambda = (N-2)/2.
inline void normalized_gegenbauer(double lambda, int kmax, double t, double* out) {
  out[0] = 1.0;
  if (kmax == 0) return;
  out[1] = t;
  for (int k = 1; k < kmax; ++k) {
    if (lambda == 0.0)
      out[k + 1] = 2.0 * t * out[k] - out[k - 1];
    else
      out[k + 1] = (2.0 * (k + lambda) * t * out[k] - k * out[k - 1]) / (k + 2.0 * lambda);
  }
}

/// log of int_{-1}^{1} P_k(t)^2 (1-t^2)^{lambda-1/2} dt for the normalized Gegenbauer P_k.
inline double log_gegenbauer_norm2(double lambda, int k) {
  // pi 2^{1-2 lambda} k! Gamma(2 lambda)^2 / ((k+lambda) Gamma(lambda)^2 Gamma(k+2 lambda))
  return std::log(M_PI) + (1.0 - 2.0 * lambda) * std::log(2.0) + log_gamma(k + 1.0) +
         2.0 * log_gamma(2.0 * lambda) - std::log(k + lambda) - 2.0 * log_gamma(lambda) -
         log_gamma(k + 2.0 * lambda);
}

/// Normalizing constant of the polar density on S^{n-1}: 1 / int (1-t^2)^{(n-3)/2} dt.
inline double polar_density_constant(int n) {
  return std::exp(log_gamma(0.5 * n) - 0.5 * std::log(M_PI) - log_gamma(0.5 * (n - 1)));
}

}  // namespace lorentz::special
