#pragma once

// Reference values computed independently of the library.

#include <cmath>
#include <numbers>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

// zeta(s), s > 1: partial sum plus Euler-Maclaurin tail.
inline double zeta(double s) {
  const int N = 64;
  long double acc = 0.0L;
  for (int n = 1; n < N; ++n) acc += std::pow(static_cast<long double>(n), -static_cast<long double>(s));
  const long double x = N;
  const long double ss = s;
  acc += std::pow(x, 1.0L - ss) / (ss - 1.0L) + 0.5L * std::pow(x, -ss) +
         ss / 12.0L * std::pow(x, -ss - 1.0L) -
         ss * (ss + 1.0L) * (ss + 2.0L) / 720.0L * std::pow(x, -ss - 3.0L) +
         ss * (ss + 1.0L) * (ss + 2.0L) * (ss + 3.0L) * (ss + 4.0L) / 30240.0L * std::pow(x, -ss - 5.0L);
  return static_cast<double>(acc);
}

// Li_s(z) for 0 <= z < 1 by direct summation.
inline double polylog(double s, double z) {
  long double acc = 0.0L, zn = 1.0L;
  for (int n = 1; n < 4000; ++n) {
    zn *= z;
    const long double term = zn / std::pow(static_cast<long double>(n), static_cast<long double>(s));
    acc += term;
    if (term < 1e-22L * acc) break;
  }
  return static_cast<double>(acc);
}

// T_fc = c0 rho^{2/3}, from rho_c = zeta(3/2) (T / 4 pi)^{3/2}.
inline double c0() { return 4.0 * pi / std::pow(zeta(1.5), 2.0 / 3.0); }

// (2 pi)^-3 \int e^{-n p^2} dp.
inline double gauss_moment(double n) { return std::pow(pi / n, 1.5) / (8.0 * pi * pi * pi); }

// Free grand energy density at T, mu < 0: -T (T / 4 pi)^{3/2} Li_{5/2}(e^{mu/T}).
inline double free_grand(double T, double mu) {
  return -T * std::pow(T / (4.0 * pi), 1.5) * polylog(2.5, std::exp(mu / T));
}

// s(gamma, alpha) straight from beta.
inline double entropy(double g, double a) {
  const double b = std::sqrt((0.5 + g) * (0.5 + g) - a * a);
  const double lo = b - 0.5;
  return (b + 0.5) * std::log(b + 0.5) - (lo > 0.0 ? lo * std::log(lo) : 0.0);
}

}  // namespace oracle
