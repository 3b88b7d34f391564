#include "bogo/bose_functions.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/zeta.hpp>
#include <boost/math/tools/roots.hpp>

#include "bogo/errors.hpp"

namespace bogo {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kSmallX = 0.75;  // below this x the series in z = e^{-x} converges too slowly
}  // namespace

double riemann_zeta(double s) { return boost::math::zeta(s); }

double bose_g(double s, double x) {
  if (!(s > 1.0)) throw DomainError("bose_g: need s > 1");
  if (x < 0.0) throw DomainError("bose_g: need x >= 0");
  if (x == 0.0) return riemann_zeta(s);
  if (x >= kSmallX) {
    const double z = std::exp(-x);
    double term_z = z, acc = 0.0;
    for (int n = 1; n < 2000; ++n) {
      const double t = term_z / std::pow(static_cast<double>(n), s);
      acc += t;
      if (t < 1e-18 * acc) break;
      term_z *= z;
    }
    return acc;
  }
  // Gamma(1-s) x^{s-1} + sum_k zeta(s-k) (-x)^k / k!, valid for x < 2 pi
  double acc = boost::math::tgamma(1.0 - s) * std::pow(x, s - 1.0);
  double fact = 1.0, xk = 1.0;
  for (int k = 0; k < 60; ++k) {
    if (k > 0) {
      fact *= k;
      xk *= -x;
    }
    const double t = riemann_zeta(s - k) * xk / fact;
    acc += t;
    if (k > 4 && std::abs(t) < 1e-18 * std::abs(acc)) break;
  }
  return acc;
}

double polylog(double s, double z) {
  if (!(z >= 0.0 && z <= 1.0)) throw DomainError("polylog: need 0 <= z <= 1");
  if (z == 0.0) return 0.0;
  return bose_g(s, -std::log(z));
}

double free_gas_c0() {
  static const double c0 = 4.0 * kPi / std::pow(riemann_zeta(1.5), 2.0 / 3.0);
  return c0;
}

double free_density(double T, double mu) {
  if (!(T > 0.0)) throw DomainError("free_density: need T > 0");
  if (mu > 0.0) throw DomainError("free_density: need mu <= 0");
  return std::pow(T / (4.0 * kPi), 1.5) * bose_g(1.5, -mu / T);
}

double free_grand_energy(double T, double mu) {
  if (!(T > 0.0)) throw DomainError("free_grand_energy: need T > 0");
  if (mu > 0.0) throw DomainError("free_grand_energy: need mu <= 0");
  return -T * std::pow(T / (4.0 * kPi), 1.5) * bose_g(2.5, -mu / T);
}

double free_critical_density(double T) {
  if (T <= 0.0) return 0.0;
  return riemann_zeta(1.5) * std::pow(T / (4.0 * kPi), 1.5);
}

double free_mu_for_density(double T, double rho) {
  if (!(T > 0.0)) throw DomainError("free_mu_for_density: need T > 0");
  if (!(rho > 0.0)) throw DomainError("free_mu_for_density: need rho > 0");
  if (rho >= free_critical_density(T)) return 0.0;
  // g_{3/2}(e^{-x}) is decreasing in x; solve in x = -mu/T
  const double target = rho / std::pow(T / (4.0 * kPi), 1.5);
  auto f = [&](double x) { return bose_g(1.5, x) - target; };
  double hi = 1.0;
  while (f(hi) > 0.0) hi *= 2.0;
  double lo = hi / 2.0;
  while (lo > 1e-300 && f(lo) < 0.0) lo /= 2.0;
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52),
                                                   iters);
  return -T * 0.5 * (r.first + r.second);
}

double free_canonical_energy(double T, double rho) {
  if (rho == 0.0) return 0.0;
  if (T <= 0.0) return 0.0;
  const double mu = free_mu_for_density(T, rho);
  return free_grand_energy(T, mu) + mu * rho;
}

}  // namespace bogo
