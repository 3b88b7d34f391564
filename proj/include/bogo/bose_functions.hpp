#pragma once

namespace bogo {

/// Riemann zeta for real s != 1.
double riemann_zeta(double s);

/// Bose function g_s(e^{-x}) = sum_{n>=1} e^{-n x} / n^s for x >= 0, s > 1.
double bose_g(double s, double x);

/// Li_s(z) for 0 <= z <= 1, s > 1.
double polylog(double s, double z);

/// 4 pi / zeta(3/2)^{2/3}: T_fc = c0 rho^{2/3} for the ideal gas (hbar = 2m = 1).
double free_gas_c0();

/// Ideal gas density (T / 4 pi)^{3/2} g_{3/2}(e^{mu/T}), mu <= 0, T > 0.
double free_density(double T, double mu);

/// Ideal gas grand potential density -T (T / 4 pi)^{3/2} g_{5/2}(e^{mu/T}), mu <= 0.
double free_grand_energy(double T, double mu);

/// rho_c(T) = zeta(3/2) (T / 4 pi)^{3/2}.
double free_critical_density(double T);

/// Chemical potential with free_density(T, mu) = rho; 0 at and above rho_c(T).
double free_mu_for_density(double T, double rho);

/// Ideal gas canonical free energy density at (T, rho); the excess above rho_c
/// sits in the zero mode and contributes nothing.
double free_canonical_energy(double T, double rho);

}  // namespace bogo
