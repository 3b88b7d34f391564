#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bogo/functional.hpp"
#include "bogo/potential.hpp"
#include "bogo/radial_grid.hpp"

namespace bogo {

/// Euler-Lagrange fields. For T > 0: A = (p^2 - delta + Vhat(0) rho + rho0 Vhat + Vhat*gamma) / T,
/// B = (rho0 Vhat + Vhat*alpha) / T, G = sqrt(A^2 - B^2). For T = 0 the same without the 1/T
/// (a, b, g in energy units); zero_temperature marks which.
struct ELFields {
  std::vector<double> A, B, G;
  bool zero_temperature = false;
  bool feasible = true;  // A > |B| at every node
};

struct Rho0OptimizerConfig {
  std::size_t scan_points = 17;
  double tol = 1e-9;  // relative to rho
  std::size_t max_iter = 80;
};

struct SolverConfig {
  double eta = 0.5;
  double tol_residual = 1e-10;  // scaled sup-norm of the EL derivatives
  double tol_density = 1e-12;   // relative
  std::size_t max_iter = 4000;
  std::size_t anderson_depth = 6;
  std::optional<double> kappa_cap;
  Rho0OptimizerConfig rho0_optimizer;
  bool t0_mode = false;  // force the zero-temperature branch regardless of T
  std::uint64_t seed = 12345;

  /// Throws ConfigError on eta outside (0, 1], non-positive tolerances, or kappa <= max(1, T).
  void validate(double T) const;
};

struct SolveReport {
  GasState state;
  EnergyBreakdown free_energy;
  double T = 0.0;
  ThermoPoint point;
  double rho_gamma = 0.0;
  double rho_total = 0.0;
  double residual_gamma = 0.0;
  double residual_alpha = 0.0;
  std::size_t iterations = 0;  // field updates after the initial evaluation
  bool converged = false;
  double delta = 0.0;         // multiplier (canonical) or mu (grand)
  std::string branch;         // vacuum | normal | condensed
  double p_kappa = 0.0;       // largest node where the kappa cap is active, 0 if none
  std::string message;
  std::shared_ptr<const SolveReport> secondary_minimum;

  double alpha_max() const;
};

/// Pointwise closed forms of the EL system; A > |B| required (throws NumericalError otherwise).
std::pair<double, double> el_point(double A, double B);
/// Zero-temperature limit: gamma = (a - g) / 2g, alpha = -b / 2g.
std::pair<double, double> el_point_T0(double a, double b);

/// EL fields at a state. rho_direct overrides the density in the Vhat(0) rho term
/// (canonical problems); by default rho0 + rho_gamma.
ELFields compute_AB(const GasState& state, const RadialGrid& grid, const Potential& potential,
                    double T, double delta, double rho0,
                    std::optional<double> rho_direct = std::nullopt);

/// (gamma, alpha) from fields; throws NumericalError at a node with G = 0 or |B| >= A.
std::pair<std::vector<double>, std::vector<double>> el_update(const ELFields& fields);

/// Fixed point of the EL system at fixed delta and rho0 (the Vhat(0) rho term uses rho0 + rho_gamma).
/// Reports the grand functional at mu = delta.
SolveReport fixed_point_solve(double T, double delta, double rho0, const RadialGrid& grid,
                              const Potential& potential, const SolverConfig& config,
                              const GasState* init = nullptr);

struct T0Mode {
  enum Kind { grand, fixed } kind = grand;
  double mu_or_delta = 0.0;
  double rho0 = 0.0;  // fixed mode only
  static T0Mode grand_mu(double mu) { return {grand, mu, 0.0}; }
  static T0Mode fixed_point(double delta, double rho0) { return {fixed, delta, rho0}; }
};

SolveReport solve_T0(const T0Mode& mode, const RadialGrid& grid, const Potential& potential,
                     const SolverConfig& config);

SolveReport canonical_solve(double T, double rho, const RadialGrid& grid,
                            const Potential& potential, const SolverConfig& config);

SolveReport grand_canonical_solve(double T, double mu, const RadialGrid& grid,
                                  const Potential& potential, const SolverConfig& config);

SolveReport solve(const ThermoPoint& point, const RadialGrid& grid, const Potential& potential,
                  const SolverConfig& config);

/// Canonical problem at fixed rho0: minimize over (gamma, alpha) with rho_gamma = rho - rho0.
SolveReport canonical_fixed_rho0(double T, double rho, double rho0, const RadialGrid& grid,
                                 const Potential& potential, const SolverConfig& config,
                                 const GasState* init = nullptr);

struct MinimalityProbe {
  std::size_t trials = 0;
  double worst_decrease = 0.0;  // max(F_converged - F_perturbed, 0)
  bool passed = true;
};

/// Random admissible perturbations (fixed seed) of a converged report; checks that none
/// lowers the free energy by more than tol.
MinimalityProbe minimality_probe(const SolveReport& report, const RadialGrid& grid,
                                 const Potential& potential, std::size_t trials, double tol,
                                 std::uint64_t seed);

struct MultiStartAudit {
  std::vector<double> free_energies;
  double spread = 0.0;
  bool all_converged = true;
};

/// Re-solves a fixed-(delta, rho0) problem from three different initializations.
MultiStartAudit multi_start_audit(double T, double delta, double rho0, const RadialGrid& grid,
                                  const Potential& potential, const SolverConfig& config);

}  // namespace bogo
