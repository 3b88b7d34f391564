#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bogo/functional.hpp"
#include "bogo/potential.hpp"
#include "bogo/radial_grid.hpp"
#include "bogo/solver.hpp"

namespace bogo {

enum class Phase { condensed, normal, unclassified };
std::string to_string(Phase p);

/// Everything a classification needs: grid, potential, solver settings and thresholds.
struct SolverStack {
  const RadialGrid* grid = nullptr;
  const Potential* potential = nullptr;
  SolverConfig config;
  double eps_cond_rel = 1e-8;  // rho0 threshold relative to mu / Vhat(0) or rho
  double eps_pair = 1e-6;      // max |alpha| threshold
  std::size_t workers = 1;
};

struct PhasePoint {
  double T = 0.0;
  double control = 0.0;
  Ensemble mode = Ensemble::grand;
  double rho0 = 0.0;
  double rho_gamma = 0.0;
  double alpha_max = 0.0;
  double free_energy = 0.0;
  double delta = 0.0;  // mu (grand) or the multiplier (canonical effective chemical potential)
  Phase phase = Phase::unclassified;
  bool converged = false;
  bool consistent = true;  // (rho0 > eps) == (alpha_max > eps')
};

/// Density scale used for the condensate threshold.
double condensate_scale(double control, Ensemble mode, const Potential& potential);

PhasePoint classify(double T, double control, Ensemble mode, const SolverStack& stack);
PhasePoint to_phase_point(const SolveReport& report, const SolverStack& stack);

struct Bracket {
  double T_low = 0.0;   // condensed side
  double T_high = 0.0;  // normal side
};

struct CriticalTemperature {
  bool found = false;
  double T_low = 0.0;
  double T_high = 0.0;
  double T_c = 0.0;
  double width = 0.0;
  double control = 0.0;
  Ensemble mode = Ensemble::grand;
  double T_fc = 0.0;  // ideal gas reference (canonical) or its mean-field analogue (grand)
  PhasePoint low, high;
  bool endpoints_verified = false;
  std::vector<Bracket> crossings;  // every condensed -> normal change on the coarse scan
  std::vector<PhasePoint> scan;
  std::string message;
};

struct CriticalOptions {
  std::size_t scan_points = 33;
  double tol_T = 0.0;          // absolute; 0 means 1e-4 * T_fc
  double T_min_factor = 0.05;  // initial range [factor_min, factor_max] * T_fc
  double T_max_factor = 3.0;
};

/// Coarse scan, then bisection of the first condensed -> normal crossing to width <= tol_T,
/// with both endpoints re-solved from scratch.
CriticalTemperature critical_temperature(double control, Ensemble mode,
                                         const SolverStack& stack,
                                         const CriticalOptions& opts = {});

struct FreeGasBaseline {
  double c0 = 0.0;
  double T_fc = 0.0;   // c0 rho^{2/3}
  double rho_fc = 0.0; // (T / c0)^{3/2}
  double F0 = 0.0;     // ideal gas canonical free energy density at (T, rho)
};
FreeGasBaseline free_gas_baseline(double T, double rho);

/// Ideal gas critical temperature of the discretized problem: sum_i w_i / (e^{p_i^2/T} - 1) = rho.
double grid_free_critical_temperature(const RadialGrid& grid, double rho);

/// (2pi)^-3 \int ln(1 - exp(-sqrt(p^4 + 16 pi p^2 s^2))) dp on the grid.
double i_integral(double s, const RadialGrid& grid);

/// Reference constants for the dilute limit at nu = 8 pi.
inline constexpr double kH1At8Pi = 1.49;
inline constexpr double kH2At8Pi = 0.44;

struct DiluteAnchorRow {
  double x = 0.0;  // rho^{1/3} a
  double rho = 0.0;
  double T_fc = 0.0;
  double T_c = 0.0;
  double T_c_width = 0.0;
  double shift_ratio = 0.0;        // (T_c - T_fc) / (T_fc x)
  double shift_ratio_err = 0.0;    // from the bracket width
  bool found = false;
};

struct DiluteAnchors {
  double a = 0.0;
  double nu = 0.0;
  std::vector<DiluteAnchorRow> rows;
  double slope = 0.0;  // least-squares slope of Delta T_c / T_fc against x through the origin
  double slope_err = 0.0;
  double lhy_x = 0.0;
  double lhy_ratio = 0.0;  // F_can(T=0) / (4 pi a rho^2)
  double lhy_with_correction = 0.0;  // F_can / (4 pi a rho^2 + (512/15) sqrt(pi) (rho a)^{5/2})
  double h1_reference = kH1At8Pi;
};

/// Canonical dilute-limit comparisons over a ladder of rho^{1/3} a; refuses x > 0.1.
DiluteAnchors dilute_anchors(const std::vector<double>& ladder, double lhy_x,
                             const SolverStack& stack);

/// F(gamma_delta, 0, 0) for gamma_delta = 1 / (e^{(p^2 + delta)/T} - 1), delta = (T/2) ln T; T > 1.
double high_T_upper_bound(double T, double mu, const RadialGrid& grid, const Potential& potential);

/// dF/drho0 at rho0 = 0 for a normal state: -mu + Vhat(0) \int gamma + \int Vhat gamma.
double onset_derivative(const GasState& state, double mu, const RadialGrid& grid,
                        const Potential& potential);

/// All (T, control) pairs, solved on the worker pool; result order is row-major in (T, control).
std::vector<PhasePoint> sweep(const std::vector<double>& temperatures,
                              const std::vector<double>& controls, Ensemble mode,
                              const SolverStack& stack);

}  // namespace bogo
