#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bogo/potential.hpp"
#include "bogo/radial_grid.hpp"

namespace bogo {

/// (gamma_i, alpha_i) at the grid nodes plus the condensate density rho0.
struct GasState {
  std::vector<double> gamma;
  std::vector<double> alpha;
  double rho0 = 0.0;

  static GasState zeros(std::size_t n) { return {std::vector<double>(n), std::vector<double>(n), 0.0}; }
  std::size_t size() const { return gamma.size(); }
};

enum class Ensemble { grand, canonical };
std::string to_string(Ensemble e);
Ensemble ensemble_from_string(const std::string& s);

/// Temperature plus the ensemble control: mu (grand) or rho (canonical).
struct ThermoPoint {
  double T = 0.0;
  Ensemble mode = Ensemble::grand;
  double control = 0.0;

  static ThermoPoint grand(double T, double mu) { return {T, Ensemble::grand, mu}; }
  static ThermoPoint canonical(double T, double rho) { return {T, Ensemble::canonical, rho}; }
};

struct EnergyBreakdown {
  double kinetic = 0.0;
  double entropy_term = 0.0;         // -T S
  double direct = 0.0;               // Vhat(0) rho^2 / 2
  double exchange_gamma = 0.0;       // (1/2) \iint Vhat(p-q) gamma gamma
  double pairing = 0.0;              // (1/2) \iint Vhat(p-q) alpha alpha
  double condensate_coupling = 0.0;  // rho0 \int Vhat (gamma + alpha)
  double mu_term = 0.0;              // -mu rho (0 in the canonical functional)
  double total = 0.0;

  double entropy = 0.0;
  double rho_gamma = 0.0;
  double rho = 0.0;

  double sum_of_parts() const {
    return kinetic + entropy_term + direct + exchange_gamma + pairing + condensate_coupling +
           mu_term;
  }
};

/// sqrt((1/2 + gamma)^2 - alpha^2); throws DomainError outside the admissible set.
double beta_of(double gamma, double alpha);

/// s(beta) = (beta + 1/2) ln(beta + 1/2) - (beta - 1/2) ln(beta - 1/2).
double entropy_of_beta(double beta);
/// s(beta(gamma, alpha)) evaluated through beta - 1/2 without cancellation.
double entropy_density(double gamma, double alpha);

/// (2pi)^-3 \int s(beta(p)) dp.
double entropy_total(const GasState& state, const RadialGrid& grid);

EnergyBreakdown free_energy_grand(const GasState& state, const RadialGrid& grid,
                                  const Potential& potential, double T, double mu);

/// Canonical functional at density rho; rho0 is taken to be rho - rho_gamma
/// and state.rho0 is ignored. Throws InfeasibleError when rho_gamma > rho.
EnergyBreakdown free_energy_canonical(const GasState& state, const RadialGrid& grid,
                                      const Potential& potential, double T, double rho);

EnergyBreakdown free_energy(const GasState& state, const RadialGrid& grid,
                            const Potential& potential, const ThermoPoint& point);

inline constexpr double kDomainTol = 1e-12;

struct DomainViolation {
  long node = -1;  // -1 for rho0 or size problems
  std::string what;
};

/// Empty iff gamma >= 0, alpha^2 <= gamma (gamma + 1) (relative tolerance 1e-12) and rho0 >= 0.
std::vector<DomainViolation> check_domain(const GasState& state);

struct StateHeader {
  double rho0 = 0.0;
  double T = 0.0;
  Ensemble mode = Ensemble::grand;
  double control = 0.0;
  std::uint64_t potential_fingerprint = 0;
};

/// Columnar text (p gamma alpha) with a '#' header; shortest round-trip formatting.
void write_state(std::ostream& out, const GasState& state, const RadialGrid& grid,
                 const StateHeader& header);

struct LoadedState {
  GasState state;
  std::vector<double> nodes;
  StateHeader header;
};
LoadedState read_state(std::istream& in);

}  // namespace bogo
