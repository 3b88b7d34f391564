#include "bogo/validation.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "bogo/bose_functions.hpp"
#include "bogo/errors.hpp"
#include "bogo/functional.hpp"
#include "bogo/quasifree.hpp"
#include "bogo/solver.hpp"

namespace bogo {

namespace {

struct Rows {
  std::string suite;
  std::vector<ValidationRow> rows;

  // passes when value <= threshold
  void below(const std::string& name, double value, double threshold) {
    rows.push_back({suite, name, value, threshold, value <= threshold});
  }
  void check(const std::string& name, bool ok) {
    rows.push_back({suite, name, ok ? 1.0 : 0.0, 1.0, ok});
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<ValidationRow> functional_suite(std::uint64_t seed) {
  Rows r{"functional", {}};
  r.below("s(1, 0) = 2 ln 2", std::abs(entropy_density(1.0, 0.0) - 2.0 * std::numbers::ln2), 1e-14);
  {
    const double b = std::sqrt(5.0) / 2.0;
    const double ref = (b + 0.5) * std::log(b + 0.5) - (b - 0.5) * std::log(b - 0.5);
    r.below("s(1, 1) = s(sqrt5 / 2)", std::abs(entropy_density(1.0, 1.0) - ref), 1e-14);
  }
  r.below("s = 0 on alpha^2 = gamma (gamma + 1)",
          std::abs(entropy_density(2.0, std::sqrt(6.0))), 1e-12);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  bool nonneg = true, decreasing = true;
  for (int k = 0; k < 1000; ++k) {
    const double g = std::pow(10.0, -4.0 + 6.0 * u01(rng));
    const double a = (2.0 * u01(rng) - 1.0) * std::sqrt(g * (g + 1.0));
    const double s = entropy_density(g, a), s0 = entropy_density(g, 0.0);
    nonneg = nonneg && s >= 0.0;
    if (a != 0.0) decreasing = decreasing && s < s0;
  }
  r.check("s >= 0 on 1000 random admissible points", nonneg);
  r.check("s(gamma, alpha) < s(gamma, 0) for alpha != 0", decreasing);

  const auto grid = build_grid(64, 20.0);
  const auto pot = gaussian_potential(1.0, 1.0, grid);
  const std::size_t n = grid.size();
  const double T = 1.0, rho = 1.0;
  double worst = 0.0;
  bool strict = true;
  for (int k = 0; k < 100; ++k) {
    GasState s1 = GasState::zeros(n), s2 = GasState::zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = grid.node(i);
      const double env = std::exp(-p * p / 4.0);
      s1.gamma[i] = env * (0.1 + u01(rng));
      s2.gamma[i] = env * (0.1 + u01(rng));
    }
    // equal rho_gamma, hence equal rho0 = rho - rho_gamma
    const double target = 0.3 * rho;
    const double f1 = target / integrate(grid, s1.gamma), f2 = target / integrate(grid, s2.gamma);
    for (std::size_t i = 0; i < n; ++i) {
      s1.gamma[i] *= f1;
      s2.gamma[i] *= f2;
      s1.alpha[i] = (2.0 * u01(rng) - 1.0) * std::sqrt(s1.gamma[i] * (s1.gamma[i] + 1.0));
      s2.alpha[i] = (2.0 * u01(rng) - 1.0) * std::sqrt(s2.gamma[i] * (s2.gamma[i] + 1.0));
    }
    GasState mid = GasState::zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
      mid.gamma[i] = 0.5 * (s1.gamma[i] + s2.gamma[i]);
      mid.alpha[i] = 0.5 * (s1.alpha[i] + s2.alpha[i]);
    }
    const double F1 = free_energy_canonical(s1, grid, pot, T, rho).total;
    const double F2 = free_energy_canonical(s2, grid, pot, T, rho).total;
    const double Fm = free_energy_canonical(mid, grid, pot, T, rho).total;
    const double defect = 0.5 * (F1 + F2) - Fm;
    worst = std::min(worst, defect);
    strict = strict && defect > 0.0;
  }
  r.below("midpoint convexity defect >= 0 (negated worst)", -worst, 0.0);
  r.check("strict convexity for distinct states", strict);

  {
    GasState s = GasState::zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
      s.gamma[i] = std::exp(-grid.node(i)) * 0.7;
      s.alpha[i] = -0.3 * s.gamma[i];
    }
    s.rho0 = 0.2;
    const auto e = free_energy_grand(s, grid, pot, T, 0.5);
    r.below("total = sum of parts", std::abs(e.total - e.sum_of_parts()), 1e-13 * std::abs(e.total));
    std::stringstream io;
    write_state(io, s, grid, StateHeader{s.rho0, T, Ensemble::grand, 0.5, pot.fingerprint()});
    const auto back = read_state(io);
    r.check("state file round trip is exact",
            back.state.gamma == s.gamma && back.state.alpha == s.alpha && back.state.rho0 == s.rho0);
  }
  return r.rows;
}

std::vector<ValidationRow> solver_suite(std::uint64_t seed) {
  Rows r{"solver", {}};
  const auto grid = build_grid(256, 20.0);
  const SolverConfig cfg;
  {
    const auto zero = zero_potential(grid);
    const auto rep = grand_canonical_solve(1.0, -1.0, grid, zero, cfg);
    double err = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double p = grid.node(i);
      const double ref = 1.0 / std::expm1(p * p + 1.0);
      err = std::max(err, rel(rep.state.gamma[i], ref));
    }
    r.below("free gas: sup relative error of gamma", err, 1e-6);
    r.below("free gas: relative error of F", rel(rep.free_energy.total, free_grand_energy(1.0, -1.0)),
            1e-5);
  }
  const auto pot = gaussian_potential(1.0, 1.0, grid);
  {
    const auto rep = grand_canonical_solve(0.0, -1.0, grid, pot, cfg);
    bool zero = rep.state.rho0 == 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      zero = zero && rep.state.gamma[i] == 0.0 && rep.state.alpha[i] == 0.0;
    r.check("vacuum at T = 0, mu = -1: F = 0 and zero state", zero && rep.free_energy.total == 0.0);
  }
  {
    const double mu = 1.0, v0 = pot.vhat0();
    GasState pure = GasState::zeros(grid.size());
    pure.rho0 = mu / v0;
    const double Fp = free_energy_grand(pure, grid, pot, 0.0, mu).total;
    r.below("pure condensate energy = -mu^2 / 2 Vhat(0)", rel(Fp, -mu * mu / (2.0 * v0)), 1e-14);
    const auto rep = grand_canonical_solve(0.0, mu, grid, pot, cfg);
    r.check("T = 0 minimizer strictly below the pure condensate",
            rep.converged && rep.free_energy.total < -mu * mu / (2.0 * v0));
  }
  const std::vector<ThermoPoint> points{ThermoPoint::grand(0.5, 1.0), ThermoPoint::grand(2.0, 1.0),
                                        ThermoPoint::canonical(3.0, 1.0)};
  for (const auto& pt : points) {
    std::ostringstream name;
    name << to_string(pt.mode) << " T=" << pt.T << " control=" << pt.control;
    const auto rep = solve(pt, grid, pot, cfg);
    r.check(name.str() + ": converged", rep.converged);
    r.below(name.str() + ": scaled residual", std::max(rep.residual_gamma, rep.residual_alpha), 1e-8);
    const auto probe = minimality_probe(rep, grid, pot, 50, 1e-10, seed);
    r.below(name.str() + ": worst decrease over 50 perturbations", probe.worst_decrease, 1e-10);
  }
  return r.rows;
}

std::vector<ValidationRow> quasifree_suite() {
  std::vector<ValidationRow> out;
  for (const auto& row : quasifree::run_suite())
    out.push_back({"quasifree", row.name, row.deviation, row.tolerance, row.passed});
  return out;
}

}  // namespace

std::vector<ValidationRow> run_validation_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "functional") return functional_suite(seed);
  if (suite == "solver") return solver_suite(seed);
  if (suite == "quasifree") return quasifree_suite();
  throw ConfigError("unknown validation suite '" + suite + "' (functional, solver, quasifree)");
}

}  // namespace bogo
