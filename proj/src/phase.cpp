#include "bogo/phase.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bogo/bose_functions.hpp"
#include "bogo/errors.hpp"
#include "bogo/parallel.hpp"

namespace bogo {

std::string to_string(Phase p) {
  switch (p) {
    case Phase::condensed: return "condensed";
    case Phase::normal: return "normal";
    default: return "unclassified";
  }
}

double condensate_scale(double control, Ensemble mode, const Potential& potential) {
  if (mode == Ensemble::canonical) return std::max(control, 1e-300);
  const double v0 = potential.vhat0();
  if (v0 > 0.0) return std::max(std::abs(control) / v0, 1e-300);
  return std::max(std::abs(control), 1e-300);
}

PhasePoint to_phase_point(const SolveReport& r, const SolverStack& stack) {
  PhasePoint pt;
  pt.T = r.T;
  pt.control = r.point.control;
  pt.mode = r.point.mode;
  pt.rho0 = r.state.rho0;
  pt.rho_gamma = r.rho_gamma;
  pt.alpha_max = r.alpha_max();
  pt.free_energy = r.free_energy.total;
  pt.delta = r.delta;
  pt.converged = r.converged;
  const double eps = stack.eps_cond_rel * condensate_scale(pt.control, pt.mode, *stack.potential);
  const bool cond = pt.rho0 > eps;
  const bool paired = pt.alpha_max > stack.eps_pair;
  pt.consistent = cond == paired;
  if (!r.converged) pt.phase = Phase::unclassified;
  else pt.phase = cond ? Phase::condensed : Phase::normal;
  return pt;
}

PhasePoint classify(double T, double control, Ensemble mode, const SolverStack& stack) {
  if (!stack.grid || !stack.potential) throw ConfigError("classify: incomplete solver stack");
  try {
    const auto r = solve({T, mode, control}, *stack.grid, *stack.potential, stack.config);
    return to_phase_point(r, stack);
  } catch (const NumericalError&) {
  } catch (const InfeasibleError&) {
  }
  PhasePoint pt;
  pt.T = T;
  pt.control = control;
  pt.mode = mode;
  pt.phase = Phase::unclassified;
  return pt;
}

namespace {

double reference_T(double control, Ensemble mode, const Potential& potential) {
  if (mode == Ensemble::canonical) return free_gas_c0() * std::pow(control, 2.0 / 3.0);
  if (control <= 0.0 || potential.vhat0() <= 0.0) return 0.0;
  return free_gas_c0() * std::pow(control / potential.vhat0(), 2.0 / 3.0);
}

}  // namespace

CriticalTemperature critical_temperature(double control, Ensemble mode, const SolverStack& stack,
                                         const CriticalOptions& opts) {
  CriticalTemperature ct;
  ct.control = control;
  ct.mode = mode;
  ct.T_fc = reference_T(control, mode, *stack.potential);
  if (!(ct.T_fc > 0.0)) {
    ct.message = "no condensed phase expected (mu <= 0 or Vhat(0) = 0)";
    return ct;
  }
  if (opts.scan_points < 2) throw ConfigError("critical_temperature: scan needs >= 2 points");
  const double tol = opts.tol_T > 0.0 ? opts.tol_T : 1e-4 * ct.T_fc;

  double T_lo = opts.T_min_factor * ct.T_fc, T_hi = opts.T_max_factor * ct.T_fc;
  for (int k = 0; k < 6 && classify(T_hi, control, mode, stack).phase == Phase::condensed; ++k)
    T_hi *= 2.0;
  for (int k = 0; k < 6 && classify(T_lo, control, mode, stack).phase == Phase::normal; ++k)
    T_lo *= 0.25;

  const std::size_t m = opts.scan_points;
  ct.scan.resize(m);
  parallel_for(m, stack.workers, [&](std::size_t k) {
    const double T = T_lo + (T_hi - T_lo) * static_cast<double>(k) / static_cast<double>(m - 1);
    ct.scan[k] = classify(T, control, mode, stack);
  });
  for (std::size_t k = 0; k + 1 < m; ++k)
    if (ct.scan[k].phase == Phase::condensed && ct.scan[k + 1].phase == Phase::normal)
      ct.crossings.push_back({ct.scan[k].T, ct.scan[k + 1].T});
  if (ct.crossings.empty()) {
    ct.message = "no condensed -> normal change on the scan [" + std::to_string(T_lo) + ", " +
                 std::to_string(T_hi) + "]";
    return ct;
  }

  double lo = ct.crossings.front().T_low, hi = ct.crossings.front().T_high;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const auto pm = classify(mid, control, mode, stack);
    if (pm.phase == Phase::condensed) {
      lo = mid;
    } else if (pm.phase == Phase::normal) {
      hi = mid;
    } else {
      ct.message = "unclassified point at T = " + std::to_string(mid) + " during bisection";
      break;
    }
  }
  ct.T_low = lo;
  ct.T_high = hi;
  ct.T_c = 0.5 * (lo + hi);
  ct.width = hi - lo;
  ct.low = classify(lo, control, mode, stack);
  ct.high = classify(hi, control, mode, stack);
  ct.endpoints_verified =
      ct.low.phase == Phase::condensed && ct.high.phase == Phase::normal;
  ct.found = ct.endpoints_verified && ct.width <= tol;
  if (!ct.endpoints_verified && ct.message.empty()) ct.message = "endpoint re-verification failed";
  return ct;
}

FreeGasBaseline free_gas_baseline(double T, double rho) {
  if (!(T > 0.0) || !(rho > 0.0)) throw ConfigError("free_gas_baseline: need T > 0 and rho > 0");
  FreeGasBaseline b;
  b.c0 = free_gas_c0();
  b.T_fc = b.c0 * std::pow(rho, 2.0 / 3.0);
  b.rho_fc = std::pow(T / b.c0, 1.5);
  b.F0 = free_canonical_energy(T, rho);
  return b;
}

double grid_free_critical_temperature(const RadialGrid& grid, double rho) {
  if (!(rho > 0.0)) throw ConfigError("grid_free_critical_temperature: rho must be > 0");
  auto dens = [&](double T) {
    return integrate_fn(grid, [T](double p) { return 1.0 / std::expm1(p * p / T); });
  };
  double lo = free_gas_c0() * std::pow(rho, 2.0 / 3.0), hi = lo;
  while (dens(lo) > rho) lo *= 0.5;
  while (dens(hi) < rho) hi *= 2.0;
  for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (dens(mid) < rho ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double i_integral(double s, const RadialGrid& grid) {
  if (s < 0.0) throw DomainError("i_integral: s must be >= 0");
  const double pm = grid.p_max();
  const double tail = (pm / 2.0 + 1.0) * std::exp(-pm * pm) / (2.0 * std::numbers::pi * std::numbers::pi);
  if (tail > 1e-10) throw ConfigError("i_integral: grid cutoff too small for a 1e-10 tail");
  const double c = 16.0 * std::numbers::pi * s * s;
  return integrate_fn(grid, [c](double p) {
    return std::log(-std::expm1(-std::sqrt(p * p * p * p + c * p * p)));
  });
}

DiluteAnchors dilute_anchors(const std::vector<double>& ladder, double lhy_x,
                             const SolverStack& stack) {
  const Potential& pot = *stack.potential;
  const double a = pot.scattering_length();
  if (!(a > 0.0)) throw ConfigError("dilute_anchors: needs an interacting potential (a > 0)");
  for (double x : ladder)
    if (!(x > 0.0 && x <= 0.1))
      throw ConfigError("dilute_anchors: rho^{1/3} a = " + std::to_string(x) +
                        " violates diluteness (need 0 < x <= 0.1)");
  if (!(lhy_x > 0.0 && lhy_x <= 0.1))
    throw ConfigError("dilute_anchors: LHY point violates diluteness");

  DiluteAnchors out;
  out.a = a;
  out.nu = pot.nu();
  out.rows.resize(ladder.size());
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    auto& row = out.rows[k];
    row.x = ladder[k];
    row.rho = std::pow(row.x / a, 3.0);
    row.T_fc = grid_free_critical_temperature(*stack.grid, row.rho);
    CriticalOptions opts;
    opts.scan_points = 9;
    opts.T_min_factor = 0.8;
    opts.T_max_factor = 1.4;
    opts.tol_T = 1e-5 * row.T_fc;
    const auto ct = critical_temperature(row.rho, Ensemble::canonical, stack, opts);
    row.found = ct.found;
    row.T_c = ct.T_c;
    row.T_c_width = ct.width;
    row.shift_ratio = (ct.T_c - row.T_fc) / (row.T_fc * row.x);
    row.shift_ratio_err = 0.5 * ct.width / (row.T_fc * row.x);
  }
  double sxy = 0.0, sxx = 0.0, serr = 0.0;
  for (const auto& row : out.rows) {
    if (!row.found) continue;
    const double y = (row.T_c - row.T_fc) / row.T_fc;
    sxy += row.x * y;
    sxx += row.x * row.x;
    serr += row.x * 0.5 * row.T_c_width / row.T_fc;
  }
  if (sxx > 0.0) {
    out.slope = sxy / sxx;
    out.slope_err = serr / sxx;
  }

  out.lhy_x = lhy_x;
  const double rho = std::pow(lhy_x / a, 3.0);
  const auto r = canonical_solve(0.0, rho, *stack.grid, pot, stack.config);
  const double lead = 4.0 * std::numbers::pi * a * rho * rho;
  out.lhy_ratio = r.free_energy.total / lead;
  out.lhy_with_correction =
      r.free_energy.total /
      (lead + 512.0 / 15.0 * std::sqrt(std::numbers::pi) * std::pow(rho * a, 2.5));
  return out;
}

double high_T_upper_bound(double T, double mu, const RadialGrid& grid, const Potential& potential) {
  if (!(T > 1.0)) throw DomainError("high_T_upper_bound: need T > 1");
  const double delta = 0.5 * T * std::log(T);
  GasState s = GasState::zeros(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double p = grid.node(i);
    s.gamma[i] = 1.0 / std::expm1((p * p + delta) / T);
  }
  return free_energy_grand(s, grid, potential, T, mu).total;
}

double onset_derivative(const GasState& state, double mu, const RadialGrid& grid,
                        const Potential& potential) {
  const auto vh = potential.vhat_nodes();
  double rg = 0.0, coup = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rg += grid.weight(i) * state.gamma[i];
    coup += grid.weight(i) * vh[i] * state.gamma[i];
  }
  return -mu + potential.vhat0() * rg + coup;
}

std::vector<PhasePoint> sweep(const std::vector<double>& temperatures,
                              const std::vector<double>& controls, Ensemble mode,
                              const SolverStack& stack) {
  const std::size_t nt = temperatures.size(), nc = controls.size();
  std::vector<PhasePoint> out(nt * nc);
  parallel_for(nt * nc, stack.workers, [&](std::size_t k) {
    out[k] = classify(temperatures[k / nc], controls[k % nc], mode, stack);
  });
  return out;
}

}  // namespace bogo
