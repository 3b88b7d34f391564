#include "bogo/functional.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "bogo/errors.hpp"

namespace bogo {

std::string to_string(Ensemble e) { return e == Ensemble::grand ? "grand" : "canonical"; }

Ensemble ensemble_from_string(const std::string& s) {
  if (s == "grand") return Ensemble::grand;
  if (s == "canonical") return Ensemble::canonical;
  throw ConfigError("unknown mode '" + s + "' (expected grand|canonical)");
}

namespace {

// beta - 1/2 = (gamma (1 + gamma) - alpha^2) / (beta + 1/2)
double beta_minus_half(double gamma, double alpha) {
  const double det = gamma * (1.0 + gamma) - alpha * alpha;
  if (gamma < 0.0 || det < -kDomainTol * std::max(1.0, gamma * (1.0 + gamma)))
    throw DomainError("state outside the admissible set (gamma=" + std::to_string(gamma) +
                      ", alpha=" + std::to_string(alpha) + ")");
  if (det <= 0.0) return 0.0;
  const double beta = std::sqrt((0.5 + gamma) * (0.5 + gamma) - alpha * alpha);
  return det / (beta + 0.5);
}

double s_from_d(double d) {
  // (1 + d) ln(1 + d) - d ln d, with d ln d -> 0 below 1e-12
  const double dlnd = d < 1e-12 ? 0.0 : d * std::log(d);
  return (1.0 + d) * std::log1p(d) - dlnd;
}

}  // namespace

double beta_of(double gamma, double alpha) { return 0.5 + beta_minus_half(gamma, alpha); }

double entropy_of_beta(double beta) {
  if (beta < 0.5) throw DomainError("entropy: beta < 1/2");
  return s_from_d(beta - 0.5);
}

double entropy_density(double gamma, double alpha) {
  return s_from_d(beta_minus_half(gamma, alpha));
}

double entropy_total(const GasState& state, const RadialGrid& grid) {
  if (state.gamma.size() != grid.size() || state.alpha.size() != grid.size())
    throw ConfigError("entropy_total: state/grid size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    acc += grid.weight(i) * entropy_density(state.gamma[i], state.alpha[i]);
  return acc;
}

namespace {

EnergyBreakdown evaluate(const GasState& state, const RadialGrid& grid, const Potential& potential,
                         double T, double rho0, double rho, double mu, bool grand) {
  const std::size_t n = grid.size();
  if (state.gamma.size() != n || state.alpha.size() != n)
    throw ConfigError("free energy: state/grid size mismatch");
  if (T < 0.0) throw DomainError("free energy: T < 0");
  if (rho0 < 0.0) throw DomainError("free energy: rho0 < 0");

  const auto vh = potential.vhat_nodes();
  std::vector<double> cg(n), ca(n);
  convolve_into(grid, potential.kernel(), state.gamma, cg);
  convolve_into(grid, potential.kernel(), state.alpha, ca);

  EnergyBreakdown e;
  double kin = 0, s = 0, exg = 0, pair = 0, coup = 0, rg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = grid.weight(i), p = grid.node(i);
    const double g = state.gamma[i], a = state.alpha[i];
    kin += w * p * p * g;
    s += w * entropy_density(g, a);
    exg += w * g * cg[i];
    pair += w * a * ca[i];
    coup += w * vh[i] * (g + a);
    rg += w * g;
  }
  e.rho_gamma = rg;
  e.rho = grand ? rho0 + rg : rho;
  e.entropy = s;
  e.kinetic = kin;
  e.entropy_term = T > 0.0 ? -T * s : 0.0;
  e.direct = 0.5 * potential.vhat0() * e.rho * e.rho;
  e.exchange_gamma = 0.5 * exg;
  e.pairing = 0.5 * pair;
  e.condensate_coupling = rho0 * coup;
  e.mu_term = grand ? -mu * e.rho : 0.0;
  e.total = e.sum_of_parts();
  if (!std::isfinite(e.total)) throw NumericalError("free energy: non-finite total");
  return e;
}

}  // namespace

EnergyBreakdown free_energy_grand(const GasState& state, const RadialGrid& grid,
                                  const Potential& potential, double T, double mu) {
  return evaluate(state, grid, potential, T, state.rho0, 0.0, mu, true);
}

EnergyBreakdown free_energy_canonical(const GasState& state, const RadialGrid& grid,
                                      const Potential& potential, double T, double rho) {
  if (rho < 0.0) throw DomainError("canonical free energy: rho < 0");
  const double rg = integrate(grid, state.gamma);
  if (rg > rho * (1.0 + 1e-12) + 1e-300)
    throw InfeasibleError("canonical free energy: rho_gamma = " + std::to_string(rg) +
                          " exceeds rho = " + std::to_string(rho));
  const double rho0 = std::max(0.0, rho - rg);
  return evaluate(state, grid, potential, T, rho0, rho, 0.0, false);
}

EnergyBreakdown free_energy(const GasState& state, const RadialGrid& grid,
                            const Potential& potential, const ThermoPoint& point) {
  if (point.mode == Ensemble::grand)
    return free_energy_grand(state, grid, potential, point.T, point.control);
  return free_energy_canonical(state, grid, potential, point.T, point.control);
}

std::vector<DomainViolation> check_domain(const GasState& state) {
  std::vector<DomainViolation> out;
  if (state.gamma.size() != state.alpha.size())
    out.push_back({-1, "gamma and alpha lengths differ"});
  if (!(state.rho0 >= 0.0)) out.push_back({-1, "rho0 = " + std::to_string(state.rho0) + " < 0"});
  const std::size_t n = std::min(state.gamma.size(), state.alpha.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double g = state.gamma[i], a = state.alpha[i];
    const long node = static_cast<long>(i);
    if (!std::isfinite(g) || !std::isfinite(a)) {
      out.push_back({node, "non-finite entry"});
      continue;
    }
    if (g < 0.0) out.push_back({node, "gamma < 0"});
    const double lim = g * (g + 1.0);
    if (a * a - lim > kDomainTol * std::max(1.0, lim))
      out.push_back({node, "alpha^2 > gamma (gamma + 1)"});
  }
  return out;
}

namespace {

std::string fmt_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& tok) {
  double x = 0.0;
  auto r = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
    throw ConfigError("state file: bad number '" + tok + "'");
  return x;
}

}  // namespace

void write_state(std::ostream& out, const GasState& state, const RadialGrid& grid,
                 const StateHeader& h) {
  if (state.size() != grid.size()) throw ConfigError("write_state: state/grid size mismatch");
  out << "# bogo-state 1\n";
  out << "# rho0 " << fmt_double(h.rho0) << "\n";
  out << "# T " << fmt_double(h.T) << "\n";
  out << "# mode " << to_string(h.mode) << "\n";
  out << "# control " << fmt_double(h.control) << "\n";
  out << "# potential " << h.potential_fingerprint << "\n";
  out << "# p\tgamma\talpha\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    out << fmt_double(grid.node(i)) << '\t' << fmt_double(state.gamma[i]) << '\t'
        << fmt_double(state.alpha[i]) << '\n';
}

LoadedState read_state(std::istream& in) {
  LoadedState ls;
  std::string line;
  bool magic = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    if (line[0] == '#') {
      std::string hash, key, val;
      ss >> hash >> key >> val;
      if (key == "bogo-state") magic = true;
      else if (key == "rho0") ls.header.rho0 = parse_double(val);
      else if (key == "T") ls.header.T = parse_double(val);
      else if (key == "mode") ls.header.mode = ensemble_from_string(val);
      else if (key == "control") ls.header.control = parse_double(val);
      else if (key == "potential") ls.header.potential_fingerprint = std::stoull(val);
      continue;
    }
    std::string a, b, c;
    if (!(ss >> a >> b >> c)) throw ConfigError("state file: expected three columns");
    ls.nodes.push_back(parse_double(a));
    ls.state.gamma.push_back(parse_double(b));
    ls.state.alpha.push_back(parse_double(c));
  }
  if (!magic) throw ConfigError("state file: missing header");
  ls.state.rho0 = ls.header.rho0;
  return ls;
}

}  // namespace bogo
