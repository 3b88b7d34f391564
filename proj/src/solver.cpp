#include "bogo/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "bogo/bose_functions.hpp"
#include "bogo/errors.hpp"

namespace bogo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// iterations without halving the best residual before a solve is abandoned
constexpr std::size_t kStallWindow = 300;
constexpr double kBigG = 700.0;

}  // namespace

void SolverConfig::validate(double T) const {
  if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("solver: mixing eta must lie in (0, 1]");
  if (!(tol_residual > 0.0)) throw ConfigError("solver: tol_residual must be > 0");
  if (!(tol_density > 0.0)) throw ConfigError("solver: tol_density must be > 0");
  if (max_iter == 0) throw ConfigError("solver: max_iter must be > 0");
  if (T < 0.0 || !std::isfinite(T)) throw ConfigError("solver: T must be >= 0");
  if (kappa_cap && !(*kappa_cap > std::max(1.0, T)))
    throw ConfigError("solver: kappa must exceed max(1, T)");
  if (rho0_optimizer.scan_points < 3) throw ConfigError("solver: rho0 scan needs >= 3 points");
}

double SolveReport::alpha_max() const {
  double m = 0.0;
  for (double a : state.alpha) m = std::max(m, std::abs(a));
  return m;
}

std::pair<double, double> el_point(double A, double B) {
  if (!(A - std::abs(B) > 0.0))
    throw NumericalError("el_update: |B| >= A, iterate outside the feasible set");
  const double G = std::sqrt((A - B) * (A + B));
  if (!(G > 0.0)) throw NumericalError("el_update: degenerate gap G = 0");
  const double ground = B * B / (2.0 * G * (A + G));  // (A - G) / 2G
  if (G > kBigG) return {ground, -B / (2.0 * G)};
  const double em = std::expm1(G);
  return {ground + (A / G) / em, -(B / (2.0 * G)) * (1.0 + 2.0 / em)};
}

std::pair<double, double> el_point_T0(double a, double b) {
  if (!(a - std::abs(b) > 0.0))
    throw NumericalError("el_update: |b| >= a, iterate outside the feasible set");
  const double g = std::sqrt((a - b) * (a + b));
  if (!(g > 0.0)) throw NumericalError("el_update: degenerate gap g = 0");
  return {b * b / (2.0 * g * (a + g)), -b / (2.0 * g)};
}

ELFields compute_AB(const GasState& state, const RadialGrid& grid, const Potential& potential,
                    double T, double delta, double rho0, std::optional<double> rho_direct) {
  const std::size_t n = grid.size();
  if (state.size() != n || state.alpha.size() != n)
    throw ConfigError("compute_AB: state/grid size mismatch");
  std::vector<double> cg(n), ca(n);
  convolve_into(grid, potential.kernel(), state.gamma, cg);
  convolve_into(grid, potential.kernel(), state.alpha, ca);
  const double rho = rho_direct ? *rho_direct : rho0 + integrate(grid, state.gamma);
  const auto vh = potential.vhat_nodes();
  const double scale = T > 0.0 ? 1.0 / T : 1.0;
  ELFields f;
  f.zero_temperature = !(T > 0.0);
  f.A.resize(n);
  f.B.resize(n);
  f.G.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = grid.node(i);
    f.A[i] = scale * (p * p - delta + potential.vhat0() * rho + rho0 * vh[i] + cg[i]);
    f.B[i] = scale * (rho0 * vh[i] + ca[i]);
    const double q = (f.A[i] - f.B[i]) * (f.A[i] + f.B[i]);
    if (f.A[i] - std::abs(f.B[i]) > 0.0) {
      f.G[i] = std::sqrt(q);
    } else {
      f.G[i] = 0.0;
      f.feasible = false;
    }
  }
  return f;
}

std::pair<std::vector<double>, std::vector<double>> el_update(const ELFields& fields) {
  const std::size_t n = fields.A.size();
  std::vector<double> g(n), a(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [gi, ai] = fields.zero_temperature ? el_point_T0(fields.A[i], fields.B[i])
                                                  : el_point(fields.A[i], fields.B[i]);
    g[i] = gi;
    a[i] = ai;
  }
  return {std::move(g), std::move(a)};
}

namespace {

struct Problem {
  double T = 0.0;
  bool canonical = false;
  double mu = 0.0;           // grand: fixed multiplier
  double rho = 0.0;          // canonical: total density
  double rho0 = 0.0;         // fixed condensate unless stationary
  bool stationary = false;   // grand: rho0 from the rho0 Euler-Lagrange equation
  bool pairing = true;       // false forces alpha = 0
  std::optional<double> kappa;
};

struct Eval {
  double delta = 0.0;
  double rho0 = 0.0;
  double rho_gamma = 0.0;
  double rho_direct = 0.0;
  double energy_scale = 1.0;
  double p_kappa = 0.0;
  bool saturated = false;  // canonical density constraint could not be met
  std::vector<double> gamma, alpha, x_new;
};

// alpha solving b + T (alpha / beta) ln((beta + 1/2)/(beta - 1/2)) = 0 at fixed gamma
double capped_alpha(double gamma, double B, bool zero_T) {
  const double m = std::sqrt(gamma * (gamma + 1.0));
  if (B == 0.0) return 0.0;
  if (zero_T) return -std::copysign(m, B);
  const double target = std::abs(B);
  auto h = [&](double x) {
    const double det = gamma * (gamma + 1.0) - x * x;
    const double beta = std::sqrt((0.5 + gamma) * (0.5 + gamma) - x * x);
    const double d = std::max(det, 0.0) / (beta + 0.5);
    if (d <= 0.0) return kInf;
    return (x / beta) * (std::log1p(d) - std::log(d)) - target;
  };
  double hi = m * (1.0 - 1e-15);
  if (h(hi) < 0.0) return -std::copysign(hi, B);
  std::uintmax_t it = 200;
  const auto r = boost::math::tools::toms748_solve(
      h, 0.0, hi, -target, h(hi), boost::math::tools::eps_tolerance<double>(50), it);
  return -std::copysign(0.5 * (r.first + r.second), B);
}

class Anderson {
public:
  explicit Anderson(std::size_t depth) : depth_(depth) {}
  void reset() {
    dx_.clear();
    dr_.clear();
    has_prev_ = false;
  }
  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& r, double eta) {
    if (has_prev_ && depth_ > 0) {
      dx_.push_back(x - x_prev_);
      dr_.push_back(r - r_prev_);
      if (dx_.size() > depth_) {
        dx_.pop_front();
        dr_.pop_front();
      }
    }
    x_prev_ = x;
    r_prev_ = r;
    has_prev_ = true;
    if (dx_.empty()) return x + eta * r;
    const Eigen::Index m = static_cast<Eigen::Index>(dx_.size());
    Eigen::MatrixXd DX(x.size(), m), DR(x.size(), m);
    for (Eigen::Index j = 0; j < m; ++j) {
      DX.col(j) = dx_[static_cast<std::size_t>(j)];
      DR.col(j) = dr_[static_cast<std::size_t>(j)];
    }
    const Eigen::VectorXd theta = DR.colPivHouseholderQr().solve(r);
    if (!theta.allFinite() || theta.cwiseAbs().maxCoeff() > 1e6) {
      reset();
      x_prev_ = x;
      r_prev_ = r;
      has_prev_ = true;
      return x + eta * r;
    }
    return x + eta * r - (DX + eta * DR) * theta;
  }

private:
  std::size_t depth_;
  std::deque<Eigen::VectorXd> dx_, dr_;
  Eigen::VectorXd x_prev_, r_prev_;
  bool has_prev_ = false;
};

class Engine {
public:
  Engine(const Problem& pb, const RadialGrid& grid, const Potential& pot, const SolverConfig& cfg)
      : pb_(pb), grid_(grid), pot_(pot), cfg_(cfg), n_(grid.size()), cg_(n_), ca_(n_) {}

  std::size_t dim() const { return pb_.pairing ? 2 * n_ : n_; }

  // (gamma, alpha) at fields x and multiplier delta = base - t; false if some node is
  // infeasible. The gap a - |b| is formed as (x - |b| - base) + t so that it stays exact
  // at the node defining base = min(x - |b|) even when t is many orders below base.
  bool el(const double* x, double base, double t, std::vector<double>& g, std::vector<double>& a,
          double* p_kappa) const {
    g.resize(n_);
    a.resize(n_);
    const bool zero_T = !(pb_.T > 0.0);
    const double scale = zero_T ? 1.0 : pb_.T;
    double pk = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double bi = pb_.pairing ? x[n_ + i] : 0.0;
      const double gap = (x[i] - std::abs(bi) - base) + t;
      if (!(gap > 0.0)) return false;
      const double A = (gap + std::abs(bi)) / scale, B = bi / scale;
      const double G = std::sqrt((gap / scale) * (A + std::abs(B)));
      if (!(G > 0.0)) return false;
      const double ground = B * B / (2.0 * G * (A + G));
      if (zero_T || G > kBigG) {
        g[i] = ground;
        a[i] = -B / (2.0 * G);
      } else {
        const double em = std::expm1(G);
        g[i] = ground + (A / G) / em;
        a[i] = -(B / (2.0 * G)) * (1.0 + 2.0 / em);
      }
      if (pb_.kappa) {
        const double p = grid_.node(i);
        const double cap = *pb_.kappa / (p * p);
        if (g[i] > cap) {
          g[i] = cap;
          a[i] = pb_.pairing ? capped_alpha(cap, B, zero_T) : 0.0;
          pk = std::max(pk, p);
        }
      }
      if (!std::isfinite(g[i]) || !std::isfinite(a[i])) return false;
    }
    if (p_kappa) *p_kappa = pk;
    return true;
  }

  double rho_gamma_at(const double* x, double base, double t, std::vector<double>& g,
                      std::vector<double>& a) const {
    if (!el(x, base, t, g, a, nullptr)) return kInf;
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) acc += grid_.weight(i) * g[i];
    return acc;
  }

  // multiplier with rho_gamma(delta) = lambda; monotone increasing on (-inf, delta_max)
  bool solve_delta(const double* x, double lambda, double& base, double& t_out) {
    double dmax = kInf;
    for (std::size_t i = 0; i < n_; ++i)
      dmax = std::min(dmax, x[i] - (pb_.pairing ? std::abs(x[n_ + i]) : 0.0));
    // continuum edge at p = 0: the fields are even in p, so x(0) = x(p_1) - p_1^2 up to
    // O(p_1^2) in the convolution part. Without it the lowest node absorbs any excess
    // density as a grid artefact instead of rho0.
    const double p1 = grid_.node(0);
    dmax = std::min(dmax, x[0] - p1 * p1 - (pb_.pairing ? std::abs(x[n_]) : 0.0));
    std::vector<double>& g = tmp_g_;
    std::vector<double>& a = tmp_a_;
    base = dmax;
    auto rho_t = [&](double t) { return rho_gamma_at(x, dmax, t, g, a); };
    double t_min = 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(dmax), 1e-300);
    t_min = std::max(t_min, 1e-300);
    if (rho_t(t_min) < lambda) {
      // density not reachable with these fields; take the closest multiplier and let the
      // iteration reshape the fields (convergence still demands the constraint)
      last_t_ = t_min;
      t_out = t_min;
      saturated_ = true;
      return std::isfinite(dmax);
    }
    saturated_ = false;

    double t_hi = last_t_ > 0.0 ? 2.0 * last_t_ : std::max({pb_.T, 1e-3, t_min * 4.0});
    int guard = 0;
    while (rho_t(t_hi) > lambda) {
      t_hi *= 4.0;
      if (++guard > 600) return false;
    }
    double t_lo = std::max(t_hi / 4.0, t_min);
    if (last_t_ > 0.0) t_lo = std::max(std::min(t_lo, 0.5 * last_t_), t_min);
    guard = 0;
    while (t_lo > t_min && rho_t(t_lo) < lambda) {
      t_lo = std::max(t_lo / 16.0, t_min);
      if (++guard > 600) return false;
    }
    auto f = [&](double u) { return rho_t(std::exp(u)) - lambda; };
    const double u_lo = std::log(t_lo), u_hi = std::log(t_hi);
    const double f_lo = f(u_lo), f_hi = f(u_hi);
    if (f_lo == 0.0) {
      last_t_ = t_lo;
    } else if (f_hi == 0.0) {
      last_t_ = t_hi;
    } else {
      std::uintmax_t it = 200;
      auto tol = [&](double l, double h) {
        return std::abs(h - l) <= 4e-16 * std::max(1.0, std::abs(l));
      };
      const auto r = boost::math::tools::toms748_solve(f, u_lo, u_hi, f_lo, f_hi, tol, it);
      // keep the side whose density error is smaller
      const double el = std::abs(f(r.first)), eh = std::abs(f(r.second));
      last_t_ = std::exp(el <= eh ? r.first : r.second);
    }
    t_out = last_t_;
    return true;
  }

  bool map(const std::vector<double>& x, Eval& ev) {
    const auto vh = pot_.vhat_nodes();
    const double v0 = pot_.vhat0();
    double base = pb_.mu, t = 0.0;
    if (pb_.canonical) {
      const double lambda = pb_.rho - pb_.rho0;
      if (!solve_delta(x.data(), lambda, base, t)) return false;
      ev.saturated = saturated_;
    }
    ev.delta = base - t;
    if (!el(x.data(), base, t, ev.gamma, ev.alpha, &ev.p_kappa)) return false;

    double rg = 0.0, coupling = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      rg += grid_.weight(i) * ev.gamma[i];
      coupling += grid_.weight(i) * vh[i] * (ev.gamma[i] + ev.alpha[i]);
    }
    ev.rho_gamma = rg;
    if (pb_.stationary) {
      ev.rho0 = v0 > 0.0 ? std::max(0.0, (pb_.mu - coupling) / v0 - rg) : 0.0;
    } else {
      ev.rho0 = pb_.rho0;
    }
    ev.rho_direct = pb_.canonical ? pb_.rho : ev.rho0 + rg;

    convolve_into(grid_, pot_.kernel(), ev.gamma, cg_);
    if (pb_.pairing) convolve_into(grid_, pot_.kernel(), ev.alpha, ca_);
    ev.x_new.resize(dim());
    for (std::size_t i = 0; i < n_; ++i) {
      const double p = grid_.node(i);
      ev.x_new[i] = p * p + v0 * ev.rho_direct + ev.rho0 * vh[i] + cg_[i];
      if (pb_.pairing) ev.x_new[n_ + i] = ev.rho0 * vh[i] + ca_[i];
    }
    ev.energy_scale = std::max({pb_.T, std::abs(ev.delta), v0 * ev.rho_direct, 1e-300});
    return true;
  }

  struct Outcome {
    bool ok = false;
    bool converged = false;
    std::size_t iterations = 0;
    double res_gamma = kInf, res_alpha = kInf;
    std::vector<double> x;
    Eval ev;
    std::string message;
  };

  Outcome run(std::vector<double> x0) {
    Outcome out;
    const std::size_t d = dim();
    if (x0.size() != d) throw ConfigError("solver: initial field has wrong length");
    Eval cur;
    if (!map(x0, cur)) {
      out.message = "initial iterate infeasible";
      return out;
    }
    auto residuals = [&](const std::vector<double>& x, const Eval& ev, double& rg, double& ra) {
      rg = 0.0;
      ra = 0.0;
      for (std::size_t i = 0; i < n_; ++i) rg = std::max(rg, std::abs(ev.x_new[i] - x[i]));
      if (pb_.pairing)
        for (std::size_t i = 0; i < n_; ++i)
          ra = std::max(ra, std::abs(ev.x_new[n_ + i] - x[n_ + i]));
      rg /= ev.energy_scale;
      ra /= ev.energy_scale;
      return std::max(rg, ra);
    };

    std::vector<double> x = std::move(x0);
    double rg = 0, ra = 0;
    double res = residuals(x, cur, rg, ra);
    double eta = cfg_.eta;
    Anderson acc(cfg_.anderson_depth);
    Eigen::VectorXd xv(static_cast<Eigen::Index>(d)), rv(static_cast<Eigen::Index>(d));
    std::vector<double> xt(d);
    Eval trial;

    double best = res;
    std::size_t best_at = out.iterations;
    bool stalled = false;
    while (res >= cfg_.tol_residual && out.iterations < cfg_.max_iter) {
      if (res < 0.5 * best) {
        best = res;
        best_at = out.iterations;
      } else if (out.iterations - best_at > kStallWindow) {
        stalled = true;
        break;
      }
      for (std::size_t k = 0; k < d; ++k) {
        xv[static_cast<Eigen::Index>(k)] = x[k];
        rv[static_cast<Eigen::Index>(k)] = cur.x_new[k] - x[k];
      }
      Eigen::VectorXd prop = acc.step(xv, rv, eta);
      for (std::size_t k = 0; k < d; ++k) xt[k] = prop[static_cast<Eigen::Index>(k)];
      ++out.iterations;
      bool ok = map(xt, trial);
      double rg_t = 0, ra_t = 0;
      double res_t = ok ? residuals(xt, trial, rg_t, ra_t) : kInf;
      if (!ok || res_t > 2.0 * res) {
        // plain damped step, shrinking the mixing until the iterate is usable
        acc.reset();
        double step = eta;
        for (int tries = 0; tries < 40 && out.iterations < cfg_.max_iter; ++tries) {
          step *= 0.5;
          for (std::size_t k = 0; k < d; ++k) xt[k] = x[k] + step * (cur.x_new[k] - x[k]);
          ++out.iterations;
          ok = map(xt, trial);
          res_t = ok ? residuals(xt, trial, rg_t, ra_t) : kInf;
          if (ok && (res_t <= res || step < 1e-3)) break;
        }
        if (!ok) {
          out.message = "iterate left the feasible set (|B| >= A) and damping did not recover";
          out.x = x;
          out.ev = cur;
          out.res_gamma = rg;
          out.res_alpha = ra;
          return out;
        }
        eta = std::max(0.5 * eta, 1.0 / 64.0);
      } else if (res_t < res) {
        eta = std::min(1.25 * eta, cfg_.eta);
      }
      x.swap(xt);
      std::swap(cur, trial);
      res = res_t;
      rg = rg_t;
      ra = ra_t;
    }
    out.ok = true;
    out.converged = res < cfg_.tol_residual && !cur.saturated;
    if (!out.converged)
      out.message = cur.saturated ? "density constraint not reachable"
                    : stalled     ? "residual stagnated"
                                  : "max_iter reached";
    out.res_gamma = rg;
    out.res_alpha = ra;
    out.x = std::move(x);
    out.ev = std::move(cur);
    return out;
  }

private:
  Problem pb_;
  const RadialGrid& grid_;
  const Potential& pot_;
  const SolverConfig& cfg_;
  std::size_t n_;
  std::vector<double> cg_, ca_, tmp_g_, tmp_a_;
  double last_t_ = -1.0;
  bool saturated_ = false;
};

// fields (energy units, without -delta) of a given state
std::vector<double> fields_of(const GasState& st, const RadialGrid& grid, const Potential& pot,
                              double rho_direct, bool pairing) {
  const std::size_t n = grid.size();
  std::vector<double> cg(n), ca(n);
  convolve_into(grid, pot.kernel(), st.gamma, cg);
  if (pairing) convolve_into(grid, pot.kernel(), st.alpha, ca);
  const auto vh = pot.vhat_nodes();
  std::vector<double> x(pairing ? 2 * n : n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = grid.node(i);
    x[i] = p * p + pot.vhat0() * rho_direct + st.rho0 * vh[i] + cg[i];
    if (pairing) x[n + i] = st.rho0 * vh[i] + ca[i];
  }
  return x;
}

// scalar mean-field estimate of the normal-state shift: mu - 2 Vhat(0) rho = mu_free(T, rho)
double normal_effective_mu(double T, double mu, double v0) {
  if (!(T > 0.0)) return std::min(mu, -1e-3);
  if (v0 == 0.0) return std::min(mu, -1e-12 * T);
  auto f = [&](double r) { return mu - 2.0 * v0 * r - free_mu_for_density(T, r); };
  double lo = 1e-300, hi = std::max(1.0, std::abs(mu) / v0);
  while (f(hi) > 0.0) hi *= 2.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  const double r = 0.5 * (lo + hi);
  return std::min(free_mu_for_density(T, r), -1e-3 * T);
}

std::vector<double> normal_init(const Problem& pb, const RadialGrid& grid, const Potential& pot) {
  const double mu_eff = normal_effective_mu(pb.T, pb.mu, pot.vhat0());
  std::vector<double> x(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double p = grid.node(i);
    x[i] = pb.mu - mu_eff + p * p;
  }
  return x;
}

std::vector<double> condensed_init(const Problem& pb, const RadialGrid& grid, const Potential& pot,
                                   double rho0) {
  const std::size_t n = grid.size();
  const auto vh = pot.vhat_nodes();
  const double gap = 0.05 * std::abs(pb.mu) + 0.01 * pb.T + 1e-12;
  std::vector<double> x(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = grid.node(i);
    x[i] = pb.mu + p * p + rho0 * vh[i] + gap;
    x[n + i] = rho0 * vh[i];
  }
  return x;
}

std::vector<double> canonical_init(const Problem& pb, const RadialGrid& grid,
                                   const Potential& pot) {
  const std::size_t n = grid.size();
  const auto vh = pot.vhat_nodes();
  const double lambda = pb.rho - pb.rho0;
  std::vector<double> x(pb.pairing ? 2 * n : n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = grid.node(i);
    x[i] = p * p + pot.vhat0() * pb.rho + (pb.rho0 + lambda) * vh[i];
    if (pb.pairing) x[n + i] = pb.rho0 * vh[i];
  }
  return x;
}

SolveReport make_report(const Engine::Outcome& out, const Problem& pb, const RadialGrid& grid,
                        const Potential& pot) {
  SolveReport r;
  r.T = pb.T;
  r.iterations = out.iterations;
  r.converged = out.converged;
  r.message = out.message;
  r.residual_gamma = out.res_gamma;
  r.residual_alpha = out.res_alpha;
  r.delta = out.ev.delta;
  r.p_kappa = out.ev.p_kappa;
  r.state.gamma = out.ev.gamma;
  r.state.alpha = out.ev.alpha;
  if (r.state.gamma.size() != grid.size()) {
    r.state = GasState::zeros(grid.size());
    r.free_energy.total = kInf;
    r.point = pb.canonical ? ThermoPoint::canonical(pb.T, pb.rho) : ThermoPoint::grand(pb.T, pb.mu);
    return r;
  }
  r.state.rho0 = out.ev.rho0;
  if (pb.canonical) {
    r.point = ThermoPoint::canonical(pb.T, pb.rho);
    r.state.rho0 = pb.rho0;
    r.free_energy = free_energy_canonical(r.state, grid, pot, pb.T, pb.rho);
  } else {
    r.point = ThermoPoint::grand(pb.T, pb.mu);
    r.free_energy = free_energy_grand(r.state, grid, pot, pb.T, pb.mu);
  }
  r.rho_gamma = r.free_energy.rho_gamma;
  r.rho_total = r.free_energy.rho;
  r.branch = r.state.rho0 > 0.0 ? "condensed" : "normal";
  if (!out.ok) r.free_energy.total = kInf;
  return r;
}

SolveReport vacuum_report(const RadialGrid& grid, const Potential& pot, const ThermoPoint& pt) {
  SolveReport r;
  r.T = pt.T;
  r.point = pt;
  r.state = GasState::zeros(grid.size());
  r.free_energy = free_energy(r.state, grid, pot, pt);
  r.converged = true;
  r.branch = "vacuum";
  r.delta = pt.mode == Ensemble::grand ? pt.control : 0.0;
  return r;
}

// free energies closer than this are treated as equal; scaled by the largest part so that
// dilute problems with tiny |F| are not flattened into ties
double tie_tol(const EnergyBreakdown& e) {
  const double scale = std::max({std::abs(e.total), std::abs(e.kinetic), std::abs(e.entropy_term),
                                 std::abs(e.direct), std::abs(e.exchange_gamma), std::abs(e.pairing),
                                 std::abs(e.condensate_coupling), std::abs(e.mu_term)});
  return 1e-11 * scale;
}

bool states_differ(const SolveReport& a, const SolveReport& b) {
  const double scale = std::max({a.rho_total, b.rho_total, 1e-300});
  return std::abs(a.state.rho0 - b.state.rho0) > 1e-8 * scale ||
         std::abs(a.rho_total - b.rho_total) > 1e-8 * scale;
}

// lower free energy wins; 'first' wins ties
SolveReport pick(SolveReport first, SolveReport second) {
  const bool c1 = first.converged && std::isfinite(first.free_energy.total);
  const bool c2 = second.converged && std::isfinite(second.free_energy.total);
  if (!c1 && !c2) {
    SolveReport& best = first.residual_gamma + first.residual_alpha <=
                                second.residual_gamma + second.residual_alpha
                            ? first
                            : second;
    best.message = "no branch converged: " + first.message + " / " + second.message;
    return best;
  }
  if (!c2) return first;
  if (!c1) return second;
  const double F1 = first.free_energy.total, F2 = second.free_energy.total;
  const double tol = std::max(tie_tol(first.free_energy), tie_tol(second.free_energy));
  SolveReport win = F2 < F1 - tol ? std::move(second) : std::move(first);
  const SolveReport& lose = F2 < F1 - tol ? first : second;
  if (std::abs(F1 - F2) <= tol && states_differ(win, lose)) {
    SolveReport copy = lose;
    copy.secondary_minimum.reset();
    win.secondary_minimum = std::make_shared<const SolveReport>(std::move(copy));
  }
  return win;
}

}  // namespace

SolveReport fixed_point_solve(double T, double delta, double rho0, const RadialGrid& grid,
                              const Potential& potential, const SolverConfig& config,
                              const GasState* init) {
  config.validate(T);
  if (rho0 < 0.0) throw DomainError("fixed_point_solve: rho0 < 0");
  Problem pb;
  pb.T = config.t0_mode ? 0.0 : T;
  pb.mu = delta;
  pb.rho0 = rho0;
  pb.pairing = rho0 > 0.0 ||
               (init && std::any_of(init->alpha.begin(), init->alpha.end(),
                                    [](double a) { return a != 0.0; }));
  pb.kappa = config.kappa_cap;
  Engine eng(pb, grid, potential, config);
  std::vector<double> x0;
  if (init) {
    GasState s = *init;
    s.rho0 = rho0;
    x0 = fields_of(s, grid, potential, rho0 + integrate(grid, s.gamma), pb.pairing);
  } else if (pb.pairing) {
    x0 = condensed_init(pb, grid, potential, rho0);
  } else {
    x0 = normal_init(pb, grid, potential);
  }
  auto out = eng.run(std::move(x0));
  auto r = make_report(out, pb, grid, potential);
  r.T = T;
  return r;
}

SolveReport solve_T0(const T0Mode& mode, const RadialGrid& grid, const Potential& potential,
                     const SolverConfig& config) {
  SolverConfig cfg = config;
  cfg.t0_mode = true;
  cfg.validate(0.0);
  if (mode.kind == T0Mode::fixed)
    return fixed_point_solve(0.0, mode.mu_or_delta, mode.rho0, grid, potential, cfg);

  const double mu = mode.mu_or_delta;
  const auto pt = ThermoPoint::grand(0.0, mu);
  if (mu <= 0.0) return vacuum_report(grid, potential, pt);
  if (potential.is_zero())
    throw InfeasibleError("grand functional is unbounded below for Vhat = 0 and mu > 0");
  Problem pb;
  pb.T = 0.0;
  pb.mu = mu;
  pb.stationary = true;
  pb.pairing = true;
  pb.kappa = cfg.kappa_cap;
  Engine eng(pb, grid, potential, cfg);
  auto out = eng.run(condensed_init(pb, grid, potential, mu / potential.vhat0()));
  auto r = make_report(out, pb, grid, potential);
  return r;
}

SolveReport canonical_fixed_rho0(double T, double rho, double rho0, const RadialGrid& grid,
                                 const Potential& potential, const SolverConfig& config,
                                 const GasState* init) {
  config.validate(T);
  if (!(rho0 >= 0.0 && rho0 <= rho)) throw DomainError("canonical: need 0 <= rho0 <= rho");
  const double Te = config.t0_mode ? 0.0 : T;
  if (rho0 >= rho) {
    SolveReport r = vacuum_report(grid, potential, ThermoPoint::canonical(T, rho));
    r.state.rho0 = rho;
    r.free_energy = free_energy_canonical(r.state, grid, potential, Te, rho);
    r.rho_total = rho;
    r.branch = rho > 0.0 ? "condensed" : "vacuum";
    r.delta = potential.vhat0() * rho;
    return r;
  }
  Problem pb;
  pb.T = Te;
  pb.canonical = true;
  pb.rho = rho;
  pb.rho0 = rho0;
  pb.pairing = rho0 > 0.0;
  pb.kappa = config.kappa_cap;
  Engine eng(pb, grid, potential, config);
  std::vector<double> x0;
  if (init) {
    GasState s = *init;
    s.rho0 = rho0;
    x0 = fields_of(s, grid, potential, rho, pb.pairing);
  } else {
    x0 = canonical_init(pb, grid, potential);
  }
  auto out = eng.run(std::move(x0));
  auto r = make_report(out, pb, grid, potential);
  r.T = T;
  return r;
}

SolveReport canonical_solve(double T, double rho, const RadialGrid& grid,
                            const Potential& potential, const SolverConfig& config) {
  config.validate(T);
  if (rho < 0.0 || !std::isfinite(rho)) throw ConfigError("canonical_solve: rho must be >= 0");
  const auto pt = ThermoPoint::canonical(T, rho);
  if (rho == 0.0) return vacuum_report(grid, potential, pt);

  const auto& oc = config.rho0_optimizer;
  std::vector<std::pair<double, SolveReport>> evaluated;
  auto nearest_state = [&](double r0) -> const GasState* {
    const SolveReport* best = nullptr;
    double dist = kInf;
    for (const auto& [x, rep] : evaluated) {
      if (!rep.converged || x >= rho || (x > 0.0) != (r0 > 0.0)) continue;
      if (std::abs(x - r0) < dist) {
        dist = std::abs(x - r0);
        best = &rep;
      }
    }
    return best ? &best->state : nullptr;
  };
  auto h = [&](double r0) -> double {
    r0 = std::clamp(r0, 0.0, rho);
    const GasState* init = nearest_state(r0);
    SolveReport rep = canonical_fixed_rho0(T, rho, r0, grid, potential, config, init);
    if (!rep.converged && init) {
      SolveReport fresh = canonical_fixed_rho0(T, rho, r0, grid, potential, config, nullptr);
      if (fresh.converged) rep = std::move(fresh);
    }
    const double F = rep.converged ? rep.free_energy.total : kInf;
    evaluated.emplace_back(r0, std::move(rep));
    return F;
  };

  const std::size_t m = oc.scan_points;
  std::vector<double> grid_r0(m), grid_F(m);
  for (std::size_t k = 0; k < m; ++k) {
    // scan from the pure condensate downwards so warm starts follow the physical branch
    const std::size_t kk = m - 1 - k;
    grid_r0[kk] = rho * static_cast<double>(kk) / static_cast<double>(m - 1);
    grid_F[kk] = h(grid_r0[kk]);
  }
  const std::size_t kbest =
      static_cast<std::size_t>(std::min_element(grid_F.begin(), grid_F.end()) - grid_F.begin());
  if (std::isfinite(grid_F[kbest])) {
    double lo = grid_r0[kbest > 0 ? kbest - 1 : 0];
    double hi = grid_r0[std::min(kbest + 1, m - 1)];
    // neighbours where the inner problem has no solution (T = 0 depletion limit):
    // locate the edge of the feasible rho0 range first
    auto edge = [&](double bad, double good) {
      for (int k = 0; k < 30; ++k) {
        const double mid = 0.5 * (bad + good);
        (std::isfinite(h(mid)) ? good : bad) = mid;
      }
      return good;
    };
    if (kbest > 0 && !std::isfinite(grid_F[kbest - 1])) lo = edge(lo, grid_r0[kbest]);
    if (kbest + 1 < m && !std::isfinite(grid_F[kbest + 1])) hi = edge(hi, grid_r0[kbest]);
    const int bits = std::clamp(static_cast<int>(-std::log2(std::max(oc.tol, 1e-15))), 8, 26);
    std::uintmax_t it = oc.max_iter;
    if (hi > lo) boost::math::tools::brent_find_minima(h, lo, hi, bits, it);
  }

  // best evaluated point; the rho0 = 0 endpoint wins ties
  const SolveReport* best = nullptr;
  const SolveReport* endpoint = nullptr;
  for (const auto& [x, rep] : evaluated) {
    if (!rep.converged) continue;
    if (x == 0.0) endpoint = &rep;
    if (!best || rep.free_energy.total < best->free_energy.total) best = &rep;
  }
  if (!best) {
    SolveReport r = evaluated.front().second;
    r.converged = false;
    r.message = "canonical: no rho0 candidate converged";
    return r;
  }
  SolveReport result = *best;
  if (endpoint && endpoint != best &&
      endpoint->free_energy.total <= best->free_energy.total + tie_tol(best->free_energy)) {
    SolveReport other = *best;
    result = *endpoint;
    if (states_differ(result, other) &&
        std::abs(other.free_energy.total - result.free_energy.total) <=
            tie_tol(result.free_energy)) {
      other.secondary_minimum.reset();
      result.secondary_minimum = std::make_shared<const SolveReport>(std::move(other));
    }
  }
  result.point = pt;
  result.T = T;
  if (result.state.rho0 == 0.0) result.branch = "normal";
  return result;
}

SolveReport grand_canonical_solve(double T, double mu, const RadialGrid& grid,
                                  const Potential& potential, const SolverConfig& config) {
  config.validate(T);
  if (!std::isfinite(mu)) throw ConfigError("grand_canonical_solve: mu must be finite");
  if (T == 0.0 || config.t0_mode) {
    auto r = solve_T0(T0Mode::grand_mu(mu), grid, potential, config);
    r.T = T;
    return r;
  }
  if (potential.is_zero() && mu > 0.0)
    throw InfeasibleError("grand functional is unbounded below for Vhat = 0 and mu > 0");

  Problem normal;
  normal.T = T;
  normal.mu = mu;
  normal.pairing = false;
  normal.kappa = config.kappa_cap;
  Engine eng_n(normal, grid, potential, config);
  SolveReport rn = make_report(eng_n.run(normal_init(normal, grid, potential)), normal, grid,
                               potential);
  rn.branch = "normal";
  if (mu <= 0.0) return rn;

  Problem cond = normal;
  cond.pairing = true;
  cond.stationary = true;
  Engine eng_c(cond, grid, potential, config);
  SolveReport rc = make_report(
      eng_c.run(condensed_init(cond, grid, potential, mu / potential.vhat0())), cond, grid,
      potential);
  return pick(std::move(rn), std::move(rc));
}

SolveReport solve(const ThermoPoint& point, const RadialGrid& grid, const Potential& potential,
                  const SolverConfig& config) {
  if (point.mode == Ensemble::grand)
    return grand_canonical_solve(point.T, point.control, grid, potential, config);
  return canonical_solve(point.T, point.control, grid, potential, config);
}

MinimalityProbe minimality_probe(const SolveReport& report, const RadialGrid& grid,
                                 const Potential& potential, std::size_t trials, double tol,
                                 std::uint64_t seed) {
  MinimalityProbe probe;
  const std::size_t n = grid.size();
  const ThermoPoint pt = report.point;
  const bool canonical = pt.mode == Ensemble::canonical;
  const double T = report.T;
  const double F0 = report.free_energy.total;
  const GasState& s0 = report.state;
  const double rho_scale = std::max(report.rho_total, 1e-12);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double rho_direct = canonical ? pt.control : s0.rho0 + report.rho_gamma;
  const std::vector<double> x0 = fields_of(s0, grid, potential, rho_direct, true);
  const double escale = std::max({T, std::abs(report.delta), potential.vhat0() * rho_direct, 1e-6});

  auto evaluate = [&](GasState& s) -> std::optional<double> {
    if (!check_domain(s).empty()) return std::nullopt;
    if (canonical) {
      const double rg = integrate(grid, s.gamma);
      if (rg > pt.control) return std::nullopt;
      return free_energy_canonical(s, grid, potential, T, pt.control).total;
    }
    return free_energy_grand(s, grid, potential, T, pt.control).total;
  };

  for (std::size_t t = 0; t < trials; ++t) {
    const int kind = static_cast<int>(t % 3);
    double eps = std::pow(10.0, -1.0 - 3.0 * unit(rng));
    double c[3], q[3], w[3];
    for (int k = 0; k < 3; ++k) {
      c[k] = unif(rng);
      q[k] = grid.p_max() * 0.1 * unit(rng);
      w[k] = 0.05 + unit(rng);
    }
    std::vector<double> u(n);
    for (auto& v : u) v = unif(rng);
    const double r0_shift = unif(rng);

    std::optional<double> F;
    // alternate the sign: at a constraint boundary (canonical rho0 = 0) only one side is feasible
    for (int attempt = 0; attempt < 60 && !F; ++attempt) {
      const double e = attempt % 2 ? -eps : eps;
      if (attempt % 2) eps *= 0.5;
      GasState s = s0;
      if (kind == 0) {
        std::vector<double> x = x0;
        for (std::size_t i = 0; i < n; ++i) {
          double bump = 0.0;
          for (int k = 0; k < 3; ++k) {
            const double z = (grid.node(i) - q[k]) / w[k];
            bump += c[k] * std::exp(-0.5 * z * z);
          }
          x[i] += e * escale * bump;
          x[n + i] += e * escale * bump * (s0.rho0 > 0.0 ? 0.5 : 0.0);
        }
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
          const double a = x[i] - report.delta, b = x[n + i];
          if (!(a - std::abs(b) > 0.0)) {
            ok = false;
            break;
          }
          const auto [g, al] = T > 0.0 ? el_point(a / T, b / T) : el_point_T0(a, b);
          s.gamma[i] = g;
          s.alpha[i] = al;
        }
        if (!ok) continue;
      } else if (kind == 1) {
        for (std::size_t i = 0; i < n; ++i) {
          const double m = std::sqrt(s.gamma[i] * (s.gamma[i] + 1.0));
          const double a = s.alpha[i] != 0.0 ? s.alpha[i] * (1.0 + e * u[i]) : e * u[i] * m;
          s.alpha[i] = std::clamp(a, -m, m);
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          s.gamma[i] = s.gamma[i] * (1.0 + e * u[i]);
          const double m = std::sqrt(s.gamma[i] * (s.gamma[i] + 1.0));
          s.alpha[i] = std::clamp(s.alpha[i], -m, m);
        }
      }
      if (!canonical) s.rho0 = std::max(0.0, s0.rho0 + e * rho_scale * r0_shift);
      F = evaluate(s);
    }
    if (!F) continue;
    ++probe.trials;
    probe.worst_decrease = std::max(probe.worst_decrease, F0 - *F);
  }
  probe.passed = probe.worst_decrease <= tol;
  return probe;
}

MultiStartAudit multi_start_audit(double T, double delta, double rho0, const RadialGrid& grid,
                                  const Potential& potential, const SolverConfig& config) {
  MultiStartAudit audit;
  const std::size_t n = grid.size();
  std::vector<GasState> inits;
  // Bose occupation at the bare multiplier, alpha = -min(gamma, sqrt(gamma (gamma + 1))) / 2
  GasState bose = GasState::zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = grid.node(i);
    const double e = p * p - delta + potential.vhat0() * rho0;
    bose.gamma[i] = T > 0.0 && e > 0.0 ? 1.0 / std::expm1(e / T) : 0.0;
    if (rho0 > 0.0)
      bose.alpha[i] =
          -0.5 * std::min(bose.gamma[i], std::sqrt(bose.gamma[i] * (bose.gamma[i] + 1.0)));
  }
  GasState zero = GasState::zeros(n);
  std::vector<SolveReport> reps;
  reps.push_back(fixed_point_solve(T, delta, rho0, grid, potential, config, nullptr));
  reps.push_back(fixed_point_solve(T, delta, rho0, grid, potential, config, &bose));
  reps.push_back(fixed_point_solve(T, delta, rho0, grid, potential, config, &zero));
  double lo = kInf, hi = -kInf;
  for (const auto& r : reps) {
    audit.free_energies.push_back(r.free_energy.total);
    audit.all_converged = audit.all_converged && r.converged;
    lo = std::min(lo, r.free_energy.total);
    hi = std::max(hi, r.free_energy.total);
  }
  audit.spread = hi - lo;
  return audit;
}

}  // namespace bogo
