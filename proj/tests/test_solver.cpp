#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "bogo/errors.hpp"
#include "bogo/potential.hpp"
#include "bogo/solver.hpp"
#include "oracles.hpp"

using namespace bogo;
using oracle::pi;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Fixture {
  RadialGrid grid = build_grid(128, 20.0);
  Potential pot = gaussian_potential(1.0, 1.0, grid);
  Potential zero = zero_potential(grid);
  SolverConfig cfg;
};

bool in_domain(const SolveReport& r) { return check_domain(r.state).empty(); }

}  // namespace

TEST_CASE("pointwise closed forms") {
  auto [g0, a0] = el_point(2.0, 0.0);
  CHECK(g0 == doctest::Approx(1.0 / std::expm1(2.0)).epsilon(1e-14));
  CHECK(a0 == 0.0);
  CHECK(g0 == doctest::Approx(0.156518).epsilon(1e-6));

  // beta = (1/2) coth(G/2), gamma = beta A / G - 1/2, alpha = -beta B / G
  const double G = std::sqrt(3.0), beta = 0.5 / std::tanh(0.5 * G);
  auto [g1, a1] = el_point(2.0, 1.0);
  CHECK(g1 == doctest::Approx(beta * 2.0 / G - 0.5).epsilon(1e-13));
  CHECK(a1 == doctest::Approx(-beta / G).epsilon(1e-13));
  // 30-digit evaluation of the same closed forms
  CHECK(g1 == doctest::Approx(0.3255537385948880).epsilon(1e-13));
  CHECK(a1 == doctest::Approx(-0.4127768692974440).epsilon(1e-13));
  CHECK(a1 * a1 <= g1 * (g1 + 1.0));

  auto [gt, at] = el_point_T0(2.0, 1.0);
  CHECK(gt == doctest::Approx((2.0 - std::sqrt(3.0)) / (2.0 * std::sqrt(3.0))).epsilon(1e-14));
  CHECK(at == doctest::Approx(-1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-14));
  CHECK(std::abs(at * at - gt * (gt + 1.0)) < 1e-15);
  CHECK(std::abs(at * at - 1.0 / 12.0) < 1e-15);
}

TEST_CASE("closed forms near the divergence and at overflow scale") {
  double prev = 0.0;
  for (double eps : {1e-1, 1e-3, 1e-5, 1e-7}) {
    auto [g, a] = el_point(2.0, 2.0 - eps);
    CHECK(g > prev);
    prev = g;
    CHECK(a < 0.0);
  }
  CHECK(prev > 1e6);
  CHECK_THROWS_AS(el_point(2.0, 2.0), NumericalError);
  CHECK_THROWS_AS(el_point(1.0, -1.5), NumericalError);
  auto [g, a] = el_point(800.0, 1.0);
  const double G = std::sqrt(800.0 * 800.0 - 1.0);
  CHECK(std::isfinite(g));
  CHECK(g == doctest::Approx((800.0 - G) / (2.0 * G)).epsilon(1e-10));
  CHECK(a == doctest::Approx(-1.0 / (2.0 * G)).epsilon(1e-10));
}

TEST_CASE("el_update stays in the domain with alpha opposite to B") {
  ELFields f;
  for (int k = 0; k < 200; ++k) {
    const double A = 0.01 + 0.05 * k;
    const double B = (k % 2 ? 1.0 : -1.0) * 0.99 * A * std::sin(0.37 * k) * std::sin(0.37 * k);
    f.A.push_back(A);
    f.B.push_back(B);
    f.G.push_back(std::sqrt(A * A - B * B));
  }
  const auto [g, a] = el_update(f);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(a[i] * a[i] <= g[i] * (g[i] + 1.0) * (1.0 + 1e-12));
    if (f.B[i] != 0.0) CHECK(std::signbit(a[i]) != std::signbit(f.B[i]));
  }
}

TEST_CASE("fields at a free and at an interacting state") {
  Fixture f;
  const std::size_t n = f.grid.size();
  GasState s = GasState::zeros(n);
  const double T = 0.8, delta = -0.4;
  auto free_fields = compute_AB(s, f.grid, f.zero, T, delta, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = f.grid.node(i);
    CHECK(free_fields.A[i] == doctest::Approx((p * p - delta) / T).epsilon(1e-14));
    CHECK(free_fields.B[i] == 0.0);
    CHECK(free_fields.G[i] == free_fields.A[i]);
  }

  // gamma = c e^{-p^2}, alpha = d e^{-p^2}: Vhat * gamma in closed form for the Gaussian
  const double c = 0.3, d = -0.1, rho0 = 0.05;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(-f.grid.node(i) * f.grid.node(i));
    s.gamma[i] = c * e;
    s.alpha[i] = d * e;
  }
  s.rho0 = rho0;
  const auto fl = compute_AB(s, f.grid, f.pot, T, 1.0, rho0);
  const double v0 = f.pot.vhat0();
  const double rho = rho0 + c * oracle::gauss_moment(1.0);
  auto conv = [&](double p, double amp) {
    const double a = 0.5, b = 1.0;
    return amp * v0 * std::pow(pi / (a + b), 1.5) * std::exp(-a * b * p * p / (a + b)) / (8.0 * pi * pi * pi);
  };
  for (std::size_t i = 0; i < n; i += 9) {
    const double p = f.grid.node(i);
    const double vh = v0 * std::exp(-0.5 * p * p);
    const double A = (p * p - 1.0 + v0 * rho + rho0 * vh + conv(p, c)) / T;
    const double B = (rho0 * vh + conv(p, d)) / T;
    CHECK(std::abs(fl.A[i] - A) <= 1e-9 * std::max(1.0, std::abs(A)));
    CHECK(std::abs(fl.B[i] - B) <= 1e-9 * std::max(1.0, std::abs(B)));
  }
}

TEST_CASE("fixed point of the free gas") {
  Fixture f;
  const auto r = fixed_point_solve(1.0, -1.0, 0.0, f.grid, f.zero, f.cfg);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    const double p = f.grid.node(i);
    CHECK(rel(r.state.gamma[i], 1.0 / std::expm1(p * p + 1.0)) < 1e-12);
    CHECK(r.state.alpha[i] == 0.0);
  }
}

TEST_CASE("grand canonical free gas against the polylog series") {
  const auto g = build_grid(256, 20.0);
  const auto zero = zero_potential(g);
  const auto r = grand_canonical_solve(1.0, -1.0, g, zero, SolverConfig{});
  REQUIRE(r.converged);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    worst = std::max(worst, rel(r.state.gamma[i], 1.0 / std::expm1(g.node(i) * g.node(i) + 1.0)));
  CHECK(worst < 1e-6);
  CHECK(rel(r.free_energy.total, oracle::free_grand(1.0, -1.0)) < 1e-5);
  CHECK(r.state.rho0 == 0.0);
}

TEST_CASE("interacting grand canonical solves") {
  Fixture f;
  SUBCASE("small mu, moderate T") {
    const auto r = grand_canonical_solve(1.0, 0.2, f.grid, f.pot, f.cfg);
    CHECK(r.converged);
    CHECK(std::max(r.residual_gamma, r.residual_alpha) < 1e-8);
    CHECK(in_domain(r));
  }
  SUBCASE("vacuum for mu <= 0 at T = 0") {
    for (double mu : {-1.0, 0.0}) {
      const auto r = grand_canonical_solve(0.0, mu, f.grid, f.pot, f.cfg);
      CHECK(r.free_energy.total == 0.0);
      CHECK(r.state.rho0 == 0.0);
      for (std::size_t i = 0; i < f.grid.size(); ++i) {
        CHECK(r.state.gamma[i] == 0.0);
        CHECK(r.state.alpha[i] == 0.0);
      }
      CHECK(r.branch == "vacuum");
    }
  }
  SUBCASE("condensed ground state lies strictly below the pure condensate") {
    const double mu = 1.0;
    const auto r = solve_T0(T0Mode::grand_mu(mu), f.grid, f.pot, f.cfg);
    CHECK(r.converged);
    CHECK(r.state.rho0 > 0.0);
    CHECK(r.free_energy.total < -mu * mu / (2.0 * f.pot.vhat0()));
    // zero-temperature minimizers are pure: alpha^2 = gamma (gamma + 1)
    for (std::size_t i = 0; i < f.grid.size(); ++i) {
      const double g = r.state.gamma[i], a = r.state.alpha[i];
      CHECK(std::abs(a * a - g * (g + 1.0)) <= 1e-10 * std::max(1e-300, g * (g + 1.0)) + 1e-300);
    }
  }
  SUBCASE("high T is normal, low T is condensed") {
    const auto hot = grand_canonical_solve(20.0, 1.0, f.grid, f.pot, f.cfg);
    CHECK(hot.converged);
    CHECK(hot.state.rho0 == 0.0);
    CHECK(hot.alpha_max() == 0.0);
    const auto cold = grand_canonical_solve(0.1, 1.0, f.grid, f.pot, f.cfg);
    CHECK(cold.converged);
    CHECK(cold.state.rho0 > 0.0);
    CHECK(cold.alpha_max() > 1e-6);
    CHECK(cold.free_energy.total < -1.0 / (2.0 * f.pot.vhat0()));
  }
  SUBCASE("T -> 0 approaches the zero-temperature solve") {
    const auto r0 = solve_T0(T0Mode::grand_mu(1.0), f.grid, f.pot, f.cfg);
    double prev_gap = std::numeric_limits<double>::infinity();
    double prev_F = -std::numeric_limits<double>::infinity();
    for (double T : {0.1, 0.05, 0.025}) {
      const auto r = grand_canonical_solve(T, 1.0, f.grid, f.pot, f.cfg);
      REQUIRE(r.converged);
      CHECK(r.free_energy.total <= r0.free_energy.total + 1e-12);
      CHECK(r.free_energy.total >= prev_F);
      const double gap = r0.free_energy.total - r.free_energy.total;
      CHECK(gap <= prev_gap);
      prev_gap = gap;
      prev_F = r.free_energy.total;
    }
    CHECK(prev_gap < 1e-9);
  }
}

TEST_CASE("kappa cap ladder") {
  Fixture f;
  const auto free_r = grand_canonical_solve(1.0, 1.0, f.grid, f.pot, f.cfg);
  double prev = std::numeric_limits<double>::infinity();
  for (double k : {10.0, 100.0, 1000.0}) {
    SolverConfig c;
    c.kappa_cap = k;
    const auto r = grand_canonical_solve(1.0, 1.0, f.grid, f.pot, c);
    CHECK(r.converged);
    CHECK(r.free_energy.total <= prev + 1e-12 * std::abs(prev));
    CHECK(r.free_energy.total >= free_r.free_energy.total - 1e-12);
    for (std::size_t i = 0; i < f.grid.size(); ++i)
      CHECK(r.state.gamma[i] * f.grid.node(i) * f.grid.node(i) <= k * (1.0 + 1e-12));
    prev = r.free_energy.total;
  }
  CHECK(rel(prev, free_r.free_energy.total) < 1e-4);
  SolverConfig bad;
  bad.kappa_cap = 1.0;
  CHECK_THROWS_AS(grand_canonical_solve(1.0, 1.0, f.grid, f.pot, bad), ConfigError);
}

TEST_CASE("canonical solves") {
  Fixture f;
  SUBCASE("free gas above condensation matches the inverted density") {
    const auto g = build_grid(256, 40.0);
    const auto zero = zero_potential(g);
    const double T = 10.0, rho = 0.5;
    const auto r = canonical_solve(T, rho, g, zero, SolverConfig{});
    REQUIRE(r.converged);
    CHECK(r.state.rho0 == 0.0);
    // invert rho = (T / 4 pi)^{3/2} Li_{3/2}(e^{delta / T}) by bisection on the series
    double lo = -50.0, hi = -1e-12;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      const double d = std::pow(T / (4.0 * pi), 1.5) * oracle::polylog(1.5, std::exp(mid / T));
      (d > rho ? hi : lo) = mid;
    }
    CHECK(rel(r.delta, 0.5 * (lo + hi)) < 1e-5);
    for (std::size_t i = 0; i < g.size(); i += 11)
      CHECK(rel(r.state.gamma[i], 1.0 / std::expm1((g.node(i) * g.node(i) - r.delta) / T)) < 1e-10);
  }
  SUBCASE("vanishing density approaches the vacuum") {
    const auto r = canonical_solve(1e-3, 1e-6, f.grid, f.pot, f.cfg);
    CHECK(r.converged);
    CHECK(std::abs(r.free_energy.total) < 1e-8);
  }
  SUBCASE("T = 0 condenses") {
    const auto r = canonical_solve(0.0, 1.0, f.grid, f.pot, f.cfg);
    CHECK(r.converged);
    CHECK(r.state.rho0 > 0.0);
    CHECK(r.rho_total == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.free_energy.total < 0.5 * f.pot.vhat0());
  }
  SUBCASE("density constraint and residuals above and below condensation") {
    for (double T : {3.0, 10.0}) {
      const auto r = canonical_solve(T, 1.0, f.grid, f.pot, f.cfg);
      CHECK(r.converged);
      CHECK(std::abs(r.rho_total - 1.0) < 1e-10);
      CHECK(std::max(r.residual_gamma, r.residual_alpha) < 1e-8);
      CHECK(in_domain(r));
    }
  }
  SUBCASE("fixed rho0 keeps the requested split") {
    const auto r = canonical_fixed_rho0(3.0, 1.0, 0.4, f.grid, f.pot, f.cfg);
    CHECK(r.converged);
    CHECK(r.state.rho0 == 0.4);
    CHECK(r.rho_gamma == doctest::Approx(0.6).epsilon(1e-10));
  }
}

TEST_CASE("minimality probes and multi-start") {
  Fixture f;
  for (const auto& pt : {ThermoPoint::grand(0.5, 1.0), ThermoPoint::grand(2.0, 1.0), ThermoPoint::canonical(3.0, 1.0)}) {
    const auto r = solve(pt, f.grid, f.pot, f.cfg);
    REQUIRE(r.converged);
    const auto probe = minimality_probe(r, f.grid, f.pot, 50, 1e-10, 99);
    CHECK(probe.trials == 50);
    CHECK(probe.passed);
    CHECK(probe.worst_decrease <= 1e-10);
  }
  const auto ms = multi_start_audit(1.0, 0.5, 0.05, f.grid, f.pot, f.cfg);
  CHECK(ms.all_converged);
  CHECK(ms.free_energies.size() == 3);
  CHECK(ms.spread < 1e-12);
}

TEST_CASE("configuration validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate(1.0));
  c.eta = 0.0;
  CHECK_THROWS_AS(c.validate(1.0), ConfigError);
  c.eta = 1.5;
  CHECK_THROWS_AS(c.validate(1.0), ConfigError);
  c = SolverConfig{};
  c.tol_residual = 0.0;
  CHECK_THROWS_AS(c.validate(1.0), ConfigError);
  c = SolverConfig{};
  c.kappa_cap = 5.0;
  CHECK_NOTHROW(c.validate(1.0));
  CHECK_THROWS_AS(c.validate(5.0), ConfigError);
  Fixture f;
  CHECK_THROWS_AS(grand_canonical_solve(-1.0, 1.0, f.grid, f.pot, f.cfg), ConfigError);
  CHECK_THROWS_AS(canonical_solve(1.0, -1.0, f.grid, f.pot, f.cfg), ConfigError);
}
