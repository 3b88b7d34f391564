#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "bogo/errors.hpp"
#include "bogo/functional.hpp"
#include "bogo/potential.hpp"
#include "oracles.hpp"

using namespace bogo;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Fixture {
  RadialGrid grid = build_grid(128, 20.0);
  Potential pot = gaussian_potential(1.0, 1.0, grid);
  Potential zero = zero_potential(grid);
};

// random admissible state: gamma decaying in p, |alpha| up to the boundary
GasState random_state(const RadialGrid& g, std::mt19937_64& rng, double rho0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GasState s = GasState::zeros(g.size());
  const double scale = 0.05 + u(rng);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double p = g.node(i);
    s.gamma[i] = scale * u(rng) * std::exp(-p * p / 3.0);
    s.alpha[i] = (2.0 * u(rng) - 1.0) * std::sqrt(s.gamma[i] * (s.gamma[i] + 1.0));
  }
  s.rho0 = rho0;
  return s;
}

}  // namespace

TEST_CASE("beta anchors") {
  CHECK(beta_of(0.0, 0.0) == 0.5);
  CHECK(beta_of(1.0, 0.0) == 1.5);
  CHECK(beta_of(1.0, 1.0) == doctest::Approx(std::sqrt(5.0) / 2.0).epsilon(1e-15));
  CHECK_THROWS_AS(beta_of(1.0, 1.5), DomainError);
  CHECK_THROWS_AS(beta_of(-0.1, 0.0), DomainError);
}

TEST_CASE("entropy density anchors") {
  CHECK(entropy_density(0.0, 0.0) == 0.0);
  CHECK(std::abs(entropy_density(1.0, 0.0) - 2.0 * std::log(2.0)) < 1e-14);
  CHECK(std::abs(entropy_density(1.0, 1.0) - oracle::entropy(1.0, 1.0)) < 1e-14);
  CHECK(std::abs(entropy_density(1.0, 1.0) - 1.07602235241001) < 1e-13);
  CHECK(std::abs(entropy_density(2.0, std::sqrt(6.0))) < 1e-12);
  CHECK(entropy_of_beta(0.5) == 0.0);
}

TEST_CASE("entropy density against the closed form on random points") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double g = std::pow(10.0, -3.0 + 5.0 * u(rng));
    const double a = (2.0 * u(rng) - 1.0) * 0.999 * std::sqrt(g * (g + 1.0));
    const double s = entropy_density(g, a);
    CHECK(s >= 0.0);
    CHECK(std::abs(s - oracle::entropy(g, a)) <= 1e-9 * std::max(1.0, s));
    if (a != 0.0) CHECK(s < entropy_density(g, 0.0));
    const double a2 = 0.5 * a;
    CHECK(entropy_density(g, a2) >= s);
  }
}

TEST_CASE("entropy total") {
  Fixture f;
  const std::size_t n = f.grid.size();
  GasState s = GasState::zeros(n);
  CHECK(entropy_total(s, f.grid) == 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    s.gamma[i] = std::exp(-f.grid.node(i));
    s.alpha[i] = std::sqrt(s.gamma[i] * (s.gamma[i] + 1.0));
  }
  CHECK(std::abs(entropy_total(s, f.grid)) < 1e-12);
}

TEST_CASE("grand functional: condensate only and its minimum") {
  Fixture f;
  GasState s = GasState::zeros(f.grid.size());
  const double mu = 1.3, v0 = f.pot.vhat0();
  for (double r0 : {0.0, 0.05, 0.3}) {
    s.rho0 = r0;
    const auto e = free_energy_grand(s, f.grid, f.pot, 0.7, mu);
    CHECK(e.total == doctest::Approx(-mu * r0 + 0.5 * v0 * r0 * r0).epsilon(1e-14));
  }
  s.rho0 = mu / v0;
  CHECK(rel(free_energy_grand(s, f.grid, f.pot, 0.0, mu).total, -mu * mu / (2.0 * v0)) < 1e-14);
}

TEST_CASE("free gas grand functional against the polylog series") {
  const auto g = build_grid(256, 20.0);
  const auto zero = zero_potential(g);
  GasState s = GasState::zeros(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) s.gamma[i] = 1.0 / std::expm1(g.node(i) * g.node(i) + 1.0);
  const auto e = free_energy_grand(s, g, zero, 1.0, -1.0);
  CHECK(rel(e.total, oracle::free_grand(1.0, -1.0)) < 1e-5);
  CHECK(rel(e.total, -0.00888345681606536) < 1e-5);
}

TEST_CASE("canonical functional: condensate only, free gas and the pointwise bound") {
  Fixture f;
  GasState s = GasState::zeros(f.grid.size());
  const double rho = 0.8;
  CHECK(free_energy_canonical(s, f.grid, f.pot, 1.0, rho).total ==
        doctest::Approx(0.5 * f.pot.vhat0() * rho * rho).epsilon(1e-14));

  // Bose gamma at delta < 0 carries exactly rho = rho_gamma; F = omega + delta rho
  const auto g = build_grid(256, 30.0);
  const auto zero = zero_potential(g);
  const double T = 2.0, delta = -0.3;
  GasState b = GasState::zeros(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) b.gamma[i] = 1.0 / std::expm1((g.node(i) * g.node(i) - delta) / T);
  const double rho_b = std::pow(T / (4.0 * oracle::pi), 1.5) * oracle::polylog(1.5, std::exp(delta / T));
  const double rho_grid = integrate(g, b.gamma);
  CHECK(rel(rho_grid, rho_b) < 1e-6);
  const auto e = free_energy_canonical(b, g, zero, T, rho_grid);
  CHECK(rel(e.total, oracle::free_grand(T, delta) + delta * rho_b) < 1e-5);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto st = random_state(f.grid, rng, 0.0);
    const double rg = integrate(f.grid, st.gamma);
    const auto en = free_energy_canonical(st, f.grid, f.pot, 1.0, rg + 0.2);
    // gamma + alpha >= -1/2 and \int Vhat = V(0) = v0
    CHECK(en.condensate_coupling >= -0.5 * 0.2 * 1.0 - 1e-14);
  }
  GasState heavy = GasState::zeros(f.grid.size());
  heavy.gamma.assign(f.grid.size(), 1.0);
  CHECK_THROWS_AS(free_energy_canonical(heavy, f.grid, f.pot, 1.0, 0.01), InfeasibleError);
}

TEST_CASE("breakdown properties on random states") {
  Fixture f;
  std::mt19937_64 rng(5);
  const double T = 1.5;
  const double free_bound =
      T * integrate_fn(f.grid, [T](double p) { return std::log(-std::expm1(-p * p / T)); });
  for (int k = 0; k < 200; ++k) {
    const auto s = random_state(f.grid, rng, 0.1 * (k % 3));
    const auto e = free_energy_grand(s, f.grid, f.pot, T, 0.7);
    CHECK(std::abs(e.total - e.sum_of_parts()) <= 1e-13 * std::max(1.0, std::abs(e.total)));
    CHECK(e.pairing >= -1e-15);
    CHECK(e.kinetic + e.entropy_term >= free_bound - 1e-12);
    CHECK(e.entropy >= 0.0);
  }
}

TEST_CASE("joint midpoint convexity at equal rho0") {
  Fixture f;
  std::mt19937_64 rng(17);
  const double rho = 1.0, T = 1.0;
  for (int k = 0; k < 100; ++k) {
    auto x = random_state(f.grid, rng, 0.0), y = random_state(f.grid, rng, 0.0);
    // rescale both to rho_gamma = 0.3 so that rho0 = 0.7 for both
    const double fx = 0.3 / integrate(f.grid, x.gamma), fy = 0.3 / integrate(f.grid, y.gamma);
    for (std::size_t i = 0; i < f.grid.size(); ++i) {
      x.gamma[i] *= fx;
      y.gamma[i] *= fy;
      x.alpha[i] = std::clamp(x.alpha[i], -std::sqrt(x.gamma[i] * (x.gamma[i] + 1.0)),
                              std::sqrt(x.gamma[i] * (x.gamma[i] + 1.0)));
      y.alpha[i] = std::clamp(y.alpha[i], -std::sqrt(y.gamma[i] * (y.gamma[i] + 1.0)),
                              std::sqrt(y.gamma[i] * (y.gamma[i] + 1.0)));
    }
    GasState m = GasState::zeros(f.grid.size());
    for (std::size_t i = 0; i < f.grid.size(); ++i) {
      m.gamma[i] = 0.5 * (x.gamma[i] + y.gamma[i]);
      m.alpha[i] = 0.5 * (x.alpha[i] + y.alpha[i]);
    }
    const double Fx = free_energy_canonical(x, f.grid, f.pot, T, rho).total;
    const double Fy = free_energy_canonical(y, f.grid, f.pot, T, rho).total;
    const double Fm = free_energy_canonical(m, f.grid, f.pot, T, rho).total;
    CHECK(0.5 * (Fx + Fy) - Fm > 0.0);
  }
}

TEST_CASE("domain checks") {
  GasState s = GasState::zeros(3);
  CHECK(check_domain(s).empty());
  s.gamma = {1.0, 1.0, 0.0};
  s.alpha = {std::sqrt(2.0), 0.0, 0.0};
  CHECK(check_domain(s).empty());
  s.alpha = {1.5, 0.0, 0.0};
  auto v = check_domain(s);
  REQUIRE(v.size() == 1);
  CHECK(v[0].node == 0);
  s.alpha = {0.0, 0.0, 0.0};
  s.rho0 = -0.1;
  v = check_domain(s);
  REQUIRE(v.size() == 1);
  CHECK(v[0].node == -1);
  s.rho0 = 0.0;
  s.gamma[2] = -1e-3;
  CHECK(!check_domain(s).empty());
}

TEST_CASE("state files round trip exactly") {
  Fixture f;
  std::mt19937_64 rng(23);
  const auto s = random_state(f.grid, rng, 0.123456789012345);
  std::stringstream io;
  write_state(io, s, f.grid, StateHeader{s.rho0, 0.75, Ensemble::canonical, 1.25, f.pot.fingerprint()});
  const auto back = read_state(io);
  CHECK(back.state.gamma == s.gamma);
  CHECK(back.state.alpha == s.alpha);
  CHECK(back.state.rho0 == s.rho0);
  CHECK(back.header.T == 0.75);
  CHECK(back.header.mode == Ensemble::canonical);
  CHECK(back.header.control == 1.25);
  CHECK(back.header.potential_fingerprint == f.pot.fingerprint());
  CHECK(back.nodes.size() == f.grid.size());
  for (std::size_t i = 0; i < f.grid.size(); ++i) CHECK(back.nodes[i] == f.grid.node(i));
}

TEST_CASE("ensemble names") {
  CHECK(ensemble_from_string("grand") == Ensemble::grand);
  CHECK(ensemble_from_string("canonical") == Ensemble::canonical);
  CHECK(to_string(Ensemble::canonical) == "canonical");
  CHECK_THROWS_AS(ensemble_from_string("micro"), ConfigError);
}

TEST_CASE("functional rejects states outside the domain") {
  Fixture f;
  GasState s = GasState::zeros(f.grid.size());
  s.gamma[3] = 1.0;
  s.alpha[3] = 2.0;
  CHECK_THROWS_AS(free_energy_grand(s, f.grid, f.pot, 1.0, 1.0), DomainError);
}
