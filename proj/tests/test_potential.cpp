#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "bogo/errors.hpp"
#include "bogo/potential.hpp"
#include "oracles.hpp"

using namespace bogo;
using oracle::pi;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double gauss_vhat(double v0, double sigma, double p) {
  return v0 * std::pow(2.0 * pi * sigma * sigma, 1.5) * std::exp(-0.5 * sigma * sigma * p * p);
}

// (2pi)^-3 \int Vhat(|p - q|) f(|q|) dq with nested adaptive Gauss-Kronrod.
template <class V, class F>
double conv3d(V&& vhat, F&& f, double p, double q_max) {
  using boost::math::quadrature::gauss_kronrod;
  auto inner = [&](double q) {
    auto ang = [&](double u) { return vhat(std::sqrt(std::max(0.0, p * p + q * q - 2.0 * p * q * u))); };
    return q * q * f(q) * gauss_kronrod<double, 31>::integrate(ang, -1.0, 1.0, 10, 1e-13);
  };
  return 2.0 * pi * gauss_kronrod<double, 61>::integrate(inner, 0.0, q_max, 15, 1e-13) /
         (8.0 * pi * pi * pi);
}

// zero-energy scattering length by adaptive Dormand-Prince on u'' = V u / 2
double scattering_oracle(const std::function<double(double)>& v, double r_max) {
  using namespace boost::numeric::odeint;
  using state = std::array<double, 2>;
  state x{0.0, 1.0};
  auto rhs = [&](const state& s, state& d, double r) {
    d[0] = s[1];
    d[1] = 0.5 * v(r) * s[0];
  };
  integrate_adaptive(make_controlled<runge_kutta_dopri5<state>>(1e-14, 1e-14), rhs, x, 0.0, r_max, 1e-3);
  return r_max - x[0] / x[1];
}

}  // namespace

TEST_CASE("Gaussian closed forms") {
  const auto g = build_grid(128, 20.0);
  const double v0 = 1.3, sigma = 0.8;
  const auto pot = gaussian_potential(v0, sigma, g);
  CHECK(pot.vhat0() == doctest::Approx(v0 * std::pow(2.0 * pi * sigma * sigma, 1.5)).epsilon(1e-15));
  for (std::size_t i = 0; i < g.size(); i += 7) {
    const double p = g.node(i);
    CHECK(pot.vhat_nodes()[i] == doctest::Approx(gauss_vhat(v0, sigma, p)).epsilon(1e-14));
    const double kpp = pot.vhat0() / (sigma * sigma) * (-std::expm1(-2.0 * sigma * sigma * p * p));
    CHECK(pot.kernel().k(i, i) == doctest::Approx(kpp).epsilon(1e-13));
  }
  CHECK(pot.audit().vhat_integral == doctest::Approx(v0));
  CHECK(pot.audit().nonnegative);
  CHECK(pot.audit().finite);
}

TEST_CASE("kernel against a one-dimensional quadrature of t Vhat(t)") {
  const auto g = build_grid(96, 12.0);
  const auto pot = gaussian_potential(1.0, 1.0, g);
  using boost::math::quadrature::gauss_kronrod;
  // node pairs closest to (1, 2), plus a few others
  std::size_t i1 = 0, i2 = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g.node(i) - 1.0) < std::abs(g.node(i1) - 1.0)) i1 = i;
    if (std::abs(g.node(i) - 2.0) < std::abs(g.node(i2) - 2.0)) i2 = i;
  }
  for (auto [i, j] : std::vector<std::pair<std::size_t, std::size_t>>{{i1, i2}, {3, 40}, {50, 51}, {10, 90}}) {
    const double p = g.node(i), q = g.node(j);
    const double ref = gauss_kronrod<double, 61>::integrate(
        [&](double t) { return t * gauss_vhat(1.0, 1.0, t); }, std::abs(p - q), p + q, 15, 1e-14);
    if (ref < 1e-200) continue;
    CHECK(rel(pot.kernel().k(i, j), ref) < 1e-10);
  }
}

TEST_CASE("kernel is symmetric and nonnegative") {
  const auto g = build_grid(64, 10.0);
  const auto pot = gaussian_potential(2.0, 0.7, g);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      CHECK(pot.kernel().k(i, j) == pot.kernel().k(j, i));
      CHECK(pot.kernel().k(i, j) >= 0.0);
    }
}

TEST_CASE("convolution against the three-dimensional integral") {
  const auto g = build_grid(256, 20.0);
  const auto pot = gaussian_potential(1.0, 1.0, g);
  auto f = [](double q) { return 1.0 / std::expm1(q * q + 0.5); };
  std::vector<double> fv(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) fv[i] = f(g.node(i));
  const auto conv = convolve(g, pot.kernel(), fv);
  for (std::size_t i : {5u, 40u, 100u, 160u, 230u}) {
    const double ref = conv3d([](double t) { return gauss_vhat(1.0, 1.0, t); }, f, g.node(i), 12.0);
    CHECK(rel(conv[i], ref) < 1e-6);
  }
}

TEST_CASE("Gaussian times Gaussian convolution in closed form") {
  const auto g = build_grid(256, 20.0);
  const double sigma = 1.2;
  const auto pot = gaussian_potential(0.5, sigma, g);
  std::vector<double> fv(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) fv[i] = std::exp(-g.node(i) * g.node(i));
  const auto conv = convolve(g, pot.kernel(), fv);
  const double a = 0.5 * sigma * sigma, b = 1.0;
  for (std::size_t i = 0; i < g.size(); i += 17) {
    const double p = g.node(i);
    const double ref = pot.vhat0() * std::pow(pi / (a + b), 1.5) * std::exp(-a * b * p * p / (a + b)) /
                       (8.0 * pi * pi * pi);
    CHECK(rel(conv[i], ref) < 1e-9);
  }
}

TEST_CASE("convolution: linearity, positivity, Young bound and self-adjointness") {
  const auto g = build_grid(128, 15.0);
  const auto pot = gaussian_potential(1.0, 1.0, g);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> f(g.size()), h(g.size()), mix(g.size()), zero(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    f[i] = u(rng) * std::exp(-g.node(i));
    h[i] = u(rng) / (1.0 + g.node(i) * g.node(i) * g.node(i) * g.node(i));
    mix[i] = 0.3 * f[i] - 1.7 * h[i];
  }
  const auto cf = convolve(g, pot.kernel(), f), ch = convolve(g, pot.kernel(), h);
  const auto cm = convolve(g, pot.kernel(), mix), cz = convolve(g, pot.kernel(), zero);
  const double bound = pot.audit().vhat_sup * integrate(g, f);
  double lhs = 0.0, rhs = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(cz[i] == 0.0);
    CHECK(cf[i] >= 0.0);
    CHECK(cf[i] <= bound);
    CHECK(std::abs(cm[i] - (0.3 * cf[i] - 1.7 * ch[i])) <= 1e-14 * (std::abs(cf[i]) + std::abs(ch[i])));
    lhs += g.weight(i) * h[i] * cf[i];
    rhs += g.weight(i) * f[i] * ch[i];
    scale += g.weight(i) * std::abs(h[i] * cf[i]);
  }
  CHECK(std::abs(lhs - rhs) <= 1e-10 * scale);
}

TEST_CASE("convolution refuses a kernel from another grid") {
  const auto g1 = build_grid(64, 10.0), g2 = build_grid(64, 11.0);
  const auto pot = gaussian_potential(1.0, 1.0, g1);
  std::vector<double> f(64, 1.0);
  CHECK_THROWS_AS(convolve(g2, pot.kernel(), f), ConfigError);
}

TEST_CASE("scattering length: Born limit, free equation, strict inequality") {
  const auto g = build_grid(64, 10.0);
  const auto weak = gaussian_potential(1e-4, 1.0, g);
  CHECK(std::abs(weak.nu() - 8.0 * pi) / (8.0 * pi) < 1e-3);
  CHECK(scattering_length([](double) { return 0.0; }, 10.0) == 0.0);
  CHECK(zero_potential(g).scattering_length() == 0.0);
  for (double v0 : {0.5, 1.0, 5.0}) {
    const auto pot = gaussian_potential(v0, 1.0, g);
    CHECK(pot.nu() > 8.0 * pi);
    const double ref = scattering_oracle([v0](double r) { return v0 * std::exp(-0.5 * r * r); }, 10.0);
    CHECK(rel(pot.scattering_length(), ref) < 1e-8);
  }
}

TEST_CASE("scattering length does not decrease along a v0 ladder") {
  const auto g = build_grid(32, 10.0);
  double prev = 0.0;
  for (double v0 : {1e-3, 1e-2, 0.1, 1.0, 3.0, 10.0, 30.0}) {
    const double a = gaussian_potential(v0, 1.0, g).scattering_length();
    CHECK(a > prev);
    prev = a;
  }
}

TEST_CASE("tabulated potential reproduces a tabulated Gaussian") {
  const auto g = build_grid(128, 12.0);
  std::vector<double> p, v;
  for (int k = 0; k <= 400; ++k) {
    p.push_back(0.04 * k);
    v.push_back(gauss_vhat(1.0, 1.0, p.back()));
  }
  const auto tab = tabulated_potential(p, v, g, 10.0);
  const auto ref = gaussian_potential(1.0, 1.0, g);
  CHECK(tab.family() == "tabulated");
  CHECK(tab.vhat0() == doctest::Approx(ref.vhat0()).epsilon(1e-15));
  for (std::size_t i = 0; i < g.size(); i += 5) {
    CHECK(std::abs(tab.vhat_nodes()[i] - ref.vhat_nodes()[i]) < 1e-4 * ref.vhat0());
    for (std::size_t j = 0; j < g.size(); j += 9)
      CHECK(std::abs(tab.kernel().k(i, j) - ref.kernel().k(i, j)) < 1e-4 * ref.vhat0());
  }
  CHECK(rel(tab.scattering_length(), ref.scattering_length()) < 1e-4);
  CHECK(rel(tab.audit().vhat_integral, 1.0) < 1e-4);
}

TEST_CASE("tabulated potential from a file, and malformed tables") {
  const auto g = build_grid(32, 8.0);
  const auto path = std::filesystem::temp_directory_path() / "bogo_test_table.txt";
  {
    std::ofstream out(path);
    out << "# p vhat\n";
    for (int k = 0; k <= 200; ++k) out << 0.05 * k << ' ' << gauss_vhat(1.0, 1.0, 0.05 * k) << "  # row\n";
  }
  const auto tab = tabulated_potential_from_file(path.string(), g);
  CHECK(tab.vhat0() == doctest::Approx(gauss_vhat(1.0, 1.0, 0.0)));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(tabulated_potential_from_file("/nonexistent/table", g), ConfigError);
  CHECK_THROWS_AS(tabulated_potential({0.1, 1, 2, 3}, {1, 1, 1, 1}, g), ConfigError);
  CHECK_THROWS_AS(tabulated_potential({0, 1, 1, 3}, {1, 1, 1, 1}, g), ConfigError);
  CHECK_THROWS_AS(tabulated_potential({0, 1, 2, 3}, {1, -1, 1, 1}, g), ConfigError);
  CHECK_THROWS_AS(tabulated_potential({0, 1, 2}, {1, 1, 1}, g), ConfigError);
  CHECK_THROWS_AS(gaussian_potential(0.0, 1.0, g), ConfigError);
  CHECK_THROWS_AS(gaussian_potential(1.0, -1.0, g), ConfigError);
}

TEST_CASE("zero potential is flagged and has no scattering") {
  const auto g = build_grid(32, 8.0);
  const auto z = zero_potential(g);
  CHECK(z.is_zero());
  CHECK(std::isnan(z.nu()));
  CHECK(!gaussian_potential(1.0, 1.0, g).is_zero());
  CHECK(z.fingerprint() != gaussian_potential(1.0, 1.0, g).fingerprint());
}
