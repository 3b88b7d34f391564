#include "bogo/potential.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <math.h>  // boost pchip calls isnan unqualified

#include <boost/math/interpolators/pchip.hpp>

#include "bogo/errors.hpp"
#include "gauss_legendre.hpp"

namespace bogo {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) {
    h ^= (v >> (8 * b)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t hash_str(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<double> sample_nodes(const RadialGrid& grid, const std::function<double(double)>& f) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = f(grid.node(i));
  return out;
}

void finish(Potential::Impl& impl, const RadialGrid& grid, double r_max,
            const ScatteringOptions& opts = {}) {
  impl.vhat_nodes = sample_nodes(grid, impl.vhat);
  impl.audit.finite = std::isfinite(impl.audit.vhat_sup) && std::isfinite(impl.audit.grad_sup) &&
                      std::isfinite(impl.audit.vhat_integral);
  for (double v : impl.vhat_nodes) {
    if (!std::isfinite(v)) impl.audit.finite = false;
    if (v < 0.0) impl.audit.nonnegative = false;
  }
  if (!impl.audit.finite) throw NumericalError("potential: non-finite Vhat");
  if (impl.vhat0 == 0.0 && impl.audit.vhat_sup == 0.0) {
    impl.a = 0.0;
    impl.nu = std::numeric_limits<double>::quiet_NaN();
  } else {
    impl.a = scattering_length(impl.v_space, r_max, opts);
    impl.nu = impl.vhat0 / impl.a;
  }
}

}  // namespace

KernelMatrix::KernelMatrix(const RadialGrid& grid, std::vector<double> k_values)
    : n_(grid.size()), k_(std::move(k_values)), grid_fingerprint_(grid.fingerprint()) {
  if (k_.size() != n_ * n_) throw ConfigError("kernel: expected N*N entries");
  avg_.resize(n_ * n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = k_[i * n_ + j];
      if (!std::isfinite(v)) throw NumericalError("kernel: non-finite entry");
      avg_[i * n_ + j] = v / (2.0 * grid.node(i) * grid.node(j));
    }
  }
}

void convolve_into(const RadialGrid& grid, const KernelMatrix& kernel, std::span<const double> f,
                   std::span<double> out) {
  const std::size_t n = grid.size();
  if (kernel.grid_fingerprint() != grid.fingerprint() || kernel.size() != n)
    throw ConfigError("convolve: kernel was built for a different grid");
  if (f.size() != n || out.size() != n) throw ConfigError("convolve: length mismatch");
  // scratch on the stack for the usual sizes
  std::vector<double> g(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(f[j])) throw NumericalError("convolve: non-finite input");
    g[j] = grid.weight(j) * f[j];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = kernel.averaged_row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * g[j];
    out[i] = acc;
  }
}

std::vector<double> convolve(const RadialGrid& grid, const KernelMatrix& kernel,
                             std::span<const double> f) {
  std::vector<double> out(grid.size());
  convolve_into(grid, kernel, f, out);
  return out;
}

Potential gaussian_potential(double v0, double sigma, const RadialGrid& grid) {
  if (!(v0 > 0.0) || !std::isfinite(v0)) throw ConfigError("gaussian potential: v0 must be > 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ConfigError("gaussian potential: sigma must be > 0");

  auto impl = std::make_shared<Potential::Impl>();
  const double s2 = sigma * sigma;
  const double vh0 = v0 * std::pow(2.0 * kPi * s2, 1.5);
  impl->family = "gaussian";
  impl->vhat0 = vh0;
  impl->vhat = [vh0, s2](double p) { return vh0 * std::exp(-0.5 * s2 * p * p); };
  impl->v_space = [v0, s2](double r) { return v0 * std::exp(-0.5 * r * r / s2); };
  impl->audit.vhat_sup = vh0;
  impl->audit.grad_sup = vh0 * sigma * std::exp(-0.5);
  impl->audit.vhat_integral = v0;

  const std::size_t n = grid.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = grid.node(i);
    for (std::size_t j = i; j < n; ++j) {
      const double q = grid.node(j);
      const double d = p - q;
      // e^{-s2 (p-q)^2/2} - e^{-s2 (p+q)^2/2} without cancellation
      k[i * n + j] = k[j * n + i] = vh0 / s2 * std::exp(-0.5 * s2 * d * d) * (-std::expm1(-2.0 * s2 * p * q));
    }
  }
  impl->kernel = KernelMatrix(grid, std::move(k));

  std::uint64_t h = 0xcbf29ce484222325ull;
  h = hash_str(h, impl->family);
  h = hash_mix(h, std::bit_cast<std::uint64_t>(v0));
  h = hash_mix(h, std::bit_cast<std::uint64_t>(sigma));
  h = hash_mix(h, grid.fingerprint());
  impl->fingerprint = h;

  finish(*impl, grid, 10.0 * sigma);
  return Potential(std::move(impl));
}

Potential tabulated_potential(std::vector<double> p, std::vector<double> vhat,
                              const RadialGrid& grid, double r_max) {
  if (p.size() != vhat.size()) throw ConfigError("tabulated potential: column length mismatch");
  if (p.size() < 4) throw ConfigError("tabulated potential: need at least 4 rows");
  if (p.front() != 0.0) throw ConfigError("tabulated potential: first momentum must be 0");
  for (std::size_t k = 1; k < p.size(); ++k)
    if (!(p[k] > p[k - 1])) throw ConfigError("tabulated potential: momenta must increase");
  for (double v : vhat) {
    if (!std::isfinite(v)) throw ConfigError("tabulated potential: non-finite Vhat");
    if (v < 0.0) throw ConfigError("tabulated potential: Vhat must be >= 0");
  }
  if (!(r_max > 0.0)) throw ConfigError("tabulated potential: r_max must be > 0");

  std::uint64_t h = 0xcbf29ce484222325ull;
  h = hash_str(h, "tabulated");
  for (std::size_t k = 0; k < p.size(); ++k) {
    h = hash_mix(h, std::bit_cast<std::uint64_t>(p[k]));
    h = hash_mix(h, std::bit_cast<std::uint64_t>(vhat[k]));
  }
  h = hash_mix(h, grid.fingerprint());

  const std::vector<double> xs = p;
  const std::vector<double> ys = vhat;
  const double p_last = p.back();
  using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
  // Vhat(|p|) is smooth at the origin only with zero slope there
  auto interp = std::make_shared<Pchip>(std::move(p), std::move(vhat), 0.0);
  auto vh = [interp, p_last](double t) {
    if (t < 0.0) t = -t;
    if (t > p_last) return 0.0;
    return std::max(0.0, (*interp)(t));
  };

  auto impl = std::make_shared<Potential::Impl>();
  impl->family = "tabulated";
  impl->vhat = vh;
  impl->vhat0 = ys.front();
  impl->fingerprint = h;

  const auto gl3 = detail::gauss_legendre(3);
  auto piece = [&](auto&& f, double lo, double hi) {
    double acc = 0.0;
    const double c = 0.5 * (hi + lo), r = 0.5 * (hi - lo);
    for (std::size_t m = 0; m < 3; ++m) acc += gl3.weights[m] * f(c + r * gl3.nodes[m]);
    return r * acc;
  };

  // Phi(t) = \int_0^t s Vhat(s) ds; each table interval is a quartic so 3-point GL is exact
  std::vector<double> phi(xs.size(), 0.0);
  for (std::size_t k = 1; k < xs.size(); ++k)
    phi[k] = phi[k - 1] + piece([&](double s) { return s * vh(s); }, xs[k - 1], xs[k]);
  auto tvh = [&](double s) { return s * vh(s); };
  auto integral_between = [&](double lo, double hi) {
    // exact piecewise integration, splitting at table nodes
    if (hi <= lo) return 0.0;
    hi = std::min(hi, p_last);
    if (hi <= lo) return 0.0;
    auto it = std::upper_bound(xs.begin(), xs.end(), lo);
    double acc = 0.0, a = lo;
    for (; it != xs.end() && *it < hi; ++it) {
      acc += piece(tvh, a, *it);
      a = *it;
    }
    return acc + piece(tvh, a, hi);
  };
  auto phi_at = [&](double t) {
    if (t >= p_last) return phi.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - xs.begin()) - 1;
    return phi[k] + piece(tvh, xs[k], t);
  };

  const std::size_t n = grid.size();
  std::vector<double> kv(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double a = grid.node(i), b = grid.node(j);
      const double lo = std::abs(a - b), hi = a + b;
      const auto first = std::upper_bound(xs.begin(), xs.end(), lo);
      const auto last = std::lower_bound(xs.begin(), xs.end(), std::min(hi, p_last));
      double val;
      if (last - first <= 8)
        val = integral_between(lo, hi);
      else
        val = phi_at(hi) - phi_at(lo);
      kv[i * n + j] = kv[j * n + i] = std::max(0.0, val);
    }
  }
  impl->kernel = KernelMatrix(grid, std::move(kv));

  double sup = 0.0, grad = 0.0, integral = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sup = std::max(sup, ys[k]);
    grad = std::max(grad, std::abs(interp->prime(xs[k])));
  }
  for (std::size_t k = 1; k < xs.size(); ++k)
    integral += piece([&](double s) { return s * s * vh(s); }, xs[k - 1], xs[k]);
  impl->audit.vhat_sup = sup;
  impl->audit.grad_sup = grad;
  impl->audit.vhat_integral = integral / (2.0 * kPi * kPi);
  for (double v : ys)
    if (v < 0.0) impl->audit.nonnegative = false;

  // V(r) = (2 pi^2 r)^-1 \int p sin(pr) Vhat(p) dp, oscillation-resolved per table interval
  impl->v_space = [xs, vh](double r) {
    double acc = 0.0;
    for (std::size_t k = 1; k < xs.size(); ++k) {
      const double lo = xs[k - 1], hi = xs[k];
      const std::size_t order = 4 + static_cast<std::size_t>(std::ceil(r * (hi - lo)));
      const auto rule = detail::gauss_legendre(std::min<std::size_t>(order, 64));
      const double c = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
      for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
        const double q = c + half * rule.nodes[m];
        const double kern = r > 0.0 ? std::sin(q * r) / r : q;
        acc += half * rule.weights[m] * q * kern * vh(q);
      }
    }
    return acc / (2.0 * kPi * kPi);
  };

  // C1 interpolation leaves an algebraic tail in V(r) (jumps of Vhat''), far above the analytic
  // tolerance; its effect on a stays well below the looser bound
  ScatteringOptions opts;
  opts.tail_tol = 1e-5;
  finish(*impl, grid, r_max, opts);
  return Potential(std::move(impl));
}

Potential tabulated_potential_from_file(const std::string& path, const RadialGrid& grid,
                                        double r_max) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open potential table '" + path + "'");
  std::vector<double> p, v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a)) continue;
    if (!(ls >> b))
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected two columns");
    p.push_back(a);
    v.push_back(b);
  }
  return tabulated_potential(std::move(p), std::move(v), grid, r_max);
}

Potential zero_potential(const RadialGrid& grid) {
  auto impl = std::make_shared<Potential::Impl>();
  impl->family = "zero";
  impl->vhat = [](double) { return 0.0; };
  impl->v_space = [](double) { return 0.0; };
  impl->kernel = KernelMatrix(grid, std::vector<double>(grid.size() * grid.size(), 0.0));
  impl->fingerprint = hash_mix(hash_str(0xcbf29ce484222325ull, "zero"), grid.fingerprint());
  finish(*impl, grid, 1.0);
  return Potential(std::move(impl));
}

namespace {

// RK4 for the deviation y = u - r of u'' = V u / 2, u(0) = 0, u'(0) = 1; fits y = s r + c on
// [0.75 r_max, r_max] with centred sums, so a = -c / (1 + s) keeps full relative precision
double shoot(const std::function<double(double)>& v, double r_max, std::size_t steps) {
  const double h = r_max / static_cast<double>(steps);
  double y = 0.0, dy = 0.0;
  std::vector<double> xs, ys;
  const std::size_t fit_from = (3 * steps) / 4;
  double v_prev = v(0.0);
  auto f = [](double vr, double r, double yy) { return 0.5 * vr * (r + yy); };
  for (std::size_t k = 0; k < steps; ++k) {
    const double r = static_cast<double>(k) * h;
    const double v_mid = v(r + 0.5 * h);
    const double v_next = v(r + h);
    const double k1y = dy, k1d = f(v_prev, r, y);
    const double k2y = dy + 0.5 * h * k1d, k2d = f(v_mid, r + 0.5 * h, y + 0.5 * h * k1y);
    const double k3y = dy + 0.5 * h * k2d, k3d = f(v_mid, r + 0.5 * h, y + 0.5 * h * k2y);
    const double k4y = dy + h * k3d, k4d = f(v_next, r + h, y + h * k3y);
    y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
    dy += h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
    v_prev = v_next;
    if (!std::isfinite(y) || !std::isfinite(dy))
      throw NumericalError("scattering_length: integration overflow");
    if (k + 1 >= fit_from) {
      xs.push_back(r + h);
      ys.push_back(y);
    }
  }
  const double n = static_cast<double>(xs.size());
  double xm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    xm += xs[k];
    ym += ys[k];
  }
  xm /= n;
  ym /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - xm) * (xs[k] - xm);
    sxy += (xs[k] - xm) * (ys[k] - ym);
  }
  const double slope = sxy / sxx;
  const double icept = ym - slope * xm;
  return -icept / (1.0 + slope);
}

}  // namespace

double scattering_length(const std::function<double(double)>& v_space, double r_max,
                         const ScatteringOptions& opts) {
  if (!(r_max > 0.0)) throw ConfigError("scattering_length: r_max must be > 0");
  if (opts.steps < 16) throw ConfigError("scattering_length: too few steps");

  double vmax = 0.0;
  for (std::size_t k = 0; k <= opts.steps; ++k) {
    const double r = r_max * static_cast<double>(k) / static_cast<double>(opts.steps);
    vmax = std::max(vmax, std::abs(v_space(r)) * std::max(1.0, r * r));
  }
  if (vmax == 0.0) return 0.0;
  const double tail = std::abs(v_space(r_max)) * r_max * r_max;
  if (tail > opts.tail_tol * std::max(1.0, vmax))
  {
    std::ostringstream msg;
    msg << "scattering_length: |V(r_max)| r_max^2 = " << tail << " (relative " << tail / vmax
        << ") is not negligible; potential too long-ranged for r_max";
    throw NumericalError(msg.str());
  }

  const double a_coarse = shoot(v_space, r_max, opts.steps);
  const double a_fine = shoot(v_space, r_max, 2 * opts.steps);
  if (std::abs(a_fine - a_coarse) > opts.richardson_tol * std::max(std::abs(a_fine), 1e-300))
    throw NumericalError("scattering_length: step refinement did not converge");
  const double a = a_fine + (a_fine - a_coarse) / 15.0;
  if (!(a > 0.0))
    throw NumericalError("scattering_length: non-positive a for a repulsive potential");
  return a;
}

}  // namespace bogo
