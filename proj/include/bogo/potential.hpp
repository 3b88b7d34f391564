#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bogo/radial_grid.hpp"

namespace bogo {

/// Radial convolution kernel K(p_i, q_j) = \int_{|p-q|}^{p+q} t Vhat(t) dt on a fixed grid.
///
/// Also stores the angle-averaged form M_ij = K_ij / (2 p_i q_j), which is what
/// convolve() contracts against; M(p, q) -> Vhat(q) as p -> 0.
class KernelMatrix {
public:
  KernelMatrix() = default;
  KernelMatrix(const RadialGrid& grid, std::vector<double> k_values);

  std::size_t size() const { return n_; }
  double k(std::size_t i, std::size_t j) const { return k_[i * n_ + j]; }
  double averaged(std::size_t i, std::size_t j) const { return avg_[i * n_ + j]; }
  std::span<const double> averaged_row(std::size_t i) const { return {avg_.data() + i * n_, n_}; }
  std::uint64_t grid_fingerprint() const { return grid_fingerprint_; }

private:
  std::size_t n_ = 0;
  std::vector<double> k_;
  std::vector<double> avg_;
  std::uint64_t grid_fingerprint_ = 0;
};

/// (Vhat * f)(p_i) = (2pi)^-3 \int Vhat(p_i - q) f(|q|) dq on the grid.
std::vector<double> convolve(const RadialGrid& grid, const KernelMatrix& kernel,
                             std::span<const double> f);
/// Allocation-free variant used inside the solver loops.
void convolve_into(const RadialGrid& grid, const KernelMatrix& kernel, std::span<const double> f,
                   std::span<double> out);

struct PotentialAudit {
  double vhat_sup = 0.0;       // ||Vhat||_inf
  double grad_sup = 0.0;       // ||grad Vhat||_inf
  double vhat_integral = 0.0;  // (2pi)^-3 \int Vhat = V(0)
  bool nonnegative = true;     // Vhat >= 0 at every node
  bool finite = true;
};

/// Interaction potential with Fourier transform Vhat(p) (units hbar = 2m = 1).
///
/// Immutable once built; copies share the underlying kernel.
class Potential {
public:
  const std::string& family() const { return impl_->family; }
  double vhat(double p) const { return impl_->vhat(p); }
  /// Position-space V(r).
  double v_space(double r) const { return impl_->v_space(r); }
  double vhat0() const { return impl_->vhat0; }
  std::span<const double> vhat_nodes() const { return impl_->vhat_nodes; }
  const KernelMatrix& kernel() const { return impl_->kernel; }
  const PotentialAudit& audit() const { return impl_->audit; }
  /// Zero-energy scattering length a (0 for the free gas).
  double scattering_length() const { return impl_->a; }
  /// nu = Vhat(0) / a; NaN when a = 0.
  double nu() const { return impl_->nu; }
  bool is_zero() const { return impl_->vhat0 == 0.0 && impl_->audit.vhat_sup == 0.0; }
  std::uint64_t fingerprint() const { return impl_->fingerprint; }
  std::uint64_t grid_fingerprint() const { return impl_->kernel.grid_fingerprint(); }

  struct Impl {
    std::string family;
    std::function<double(double)> vhat;
    std::function<double(double)> v_space;
    double vhat0 = 0.0;
    std::vector<double> vhat_nodes;
    KernelMatrix kernel;
    PotentialAudit audit;
    double a = 0.0;
    double nu = 0.0;
    std::uint64_t fingerprint = 0;
  };
  explicit Potential(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

private:
  std::shared_ptr<const Impl> impl_;
};

/// V(x) = v0 exp(-x^2 / 2 sigma^2), Vhat(p) = v0 (2 pi sigma^2)^{3/2} exp(-sigma^2 p^2 / 2).
Potential gaussian_potential(double v0, double sigma, const RadialGrid& grid);

/// Vhat given on a table (p_k, Vhat_k), monotone cubic (PCHIP) interpolation,
/// zero beyond the last tabulated momentum. r_max bounds the scattering integration.
Potential tabulated_potential(std::vector<double> p, std::vector<double> vhat,
                              const RadialGrid& grid, double r_max = 20.0);
/// Two-column whitespace-separated text file (p, Vhat); '#' starts a comment.
Potential tabulated_potential_from_file(const std::string& path, const RadialGrid& grid,
                                        double r_max = 20.0);

/// Vhat == 0. Violates V != 0; only meant for free-gas validation runs.
Potential zero_potential(const RadialGrid& grid);

struct ScatteringOptions {
  std::size_t steps = 1600;    // RK4 steps on [0, r_max] (halved for the Richardson check)
  double richardson_tol = 1e-8;  // relative disagreement allowed between h and h/2
  double tail_tol = 1e-10;       // |V(r_max)| r_max^2 must be below this (relative to max|V|)
};

/// Zero-energy scattering length of -2u'' + V u = 0, u(0) = 0, read off the
/// asymptote u ~ c (r - a) by least squares on the last quarter of [0, r_max].
double scattering_length(const std::function<double(double)>& v_space, double r_max,
                         const ScatteringOptions& opts = {});

}  // namespace bogo
