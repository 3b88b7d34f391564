#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bogo {

enum class GridScheme { uniform, graded };

std::string to_string(GridScheme scheme);
GridScheme grid_scheme_from_string(const std::string& name);

/// Radial momentum discretization of (2pi)^-3 \int_{R^3} f(|p|) dp.
///
/// Nodes are strictly positive (p = 0 is never a node; the condensate is
/// carried separately as rho0). Weights already contain the measure
/// (2 pi^2)^-1 p^2 dp, so integrate() is a plain dot product.
///
///  - uniform: composite midpoint rule on (0, p_max].
///  - graded:  p = p_max u^2 with composite 4-point Gauss-Legendre panels in u,
///             which clusters nodes near p = 0 where gamma may be large.
class RadialGrid {
public:
  RadialGrid(std::vector<double> nodes, std::vector<double> weights, double p_max,
             GridScheme scheme);

  std::size_t size() const { return nodes_.size(); }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }
  double node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  double p_max() const { return p_max_; }
  GridScheme scheme() const { return scheme_; }

  /// Stable identifier of (n, p_max, scheme); used to bind kernels to grids.
  std::uint64_t fingerprint() const { return fingerprint_; }

private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  double p_max_;
  GridScheme scheme_;
  std::uint64_t fingerprint_;
};

inline constexpr std::size_t kMinGridNodes = 16;

RadialGrid build_grid(std::size_t n, double p_max, GridScheme scheme = GridScheme::graded);

/// Cutoff that keeps exp(-p^2/T) tails negligible: 20 * max(sqrt(T), sqrt|mu|, 1).
double default_p_max(double T, double mu_or_scale);

/// sum_i w_i values_i, the discrete (2pi)^-3 \int dp.
double integrate(const RadialGrid& grid, std::span<const double> values);

/// Convenience: integrate a function of |p| sampled at the nodes.
template <class F>
double integrate_fn(const RadialGrid& grid, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) acc += grid.weight(i) * f(grid.node(i));
  return acc;
}

}  // namespace bogo
