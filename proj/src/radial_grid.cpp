#include "bogo/radial_grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "bogo/errors.hpp"
#include "gauss_legendre.hpp"

namespace bogo {

namespace {

constexpr std::size_t kPanelOrder = 4;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  // FNV-1a over the 8 bytes of v
  for (int b = 0; b < 8; ++b) {
    h ^= (v >> (8 * b)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::string to_string(GridScheme scheme) {
  return scheme == GridScheme::uniform ? "uniform" : "graded";
}

GridScheme grid_scheme_from_string(const std::string& name) {
  if (name == "uniform") return GridScheme::uniform;
  if (name == "graded") return GridScheme::graded;
  throw ConfigError("unknown grid scheme '" + name + "' (expected uniform|graded)");
}

RadialGrid::RadialGrid(std::vector<double> nodes, std::vector<double> weights, double p_max,
                       GridScheme scheme)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), p_max_(p_max), scheme_(scheme) {
  if (nodes_.size() != weights_.size()) throw ConfigError("grid: nodes/weights length mismatch");
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = mix(h, nodes_.size());
  h = mix(h, std::bit_cast<std::uint64_t>(p_max_));
  h = mix(h, static_cast<std::uint64_t>(scheme_));
  for (double x : nodes_) h = mix(h, std::bit_cast<std::uint64_t>(x));
  fingerprint_ = h;
}

RadialGrid build_grid(std::size_t n, double p_max, GridScheme scheme) {
  if (n < kMinGridNodes)
    throw ConfigError("grid needs at least " + std::to_string(kMinGridNodes) + " nodes");
  if (!(p_max > 0.0) || !std::isfinite(p_max)) throw ConfigError("grid p_max must be > 0");

  const double measure = 1.0 / (2.0 * std::numbers::pi * std::numbers::pi);
  std::vector<double> nodes, weights;
  nodes.reserve(n);
  weights.reserve(n);

  if (scheme == GridScheme::uniform) {
    const double dp = p_max / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = (static_cast<double>(i) + 0.5) * dp;
      nodes.push_back(p);
      weights.push_back(measure * p * p * dp);
    }
  } else {
    // p = p_max u^2, dp = 2 p_max u du; last panel absorbs n % 4 extra points
    const std::size_t panels = n / kPanelOrder;
    const std::size_t extra = n % kPanelOrder;
    const double du = 1.0 / static_cast<double>(panels);
    for (std::size_t k = 0; k < panels; ++k) {
      const std::size_t order = kPanelOrder + (k + 1 == panels ? extra : 0);
      const auto rule = detail::gauss_legendre(order);
      const double u0 = static_cast<double>(k) * du;
      for (std::size_t j = 0; j < order; ++j) {
        const double u = u0 + 0.5 * du * (rule.nodes[j] + 1.0);
        const double wu = 0.5 * du * rule.weights[j];
        const double p = p_max * u * u;
        nodes.push_back(p);
        weights.push_back(measure * p * p * 2.0 * p_max * u * wu);
      }
    }
  }
  return RadialGrid(std::move(nodes), std::move(weights), p_max, scheme);
}

double default_p_max(double T, double mu_or_scale) {
  return 20.0 * std::max({std::sqrt(std::max(T, 0.0)), std::sqrt(std::abs(mu_or_scale)), 1.0});
}

double integrate(const RadialGrid& grid, std::span<const double> values) {
  if (values.size() != grid.size())
    throw ConfigError("integrate: " + std::to_string(values.size()) + " values for a grid of " +
                      std::to_string(grid.size()) + " nodes");
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw NumericalError("integrate: non-finite value at node " + std::to_string(i));
    acc += grid.weight(i) * values[i];
  }
  return acc;
}

}  // namespace bogo
