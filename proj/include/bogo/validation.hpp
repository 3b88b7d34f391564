#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bogo {

struct ValidationRow {
  std::string suite;
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

/// Self-contained invariant suites on a fixed grid and the default Gaussian potential.
/// Names: "functional", "solver", "quasifree".
std::vector<ValidationRow> run_validation_suite(const std::string& suite, std::uint64_t seed);

inline const std::vector<std::string>& validation_suites() {
  static const std::vector<std::string> names{"functional", "solver", "quasifree"};
  return names;
}

}  // namespace bogo
