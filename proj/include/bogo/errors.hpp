#pragma once

#include <stdexcept>
#include <string>

namespace bogo {

/// Invalid construction parameters or run configuration.
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// A state outside the admissible set (gamma >= 0, alpha^2 <= gamma(gamma+1), rho0 >= 0).
class DomainError : public std::domain_error {
public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Non-finite intermediate values or other arithmetic breakdowns.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Requested density cannot be represented (rho_gamma > rho, bracketing failures).
class InfeasibleError : public std::runtime_error {
public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bogo
