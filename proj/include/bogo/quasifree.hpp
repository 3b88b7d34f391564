#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bogo::quasifree {

/// Finite-mode quasi-free state with real symmetric gamma (>= 0) and alpha.
struct FiniteModeSpec {
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd alpha;
  std::size_t n_max = 60;  // per-mode Fock truncation (starting value for the direct route)

  std::size_t modes() const { return static_cast<std::size_t>(gamma.rows()); }

  static FiniteModeSpec single(double gamma, double alpha, std::size_t n_max = 60);
  static FiniteModeSpec diagonal(const std::vector<double>& gamma, const std::vector<double>& alpha,
                                 std::size_t n_max = 60);
};

/// Block density matrix [[gamma, alpha], [alpha, 1 + gamma]].
Eigen::MatrixXd gamma_block(const FiniteModeSpec& spec);

/// diag(1, -1) in the same block layout.
Eigen::MatrixXd sigma_block(std::size_t m);

/// Throws DomainError unless 1 <= m <= 3, shapes match, matrices are symmetric and the block
/// density matrix is >= -1e-10.
void check_spec(const FiniteModeSpec& spec);

/// Symplectic eigenvalues beta_j >= 1/2: the positive spectrum of gamma_block * sigma + 1/2.
std::vector<double> symplectic_eigenvalues(const FiniteModeSpec& spec);

/// Same spectrum from the symmetric matrix (G + S/2)^{1/2} S (G + S/2)^{1/2}.
std::vector<double> symplectic_eigenvalues_symmetric(const FiniteModeSpec& spec);

/// sum_j (beta_j + 1/2) ln(beta_j + 1/2) - (beta_j - 1/2) ln(beta_j - 1/2).
double entropy_from_formula(const FiniteModeSpec& spec);

/// Gibbs state of the quadratic Hamiltonian reproducing (gamma, alpha), on a truncated Fock space.
struct TruncatedGibbs {
  std::size_t modes = 0;
  std::size_t n_max = 0;
  Eigen::MatrixXd rho;                   // occupation basis, index = sum_j n_j (n_max+1)^j
  Eigen::VectorXd energies;              // spectrum of the truncated Hamiltonian (shifted, min 0)
  Eigen::MatrixXd eigenvectors;
  double trace_defect = 0.0;             // probability on the two highest levels of any mode
  std::vector<Eigen::MatrixXd> a;        // annihilation operators (truncated)
};

struct DirectOptions {
  double tail_tol = 1e-12;
  std::size_t max_dim = 2048;  // refuse beyond this Hilbert space dimension
  double t_effective = 1.0;    // scales the Hamiltonian and the Gibbs weight alike
};

/// Raises N_max from spec.n_max until the trace defect is below tail_tol; throws NumericalError
/// with an estimate of the N_max needed when even the largest N_max within max_dim falls short.
TruncatedGibbs truncated_gibbs(const FiniteModeSpec& spec, const DirectOptions& opts = {});

/// -Tr G ln G of a truncated Gibbs state (from its Hamiltonian spectrum).
double entropy_of(const TruncatedGibbs& g);

double entropy_direct(const FiniteModeSpec& spec, const DirectOptions& opts = {});

/// Tr(rho a_i^* a_j) and Tr(rho a_i a_j) on the truncated space.
Eigen::MatrixXd gamma_direct(const TruncatedGibbs& g);
Eigen::MatrixXd alpha_direct(const TruncatedGibbs& g);

struct WickResult {
  double max_deviation = 0.0;  // four-point direct vs pair contractions
  double max_odd = 0.0;        // |<a^#>| and |<a^# a^# a^#>|
  std::size_t checked = 0;
};

/// All ordered four-fold products of {a_j, a_j^*} for m <= 2 (256 at m = 2), first mode
/// only for m = 3; odd moments of orders one and three.
WickResult wick_check(const FiniteModeSpec& spec, const DirectOptions& opts = {});

/// Entropy of D(phi) G D(phi)^* with D(phi) = exp(sum_j phi_j (a_j^* - a_j)), computed on the
/// truncated space; also returns <a_j> of the shifted state.
struct ShiftResult {
  double entropy_before = 0.0;
  double entropy_after = 0.0;
  std::vector<double> mean_field;
};
ShiftResult coherent_shift(const FiniteModeSpec& spec, const std::vector<double>& phi,
                           const DirectOptions& opts = {});

struct SuiteRow {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Formula vs direct entropy over gamma in {0.1, 1, 5} and alpha^2 in {0, gamma(gamma+1)/2,
/// gamma(gamma+1)}, two-mode coupled cases, Wick and coherent-shift checks.
std::vector<SuiteRow> run_suite();

}  // namespace bogo::quasifree
