#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bogo/phase.hpp"
#include "bogo/solver.hpp"

namespace bogo::cli {

/// "start:stop:count" (inclusive endpoints) or a single number.
std::vector<double> parse_range(const std::string& text);

struct PotentialSpec {
  std::string family = "gaussian";  // gaussian | tabulated | zero
  double v0 = 1.0;
  double sigma = 1.0;
  std::string table;  // tabulated: two-column file
  double r_max = 20.0;
};

struct GridSpec {
  std::size_t n = 256;
  double p_max = 0.0;  // 0: chosen from the largest T and control
  std::string scheme = "graded";
};

struct RunConfig {
  std::string command;  // solve | sweep | critical-temp | validate | dilute-anchors
  Ensemble mode = Ensemble::grand;
  std::vector<double> temperatures{1.0};
  std::vector<double> controls{1.0};  // mu (grand) or rho (canonical)
  PotentialSpec potential;
  GridSpec grid;
  SolverConfig solver;
  double eps_cond = 1e-8;
  double eps_pair = 1e-6;
  std::size_t scan_points = 33;
  double tol_T = 0.0;
  std::vector<double> ladder{0.01, 0.02, 0.05};
  double lhy_x = 0.01;
  std::vector<std::string> suites;  // empty: all
  std::size_t workers = 1;
  std::string out_dir = "bogofe_out";
  bool plot_data = false;

  /// Throws ConfigError on empty ranges, T < 0 or unknown names.
  void validate() const;
};

/// Merge a JSON object into cfg (keys as in the README).
void apply_json(RunConfig& cfg, const std::string& json_text);

/// BOGO_WORKERS and BOGO_OUT_DIR.
void apply_env(RunConfig& cfg);

/// Runs cfg.command; returns 0 (all converged / passed), 2 (partial) and writes into cfg.out_dir.
int run(const RunConfig& cfg);

/// Full command line entry point; 1 on configuration or runtime errors.
int main(int argc, const char* const* argv);

/// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace bogo::cli
