#include "bogo/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bogo/bose_functions.hpp"
#include "bogo/errors.hpp"
#include "bogo/validation.hpp"

namespace bogo::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace {

double parse_number(const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(e[-1]))) --e;
  if (b < e && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e) throw ConfigError("not a number: '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

}  // namespace

std::vector<double> parse_range(const std::string& text) {
  const auto c1 = text.find(':');
  if (c1 == std::string::npos) return {parse_number(text)};
  const auto c2 = text.find(':', c1 + 1);
  if (c2 == std::string::npos || text.find(':', c2 + 1) != std::string::npos)
    throw ConfigError("range must be start:stop:count, got '" + text + "'");
  const double a = parse_number(text.substr(0, c1));
  const double b = parse_number(text.substr(c1 + 1, c2 - c1 - 1));
  const double cnt = parse_number(text.substr(c2 + 1));
  if (!(cnt >= 1.0) || cnt != std::floor(cnt))
    throw ConfigError("range count must be a positive integer in '" + text + "'");
  const auto n = static_cast<std::size_t>(cnt);
  if (n == 1) {
    if (a != b) throw ConfigError("range with count 1 needs start == stop: '" + text + "'");
    return {a};
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = k + 1 == n ? b : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return out;
}

void RunConfig::validate() const {
  static const std::vector<std::string> commands{"solve", "sweep", "critical-temp", "validate",
                                                 "dilute-anchors"};
  if (std::find(commands.begin(), commands.end(), command) == commands.end())
    throw ConfigError("unknown command '" + command + "'");
  if (temperatures.empty()) throw ConfigError("empty temperature range");
  if (controls.empty()) throw ConfigError("empty control range");
  for (double T : temperatures)
    if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("temperatures must be finite and >= 0");
  for (double c : controls)
    if (!std::isfinite(c)) throw ConfigError("control values must be finite");
  if (mode == Ensemble::canonical)
    for (double c : controls)
      if (c < 0.0) throw ConfigError("canonical density must be >= 0");
  if (potential.family != "gaussian" && potential.family != "tabulated" && potential.family != "zero")
    throw ConfigError("potential family must be gaussian, tabulated or zero");
  if (potential.family == "tabulated" && potential.table.empty())
    throw ConfigError("tabulated potential needs a table file");
  if (grid.n < kMinGridNodes) throw ConfigError("grid needs at least 16 nodes");
  if (grid.p_max < 0.0) throw ConfigError("p_max must be >= 0 (0 = automatic)");
  (void)grid_scheme_from_string(grid.scheme);
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (scan_points < 2) throw ConfigError("scan_points must be >= 2");
  for (const auto& s : suites) {
    const auto& all = validation_suites();
    if (std::find(all.begin(), all.end(), s) == all.end())
      throw ConfigError("unknown validation suite '" + s + "'");
  }
  for (double T : temperatures) solver.validate(T);
}

namespace {

std::vector<double> json_range(const json& v) {
  if (v.is_number()) return {v.get<double>()};
  if (v.is_string()) return parse_range(v.get<std::string>());
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& x : v) out.push_back(x.get<double>());
    return out;
  }
  throw ConfigError("expected a number, a range string or an array");
}

}  // namespace

void apply_json(RunConfig& cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    if (j.contains("command")) cfg.command = j["command"].get<std::string>();
    if (j.contains("mode")) cfg.mode = ensemble_from_string(j["mode"].get<std::string>());
    if (j.contains("T")) cfg.temperatures = json_range(j["T"]);
    if (j.contains("mu")) cfg.controls = json_range(j["mu"]);
    if (j.contains("rho")) cfg.controls = json_range(j["rho"]);
    if (j.contains("potential")) {
      const auto& p = j["potential"];
      cfg.potential.family = p.value("family", cfg.potential.family);
      cfg.potential.v0 = p.value("v0", cfg.potential.v0);
      cfg.potential.sigma = p.value("sigma", cfg.potential.sigma);
      cfg.potential.table = p.value("table", cfg.potential.table);
      cfg.potential.r_max = p.value("r_max", cfg.potential.r_max);
    }
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      cfg.grid.n = g.value("n", cfg.grid.n);
      cfg.grid.p_max = g.value("p_max", cfg.grid.p_max);
      cfg.grid.scheme = g.value("scheme", cfg.grid.scheme);
    }
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      cfg.solver.eta = s.value("eta", cfg.solver.eta);
      cfg.solver.tol_residual = s.value("tol", cfg.solver.tol_residual);
      cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
      cfg.solver.anderson_depth = s.value("anderson_depth", cfg.solver.anderson_depth);
      if (s.contains("kappa") && !s["kappa"].is_null()) cfg.solver.kappa_cap = s["kappa"].get<double>();
      cfg.solver.rho0_optimizer.scan_points =
          s.value("rho0_scan_points", cfg.solver.rho0_optimizer.scan_points);
    }
    cfg.solver.seed = j.value("seed", cfg.solver.seed);
    cfg.eps_cond = j.value("eps_cond", cfg.eps_cond);
    cfg.eps_pair = j.value("eps_pair", cfg.eps_pair);
    cfg.scan_points = j.value("scan_points", cfg.scan_points);
    cfg.tol_T = j.value("tol_T", cfg.tol_T);
    if (j.contains("ladder")) cfg.ladder = json_range(j["ladder"]);
    cfg.lhy_x = j.value("lhy_x", cfg.lhy_x);
    if (j.contains("suites")) cfg.suites = j["suites"].get<std::vector<std::string>>();
    cfg.workers = j.value("workers", cfg.workers);
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.plot_data = j.value("plot_data", cfg.plot_data);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config value error: ") + e.what());
  }
}

void apply_env(RunConfig& cfg) {
  if (const char* w = std::getenv("BOGO_WORKERS"); w && *w) {
    const double v = parse_number(w);
    if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("BOGO_WORKERS must be a positive integer");
    cfg.workers = static_cast<std::size_t>(v);
  }
  if (const char* o = std::getenv("BOGO_OUT_DIR"); o && *o) cfg.out_dir = o;
}

namespace {

struct Setup {
  RadialGrid grid;
  Potential potential;
};

double auto_p_max(const RunConfig& cfg) {
  const double T = *std::max_element(cfg.temperatures.begin(), cfg.temperatures.end());
  double e = 0.0;
  for (double c : cfg.controls)
    e = std::max(e, cfg.mode == Ensemble::grand ? std::abs(c) : free_gas_c0() * std::pow(c, 2.0 / 3.0));
  double p = default_p_max(T, e);
  if (cfg.potential.family == "gaussian") p = std::max(p, 10.0 / cfg.potential.sigma);
  return p;
}

Setup make_setup(const RunConfig& cfg) {
  const double p_max = cfg.grid.p_max > 0.0 ? cfg.grid.p_max : auto_p_max(cfg);
  RadialGrid grid = build_grid(cfg.grid.n, p_max, grid_scheme_from_string(cfg.grid.scheme));
  const auto& ps = cfg.potential;
  if (ps.family == "gaussian") return {grid, gaussian_potential(ps.v0, ps.sigma, grid)};
  if (ps.family == "tabulated") return {grid, tabulated_potential_from_file(ps.table, grid, ps.r_max)};
  return {grid, zero_potential(grid)};
}

SolverStack make_stack(const RunConfig& cfg, const Setup& s) {
  SolverStack st;
  st.grid = &s.grid;
  st.potential = &s.potential;
  st.config = cfg.solver;
  st.eps_cond_rel = cfg.eps_cond;
  st.eps_pair = cfg.eps_pair;
  st.workers = cfg.workers;
  return st;
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json setup_json(const RunConfig& cfg, const Setup& s) {
  json g = {{"n", s.grid.size()}, {"p_max", s.grid.p_max()}, {"scheme", to_string(s.grid.scheme())}};
  json p = {{"family", s.potential.family()},
            {"vhat0", num(s.potential.vhat0())},
            {"scattering_length", num(s.potential.scattering_length())},
            {"nu", num(s.potential.nu())}};
  if (cfg.potential.family == "gaussian") {
    p["v0"] = cfg.potential.v0;
    p["sigma"] = cfg.potential.sigma;
  }
  if (cfg.potential.family == "tabulated") p["table"] = cfg.potential.table;
  return {{"grid", g}, {"potential", p}, {"seed", cfg.solver.seed}};
}

json phase_json(const PhasePoint& pt) {
  return {{"T", num(pt.T)},
          {"control", num(pt.control)},
          {"phase", to_string(pt.phase)},
          {"rho0", num(pt.rho0)},
          {"rho_gamma", num(pt.rho_gamma)},
          {"alpha_max", num(pt.alpha_max)},
          {"F", num(pt.free_energy)},
          {"converged", pt.converged},
          {"consistent", pt.consistent}};
}

json report_json(const SolveReport& r, const SolverStack& st) {
  const auto& e = r.free_energy;
  const PhasePoint pt = to_phase_point(r, st);
  json j = {{"T", num(r.T)},
            {"mode", to_string(r.point.mode)},
            {"control", num(r.point.control)},
            {"converged", r.converged},
            {"iterations", r.iterations},
            {"residual_gamma", num(r.residual_gamma)},
            {"residual_alpha", num(r.residual_alpha)},
            {"branch", r.branch},
            {"phase", to_string(pt.phase)},
            {"phase_consistent", pt.consistent},
            {"rho0", num(r.state.rho0)},
            {"rho_gamma", num(r.rho_gamma)},
            {"rho", num(r.rho_total)},
            {"alpha_max", num(r.alpha_max())},
            {"delta", num(r.delta)},
            {"p_kappa", num(r.p_kappa)},
            {"message", r.message},
            {"free_energy",
             {{"total", num(e.total)},
              {"kinetic", num(e.kinetic)},
              {"entropy_term", num(e.entropy_term)},
              {"direct", num(e.direct)},
              {"exchange_gamma", num(e.exchange_gamma)},
              {"pairing", num(e.pairing)},
              {"condensate_coupling", num(e.condensate_coupling)},
              {"mu_term", num(e.mu_term)},
              {"entropy", num(e.entropy)}}}};
  j["secondary_minimum"] = r.secondary_minimum ? report_json(*r.secondary_minimum, st) : json(nullptr);
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

fs::path out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / name;
}

const double& single(const std::vector<double>& v, const char* what) {
  if (v.size() != 1) throw ConfigError(std::string("solve needs a single ") + what + " value");
  return v.front();
}

int cmd_solve(const RunConfig& cfg) {
  const Setup s = make_setup(cfg);
  const SolverStack st = make_stack(cfg, s);
  const ThermoPoint pt{single(cfg.temperatures, "T"), cfg.mode, single(cfg.controls, "control")};
  const SolveReport rep = solve(pt, s.grid, s.potential, cfg.solver);
  json j = setup_json(cfg, s);
  j["report"] = report_json(rep, st);
  write_text(out_path(cfg, "report.json"), j.dump(2) + "\n");
  {
    std::ostringstream os;
    write_state(os, rep.state, s.grid,
                StateHeader{rep.state.rho0, pt.T, pt.mode, pt.control, s.potential.fingerprint()});
    write_text(out_path(cfg, "state.tsv"), os.str());
  }
  std::cout << "F = " << format_double(rep.free_energy.total) << "  rho0 = " << format_double(rep.state.rho0)
            << "  rho_gamma = " << format_double(rep.rho_gamma) << "  branch = " << rep.branch
            << "  converged = " << (rep.converged ? "yes" : "no") << "\n";
  if (!rep.message.empty()) std::cout << rep.message << "\n";
  return rep.converged ? 0 : 2;
}

int cmd_sweep(const RunConfig& cfg) {
  const Setup s = make_setup(cfg);
  const SolverStack st = make_stack(cfg, s);
  const auto pts = sweep(cfg.temperatures, cfg.controls, cfg.mode, st);
  std::ostringstream csv;
  csv << "T,control,rho0,rho_gamma,alpha_max,F,phase,converged\n";
  bool all = true;
  for (const auto& p : pts) {
    all = all && p.converged;
    csv << format_double(p.T) << ',' << format_double(p.control) << ',' << format_double(p.rho0) << ','
        << format_double(p.rho_gamma) << ',' << format_double(p.alpha_max) << ','
        << format_double(p.free_energy) << ',' << to_string(p.phase) << ',' << (p.converged ? 1 : 0)
        << '\n';
  }
  write_text(out_path(cfg, "sweep.csv"), csv.str());

  // phase changes along T for every control value
  const std::size_t nt = cfg.temperatures.size(), nc = cfg.controls.size();
  std::ostringstream bnd;
  bnd << "control,T_low,T_high,phase_low,phase_high\n";
  std::size_t crossings = 0;
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t t = 0; t + 1 < nt; ++t) {
      const auto& a = pts[t * nc + c];
      const auto& b = pts[(t + 1) * nc + c];
      if (a.phase == Phase::unclassified || b.phase == Phase::unclassified || a.phase == b.phase) continue;
      ++crossings;
      bnd << format_double(a.control) << ',' << format_double(a.T) << ',' << format_double(b.T) << ','
          << to_string(a.phase) << ',' << to_string(b.phase) << '\n';
    }
  if (cfg.plot_data) write_text(out_path(cfg, "boundary.csv"), bnd.str());
  std::cout << pts.size() << " points, " << crossings << " phase change(s) along T, "
            << (all ? "all converged" : "some points did not converge") << "\n";
  return all ? 0 : 2;
}

int cmd_critical(const RunConfig& cfg) {
  const Setup s = make_setup(cfg);
  const SolverStack st = make_stack(cfg, s);
  CriticalOptions opts;
  opts.scan_points = cfg.scan_points;
  opts.tol_T = cfg.tol_T;
  json records = json::array();
  std::ostringstream scan;
  scan << "T,control,rho0,rho_gamma,alpha_max,F,phase,converged\n";
  bool all = true;
  for (double c : cfg.controls) {
    const auto ct = critical_temperature(c, cfg.mode, st, opts);
    all = all && ct.found;
    json cr = json::array();
    for (const auto& b : ct.crossings) cr.push_back({b.T_low, b.T_high});
    records.push_back({{"control", c},
                       {"mode", to_string(cfg.mode)},
                       {"found", ct.found},
                       {"T_low", num(ct.T_low)},
                       {"T_high", num(ct.T_high)},
                       {"T_c", num(ct.T_c)},
                       {"width", num(ct.width)},
                       {"T_fc", num(ct.T_fc)},
                       {"endpoints_verified", ct.endpoints_verified},
                       {"crossings", cr},
                       {"low", phase_json(ct.low)},
                       {"high", phase_json(ct.high)},
                       {"message", ct.message}});
    for (const auto& p : ct.scan)
      scan << format_double(p.T) << ',' << format_double(p.control) << ',' << format_double(p.rho0) << ','
           << format_double(p.rho_gamma) << ',' << format_double(p.alpha_max) << ','
           << format_double(p.free_energy) << ',' << to_string(p.phase) << ',' << (p.converged ? 1 : 0)
           << '\n';
    std::cout << "control " << format_double(c) << ": "
              << (ct.found ? "T_c in [" + format_double(ct.T_low) + ", " + format_double(ct.T_high) + "]"
                           : "not found (" + ct.message + ")")
              << "\n";
  }
  json j = setup_json(cfg, s);
  j["records"] = records;
  write_text(out_path(cfg, "critical.json"), j.dump(2) + "\n");
  if (cfg.plot_data) write_text(out_path(cfg, "critical_scan.csv"), scan.str());
  return all ? 0 : 2;
}

int cmd_validate(const RunConfig& cfg) {
  const std::vector<std::string> suites = cfg.suites.empty() ? validation_suites() : cfg.suites;
  json rows = json::array();
  bool all = true;
  for (const auto& name : suites) {
    for (const auto& r : run_validation_suite(name, cfg.solver.seed)) {
      all = all && r.passed;
      std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.suite << "  " << r.name << "  value="
                << format_double(r.value) << "  threshold=" << format_double(r.threshold) << "\n";
      rows.push_back({{"suite", r.suite},
                      {"name", r.name},
                      {"value", num(r.value)},
                      {"threshold", num(r.threshold)},
                      {"passed", r.passed}});
    }
  }
  write_text(out_path(cfg, "validate.json"), json{{"passed", all}, {"rows", rows}}.dump(2) + "\n");
  std::cout << (all ? "all suites pass" : "some checks failed") << "\n";
  return all ? 0 : 2;
}

int cmd_dilute(const RunConfig& cfg) {
  const Setup s = make_setup(cfg);
  const SolverStack st = make_stack(cfg, s);
  const auto d = dilute_anchors(cfg.ladder, cfg.lhy_x, st);
  json rows = json::array();
  bool all = true;
  std::cout << "a = " << format_double(d.a) << "  nu = " << format_double(d.nu) << "\n";
  for (const auto& r : d.rows) {
    all = all && r.found;
    rows.push_back({{"x", r.x},
                    {"rho", r.rho},
                    {"T_fc_grid", r.T_fc},
                    {"T_c", num(r.T_c)},
                    {"T_c_width", num(r.T_c_width)},
                    {"shift_ratio", num(r.shift_ratio)},
                    {"shift_ratio_err", num(r.shift_ratio_err)},
                    {"found", r.found}});
    std::cout << "x = " << format_double(r.x) << "  (T_c - T_fc) / (T_fc x) = " << format_double(r.shift_ratio)
              << " +- " << format_double(r.shift_ratio_err) << "\n";
  }
  std::cout << "slope = " << format_double(d.slope) << " +- " << format_double(d.slope_err)
            << "  (reference h1 at nu = 8 pi: " << format_double(d.h1_reference) << ")\n"
            << "F_can / (4 pi a rho^2) at x = " << format_double(d.lhy_x) << ": " << format_double(d.lhy_ratio)
            << "  (with the next order: " << format_double(d.lhy_with_correction) << ")\n";
  json j = setup_json(cfg, s);
  j["a"] = num(d.a);
  j["nu"] = num(d.nu);
  j["rows"] = rows;
  j["slope"] = num(d.slope);
  j["slope_err"] = num(d.slope_err);
  j["h1_reference"] = d.h1_reference;
  j["h2_reference"] = kH2At8Pi;
  j["lhy_x"] = d.lhy_x;
  j["lhy_ratio"] = num(d.lhy_ratio);
  j["lhy_with_correction"] = num(d.lhy_with_correction);
  write_text(out_path(cfg, "dilute.json"), j.dump(2) + "\n");
  return all ? 0 : 2;
}

}  // namespace

int run(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.command == "solve") return cmd_solve(cfg);
  if (cfg.command == "sweep") return cmd_sweep(cfg);
  if (cfg.command == "critical-temp") return cmd_critical(cfg);
  if (cfg.command == "validate") return cmd_validate(cfg);
  return cmd_dilute(cfg);
}

namespace {

struct Flags {
  std::optional<std::string> config, mode, T, mu, rho, family, table, scheme, out, ladder;
  std::optional<double> v0, sigma, r_max, p_max, eta, tol, kappa, eps_cond, eps_pair, tol_T, lhy_x;
  std::optional<std::size_t> n, max_iter, anderson_depth, workers, scan_points;
  std::optional<std::uint64_t> seed;
  bool plot_data = false;
  std::vector<std::string> suites;
};

void add_common(CLI::App* sc, Flags& f) {
  sc->add_option("--config", f.config, "JSON configuration file (flags override it)");
  sc->add_option("--mode", f.mode, "grand | canonical");
  sc->add_option("--T", f.T, "temperature or start:stop:count");
  sc->add_option("--mu", f.mu, "chemical potential (grand) or start:stop:count");
  sc->add_option("--rho", f.rho, "density (canonical) or start:stop:count");
  sc->add_option("--potential", f.family, "gaussian | tabulated | zero");
  sc->add_option("--v0", f.v0, "Gaussian strength");
  sc->add_option("--sigma", f.sigma, "Gaussian width");
  sc->add_option("--table", f.table, "tabulated potential file (p, Vhat)");
  sc->add_option("--r-max", f.r_max, "scattering integration range for tabulated potentials");
  sc->add_option("--grid-n", f.n, "number of radial nodes");
  sc->add_option("--p-max", f.p_max, "momentum cutoff (0 = automatic)");
  sc->add_option("--grid-scheme", f.scheme, "graded | uniform");
  sc->add_option("--eta", f.eta, "mixing parameter in (0, 1]");
  sc->add_option("--tol", f.tol, "scaled residual tolerance");
  sc->add_option("--max-iter", f.max_iter, "iteration limit per fixed point");
  sc->add_option("--anderson-depth", f.anderson_depth, "Anderson history length (0 = plain mixing)");
  sc->add_option("--kappa", f.kappa, "cap gamma(p) p^2 <= kappa");
  sc->add_option("--eps-cond", f.eps_cond, "condensate threshold relative to mu / Vhat(0) or rho");
  sc->add_option("--eps-pair", f.eps_pair, "pairing threshold on max |alpha|");
  sc->add_option("--seed", f.seed, "random seed for probes and property checks");
  sc->add_option("--workers", f.workers, "worker threads");
  sc->add_option("--out", f.out, "output directory");
}

void apply_flags(RunConfig& cfg, const Flags& f) {
  if (f.mode) cfg.mode = ensemble_from_string(*f.mode);
  if (f.T) cfg.temperatures = parse_range(*f.T);
  if (f.mu && f.rho) throw ConfigError("give either --mu or --rho");
  if (f.mu) {
    cfg.controls = parse_range(*f.mu);
    if (!f.mode) cfg.mode = Ensemble::grand;
  }
  if (f.rho) {
    cfg.controls = parse_range(*f.rho);
    if (!f.mode) cfg.mode = Ensemble::canonical;
  }
  if (f.family) cfg.potential.family = *f.family;
  if (f.v0) cfg.potential.v0 = *f.v0;
  if (f.sigma) cfg.potential.sigma = *f.sigma;
  if (f.table) cfg.potential.table = *f.table;
  if (f.r_max) cfg.potential.r_max = *f.r_max;
  if (f.n) cfg.grid.n = *f.n;
  if (f.p_max) cfg.grid.p_max = *f.p_max;
  if (f.scheme) cfg.grid.scheme = *f.scheme;
  if (f.eta) cfg.solver.eta = *f.eta;
  if (f.tol) cfg.solver.tol_residual = *f.tol;
  if (f.max_iter) cfg.solver.max_iter = *f.max_iter;
  if (f.anderson_depth) cfg.solver.anderson_depth = *f.anderson_depth;
  if (f.kappa) cfg.solver.kappa_cap = *f.kappa;
  if (f.eps_cond) cfg.eps_cond = *f.eps_cond;
  if (f.eps_pair) cfg.eps_pair = *f.eps_pair;
  if (f.scan_points) cfg.scan_points = *f.scan_points;
  if (f.tol_T) cfg.tol_T = *f.tol_T;
  if (f.ladder) cfg.ladder = parse_list(*f.ladder);
  if (f.lhy_x) cfg.lhy_x = *f.lhy_x;
  if (f.seed) cfg.solver.seed = *f.seed;
  if (f.workers) cfg.workers = *f.workers;
  if (f.out) cfg.out_dir = *f.out;
  if (f.plot_data) cfg.plot_data = true;
  if (!f.suites.empty()) cfg.suites = f.suites;
}

}  // namespace

int main(int argc, const char* const* argv) {
  CLI::App app{"Bogoliubov free-energy solver and phase-diagram engine (units hbar = 2m = 1)", "bogofe"};
  app.require_subcommand(1);
  Flags f;
  auto* solve_cmd = app.add_subcommand("solve", "minimize at one (T, mu) or (T, rho)");
  auto* sweep_cmd = app.add_subcommand("sweep", "classify a (T, control) grid; writes sweep.csv");
  auto* crit_cmd = app.add_subcommand("critical-temp", "bracket the condensed -> normal temperature");
  auto* val_cmd = app.add_subcommand("validate", "run invariant suites (functional, solver, quasifree)");
  auto* dil_cmd = app.add_subcommand("dilute-anchors", "dilute-limit comparisons (canonical)");
  for (auto* sc : {solve_cmd, sweep_cmd, crit_cmd, val_cmd, dil_cmd}) add_common(sc, f);
  for (auto* sc : {sweep_cmd, crit_cmd})
    sc->add_flag("--plot-data", f.plot_data, "also write boundary polylines / scan points");
  crit_cmd->add_option("--scan-points", f.scan_points, "coarse scan size");
  crit_cmd->add_option("--tol-T", f.tol_T, "bracket width (0 = 1e-4 T_fc)");
  val_cmd->add_option("suites", f.suites, "suites to run (default: all)");
  dil_cmd->add_option("--ladder", f.ladder, "comma separated rho^{1/3} a values");
  dil_cmd->add_option("--lhy-x", f.lhy_x, "rho^{1/3} a of the zero-temperature comparison");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    RunConfig cfg;
    for (auto* sc : app.get_subcommands()) cfg.command = sc->get_name();
    if (f.config) {
      std::ifstream in(*f.config);
      if (!in) throw ConfigError("cannot read config file " + *f.config);
      std::stringstream ss;
      ss << in.rdbuf();
      const std::string command = cfg.command;
      apply_json(cfg, ss.str());
      cfg.command = command;
    }
    apply_env(cfg);
    apply_flags(cfg, f);
    return run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "bogofe: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bogo::cli
