#include "bogo/quasifree.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <sstream>

#include <Eigen/Sparse>
#include <unsupported/Eigen/MatrixFunctions>

#include "bogo/errors.hpp"

namespace bogo::quasifree {

namespace {

using Sparse = Eigen::SparseMatrix<double>;

double s_of_beta(double beta) {
  const double lo = beta - 0.5;
  const double hi = beta + 0.5;
  return hi * std::log(hi) - (lo > 0.0 ? lo * std::log(lo) : 0.0);
}

std::vector<double> top_m(std::vector<double> v, std::size_t m) {
  std::sort(v.begin(), v.end(), std::greater<>());
  v.resize(m);
  for (double& b : v) b = std::max(b, 0.5);
  return v;
}

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t k = 0; k < e; ++k) r *= b;
  return r;
}

// truncated annihilation operator of mode j on (n_max+1)^m states, mode 0 fastest
Sparse annihilation(std::size_t j, std::size_t m, std::size_t n_max) {
  const std::size_t L = n_max + 1, dim = ipow(L, m), stride = ipow(L, j);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t idx = 0; idx < dim; ++idx) {
    const std::size_t n = (idx / stride) % L;
    if (n > 0)
      t.emplace_back(static_cast<int>(idx - stride), static_cast<int>(idx),
                     std::sqrt(static_cast<double>(n)));
  }
  Sparse a(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

// block Hamiltonian h = S ln((K + 1/2)/(K - 1/2)), K = Gamma S + 1/2
Eigen::MatrixXd block_hamiltonian(const FiniteModeSpec& spec) {
  const std::size_t m = spec.modes();
  const Eigen::MatrixXd S = sigma_block(m);
  const Eigen::MatrixXd K =
      gamma_block(spec) * S + 0.5 * Eigen::MatrixXd::Identity(2 * m, 2 * m);
  Eigen::EigenSolver<Eigen::MatrixXd> es(K);
  const Eigen::MatrixXcd V = es.eigenvectors();
  Eigen::VectorXcd f(2 * m);
  for (std::size_t k = 0; k < 2 * m; ++k) {
    const double x = es.eigenvalues()[static_cast<Eigen::Index>(k)].real();
    // pure modes (|x| = 1/2) get a large finite gap instead of an infinite one
    const double ax = std::max(std::abs(x), 0.5);
    const double e = std::log((ax + 0.5) / std::max(ax - 0.5, 1e-300));
    f[static_cast<Eigen::Index>(k)] = x >= 0.0 ? e : -e;
  }
  const Eigen::MatrixXcd fK = V * f.asDiagonal() * V.inverse();
  return S * fK.real();
}

struct Build {
  TruncatedGibbs g;
  std::vector<double> marginal_tail;  // mass on level k summed over modes, for the estimate
};

Build build(const FiniteModeSpec& spec, std::size_t n_max, double t_eff) {
  const std::size_t m = spec.modes();
  const Eigen::MatrixXd h = t_eff * block_hamiltonian(spec);
  Build b;
  auto& g = b.g;
  g.modes = m;
  g.n_max = n_max;
  for (std::size_t j = 0; j < m; ++j) g.a.push_back(Eigen::MatrixXd(annihilation(j, m, n_max)));
  std::vector<Sparse> a, ad;
  for (std::size_t j = 0; j < m; ++j) {
    a.push_back(annihilation(j, m, n_max));
    ad.push_back(Sparse(a.back().transpose()));
  }
  const Eigen::Index dim = static_cast<Eigen::Index>(ipow(n_max + 1, m));
  Sparse H(dim, dim);
  const auto M = static_cast<Eigen::Index>(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
      H += 0.5 * h(I, J) * Sparse(ad[i] * a[j]);
      H += 0.5 * h(I, M + J) * Sparse(ad[i] * ad[j]);
      H += 0.5 * h(M + I, J) * Sparse(a[i] * a[j]);
      H += 0.5 * h(M + I, M + J) * Sparse(a[i] * ad[j]);
    }
  }
  Eigen::MatrixXd Hd(H);
  Hd = 0.5 * (Hd + Hd.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hd);
  if (es.info() != Eigen::Success) throw NumericalError("quasifree: Hamiltonian diagonalization failed");
  g.energies = (es.eigenvalues().array() - es.eigenvalues().minCoeff()) / t_eff;
  g.eigenvectors = es.eigenvectors();
  Eigen::VectorXd p = (-g.energies.array()).exp();
  p /= p.sum();
  g.rho = g.eigenvectors * p.asDiagonal() * g.eigenvectors.transpose();

  const std::size_t L = n_max + 1;
  b.marginal_tail.assign(L, 0.0);
  for (Eigen::Index idx = 0; idx < dim; ++idx) {
    const double w = g.rho(idx, idx);
    std::size_t top = 0;
    std::size_t rem = static_cast<std::size_t>(idx);
    for (std::size_t j = 0; j < m; ++j) {
      top = std::max(top, rem % L);
      rem /= L;
    }
    b.marginal_tail[top] += w;
  }
  g.trace_defect = b.marginal_tail[n_max] + (n_max > 0 ? b.marginal_tail[n_max - 1] : 0.0);
  return b;
}

// N_max where the top-two-level mass would drop below tol, from the decay between n/2 and n
std::size_t estimate_n_max(const std::vector<double>& tail, double tol) {
  const std::size_t n = tail.size() - 1;
  if (n < 6) return 2 * n + 8;
  const std::size_t mid = n / 2;
  const double hi = tail[n] + tail[n - 1], lo = tail[mid] + tail[mid - 1];
  if (!(hi > 0.0) || !(lo > hi)) return 2 * n;
  const double q = std::pow(hi / lo, 1.0 / static_cast<double>(n - mid));
  const double extra = std::log(tol / hi) / std::log(q);
  return n + static_cast<std::size_t>(std::ceil(std::max(extra, 1.0))) + 4;
}

double spectrum_entropy(const Eigen::VectorXd& p) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (p[k] > 0.0) s -= p[k] * std::log(p[k]);
  return s;
}

double density_entropy(const Eigen::MatrixXd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (rho + rho.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return spectrum_entropy(es.eigenvalues());
}

double expect(const Eigen::MatrixXd& rho, const Eigen::MatrixXd& op) {
  return (rho.array() * op.transpose().array()).sum();
}

// Tr(rho op) for sparse op
double expect(const Eigen::MatrixXd& rho, const Sparse& op) {
  double acc = 0.0;
  for (Eigen::Index c = 0; c < op.outerSize(); ++c)
    for (Sparse::InnerIterator it(op, c); it; ++it) acc += rho(it.col(), it.row()) * it.value();
  return acc;
}

}  // namespace

FiniteModeSpec FiniteModeSpec::single(double gamma, double alpha, std::size_t n_max) {
  return diagonal({gamma}, {alpha}, n_max);
}

FiniteModeSpec FiniteModeSpec::diagonal(const std::vector<double>& gamma,
                                        const std::vector<double>& alpha, std::size_t n_max) {
  if (gamma.size() != alpha.size()) throw ConfigError("quasifree: gamma/alpha length mismatch");
  FiniteModeSpec s;
  const auto m = static_cast<Eigen::Index>(gamma.size());
  s.gamma = Eigen::MatrixXd::Zero(m, m);
  s.alpha = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    s.gamma(j, j) = gamma[static_cast<std::size_t>(j)];
    s.alpha(j, j) = alpha[static_cast<std::size_t>(j)];
  }
  s.n_max = n_max;
  return s;
}

Eigen::MatrixXd gamma_block(const FiniteModeSpec& spec) {
  const auto m = static_cast<Eigen::Index>(spec.modes());
  Eigen::MatrixXd G(2 * m, 2 * m);
  G.topLeftCorner(m, m) = spec.gamma;
  G.topRightCorner(m, m) = spec.alpha;
  G.bottomLeftCorner(m, m) = spec.alpha;
  G.bottomRightCorner(m, m) = spec.gamma + Eigen::MatrixXd::Identity(m, m);
  return G;
}

Eigen::MatrixXd sigma_block(std::size_t m) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(2 * m));
  for (std::size_t k = 0; k < 2 * m; ++k) d[static_cast<Eigen::Index>(k)] = k < m ? 1.0 : -1.0;
  return d.asDiagonal();
}

void check_spec(const FiniteModeSpec& spec) {
  const std::size_t m = spec.modes();
  if (m < 1 || m > 3) throw DomainError("quasifree: 1 to 3 modes supported");
  const auto M = static_cast<Eigen::Index>(m);
  if (spec.gamma.cols() != M || spec.alpha.rows() != M || spec.alpha.cols() != M)
    throw DomainError("quasifree: gamma and alpha must be m x m");
  if (!spec.gamma.allFinite() || !spec.alpha.allFinite())
    throw DomainError("quasifree: non-finite entries");
  if ((spec.gamma - spec.gamma.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
      (spec.alpha - spec.alpha.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw DomainError("quasifree: gamma and alpha must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma_block(spec), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    std::ostringstream os;
    os << "quasifree: block density matrix not positive (min eigenvalue "
       << es.eigenvalues().minCoeff() << ")";
    throw DomainError(os.str());
  }
}

std::vector<double> symplectic_eigenvalues(const FiniteModeSpec& spec) {
  check_spec(spec);
  const std::size_t m = spec.modes();
  const Eigen::MatrixXd K =
      gamma_block(spec) * sigma_block(m) + 0.5 * Eigen::MatrixXd::Identity(2 * m, 2 * m);
  Eigen::EigenSolver<Eigen::MatrixXd> es(K, false);
  std::vector<double> ev;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) ev.push_back(es.eigenvalues()[k].real());
  return top_m(std::move(ev), m);
}

std::vector<double> symplectic_eigenvalues_symmetric(const FiniteModeSpec& spec) {
  check_spec(spec);
  const std::size_t m = spec.modes();
  const Eigen::MatrixXd S = sigma_block(m);
  const Eigen::MatrixXd P = gamma_block(spec) + 0.5 * S;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ps(P);
  const Eigen::VectorXd d = ps.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd R = ps.eigenvectors() * d.asDiagonal() * ps.eigenvectors().transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R * S * R, Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  return top_m(std::move(ev), m);
}

double entropy_from_formula(const FiniteModeSpec& spec) {
  double s = 0.0;
  for (double b : symplectic_eigenvalues(spec)) s += s_of_beta(b);
  return s;
}

TruncatedGibbs truncated_gibbs(const FiniteModeSpec& spec, const DirectOptions& opts) {
  check_spec(spec);
  const std::size_t m = spec.modes();
  std::size_t n = std::max<std::size_t>(spec.n_max, 2);
  for (;;) {
    const std::size_t dim = ipow(n + 1, m);
    if (dim > opts.max_dim)
      throw NumericalError("quasifree: truncation insufficient within dimension limit " +
                           std::to_string(opts.max_dim) + "; need N_max >= " +
                           std::to_string(n) + " per mode");
    Build b = build(spec, n, opts.t_effective);
    if (b.g.trace_defect <= opts.tail_tol) return std::move(b.g);
    const std::size_t need = estimate_n_max(b.marginal_tail, opts.tail_tol);
    std::size_t next = std::max(need, n + n / 2 + 1);
    std::size_t largest = n;
    while (ipow(largest + 2, m) <= opts.max_dim) ++largest;
    if (ipow(next + 1, m) > opts.max_dim) next = largest;
    if (next <= n) {
      std::ostringstream os;
      os << "quasifree: truncation insufficient (tail " << b.g.trace_defect << " at N_max = " << n
         << ", dimension limit " << opts.max_dim << "); estimated N_max needed: " << need;
      throw NumericalError(os.str());
    }
    n = next;
  }
}

double entropy_of(const TruncatedGibbs& g) {
  Eigen::VectorXd p = (-g.energies.array()).exp();
  p /= p.sum();
  return spectrum_entropy(p);
}

double entropy_direct(const FiniteModeSpec& spec, const DirectOptions& opts) {
  return entropy_of(truncated_gibbs(spec, opts));
}

Eigen::MatrixXd gamma_direct(const TruncatedGibbs& g) {
  const auto m = static_cast<Eigen::Index>(g.modes);
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      out(i, j) = expect(g.rho, g.a[static_cast<std::size_t>(i)].transpose() *
                                    g.a[static_cast<std::size_t>(j)]);
  return out;
}

Eigen::MatrixXd alpha_direct(const TruncatedGibbs& g) {
  const auto m = static_cast<Eigen::Index>(g.modes);
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      out(i, j) = expect(g.rho, g.a[static_cast<std::size_t>(i)] * g.a[static_cast<std::size_t>(j)]);
  return out;
}

WickResult wick_check(const FiniteModeSpec& spec, const DirectOptions& opts) {
  const TruncatedGibbs g = truncated_gibbs(spec, opts);
  const std::size_t m = spec.modes();
  const std::size_t used = m == 3 ? 1 : m;
  // operator k < used: a_k; k >= used: a_{k-used}^*
  auto op = [&](std::size_t k) -> Sparse {
    const Sparse a = annihilation(k < used ? k : k - used, m, g.n_max);
    return k < used ? a : Sparse(a.transpose());
  };
  auto two = [&](std::size_t x, std::size_t y) {
    const bool cx = x >= used, cy = y >= used;
    const auto i = static_cast<Eigen::Index>(cx ? x - used : x);
    const auto j = static_cast<Eigen::Index>(cy ? y - used : y);
    if (cx && !cy) return spec.gamma(j, i);                          // <a_i^* a_j>
    if (!cx && cy) return spec.gamma(i, j) + (i == j ? 1.0 : 0.0);  // <a_i a_j^*>
    return spec.alpha(i, j);                                         // <a a>, <a^* a^*>
  };
  const std::size_t nops = 2 * used;
  std::vector<Sparse> ops;
  for (std::size_t k = 0; k < nops; ++k) ops.push_back(op(k));

  WickResult w;
  for (std::size_t k = 0; k < nops; ++k) w.max_odd = std::max(w.max_odd, std::abs(expect(g.rho, ops[k])));
  for (std::size_t x = 0; x < nops; ++x)
    for (std::size_t y = 0; y < nops; ++y) {
      const Sparse xy = ops[x] * ops[y];
      for (std::size_t z = 0; z < nops; ++z) {
        const Sparse xyz = xy * ops[z];
        w.max_odd = std::max(w.max_odd, std::abs(expect(g.rho, xyz)));
        for (std::size_t u = 0; u < nops; ++u) {
          const double direct = expect(g.rho, Sparse(xyz * ops[u]));
          const double wick = two(x, y) * two(z, u) + two(x, z) * two(y, u) + two(x, u) * two(y, z);
          w.max_deviation = std::max(w.max_deviation, std::abs(direct - wick));
          ++w.checked;
        }
      }
    }
  return w;
}

ShiftResult coherent_shift(const FiniteModeSpec& spec, const std::vector<double>& phi,
                           const DirectOptions& opts) {
  if (phi.size() != spec.modes()) throw ConfigError("coherent_shift: phi needs one entry per mode");
  FiniteModeSpec sp = spec;
  double shift2 = 0.0;
  for (double f : phi) shift2 = std::max(shift2, f * f);
  for (;;) {
    const TruncatedGibbs g = truncated_gibbs(sp, opts);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(g.rho.rows(), g.rho.cols());
    for (std::size_t j = 0; j < g.modes; ++j) K += phi[j] * (g.a[j].transpose() - g.a[j]);
    const Eigen::MatrixXd D = K.exp();
    const Eigen::MatrixXd rho = D * g.rho * D.transpose();
    // mass pushed onto the two highest levels by the shift
    const std::size_t L = g.n_max + 1;
    double top = 0.0;
    for (Eigen::Index idx = 0; idx < rho.rows(); ++idx) {
      std::size_t rem = static_cast<std::size_t>(idx), mx = 0;
      for (std::size_t j = 0; j < g.modes; ++j) {
        mx = std::max(mx, rem % L);
        rem /= L;
      }
      if (mx + 2 > g.n_max) top += rho(idx, idx);
    }
    if (top <= opts.tail_tol) {
      ShiftResult r;
      r.entropy_before = density_entropy(g.rho);
      r.entropy_after = density_entropy(rho);
      for (std::size_t j = 0; j < g.modes; ++j) r.mean_field.push_back(expect(rho, g.a[j]));
      return r;
    }
    const std::size_t next = g.n_max + g.n_max / 2 + static_cast<std::size_t>(std::ceil(4.0 * shift2)) + 1;
    if (ipow(next + 1, g.modes) > opts.max_dim)
      throw NumericalError("coherent_shift: truncation insufficient for the shifted state; need N_max > " +
                           std::to_string(g.n_max));
    sp.n_max = next;
  }
}

std::vector<SuiteRow> run_suite() {
  std::vector<SuiteRow> rows;
  auto add = [&](std::string name, double value, double ref, double tol) {
    SuiteRow r;
    r.name = std::move(name);
    r.value = value;
    r.reference = ref;
    r.deviation = std::abs(value - ref);
    r.tolerance = tol;
    r.passed = r.deviation <= tol;
    rows.push_back(std::move(r));
  };
  auto fmt = [](double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  };

  add("formula vacuum", entropy_from_formula(FiniteModeSpec::single(0.0, 0.0)), 0.0, 1e-14);
  add("formula gamma=1 alpha=0", entropy_from_formula(FiniteModeSpec::single(1.0, 0.0)),
      2.0 * std::numbers::ln2, 1e-12);

  for (double g : {0.1, 1.0, 5.0}) {
    const double full = g * (g + 1.0);
    for (double a2 : {0.0, 0.5 * full, full}) {
      const auto spec = FiniteModeSpec::single(g, std::sqrt(a2));
      add("formula vs direct gamma=" + fmt(g) + " alpha^2=" + fmt(a2), entropy_direct(spec),
          entropy_from_formula(spec), 1e-6);
    }
  }

  FiniteModeSpec two;
  two.gamma = Eigen::Matrix2d{{0.06, 0.02}, {0.02, 0.04}};
  two.alpha = Eigen::Matrix2d{{0.05, 0.01}, {0.01, -0.03}};
  two.n_max = 20;
  add("two-mode formula vs direct", entropy_direct(two), entropy_from_formula(two), 1e-6);
  {
    const auto b1 = symplectic_eigenvalues(two), b2 = symplectic_eigenvalues_symmetric(two);
    add("two-mode symmetric route", b1[0] + b1[1], b2[0] + b2[1], 1e-10);
  }

  const auto thermal = FiniteModeSpec::single(1.0, 0.0);
  {
    const auto g = truncated_gibbs(thermal);
    const Eigen::MatrixXd ad = g.a[0].transpose();
    add("<a*a*aa> thermal gamma=1", expect(g.rho, ad * ad * g.a[0] * g.a[0]), 2.0, 1e-8);
  }
  for (const auto& [name, spec] :
       {std::pair{std::string("wick gamma=1 alpha=0"), thermal},
        std::pair{std::string("wick gamma=1 alpha=0.8"), FiniteModeSpec::single(1.0, 0.8)},
        std::pair{std::string("wick two-mode"), two}}) {
    const auto w = wick_check(spec);
    add(name, w.max_deviation, 0.0, 1e-8);
    add(name + " odd moments", w.max_odd, 0.0, 1e-12);
  }

  {
    const auto sh = coherent_shift(FiniteModeSpec::single(1.0, 0.5), {0.7});
    add("coherent shift entropy drift", sh.entropy_after, sh.entropy_before, 1e-10);
    add("coherent shift mean field", sh.mean_field[0], 0.7, 1e-10);
  }
  {
    auto small = two;
    small.n_max = 16;
    const auto sh = coherent_shift(small, {0.4, -0.3});
    add("two-mode coherent shift entropy drift", sh.entropy_after, sh.entropy_before, 1e-10);
  }

  {
    double prev = 1e300;
    bool decreasing = true;
    for (double a : {0.0, 0.3, 0.6, 0.9, 1.2, std::sqrt(2.0)}) {
      const double s = entropy_direct(FiniteModeSpec::single(1.0, a));
      decreasing = decreasing && s < prev;
      prev = s;
    }
    add("entropy decreasing in |alpha| (gamma=1)", decreasing ? 1.0 : 0.0, 1.0, 0.0);
  }
  return rows;
}

}  // namespace bogo::quasifree
