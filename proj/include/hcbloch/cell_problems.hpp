#pragma once

// Periodic cell problems and the tensors derived from them: correctors,
// the homogenized matrix (cell-average convention), rescaled correctors,
// the second-order corrector chi2, the contracted dispersion value and the
// weighted Poincare-Wirtinger constant.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hcbloch/grid.hpp"
#include "hcbloch/microstructure.hpp"
#include "hcbloch/operators.hpp"
#include "hcbloch/sparse.hpp"

namespace hcbloch {

/// Iteration budget 50 * (cells per axis), the default for every cell problem.
inline CgOptions cell_cg_options(const PeriodicGrid& g) {
  int nmax = 0;
  for (int k = 0; k < g.dim(); ++k) nmax = std::max(nmax, g.cells(k));
  CgOptions o;
  o.tol = 1e-12;
  o.maxit = std::max(1000, 50 * nmax);
  o.deflate_constants = true;
  return o;
}

struct CorrectorSolution {
  RealField field;
  double residual = 0.0;  ///< ||K X - b|| / ||b|| (0 when b = 0)
  int iterations = 0;
};

/// Right-hand side of the cell problem: b_c = sum_k V lambda_k (a_{c,k} - a_{c-k,k}) / h_k.
inline std::vector<double> corrector_rhs(const CoefficientField& a, std::span<const double> lambda) {
  const auto& g = a.grid();
  const double vol = g.cell_volume();
  std::vector<double> b(g.size(), 0.0);
  for (std::size_t c = 0; c < g.size(); ++c)
    for (int k = 0; k < g.dim(); ++k)
      b[c] += vol * lambda[k] * (a.face(c, k) - a.face(g.neighbor(c, k, -1), k)) / g.width(k);
  return b;
}

/// Mean-zero X solving the discrete div(A lambda + A grad X) = 0.
inline CorrectorSolution solve_corrector(const CoefficientField& a, std::span<const double> lambda,
                                         const SparseHermitian<double>* stiffness = nullptr) {
  if (static_cast<int>(lambda.size()) != a.dim()) throw Error("corrector: direction has wrong dimension");
  const auto& g = a.grid();
  CorrectorSolution out{RealField(g), 0.0, 0};
  const auto b = corrector_rhs(a, lambda);
  const double bn = norm2<double>(b);
  if (bn == 0.0) return out;
  SparseHermitian<double> local;
  if (stiffness == nullptr) {
    local = assemble_stiffness(a);
    stiffness = &local;
  }
  auto sol = cg_solve<double>(*stiffness, b, cell_cg_options(g));
  out.field.values = std::move(sol.x);
  const auto kx = stiffness->apply(out.field.values);
  double r = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) r += (kx[i] - b[i]) * (kx[i] - b[i]);
  out.residual = std::sqrt(r) / bn;
  out.iterations = sol.iterations;
  return out;
}

inline RealField corrector(const CoefficientField& a, std::span<const double> lambda) {
  return solve_corrector(a, lambda).field;
}

/// Mean over cells of sum_k a_{c,k} (lambda_k + D_k X)(mu_k + D_k Y).
inline double affine_energy(const CoefficientField& a, std::span<const double> lambda, std::span<const double> X,
                            std::span<const double> mu, std::span<const double> Y) {
  const auto& g = a.grid();
  double s = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c)
    for (int k = 0; k < g.dim(); ++k) {
      const std::size_t up = g.neighbor(c, k, +1);
      const double gx = lambda[k] + (X[up] - X[c]) / g.width(k);
      const double gy = mu[k] + (Y[up] - Y[c]) / g.width(k);
      s += a.face(c, k) * gx * gy;
    }
  return s / static_cast<double>(g.size());
}

/// Flux form: (q lambda)_k = mean over cells of a_{c,k} (lambda_k + D_k X_lambda).
inline std::vector<double> mean_flux(const CoefficientField& a, std::span<const double> lambda, std::span<const double> X) {
  const auto& g = a.grid();
  std::vector<double> f(g.dim(), 0.0);
  for (std::size_t c = 0; c < g.size(); ++c)
    for (int k = 0; k < g.dim(); ++k)
      f[k] += a.face(c, k) * (lambda[k] + (X[g.neighbor(c, k, +1)] - X[c]) / g.width(k));
  for (auto& v : f) v /= static_cast<double>(g.size());
  return f;
}

struct HomogenizedMatrix {
  int d = 0;
  std::vector<double> q;      ///< row-major d x d, averaged over |Y|
  std::vector<double> voigt;  ///< mean(A), row-major
  std::string convention = "cell-average";
  std::vector<RealField> correctors;  ///< X_{e_j}
  double max_corrector_residual = 0.0;

  double operator()(int i, int j) const { return q[i * d + j]; }

  /// q lambda . lambda
  double quadratic(std::span<const double> lambda) const {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s += q[i * d + j] * lambda[i] * lambda[j];
    return s;
  }

  double voigt_quadratic(std::span<const double> lambda) const {
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s += voigt[i * d + j] * lambda[i] * lambda[j];
    return s;
  }
};

/// q_jk = mean discrete energy of (e_j + grad X_j) against (e_k + grad X_k).
inline HomogenizedMatrix homogenized(const CoefficientField& a) {
  const int d = a.dim();
  HomogenizedMatrix h;
  h.d = d;
  h.voigt = a.mean_matrix();
  const auto K = assemble_stiffness(a);
  std::vector<std::vector<double>> unit(d, std::vector<double>(d, 0.0));
  for (int j = 0; j < d; ++j) {
    unit[j][j] = 1.0;
    auto sol = solve_corrector(a, unit[j], &K);
    h.max_corrector_residual = std::max(h.max_corrector_residual, sol.residual);
    h.correctors.push_back(std::move(sol.field));
  }
  h.q.assign(d * d, 0.0);
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k) {
      const double v = affine_energy(a, unit[j], h.correctors[j].values, unit[k], h.correctors[k].values);
      h.q[j * d + k] = v;
      h.q[k * d + j] = v;
    }
  return h;
}

struct RescaledCorrector {
  RealField periodic;  ///< eps X(x / eps), tiled
  RealField w;         ///< x_j + eps X(x / eps) at cell centers
  int axis = 0;
};

/// w_j(x) = x_j + eps X(x/eps) on the grid that tiles the unit-cell grid 1/eps times.
inline RescaledCorrector rescale_corrector(const RealField& X, double eps, int axis) {
  const int m = reciprocal_integer(eps);
  const auto& ug = X.grid;
  const int d = ug.dim();
  if (axis < 0 || axis >= d) throw Error("rescale_corrector: axis out of range");
  std::array<int, 3> n{1, 1, 1};
  for (int k = 0; k < d; ++k) n[k] = ug.cells(k) * m;
  const auto g = make_grid(d, std::span<const int>(n.data(), d));
  RescaledCorrector out{RealField(g), RealField(g), axis};
  for (std::size_t c = 0; c < g.size(); ++c) {
    auto jc = g.coords(c);
    const double xj = g.center(axis, jc[axis]);
    for (int k = 0; k < d; ++k) jc[k] %= ug.cells(k);
    out.periodic[c] = eps * X[ug.index(jc)];
    out.w[c] = xj + out.periodic[c];
  }
  return out;
}

/// Mean of a grad w_j . grad w_j with grad w_j = e_j + grad(periodic part).
inline double rescaled_energy(const CoefficientField& a_eps, const RescaledCorrector& w) {
  std::vector<double> e(a_eps.dim(), 0.0);
  e[w.axis] = 1.0;
  return affine_energy(a_eps, e, w.periodic.values, e, w.periodic.values);
}

/// chi1 = eps X_eta(x/eps), i.e. the corrector of the eps-periodic field itself.
inline RealField chi1(const CoefficientField& a_eps, std::span<const double> eta) {
  return corrector(a_eps, eta);
}

namespace detail {

// Discrete right-hand side of the chi2 problem tested against cell indicators.
inline std::vector<double> chi2_rhs(const CoefficientField& a, std::span<const double> eta,
                                    std::span<const double> x1, double q_eta_eta) {
  const auto& g = a.grid();
  const double vol = g.cell_volume();
  std::vector<double> f(g.size(), -q_eta_eta * vol);
  for (std::size_t c = 0; c < g.size(); ++c)
    for (int k = 0; k < g.dim(); ++k) {
      const std::size_t up = g.neighbor(c, k, +1);
      const double af = a.face(c, k);
      const double hk = g.width(k);
      // a eta.eta + a eta . grad chi1 on the face, split evenly to its two cells
      const double face_source = 0.5 * vol * af * eta[k] * (eta[k] + (x1[up] - x1[c]) / hk);
      f[c] += face_source;
      f[up] += face_source;
      // -<chi1 a eta, grad v> with chi1 averaged onto the face
      const double flux = vol * 0.5 * (x1[c] + x1[up]) * af * eta[k] / hk;
      f[c] += flux;
      f[up] -= flux;
    }
  return f;
}

}  // namespace detail

struct Chi2Solution {
  RealField field;
  double compatibility = 0.0;  ///< |sum rhs| / (sum |rhs| + q eta.eta |Y|) before projection
};

/// Mean-zero chi2 for direction eta, using the discretely computed q.
inline Chi2Solution solve_chi2(const CoefficientField& a_eps, std::span<const double> eta, const RealField& x1,
                               const HomogenizedMatrix& q, const SparseHermitian<double>* stiffness = nullptr) {
  if (q.d != a_eps.dim()) throw Error("chi2: q has wrong dimension");
  const double qee = q.quadratic(eta);
  auto f = detail::chi2_rhs(a_eps, eta, x1.values, qee);
  double s = 0.0, sa = 0.0;
  for (double v : f) {
    s += v;
    sa += std::abs(v);
  }
  Chi2Solution out{RealField(a_eps.grid()), 0.0};
  if (sa == 0.0) return out;
  // the source terms are of size q eta.eta per cell; cancellation leaves rounding noise relative to that
  out.compatibility = std::abs(s) / (sa + std::abs(qee) * a_eps.grid().cell_volume() * static_cast<double>(f.size()));
  if (out.compatibility > 1e-10)
    throw Error("chi2: right-hand side mean " + std::to_string(out.compatibility) + " exceeds 1e-10 (q inconsistent with the discretization)");
  for (auto& v : f) v -= s / static_cast<double>(f.size());
  SparseHermitian<double> local;
  if (stiffness == nullptr) {
    local = assemble_stiffness(a_eps);
    stiffness = &local;
  }
  out.field.values = cg_solve<double>(*stiffness, f, cell_cg_options(a_eps.grid())).x;
  return out;
}

inline RealField chi2(const CoefficientField& a_eps, std::span<const double> eta, const HomogenizedMatrix& q) {
  return solve_chi2(a_eps, eta, chi1(a_eps, eta), q).field;
}

struct DispersionSample {
  std::vector<double> eta;
  double value = 0.0;  ///< D(eta x eta):(eta x eta), non-positive
  double q_eta_eta = 0.0;
};

/// D(eta x eta):(eta x eta) = -mean of the a-weighted Dirichlet energy of chi2 - chi1^2 / 2.
inline DispersionSample dispersion(const CoefficientField& a_eps, std::span<const double> eta) {
  if (static_cast<int>(eta.size()) != a_eps.dim()) throw Error("dispersion: eta has wrong dimension");
  DispersionSample out{std::vector<double>(eta.begin(), eta.end()), 0.0, 0.0};
  const auto K = assemble_stiffness(a_eps);
  const auto q = homogenized(a_eps);
  out.q_eta_eta = q.quadratic(eta);
  const auto x1 = solve_corrector(a_eps, eta, &K).field;
  const auto x2 = solve_chi2(a_eps, eta, x1, q, &K).field;
  std::vector<double> g(x1.size());
  for (std::size_t c = 0; c < g.size(); ++c) g[c] = x2[c] - 0.5 * x1[c] * x1[c];
  const std::vector<double> zero(a_eps.dim(), 0.0);
  out.value = -affine_energy(a_eps, zero, g, zero, g);
  return out;
}

struct PwConstant {
  double value = 0.0;
  int iterations = 0;
};

/// max sum (A lambda.lambda) |V - c*|^2 subject to sum A grad V . grad V = 1, with c* the
/// (A lambda.lambda)-weighted mean of V.
inline PwConstant pw_constant(const CoefficientField& A, std::span<const double> lambda, const GenEigOptions& opt = {}) {
  if (static_cast<int>(lambda.size()) != A.dim()) throw Error("pw_constant: lambda has wrong dimension");
  const auto& g = A.grid();
  std::vector<double> w(g.size());
  const double vol = g.cell_volume();
  for (std::size_t c = 0; c < g.size(); ++c) w[c] = A.quadratic(c, lambda) * vol;
  const auto K = assemble_stiffness(A);
  GenEigOptions o = opt;
  o.cg = cell_cg_options(g);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c)
    for (int k = 0; k < A.dim(); ++k) {
      lo = std::min(lo, A.diag(c, k));
      hi = std::max(hi, A.diag(c, k));
    }
  // Jacobi CG needs O(sqrt(contrast)) more iterations per solve
  if (hi > 100.0 * lo) o.factorized = true;
  const auto rep = largest_geneig(w, K, o);
  return PwConstant{rep.value, rep.iterations};
}

}  // namespace hcbloch
