#pragma once

// First Bloch eigenvalue of -(grad + i eta) . a (grad + i eta) on periodic
// functions, discretized with link phases e^{i eta_k h_k} on every face.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hcbloch/cell_problems.hpp"
#include "hcbloch/grid.hpp"
#include "hcbloch/microstructure.hpp"
#include "hcbloch/operators.hpp"
#include "hcbloch/sparse.hpp"

namespace hcbloch {

struct BlochMomentum {
  std::vector<double> eta;

  /// Each component reduced to (-1/2, 1/2] by an integer shift.
  BlochMomentum canonical() const {
    BlochMomentum out{eta};
    for (auto& v : out.eta) {
      v -= std::ceil(v - 0.5);
    }
    return out;
  }

  double norm_squared() const {
    double s = 0.0;
    for (double v : eta) s += v * v;
    return s;
  }
};

struct ShiftedOperator {
  SparseHermitian<Complex> B;
  std::vector<double> mass;  ///< cell volume on every cell
  LinkForm form;
};

struct EigResult {
  double lambda1 = 0.0;
  std::vector<double> eigenvalues;  ///< the k smallest, ascending
  ComplexField phi;                 ///< periodic part, sum |phi|^2 V = 1
  double residual = 0.0;            ///< ||B phi - lambda M phi|| / ||M phi||
  double solver_residual = 0.0;     ///< backward error reported by the eigensolver
  int iterations = 0;
  bool converged = false;
  std::vector<double> eta;
};

namespace detail {

inline void check_eta(const CoefficientField& a, std::span<const double> eta) {
  if (static_cast<int>(eta.size()) != a.dim())
    throw Error("eta has " + std::to_string(eta.size()) + " components for a " + std::to_string(a.dim()) + "D field");
}

inline ShiftedOperator make_operator(const CoefficientField& a, LinkForm form) {
  ShiftedOperator op{assemble_link_form<Complex>(a, form), std::vector<double>(a.size(), a.grid().cell_volume()), std::move(form)};
  return op;
}

inline EigResult solve_operator(const CoefficientField& a, const ShiftedOperator& op, int k, const EigOptions& opt,
                                std::span<const double> eta) {
  auto rep = smallest_eigpair(op.B, op.mass, k, opt);
  EigResult res;
  res.eigenvalues = rep.eigenvalues;
  res.phi = ComplexField(a.grid(), std::move(rep.vectors.front()));
  // the face-by-face energy avoids cancellation against large diagonal entries
  res.lambda1 = link_energy<Complex>(a, op.form, res.phi.values);
  res.eigenvalues.front() = res.lambda1;
  res.solver_residual = rep.relative_residuals.front();
  res.iterations = rep.iterations;
  res.converged = rep.converged;
  res.eta.assign(eta.begin(), eta.end());
  const auto bphi = op.B.apply(res.phi.values);
  double rn = 0.0, mn = 0.0;
  for (std::size_t i = 0; i < bphi.size(); ++i) {
    rn += std::norm(bphi[i] - res.lambda1 * op.mass[i] * res.phi[i]);
    mn += std::norm(op.mass[i] * res.phi[i]);
  }
  res.residual = std::sqrt(rn / mn);
  return res;
}

}  // namespace detail

/// Solver defaults for the Bloch entry points: factorized-shift preconditioning, which converges in a handful of
/// iterations independent of contrast and leaves residuals near rounding level.
inline EigOptions eig_options_for(const CoefficientField& a) {
  const auto& g = a.grid();
  EigOptions o;
  int nmax = 0;
  for (int k = 0; k < g.dim(); ++k) nmax = std::max(nmax, g.cells(k));
  o.maxit = std::max(500, 40 * nmax);
  o.preconditioner = EigPreconditioner::factorized;
  return o;
}

/// B(eta) = sum_faces a_face |D^eta phi|^2 V and M = V I.
inline ShiftedOperator assemble_shifted(const CoefficientField& a, std::span<const double> eta) {
  detail::check_eta(a, eta);
  LinkForm form;
  for (int k = 0; k < a.dim(); ++k) form.theta[k] = eta[k] * a.grid().width(k);
  return detail::make_operator(a, std::move(form));
}

/// k smallest eigenvalues of (B(eta), M) on the full cell Y.
inline EigResult bloch_lambda1(const CoefficientField& a, std::span<const double> eta, int k = 1,
                               const EigOptions* opt = nullptr) {
  const auto op = assemble_shifted(a, eta);
  return detail::solve_operator(a, op, k, opt ? *opt : eig_options_for(a), eta);
}

/// lambda_1 restricted to eps Y-periodic functions: a unit-cell problem with quasi-momentum
/// eps * eta and energy scaled by eps^-2.
inline EigResult bloch_reduced(const CoefficientField& A_unit, double eps, std::span<const double> eta, int k = 1,
                               const EigOptions* opt = nullptr) {
  detail::check_eta(A_unit, eta);
  reciprocal_integer(eps);
  LinkForm form;
  for (int j = 0; j < A_unit.dim(); ++j) form.theta[j] = eps * eta[j] * A_unit.grid().width(j);
  form.scale = 1.0 / (eps * eps);
  const auto op = detail::make_operator(A_unit, std::move(form));
  return detail::solve_operator(A_unit, op, k, opt ? *opt : eig_options_for(A_unit), eta);
}

/// Treatment of the x3 direction in the fiber reduction: the exact factor eta3^2, or the
/// discrete symbol of an n3-cell unit-cell discretization (to compare against a 3D solve).
struct AxialSymbol {
  int n3 = 0;  ///< 0 means continuum

  double value(double eps, double eta3) const {
    if (n3 == 0) return eta3 * eta3;
    const double h3 = kTwoPi / n3;
    const double s = std::sin(0.5 * eps * eta3 * h3);
    return 4.0 * s * s / (eps * eps * h3 * h3);
  }
};

/// Fiber lattice reduced to its 2D cross-section:
///   [eps^-2 sum A |D^{eps eta'} Phi|^2 + s(eta3) sum A |Phi|^2] / sum |Phi|^2.
inline EigResult fiber_lambda1_2d(const CoefficientField& A2d, double eps, std::span<const double> eta_perp, double eta3,
                                  AxialSymbol axial = {}, const EigOptions* opt = nullptr) {
  if (A2d.dim() != 2) throw Error("fiber_lambda1_2d needs a 2D cross-section field");
  detail::check_eta(A2d, eta_perp);
  reciprocal_integer(eps);
  if (!A2d.is_isotropic()) throw Error("fiber_lambda1_2d needs an isotropic cross-section");
  LinkForm form;
  for (int j = 0; j < 2; ++j) form.theta[j] = eps * eta_perp[j] * A2d.grid().width(j);
  form.scale = 1.0 / (eps * eps);
  const double s3 = axial.value(eps, eta3);
  form.potential.resize(A2d.size());
  for (std::size_t c = 0; c < A2d.size(); ++c) form.potential[c] = s3 * A2d.scalar(c);
  const auto op = detail::make_operator(A2d, std::move(form));
  const std::vector<double> eta{eta_perp[0], eta_perp[1], eta3};
  return detail::solve_operator(A2d, op, 1, opt ? *opt : eig_options_for(A2d), eta);
}

/// ||B(eta) phi - lambda M phi|| / ||M phi|| for a computed pair.
inline double residual(const CoefficientField& a, std::span<const double> eta, const EigResult& res) {
  const auto op = assemble_shifted(a, eta);
  const auto bphi = op.B.apply(res.phi.values);
  double rn = 0.0, mn = 0.0;
  for (std::size_t i = 0; i < bphi.size(); ++i) {
    rn += std::norm(bphi[i] - res.lambda1 * op.mass[i] * res.phi[i]);
    mn += std::norm(op.mass[i] * res.phi[i]);
  }
  return std::sqrt(rn / mn);
}

struct ExpansionFit {
  double c2 = 0.0;
  double c4 = 0.0;
  double c6 = 0.0;
  double fit_residual = 0.0;  ///< max |lambda - fit| / lambda over the samples
};

/// Least-squares fit lambda(t dir) / t^2 = c2 + c4 t^2 + c6 t^4.
inline ExpansionFit expansion_fit(const CoefficientField& a, std::span<const double> direction, std::span<const double> t_samples,
                                  const EigOptions* opt = nullptr) {
  detail::check_eta(a, direction);
  std::vector<double> ts;
  for (double t : t_samples)
    if (t > 0.0 && t <= 0.2) ts.push_back(t);
  if (ts.size() < 4) throw Error("expansion_fit: needs at least 4 samples in (0, 0.2], got " + std::to_string(ts.size()));
  const auto n = static_cast<Eigen::Index>(ts.size());
  Eigen::MatrixXd V(n, 3);
  Eigen::VectorXd y(n);
  std::vector<double> lam(ts.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = ts[static_cast<std::size_t>(i)];
    std::vector<double> eta(direction.begin(), direction.end());
    for (auto& v : eta) v *= t;
    lam[static_cast<std::size_t>(i)] = bloch_lambda1(a, eta, 1, opt).lambda1;
    V(i, 0) = 1.0;
    V(i, 1) = t * t;
    V(i, 2) = t * t * t * t;
    y(i) = lam[static_cast<std::size_t>(i)] / (t * t);
  }
  const Eigen::Vector3d c = V.colPivHouseholderQr().solve(y);
  ExpansionFit fit{c(0), c(1), c(2), 0.0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = ts[static_cast<std::size_t>(i)];
    const double model = t * t * (c(0) + c(1) * t * t + c(2) * t * t * t * t);
    fit.fit_residual = std::max(fit.fit_residual, std::abs(model - lam[static_cast<std::size_t>(i)]) / lam[static_cast<std::size_t>(i)]);
  }
  return fit;
}

}  // namespace hcbloch
