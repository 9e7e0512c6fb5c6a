#pragma once

// Coefficient fields a(x) on periodic grids: constant media, rescaled
// two-phase inclusions a(x) = A(x/eps), and the thin-fiber lattice whose
// radius follows the critical capacity scaling.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "hcbloch/error.hpp"
#include "hcbloch/grid.hpp"

namespace hcbloch {

enum class Phase : std::uint8_t { background = 0, inclusion = 1 };

/// Per-cell symmetric conductivity, stored as a full d x d block per cell
/// (row-major), plus an optional phase mask for two-phase media.
class CoefficientField {
 public:
  CoefficientField() = default;

  /// Isotropic field a(x) I with the given per-cell scalar values.
  static CoefficientField isotropic(const PeriodicGrid& g, const std::vector<double>& values,
                                    std::vector<Phase> mask = {}) {
    if (values.size() != g.size()) throw Error("coefficient values do not match grid size");
    CoefficientField f;
    f.grid_ = g;
    const int d = g.dim();
    f.a_.assign(g.size() * d * d, 0.0);
    for (std::size_t c = 0; c < g.size(); ++c)
      for (int k = 0; k < d; ++k) f.a_[c * d * d + k * d + k] = values[c];
    f.mask_ = std::move(mask);
    f.isotropic_ = true;
    return f;
  }

  static CoefficientField constant(const PeriodicGrid& g, double a0) {
    return isotropic(g, std::vector<double>(g.size(), a0));
  }

  /// Full per-cell matrices (row-major d x d per cell). Symmetry is checked.
  static CoefficientField matrices(const PeriodicGrid& g, std::vector<double> blocks) {
    const int d = g.dim();
    if (blocks.size() != g.size() * d * d) throw Error("coefficient blocks do not match grid size");
    CoefficientField f;
    f.grid_ = g;
    f.a_ = std::move(blocks);
    bool iso = true;
    for (std::size_t c = 0; c < g.size(); ++c) {
      const double* m = &f.a_[c * d * d];
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          if (m[i * d + j] != m[j * d + i]) throw Error("coefficient matrix is not symmetric at cell " + std::to_string(c));
          if (i != j && m[i * d + j] != 0.0) iso = false;
          if (i == j && m[i * d + i] != m[0]) iso = false;
        }
    }
    f.isotropic_ = iso;
    return f;
  }

  const PeriodicGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return grid_.dim(); }
  std::size_t size() const noexcept { return grid_.size(); }
  bool is_isotropic() const noexcept { return isotropic_; }
  const std::vector<Phase>& mask() const noexcept { return mask_; }
  const std::vector<double>& blocks() const noexcept { return a_; }

  double entry(std::size_t cell, int i, int j) const noexcept {
    const int d = dim();
    return a_[cell * d * d + i * d + j];
  }

  /// Diagonal entry along axis k (the face-normal conductivity).
  double diag(std::size_t cell, int k) const noexcept { return entry(cell, k, k); }

  /// Isotropic scalar value (the (0,0) entry; equals every diagonal entry for isotropic fields).
  double scalar(std::size_t cell) const noexcept { return entry(cell, 0, 0); }

  /// A(cell) lambda . lambda
  double quadratic(std::size_t cell, std::span<const double> lambda) const noexcept {
    const int d = dim();
    double s = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s += entry(cell, i, j) * lambda[i] * lambda[j];
    return s;
  }

  /// Conductivity on the face between `cell` and its +k neighbor: harmonic mean of the diagonal entries.
  double face(std::size_t cell, int k) const noexcept {
    const double a = diag(cell, k);
    const double b = diag(grid_.neighbor(cell, k, +1), k);
    return 2.0 * a * b / (a + b);
  }

  double min_eigenvalue(std::size_t cell) const {
    const int d = dim();
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = entry(cell, i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  }

  /// Cellwise mean of A (the Voigt matrix), row-major d x d.
  std::vector<double> mean_matrix() const {
    const int d = dim();
    std::vector<double> m(d * d, 0.0);
    for (std::size_t c = 0; c < size(); ++c)
      for (int i = 0; i < d * d; ++i) m[i] += a_[c * d * d + i];
    for (auto& x : m) x /= static_cast<double>(size());
    return m;
  }

  /// Mean of the trace over d, i.e. mean(a) for isotropic fields.
  double mean_scalar() const {
    double s = 0.0;
    for (std::size_t c = 0; c < size(); ++c)
      for (int k = 0; k < dim(); ++k) s += diag(c, k);
    return s / (static_cast<double>(size()) * dim());
  }

  bool operator==(const CoefficientField& o) const noexcept {
    return grid_ == o.grid_ && a_ == o.a_ && mask_ == o.mask_;
  }

 private:
  PeriodicGrid grid_;
  std::vector<double> a_;
  std::vector<Phase> mask_;
  bool isotropic_ = true;
};

// ---------------------------------------------------------------------------
// Declarative microstructure descriptions.

enum class InclusionShape { square, disc };

struct ConstantMedium {
  double a0 = 1.0;
};

/// eps-periodic inclusion of conductivity beta in a unit background; the
/// inclusion is centered in each eps-cell with side (or diameter) rho * 2*pi*eps.
struct TwoPhaseInclusion {
  double eps = 1.0;
  double beta = 1.0;
  double rho = 0.5;
  InclusionShape shape = InclusionShape::square;
};

/// eps-periodic array of fibers parallel to e3, radius eps*r_eps (r_eps in unit-cell units).
struct FiberLattice {
  double eps = 1.0;
  double r_eps = 0.5;
  double beta = 1.0;
  double R = 1.2;
};

struct FromFile {
  std::string path;
};

using MicrostructureSpec = std::variant<ConstantMedium, TwoPhaseInclusion, FiberLattice, FromFile>;

/// Fiber radius solving 1 / (2 pi eps^2 |ln r|) = gamma.
inline double radius_for_gamma(double eps, double gamma) {
  if (!(gamma > 0.0)) throw Error("gamma must be positive (capacity density gamma in (0, inf)), got " + std::to_string(gamma));
  reciprocal_integer(eps);
  const double r = std::exp(-1.0 / (kTwoPi * eps * eps * gamma));
  if (r >= std::numbers::pi) throw Error("gamma too large for this eps");
  return r;
}

/// beta = r^-2 eps^-p, so beta r^2 = eps^-p grows without bound as eps -> 0.
struct BetaRule {
  double exponent = 1.0;

  double operator()(double eps, double r_eps) const {
    if (!(eps > 0.0) || !(r_eps > 0.0)) throw Error("beta rule needs positive eps and radius");
    return std::pow(eps, -exponent) / (r_eps * r_eps);
  }
};

/// beta = r^-2 / eps.
inline double default_beta(double eps, double r_eps) { return BetaRule{1.0}(eps, r_eps); }

namespace detail {

// Offset of the cell center from the eps-cell center, in units of the eps-cell width / 2pi.
// Returns (j_local + 1/2) / block - 1/2, exact for power-of-two block sizes.
inline double local_offset(int j, int block) {
  const int jl = j % block;
  return (jl + 0.5) / block - 0.5;
}

inline int blocks_for(const PeriodicGrid& g, double eps, int axes) {
  const int m = reciprocal_integer(eps);
  for (int k = 0; k < axes; ++k)
    if (g.cells(k) % m != 0)
      throw Error("grid not eps-periodic: 1/eps = " + std::to_string(m) + " does not divide n = " + std::to_string(g.cells(k)));
  return m;
}

inline int min_cells_multiple(double needed, int m) {
  const int per_block = static_cast<int>(std::ceil(needed - 1e-12));
  return per_block * m;
}

}  // namespace detail

inline CoefficientField read_coefficient_dump(const std::string& path);

inline CoefficientField rasterize(const MicrostructureSpec& spec, const PeriodicGrid& grid) {
  return std::visit(
      [&](const auto& s) -> CoefficientField {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ConstantMedium>) {
          if (!(s.a0 > 0.0)) throw Error("constant medium needs a0 > 0");
          return CoefficientField::constant(grid, s.a0);
        } else if constexpr (std::is_same_v<S, TwoPhaseInclusion>) {
          if (!(s.rho > 0.0 && s.rho < 1.0)) throw Error("inclusion fraction rho must lie in (0, 1)");
          if (!(s.beta >= 1.0)) throw Error("inclusion conductivity beta must be >= 1 (background)");
          const int m = detail::blocks_for(grid, s.eps, grid.dim());
          for (int k = 0; k < grid.dim(); ++k) {
            const int block = grid.cells(k) / m;
            if (s.rho * block < 4.0 - 1e-12)
              throw Error("under-resolved inclusion: need at least 4 cells across, minimum n = " +
                          std::to_string(detail::min_cells_multiple(4.0 / s.rho, m)));
          }
          std::vector<double> vals(grid.size(), 1.0);
          std::vector<Phase> mask(grid.size(), Phase::background);
          const double half = 0.5 * s.rho;
          for (std::size_t c = 0; c < grid.size(); ++c) {
            const auto jc = grid.coords(c);
            bool inside = true;
            double r2 = 0.0;
            for (int k = 0; k < grid.dim(); ++k) {
              const double off = detail::local_offset(jc[k], grid.cells(k) / m);
              r2 += off * off;
              inside = inside && std::abs(off) < half;
            }
            if (s.shape == InclusionShape::disc) inside = r2 < half * half;
            if (inside) {
              vals[c] = s.beta;
              mask[c] = Phase::inclusion;
            }
          }
          return CoefficientField::isotropic(grid, vals, std::move(mask));
        } else if constexpr (std::is_same_v<S, FiberLattice>) {
          if (grid.dim() < 2) throw Error("fiber lattice needs a 2D cross-section or 3D grid");
          if (!(s.r_eps > 0.0 && s.r_eps < s.R && s.R < std::numbers::pi))
            throw Error("fiber geometry needs 0 < r_eps < R < pi");
          if (!(s.beta >= 1.0)) throw Error("fiber conductivity beta must be >= 1 (background)");
          const int m = detail::blocks_for(grid, s.eps, 2);
          for (int k = 0; k < 2; ++k) {
            const int block = grid.cells(k) / m;
            const double across = 2.0 * s.r_eps * block / kTwoPi;
            if (across < 4.0 - 1e-12)
              throw Error("under-resolved fiber: need at least 4 cells across the diameter, minimum n = " +
                          std::to_string(detail::min_cells_multiple(4.0 * kTwoPi / (2.0 * s.r_eps), m)));
          }
          std::vector<double> vals(grid.size(), 1.0);
          std::vector<Phase> mask(grid.size(), Phase::background);
          const double rr = s.r_eps / kTwoPi;
          for (std::size_t c = 0; c < grid.size(); ++c) {
            const auto jc = grid.coords(c);
            const double o1 = detail::local_offset(jc[0], grid.cells(0) / m);
            const double o2 = detail::local_offset(jc[1], grid.cells(1) / m);
            if (o1 * o1 + o2 * o2 < rr * rr) {
              vals[c] = s.beta;
              mask[c] = Phase::inclusion;
            }
          }
          return CoefficientField::isotropic(grid, vals, std::move(mask));
        } else {
          auto f = read_coefficient_dump(s.path);
          if (!(f.grid() == grid)) throw Error("field dump grid does not match the requested grid: " + s.path);
          return f;
        }
      },
      spec);
}

/// Repeat a unit-cell field 1/eps times along every axis.
inline CoefficientField tile(const CoefficientField& unit, double eps) {
  const int m = reciprocal_integer(eps);
  const auto& ug = unit.grid();
  const int d = ug.dim();
  std::array<int, 3> n{1, 1, 1};
  for (int k = 0; k < d; ++k) n[k] = ug.cells(k) * m;
  const auto g = make_grid(d, std::span<const int>(n.data(), d));
  std::vector<double> blocks(g.size() * d * d);
  std::vector<Phase> mask(unit.mask().empty() ? 0 : g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    auto jc = g.coords(c);
    for (int k = 0; k < d; ++k) jc[k] %= ug.cells(k);
    const auto src = ug.index(jc);
    std::copy_n(unit.blocks().begin() + static_cast<std::ptrdiff_t>(src * d * d), d * d,
                blocks.begin() + static_cast<std::ptrdiff_t>(c * d * d));
    if (!mask.empty()) mask[c] = unit.mask()[src];
  }
  if (unit.is_isotropic()) {
    std::vector<double> vals(g.size());
    for (std::size_t c = 0; c < g.size(); ++c) vals[c] = blocks[c * d * d];
    return CoefficientField::isotropic(g, vals, std::move(mask));
  }
  return CoefficientField::matrices(g, std::move(blocks));
}

/// Isotropic field from a function of the cell-center coordinates.
template <typename F>
CoefficientField coefficient_from(const PeriodicGrid& g, F&& fn) {
  std::vector<double> vals(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    const auto jc = g.coords(c);
    std::array<double, 3> x{0, 0, 0};
    for (int k = 0; k < g.dim(); ++k) x[k] = g.center(k, jc[k]);
    vals[c] = fn(x);
  }
  return CoefficientField::isotropic(g, vals);
}

/// Smallest per-cell eigenvalue over the field.
inline double min_eigenvalue(const CoefficientField& f) {
  double m = std::numeric_limits<double>::infinity();
  if (f.is_isotropic()) {
    for (std::size_t c = 0; c < f.size(); ++c) m = std::min(m, f.scalar(c));
    return m;
  }
  for (std::size_t c = 0; c < f.size(); ++c) m = std::min(m, f.min_eigenvalue(c));
  return m;
}

}  // namespace hcbloch

#include "hcbloch/field_io.hpp"
