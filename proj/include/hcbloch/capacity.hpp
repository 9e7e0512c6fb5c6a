#pragma once

// Radial-logarithmic capacity profile around the fiber of the lattice's
// unit cell: 0 on the fiber, (ln r - ln r_eps) / (ln R - ln r_eps) on the
// annulus, 1 outside R.

#include <cmath>
#include <numbers>

#include "hcbloch/error.hpp"
#include "hcbloch/grid.hpp"
#include "hcbloch/microstructure.hpp"
#include "hcbloch/operators.hpp"

namespace hcbloch {

struct CapacityProfile {
  double r_eps = 0.0;
  double R = 1.2;

  CapacityProfile(double r, double outer) : r_eps(r), R(outer) {
    if (!(r > 0.0 && r < outer && outer < std::numbers::pi)) throw Error("capacity profile needs 0 < r_eps < R < pi");
  }

  /// Profile value at distance r from the fiber axis.
  double operator()(double r) const {
    if (r <= r_eps) return 0.0;
    if (r >= R) return 1.0;
    return (std::log(r) - std::log(r_eps)) / (std::log(R) - std::log(r_eps));
  }

  /// Dirichlet energy of the 2D profile, 2 pi / (ln R - ln r_eps).
  double analytic_energy() const { return kTwoPi / (std::log(R) - std::log(r_eps)); }
};

/// Cell-center samples of the profile around (pi, pi) on a 2D unit-cell grid.
inline RealField vhat(const PeriodicGrid& grid2d, double r_eps, double R) {
  if (grid2d.dim() != 2) throw Error("vhat needs a 2D grid");
  const CapacityProfile prof(r_eps, R);
  for (int k = 0; k < 2; ++k)
    if (2.0 * r_eps / grid2d.width(k) < 4.0 - 1e-12)
      throw Error("vhat: fiber under-resolved, minimum n = " + std::to_string(static_cast<int>(std::ceil(4.0 * kTwoPi / (2.0 * r_eps)))));
  RealField v(grid2d);
  for (std::size_t c = 0; c < grid2d.size(); ++c) {
    const auto jc = grid2d.coords(c);
    // same offset arithmetic as the fiber rasterizer, so the fiber cells are exactly the zero set
    const double o1 = detail::local_offset(jc[0], grid2d.cells(0)) * kTwoPi;
    const double o2 = detail::local_offset(jc[1], grid2d.cells(1)) * kTwoPi;
    const double r = std::sqrt(o1 * o1 + o2 * o2);
    v[c] = prof(r);
  }
  return v;
}

struct AnnulusEnergy {
  double analytic = 0.0;
  double discrete = 0.0;  ///< face-difference energy sum |D vhat|^2 V (NaN if no grid given)
};

inline AnnulusEnergy annulus_energy(double r_eps, double R, const PeriodicGrid* grid2d = nullptr) {
  const CapacityProfile prof(r_eps, R);
  AnnulusEnergy e{prof.analytic_energy(), std::numeric_limits<double>::quiet_NaN()};
  if (grid2d != nullptr) {
    const auto v = vhat(*grid2d, r_eps, R);
    const auto unit = CoefficientField::constant(*grid2d, 1.0);
    e.discrete = link_energy<double>(unit, LinkForm{}, v.values);
  }
  return e;
}

/// eps^-2 mean |grad vhat|^2 over the unit cell; tends to gamma when r_eps = radius_for_gamma(eps, gamma).
inline double rescaled_capacity_energy(double eps, double r_eps, double R, const PeriodicGrid& grid2d) {
  const auto e = annulus_energy(r_eps, R, &grid2d);
  return e.discrete / (kTwoPi * kTwoPi) / (eps * eps);
}

}  // namespace hcbloch
