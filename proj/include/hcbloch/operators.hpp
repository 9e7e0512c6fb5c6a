#pragma once

// Face-based discrete forms on periodic grids. For a cell c and axis k the
// face (c, k) joins c to its +k neighbor; its conductivity is the harmonic
// mean of the two adjacent diagonal entries. All forms carry the cell
// volume, so sums approximate integrals over Y.
//
// The shifted (link-phase) form is
//   E(phi) = scale * sum_{c,k} a_{c,k} |e^{i theta_k} phi_{c+k} - phi_c|^2 / h_k^2 * V
//            + sum_c p_c |phi_c|^2 V,
// with theta_k = eta_k h_k; at theta = 0 it is the standard finite-volume stiffness.

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "hcbloch/grid.hpp"
#include "hcbloch/microstructure.hpp"
#include "hcbloch/sparse.hpp"

namespace hcbloch {

struct LinkForm {
  std::array<double, 3> theta{0.0, 0.0, 0.0};  ///< link phase per axis
  double scale = 1.0;                          ///< overall energy factor
  std::vector<double> potential;               ///< optional per-cell zero-order coefficient
};

template <typename T>
SparseHermitian<T> assemble_link_form(const CoefficientField& a, const LinkForm& form) {
  const auto& g = a.grid();
  const int d = g.dim();
  const double vol = g.cell_volume();
  std::array<T, 3> phase{};
  for (int k = 0; k < d; ++k) {
    if constexpr (is_complex<T>::value) phase[k] = std::polar(1.0, form.theta[k]);
    else {
      if (form.theta[k] != 0.0) throw Error("real assembly requires zero link phase");
      phase[k] = 1.0;
    }
  }
  if (!form.potential.empty() && form.potential.size() != g.size()) throw Error("potential has wrong length");
  return SparseHermitian<T>::from_rows(g.size(), [&](std::size_t c, auto& row) {
    double diag = form.potential.empty() ? 0.0 : form.potential[c] * vol;
    for (int k = 0; k < d; ++k) {
      const double hk2 = g.width(k) * g.width(k);
      const std::size_t up = g.neighbor(c, k, +1);
      const std::size_t dn = g.neighbor(c, k, -1);
      const double wu = form.scale * a.face(c, k) * vol / hk2;
      const double wd = form.scale * a.face(dn, k) * vol / hk2;
      diag += wu + wd;
      // |p phi_up - phi_c|^2 couples conj(phi_c) phi_up with -p; the face below couples conj(phi_c) phi_dn with -conj(p)
      row.emplace_back(up, T(-wu) * phase[k]);
      row.emplace_back(dn, T(-wd) * conj_if(phase[k]));
    }
    row.emplace_back(c, T(diag));
  });
}

/// Real symmetric stiffness sum_faces a |D u|^2 V (kernel = constants).
inline SparseHermitian<double> assemble_stiffness(const CoefficientField& a) {
  return assemble_link_form<double>(a, LinkForm{});
}

/// The quadratic form E(phi) evaluated face by face (no cancellation against diagonal terms).
template <typename T>
double link_energy(const CoefficientField& a, const LinkForm& form, std::span<const T> phi) {
  const auto& g = a.grid();
  const double vol = g.cell_volume();
  double e = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    for (int k = 0; k < g.dim(); ++k) {
      const std::size_t up = g.neighbor(c, k, +1);
      T diff;
      if constexpr (is_complex<T>::value) diff = std::polar(1.0, form.theta[k]) * phi[up] - phi[c];
      else diff = phi[up] - phi[c];
      e += form.scale * a.face(c, k) * std::norm(diff) / (g.width(k) * g.width(k));
    }
    if (!form.potential.empty()) e += form.potential[c] * std::norm(phi[c]);
  }
  return e * vol;
}

/// Forward face difference (u_{c+k} - u_c) / h_k for every cell c.
inline std::vector<double> face_difference(const PeriodicGrid& g, std::span<const double> u, int k) {
  std::vector<double> du(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) du[c] = (u[g.neighbor(c, k, +1)] - u[c]) / g.width(k);
  return du;
}

/// Transpose of the face difference: (D_k^T g)_c = (g_{c-k} - g_c) / h_k.
inline std::vector<double> face_difference_adjoint(const PeriodicGrid& g, std::span<const double> f, int k) {
  std::vector<double> out(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) out[c] = (f[g.neighbor(c, k, -1)] - f[c]) / g.width(k);
  return out;
}

}  // namespace hcbloch
