#pragma once

// Structured periodic grids on the torus (0, 2pi)^d with cell-centered
// unknowns. Cells are enumerated row-major (last axis fastest).

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hcbloch/error.hpp"

namespace hcbloch {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Complex = std::complex<double>;

class PeriodicGrid {
 public:
  PeriodicGrid() = default;

  int dim() const noexcept { return d_; }
  int cells(int axis) const noexcept { return n_[axis]; }
  double width(int axis) const noexcept { return h_[axis]; }
  std::size_t size() const noexcept { return size_; }

  double cell_volume() const noexcept {
    double v = 1.0;
    for (int k = 0; k < d_; ++k) v *= h_[k];
    return v;
  }

  std::array<int, 3> coords(std::size_t index) const noexcept {
    std::array<int, 3> c{0, 0, 0};
    for (int k = d_ - 1; k >= 0; --k) {
      c[k] = static_cast<int>(index % static_cast<std::size_t>(n_[k]));
      index /= static_cast<std::size_t>(n_[k]);
    }
    return c;
  }

  std::size_t index(const std::array<int, 3>& c) const noexcept {
    std::size_t idx = 0;
    for (int k = 0; k < d_; ++k) idx = idx * static_cast<std::size_t>(n_[k]) + static_cast<std::size_t>(c[k]);
    return idx;
  }

  /// Neighbor of `index` one cell along `axis` in direction `dir` (+1 or -1), with wrap-around.
  std::size_t neighbor(std::size_t index, int axis, int dir) const noexcept {
    const auto stride = stride_[axis];
    const auto n = static_cast<std::size_t>(n_[axis]);
    const std::size_t j = (index / stride) % n;
    if (dir > 0) return j + 1 == n ? index - (n - 1) * stride : index + stride;
    return j == 0 ? index + (n - 1) * stride : index - stride;
  }

  /// Cell-center coordinate (j + 1/2) h along `axis`.
  double center(int axis, int j) const noexcept { return (j + 0.5) * h_[axis]; }

  bool operator==(const PeriodicGrid& o) const noexcept {
    return d_ == o.d_ && n_ == o.n_;
  }

  friend PeriodicGrid make_grid(int d, std::span<const int> n);

 private:
  int d_ = 0;
  std::array<int, 3> n_{1, 1, 1};
  std::array<double, 3> h_{kTwoPi, kTwoPi, kTwoPi};
  std::array<std::size_t, 3> stride_{1, 1, 1};
  std::size_t size_ = 0;
};

inline PeriodicGrid make_grid(int d, std::span<const int> n) {
  if (d < 1 || d > 3) throw Error("grid dimension must be 1, 2 or 3, got " + std::to_string(d));
  if (static_cast<int>(n.size()) != d)
    throw Error("grid needs one cell count per axis: expected " + std::to_string(d) + ", got " +
                std::to_string(n.size()));
  PeriodicGrid g;
  g.d_ = d;
  g.size_ = 1;
  for (int k = 0; k < d; ++k) {
    if (n[k] < 2) throw Error("degenerate axis " + std::to_string(k) + ": need at least 2 cells, got " + std::to_string(n[k]));
    g.n_[k] = n[k];
    g.h_[k] = kTwoPi / n[k];
    g.size_ *= static_cast<std::size_t>(n[k]);
  }
  std::size_t s = 1;
  for (int k = d - 1; k >= 0; --k) {
    g.stride_[k] = s;
    s *= static_cast<std::size_t>(g.n_[k]);
  }
  return g;
}

inline PeriodicGrid make_grid(int d, std::initializer_list<int> n) {
  return make_grid(d, std::span<const int>(n.begin(), n.size()));
}

/// Cubic grid with `n` cells on every axis.
inline PeriodicGrid cubic_grid(int d, int n) {
  std::array<int, 3> counts{n, n, n};
  return make_grid(d, std::span<const int>(counts.data(), static_cast<std::size_t>(std::max(d, 0))));
}

/// Returns 1/eps, which must be a positive integer (within 1e-9).
inline int reciprocal_integer(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error("eps must be positive");
  const double inv = 1.0 / eps;
  const double m = std::round(inv);
  if (m < 1.0 || std::abs(inv - m) > 1e-9 * m)
    throw Error("1/eps must be an integer, got 1/eps = " + std::to_string(inv));
  return static_cast<int>(m);
}

/// Cell-sampled scalar function on a periodic grid.
template <typename T>
struct GridField {
  PeriodicGrid grid;
  std::vector<T> values;

  GridField() = default;
  explicit GridField(const PeriodicGrid& g, T fill = T{}) : grid(g), values(g.size(), fill) {}
  GridField(const PeriodicGrid& g, std::vector<T> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw Error("field length does not match grid cell count");
  }

  std::size_t size() const noexcept { return values.size(); }
  T& operator[](std::size_t i) noexcept { return values[i]; }
  const T& operator[](std::size_t i) const noexcept { return values[i]; }
};

using RealField = GridField<double>;
using ComplexField = GridField<Complex>;

template <typename T>
T mean(std::span<const T> v) {
  T s{};
  for (const auto& x : v) s += x;
  return s / static_cast<double>(v.size());
}

template <typename T>
T mean(const GridField<T>& f) {
  return mean(std::span<const T>(f.values));
}

/// Discrete L2(Y) norm: sqrt(sum |f|^2 * cell volume).
template <typename T>
double l2_norm(const GridField<T>& f) {
  double s = 0.0;
  for (const auto& x : f.values) s += std::norm(x);
  return std::sqrt(s * f.grid.cell_volume());
}

template <typename T>
double max_abs(std::span<const T> v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, std::abs(x));
  return m;
}

template <typename T>
void subtract_mean(std::span<T> v) {
  const T m = mean(std::span<const T>(v.data(), v.size()));
  for (auto& x : v) x -= m;
}

/// Piecewise-constant average over the blocks 2*pi*eps*k + eps*Y.
template <typename T>
GridField<T> block_average(const GridField<T>& f, double eps) {
  const int m = reciprocal_integer(eps);
  const auto& g = f.grid;
  std::array<int, 3> block{1, 1, 1};
  std::array<int, 3> blocks{1, 1, 1};
  for (int k = 0; k < g.dim(); ++k) {
    if (g.cells(k) % m != 0)
      throw Error("block_average: 1/eps = " + std::to_string(m) + " does not divide n = " +
                  std::to_string(g.cells(k)) + " on axis " + std::to_string(k));
    block[k] = g.cells(k) / m;
    blocks[k] = m;
  }
  const std::size_t nblocks = static_cast<std::size_t>(blocks[0]) * blocks[1] * blocks[2];
  std::vector<T> sums(nblocks, T{});
  auto block_of = [&](std::size_t i) {
    const auto c = g.coords(i);
    return (static_cast<std::size_t>(c[0] / block[0]) * blocks[1] + c[1] / block[1]) * blocks[2] + c[2] / block[2];
  };
  for (std::size_t i = 0; i < g.size(); ++i) sums[block_of(i)] += f.values[i];
  const double per_block = static_cast<double>(block[0]) * block[1] * block[2];
  GridField<T> out(g);
  for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = sums[block_of(i)] / per_block;
  return out;
}

}  // namespace hcbloch
