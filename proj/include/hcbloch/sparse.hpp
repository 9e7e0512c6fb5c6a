#pragma once

// Row-compressed Hermitian matrices and the iterative kernels built on
// them: Jacobi-preconditioned conjugate gradients, a block LOBPCG for the
// smallest eigenpairs of B x = lambda M x with diagonal M (Jacobi or
// factorized-shift preconditioning), a projected
// inverse power iteration for weighted Poincare-type constants, and a dense
// cyclic-Jacobi oracle that shares no code with the iterative paths.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "hcbloch/error.hpp"
#include "hcbloch/parallel.hpp"

namespace hcbloch {

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

template <typename T>
inline T conj_if(const T& x) {
  if constexpr (is_complex<T>::value) return std::conj(x);
  else return x;
}

template <typename T>
inline double real_part(const T& x) {
  if constexpr (is_complex<T>::value) return x.real();
  else return x;
}

/// <x, y> = sum conj(x_i) y_i, summed in index order.
template <typename T>
T dot(std::span<const T> x, std::span<const T> y) {
  T s{};
  for (std::size_t i = 0; i < x.size(); ++i) s += conj_if(x[i]) * y[i];
  return s;
}

template <typename T>
double norm2(std::span<const T> x) {
  double s = 0.0;
  for (const auto& v : x) s += std::norm(v);
  return std::sqrt(s);
}

template <typename T>
class SparseHermitian {
 public:
  struct Triplet {
    std::size_t row;
    std::size_t col;
    T value;
  };

  SparseHermitian() = default;

  /// Duplicate (row, col) entries are summed.
  static SparseHermitian from_triplets(std::size_t n, std::vector<Triplet> t) {
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseHermitian m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    for (std::size_t i = 0; i < t.size();) {
      std::size_t j = i;
      T v{};
      while (j < t.size() && t[j].row == t[i].row && t[j].col == t[i].col) v += t[j++].value;
      if (t[i].row >= n || t[i].col >= n) throw Error("triplet index out of range");
      m.col_.push_back(static_cast<std::uint32_t>(t[i].col));
      m.val_.push_back(v);
      ++m.row_ptr_[t[i].row + 1];
      i = j;
    }
    std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
    return m;
  }

  /// Row-wise construction: fill(r, entries) appends (col, value) pairs for row r; duplicates are summed.
  template <typename Fill>
  static SparseHermitian from_rows(std::size_t n, Fill&& fill) {
    SparseHermitian m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    std::vector<std::pair<std::size_t, T>> entries;
    for (std::size_t r = 0; r < n; ++r) {
      entries.clear();
      fill(r, entries);
      std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t i = 0; i < entries.size();) {
        std::size_t j = i;
        T v{};
        while (j < entries.size() && entries[j].first == entries[i].first) v += entries[j++].second;
        if (entries[i].first >= n) throw Error("row entry index out of range");
        m.col_.push_back(static_cast<std::uint32_t>(entries[i].first));
        m.val_.push_back(v);
        i = j;
      }
      m.row_ptr_[r + 1] = m.val_.size();
    }
    return m;
  }

  std::size_t dim() const noexcept { return n_; }
  std::size_t nonzeros() const noexcept { return val_.size(); }

  /// y = A x
  void apply(std::span<const T> x, std::span<T> y) const {
    parallel::for_chunks(n_, [&](std::size_t b, std::size_t e) {
      for (std::size_t r = b; r < e; ++r) {
        T s{};
        for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += val_[p] * x[col_[p]];
        y[r] = s;
      }
    });
  }

  std::vector<T> apply(std::span<const T> x) const {
    std::vector<T> y(n_);
    apply(x, y);
    return y;
  }

  T at(std::size_t r, std::size_t c) const {
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
      if (col_[p] == c) return val_[p];
    return T{};
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(n_, 0.0);
    for (std::size_t r = 0; r < n_; ++r) d[r] = real_part(at(r, r));
    return d;
  }

  /// max |A_ij - conj(A_ji)| over stored entries.
  double max_asymmetry() const {
    double m = 0.0;
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
        m = std::max(m, std::abs(val_[p] - conj_if(at(col_[p], r))));
    return m;
  }

  /// Max absolute row sum (Gershgorin bound on the spectral radius).
  double row_sum_bound() const {
    double m = 0.0;
    for (std::size_t r = 0; r < n_; ++r) {
      double s = 0.0;
      for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += std::abs(val_[p]);
      m = std::max(m, s);
    }
    return m;
  }

  /// Copy into Eigen's compressed column storage.
  Eigen::SparseMatrix<T> to_eigen() const {
    std::vector<Eigen::Triplet<T>> t;
    t.reserve(val_.size());
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
        t.emplace_back(static_cast<int>(r), static_cast<int>(col_[p]), val_[p]);
    Eigen::SparseMatrix<T> m(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }

  /// Dense row-major copy.
  std::vector<T> to_dense() const {
    std::vector<T> d(n_ * n_, T{});
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) d[r * n_ + col_[p]] = val_[p];
    return d;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_;
  std::vector<T> val_;
};

// ---------------------------------------------------------------------------
// Conjugate gradients

struct CgOptions {
  double tol = 1e-12;        ///< relative residual ||b - Ax|| / ||b||
  int maxit = 10000;
  bool deflate_constants = false;  ///< solve on the mean-zero subspace (kernel = constants)
  int restart = 500;         ///< recompute the true residual every `restart` iterations
};

template <typename T>
struct CgResult {
  std::vector<T> x;
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> history;            ///< relative residual after each iteration
  std::vector<double> restart_residuals;  ///< true relative residual at every restart
  std::vector<double> restart_energy;     ///< x^H A x / 2 - Re b^H x at every restart; never increases
};

template <typename T>
CgResult<T> cg_solve(const SparseHermitian<T>& A, std::span<const T> b_in, const CgOptions& opt = {}) {
  const std::size_t n = A.dim();
  if (b_in.size() != n) throw Error("cg_solve: right-hand side has wrong length");
  std::vector<T> b(b_in.begin(), b_in.end());
  auto project = [&](std::vector<T>& v) {
    T m{};
    for (const auto& x : v) m += x;
    m /= static_cast<double>(n);
    for (auto& x : v) x -= m;
  };
  if (opt.deflate_constants) {
    T s{};
    double sabs = 0.0;
    for (const auto& x : b) {
      s += x;
      sabs += std::abs(x);
    }
    if (std::abs(s) > 1e-10 * std::max(sabs, 1e-300)) throw Error("cg_solve: incompatible right-hand side (nonzero mean under constant deflation)");
    project(b);
  }

  CgResult<T> res;
  res.x.assign(n, T{});
  const double bnorm = norm2<T>(b);
  if (bnorm == 0.0) return res;

  auto dinv = A.diagonal();
  for (auto& v : dinv) v = v > 0.0 ? 1.0 / v : 1.0;

  std::vector<T> r = b, z(n), p(n), q(n);
  auto precondition = [&] {
    for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
    if (opt.deflate_constants) project(z);
  };
  precondition();
  p = z;
  T rz = dot<T>(r, z);
  res.restart_residuals.push_back(1.0);
  res.restart_energy.push_back(0.0);

  for (int it = 1; it <= opt.maxit; ++it) {
    A.apply(p, q);
    const T pq = dot<T>(p, q);
    if (std::abs(pq) == 0.0) break;
    const T alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    bool restarted = false;
    if (opt.restart > 0 && it % opt.restart == 0) {
      A.apply(res.x, q);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
      if (opt.deflate_constants) project(r);
      restarted = true;
      res.restart_energy.push_back(0.5 * real_part(dot<T>(res.x, q)) - real_part(dot<T>(b, res.x)));
    }
    const double rel = norm2<T>(r) / bnorm;
    res.history.push_back(rel);
    res.iterations = it;
    if (restarted) res.restart_residuals.push_back(rel);
    if (rel <= opt.tol) {
      // confirm against the true residual
      A.apply(res.x, q);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
      if (opt.deflate_constants) project(r);
      const double true_rel = norm2<T>(r) / bnorm;
      if (true_rel <= opt.tol) {
        res.relative_residual = true_rel;
        if (opt.deflate_constants) project(res.x);
        return res;
      }
      restarted = true;
    }
    precondition();
    const T rz_new = dot<T>(r, z);
    if (restarted) {
      p = z;
    } else {
      const T beta = rz_new / rz;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    rz = rz_new;
  }
  throw ConvergenceError("cg_solve: no convergence after " + std::to_string(opt.maxit) + " iterations, relative residual " +
                             std::to_string(res.history.empty() ? 1.0 : res.history.back()),
                         res.history);
}

// ---------------------------------------------------------------------------
// LOBPCG

enum class EigPreconditioner {
  jacobi,      ///< diagonal of B
  factorized,  ///< sparse LDL^T of B + tau M, tau = shift * ||B|| / ||M||
};

struct EigOptions {
  double tol = 1e-12;  ///< backward error ||Bx - lambda Mx|| / ((||B|| + |lambda| ||M||) ||x||)
  int maxit = 500;
  EigPreconditioner preconditioner = EigPreconditioner::jacobi;
  double shift = 1e-12;
  std::uint64_t seed = 24389;
  int extra = 2;       ///< guard vectors carried beyond the requested count
  int refresh = 25;    ///< recompute B X and B P from scratch every `refresh` iterations
};

template <typename T>
struct EigSolveReport {
  std::vector<double> eigenvalues;
  std::vector<std::vector<T>> vectors;  ///< M-orthonormal
  std::vector<double> relative_residuals;
  int iterations = 0;
  bool converged = false;
};

/// Deterministic uniform values in [-1, 1) from a splitmix64 stream.
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed) : state_(seed) {}

  double next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-52 - 1.0;
  }

  template <typename T>
  T sample() {
    if constexpr (is_complex<T>::value) {
      const double re = next();
      return T(re, next());
    } else {
      return next();
    }
  }

 private:
  std::uint64_t state_;
};

namespace detail {

template <typename T>
using DenseMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
void apply_block(const SparseHermitian<T>& B, const DenseMat<T>& X, DenseMat<T>& Y) {
  Y.resize(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    B.apply(std::span<const T>(X.col(j).data(), static_cast<std::size_t>(X.rows())),
            std::span<T>(Y.col(j).data(), static_cast<std::size_t>(Y.rows())));
}

template <typename T>
DenseMat<T> scale_rows(const std::vector<double>& d, const DenseMat<T>& X) {
  DenseMat<T> Y = X;
  for (Eigen::Index i = 0; i < X.rows(); ++i) Y.row(i) *= d[static_cast<std::size_t>(i)];
  return Y;
}

}  // namespace detail

/// The k smallest eigenpairs of B x = lambda M x, M = diag(mass) > 0.
template <typename T>
EigSolveReport<T> smallest_eigpair(const SparseHermitian<T>& B, const std::vector<double>& mass, int k,
                                   const EigOptions& opt = {}) {
  using Mat = detail::DenseMat<T>;
  const auto n = static_cast<Eigen::Index>(B.dim());
  if (k < 1 || k > n) throw Error("smallest_eigpair: requested " + std::to_string(k) + " eigenpairs of a dimension-" + std::to_string(n) + " problem");
  if (static_cast<Eigen::Index>(mass.size()) != n) throw Error("smallest_eigpair: mass has wrong length");
  for (double m : mass)
    if (!(m > 0.0)) throw Error("smallest_eigpair: mass must be positive");

  const Eigen::Index m = std::min<Eigen::Index>(n, k + opt.extra);
  const double bnorm = B.row_sum_bound();
  const double mnorm = *std::max_element(mass.begin(), mass.end());

  std::vector<double> dinv;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<T>>> ldlt;
  if (opt.preconditioner == EigPreconditioner::factorized && 3 * m <= n) {
    Eigen::SparseMatrix<T> shifted = B.to_eigen();
    const double tau = opt.shift * bnorm / mnorm;
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += T(tau * mass[static_cast<std::size_t>(i)]);
    ldlt = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<T>>>(shifted);
    if (ldlt->info() != Eigen::Success) throw Error("smallest_eigpair: factorization of the shifted operator failed");
  } else {
    dinv = B.diagonal();
    for (std::size_t i = 0; i < dinv.size(); ++i) dinv[i] = dinv[i] > 0.0 ? 1.0 / dinv[i] : 1.0 / mass[i];
  }

  auto mdot = [&](const Mat& X, const Mat& Y) -> Mat { return X.adjoint() * detail::scale_rows(mass, Y); };

  // M-orthonormalize columns of S (returns the transform C with S C orthonormal, dropping dependent directions).
  auto svqb = [&](const Mat& S) -> Mat {
    Mat G = mdot(S, S);
    Eigen::VectorXd dscale(G.cols());
    for (Eigen::Index i = 0; i < G.cols(); ++i) dscale(i) = 1.0 / std::sqrt(std::max(real_part(G(i, i)), 1e-300));
    Mat Gs = dscale.asDiagonal() * G * dscale.asDiagonal();
    Gs = 0.5 * (Gs + Gs.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Mat> es(Gs);
    const auto& ev = es.eigenvalues();
    const double top = ev(ev.size() - 1);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) > 1e-10 * top) keep.push_back(i);
    Mat C(S.cols(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
      C.col(static_cast<Eigen::Index>(j)) = dscale.asDiagonal() * es.eigenvectors().col(keep[j]) / std::sqrt(ev(keep[j]));
    return C;
  };

  SeededUniform rng(opt.seed);
  Mat X(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = rng.sample<T>();

  EigSolveReport<T> rep;
  Mat BX, BW, BP, P, W;
  Eigen::VectorXd lambda(m);

  auto rayleigh_ritz = [&](const Mat& S, const Mat& BS, Mat& Xout, Mat& BXout) {
    Mat C0 = svqb(S);
    {
      const Mat S1 = S * C0;
      const Mat G1 = mdot(S1, S1);
      if ((G1 - Mat::Identity(G1.rows(), G1.cols())).norm() > 1e-12) C0 = C0 * svqb(S1);
    }
    Mat H = C0.adjoint() * (S.adjoint() * BS) * C0;
    H = 0.5 * (H + H.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    const Mat C = C0 * es.eigenvectors().leftCols(m);
    Xout = S * C;
    BXout = BS * C;
    lambda = es.eigenvalues().head(m);
  };

  {
    Mat BX0;
    detail::apply_block(B, X, BX0);
    Mat X1, BX1;
    rayleigh_ritz(X, BX0, X1, BX1);
    X = X1;
    BX = BX1;
  }

  std::vector<double> resid(static_cast<std::size_t>(m));
  for (int it = 0;; ++it) {
    Mat R = BX - detail::scale_rows(mass, X) * lambda.asDiagonal();
    bool done = true;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double xn = X.col(j).norm();
      resid[static_cast<std::size_t>(j)] = R.col(j).norm() / ((bnorm + std::abs(lambda(j)) * mnorm) * xn);
      if (j < k && !(resid[static_cast<std::size_t>(j)] <= opt.tol)) done = false;
    }
    rep.iterations = it;
    if (done || it >= opt.maxit || 3 * m > n) {
      rep.converged = done;
      if (!done && 3 * m > n) {
        // Tiny problems: fall back to a full Rayleigh-Ritz on the whole space.
        Mat I = Mat::Identity(n, n), BI;
        detail::apply_block(B, I, BI);
        Mat X1, BX1;
        rayleigh_ritz(I, BI, X1, BX1);
        X = X1;
        BX = BX1;
        R = BX - detail::scale_rows(mass, X) * lambda.asDiagonal();
        rep.converged = true;
        for (Eigen::Index j = 0; j < m; ++j) {
          resid[static_cast<std::size_t>(j)] = R.col(j).norm() / ((bnorm + std::abs(lambda(j)) * mnorm) * X.col(j).norm());
          if (j < k && !(resid[static_cast<std::size_t>(j)] <= opt.tol)) rep.converged = false;
        }
      }
      break;
    }

    if (ldlt) W = ldlt->solve(R);
    else W = detail::scale_rows(dinv, R);
    W -= X * mdot(X, W);  // M-orthogonal to the current iterate
    detail::apply_block(B, W, BW);

    const Eigen::Index pc = P.cols();
    Mat S(n, m + W.cols() + pc), BS(n, m + W.cols() + pc);
    S.leftCols(m) = X;
    S.middleCols(m, W.cols()) = W;
    BS.leftCols(m) = BX;
    BS.middleCols(m, W.cols()) = BW;
    if (pc > 0) {
      S.rightCols(pc) = P;
      BS.rightCols(pc) = BP;
    }

    Mat Xn, BXn;
    rayleigh_ritz(S, BS, Xn, BXn);
    const Mat coef = mdot(X, Xn);
    P = Xn - X * coef;
    // near convergence P is a small difference; rescale it and apply B afresh so that P and BP stay consistent
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      const double pn = P.col(j).norm();
      if (pn > 0.0) P.col(j) /= pn;
    }
    detail::apply_block(B, P, BP);
    X = Xn;
    BX = BXn;

    if (opt.refresh > 0 && (it + 1) % opt.refresh == 0) detail::apply_block(B, X, BX);
  }

  if (ldlt && rep.converged) {
    // inverse-iteration polish: damps the rounding-level high-frequency content of the Ritz vectors
    for (int pass = 0; pass < 2; ++pass) {
      Mat Y = ldlt->solve(detail::scale_rows(mass, X)), BY;
      detail::apply_block(B, Y, BY);
      rayleigh_ritz(Y, BY, X, BX);
    }
    const Mat R = BX - detail::scale_rows(mass, X) * lambda.asDiagonal();
    for (Eigen::Index j = 0; j < m; ++j)
      resid[static_cast<std::size_t>(j)] = R.col(j).norm() / ((bnorm + std::abs(lambda(j)) * mnorm) * X.col(j).norm());
  }

  rep.eigenvalues.resize(static_cast<std::size_t>(k));
  rep.vectors.resize(static_cast<std::size_t>(k));
  rep.relative_residuals.assign(resid.begin(), resid.begin() + k);
  for (int j = 0; j < k; ++j) {
    rep.eigenvalues[static_cast<std::size_t>(j)] = lambda(j);
    std::vector<T> v(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = X(i, j);
    double mn = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) mn += mass[static_cast<std::size_t>(i)] * std::norm(v[static_cast<std::size_t>(i)]);
    for (auto& x : v) x /= std::sqrt(mn);
    rep.vectors[static_cast<std::size_t>(j)] = std::move(v);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Weighted Poincare-type constant

struct GenEigReport {
  double value = 0.0;
  std::vector<double> vector;
  int iterations = 0;
  bool converged = false;
};

struct GenEigOptions {
  double tol = 1e-12;  ///< relative change of the Rayleigh quotient between iterations
  int maxit = 500;
  CgOptions cg{};
  bool factorized = false;  ///< solve with a sparse LDL^T of K pinned at index 0 instead of CG
};

/// max x^T W x over { x : x^T K x = 1, sum_i w_i x_i = 0 }, W = diag(weight) >= 0,
/// K positive semidefinite with kernel = constants. Inverse power iteration
/// x <- K^+ W P x with P the weighted-mean projection.
inline GenEigReport largest_geneig(const std::vector<double>& weight, const SparseHermitian<double>& K,
                                   const GenEigOptions& opt = {}) {
  const std::size_t n = K.dim();
  if (weight.size() != n) throw Error("largest_geneig: weight has wrong length");
  GenEigReport rep;
  const double wsum = std::accumulate(weight.begin(), weight.end(), 0.0);
  if (wsum == 0.0) {
    rep.vector.assign(n, 0.0);
    rep.converged = true;
    return rep;
  }
  for (double w : weight)
    if (w < 0.0) throw Error("largest_geneig: weight must be nonnegative");

  auto wproject = [&](std::vector<double>& x) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += weight[i] * x[i];
    c /= wsum;
    for (auto& v : x) v -= c;
  };
  auto numerator = [&](const std::vector<double>& y) {  // y weighted-mean zero
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += weight[i] * y[i] * y[i];
    return s;
  };

  SeededUniform rng(24389);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.next();
  CgOptions cg = opt.cg;
  cg.deflate_constants = true;

  // K with row and column 0 removed is definite; for a compatible right-hand side its solution,
  // extended by x_0 = 0, solves the singular system exactly.
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt;
  if (opt.factorized && n > 1) {
    const Eigen::SparseMatrix<double> full = K.to_eigen();
    const auto m = static_cast<Eigen::Index>(n - 1);
    ldlt = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(full.bottomRightCorner(m, m));
    if (ldlt->info() != Eigen::Success) throw Error("largest_geneig: factorization of the pinned stiffness failed");
  }
  auto solve = [&](const std::vector<double>& b) {
    if (!ldlt) return cg_solve<double>(K, b, cg).x;
    const auto m = static_cast<Eigen::Index>(n - 1);
    const Eigen::VectorXd y = ldlt->solve(Eigen::Map<const Eigen::VectorXd>(b.data() + 1, m));
    std::vector<double> out(n, 0.0);
    for (Eigen::Index i = 0; i < m; ++i) out[static_cast<std::size_t>(i) + 1] = y(i);
    return out;
  };

  double mu_prev = 0.0;
  std::vector<double> rhs(n), kx(n);
  for (int it = 1; it <= opt.maxit; ++it) {
    wproject(x);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = weight[i] * x[i];
    // exact compatibility: sum(rhs) = 0 up to rounding; remove the rounding residue
    double s = std::accumulate(rhs.begin(), rhs.end(), 0.0);
    for (auto& v : rhs) v -= s / static_cast<double>(n);
    x = solve(rhs);
    wproject(x);
    K.apply(x, kx);
    const double den = dot<double>(x, kx);
    const double mu = numerator(x) / den;
    const double scale = 1.0 / std::sqrt(den);
    for (auto& v : x) v *= scale;
    rep.iterations = it;
    rep.value = mu;
    if (it > 2 && std::abs(mu - mu_prev) <= opt.tol * std::abs(mu)) {
      rep.converged = true;
      break;
    }
    mu_prev = mu;
  }
  rep.vector = x;
  if (!rep.converged) throw ConvergenceError("largest_geneig: power iteration did not converge", {});
  return rep;
}

// ---------------------------------------------------------------------------
// Dense oracle

/// All eigenvalues of B x = lambda M x (B dense Hermitian row-major, M diagonal > 0),
/// ascending, by cyclic Jacobi rotations on M^{-1/2} B M^{-1/2}.
template <typename T>
std::vector<double> dense_oracle(std::span<const T> dense, std::span<const double> mass) {
  const std::size_t n = mass.size();
  if (n > 4096) throw Error("dense_oracle: dimension " + std::to_string(n) + " exceeds the 4096 cap");
  if (dense.size() != n * n) throw Error("dense_oracle: matrix size mismatch");
  std::vector<T> a(dense.begin(), dense.end());
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(mass[i] > 0.0)) throw Error("dense_oracle: mass must be positive");
    s[i] = 1.0 / std::sqrt(mass[i]);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] *= s[i] * s[j];
  auto off = [&] {
    double o = 0.0, t = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double v = std::norm(a[i * n + j]);
        t += v;
        if (i != j) o += v;
      }
    return std::pair{o, t};
  };
  for (int sweep = 0; sweep < 100; ++sweep) {
    const auto [o, t] = off();
    if (o <= 1e-30 * t || o == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const T apq = a[p * n + q];
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const T phase = apq / mag;  // apq = mag * phase
        const double app = real_part(a[p * n + p]);
        const double aqq = real_part(a[q * n + q]);
        const double theta = (aqq - app) / (2.0 * mag);
        const double tt = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(tt * tt + 1.0);
        const double sn = tt * c;
        // J = diag(1, conj(phase)) * [[c, s], [-s, c]]
        const T jpp = c, jpq = sn;
        const T jqp = -sn * conj_if(phase), jqq = c * conj_if(phase);
        for (std::size_t r = 0; r < n; ++r) {  // A <- A J
          const T x = a[r * n + p], y = a[r * n + q];
          a[r * n + p] = x * jpp + y * jqp;
          a[r * n + q] = x * jpq + y * jqq;
        }
        for (std::size_t col = 0; col < n; ++col) {  // A <- J^* A
          const T x = a[p * n + col], y = a[q * n + col];
          a[p * n + col] = conj_if(jpp) * x + conj_if(jqp) * y;
          a[q * n + col] = conj_if(jpq) * x + conj_if(jqq) * y;
        }
        a[p * n + q] = T{};
        a[q * n + p] = T{};
        a[p * n + p] = real_part(a[p * n + p]);
        a[q * n + q] = real_part(a[q * n + q]);
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = real_part(a[i * n + i]);
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace hcbloch
