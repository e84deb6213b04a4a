#pragma once

// Dense linear algebra shared by the solvers: spectra, ordered real Schur
// form, matrix exponential and guarded linear solves.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "mflq/errors.hpp"

namespace mflq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Complex = std::complex<double>;

inline Matrix identity(Index n) { return Matrix::Identity(n, n); }

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw InvalidArgument(std::string(what) + " must be square, got " +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()));
  }
}

inline void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    throw InvalidArgument(std::string(what) + " has non-finite entries");
  }
}

/// Eigenvalues with an attached tolerance for classifying them against the
/// imaginary axis. `radius`, when filled, widens the test per eigenvalue.
struct Spectrum {
  std::vector<Complex> eigenvalues;
  double axis_tol = 0.0;
  std::vector<double> radius;

  double margin(std::size_t i) const {
    return axis_tol + (i < radius.size() ? radius[i] : 0.0);
  }

  std::size_t count_stable() const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < eigenvalues.size(); ++i)
      if (eigenvalues[i].real() < -margin(i)) ++count;
    return count;
  }

  std::vector<Complex> on_axis() const {
    std::vector<Complex> out;
    for (std::size_t i = 0; i < eigenvalues.size(); ++i)
      if (std::abs(eigenvalues[i].real()) <= margin(i)) out.push_back(eigenvalues[i]);
    return out;
  }
};

/// Default dichotomy tolerance for a matrix K: 1e-9 * (1 + ||K||_F).
inline double default_axis_tol(const Matrix& k) {
  return 1e-9 * (1.0 + k.norm());
}

/// Sorts ascending by real part, then by imaginary part.
inline void sort_eigenvalues(std::vector<Complex>& ev) {
  std::sort(ev.begin(), ev.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
}

inline Spectrum eigenvalues(const Matrix& a, double axis_tol = 0.0) {
  require_square(a, "eigenvalues: input");
  require_finite(a, "eigenvalues: input");
  Spectrum s;
  s.axis_tol = axis_tol;
  if (a.rows() == 0) return s;
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NonConvergence("eigenvalue iteration did not converge");
  }
  const auto& ev = es.eigenvalues();
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  sort_eigenvalues(s.eigenvalues);
  return s;
}

/// Eigenvalues together with a rounding radius 100 * kappa_i * eps * ||A||_F,
/// kappa_i the eigenvalue condition number. Rounding splits a defective
/// eigenvalue by about sqrt(eps ||A||) while kappa grows like the inverse of
/// the split, so the radius covers a split Jordan block on the axis.
inline Spectrum eigenvalues_with_radius(const Matrix& a, double axis_tol) {
  require_square(a, "eigenvalues: input");
  require_finite(a, "eigenvalues: input");
  Spectrum s;
  s.axis_tol = axis_tol;
  const Index n = a.rows();
  if (n == 0) return s;
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success) {
    throw NonConvergence("eigenvalue iteration did not converge");
  }
  const Eigen::MatrixXcd x = es.eigenvectors();
  const double eps = std::numeric_limits<double>::epsilon();
  const double scale = a.norm();
  const double cap = 1e-3 * (1.0 + scale);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(x);
  Eigen::MatrixXcd y;
  const bool invertible = lu.isInvertible();
  if (invertible) y = lu.inverse();
  std::vector<std::pair<Complex, double>> pairs;
  for (Index i = 0; i < n; ++i) {
    double r = cap;
    if (invertible) {
      const double kappa = x.col(i).norm() * y.row(i).norm();
      if (std::isfinite(kappa)) r = std::min(cap, 100.0 * kappa * eps * scale);
    }
    pairs.emplace_back(es.eigenvalues()(i), r);
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& p, const auto& q) {
    if (p.first.real() != q.first.real()) return p.first.real() < q.first.real();
    return p.first.imag() < q.first.imag();
  });
  for (const auto& [z, r] : pairs) {
    s.eigenvalues.push_back(z);
    s.radius.push_back(r);
  }
  return s;
}

inline double spectral_abscissa(const Matrix& a) {
  const auto s = eigenvalues(a);
  double best = -std::numeric_limits<double>::infinity();
  for (auto z : s.eigenvalues) best = std::max(best, z.real());
  return best;
}

inline bool is_stable(const Matrix& a) { return spectral_abscissa(a) < 0.0; }

/// e^A by scaling and squaring with a diagonal Pade approximant.
inline Matrix mat_exp(const Matrix& a) {
  require_square(a, "mat_exp: input");
  require_finite(a, "mat_exp: input");
  Matrix e = a.exp();
  if (!e.allFinite()) throw Overflow("matrix exponential overflowed");
  return e;
}

/// Estimated 1-norm condition number (infinite when singular).
inline double condition_estimate(const Matrix& a) {
  require_square(a, "condition_estimate: input");
  if (a.rows() == 0) return 1.0;
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rc = lu.rcond();
  if (!(rc > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / rc;
}

/// Solves AX = B with full pivoting. Throws SingularMatrix when the smallest
/// pivot falls below 1e-12 * ||A||_F.
inline Matrix solve_linear(const Matrix& a, const Matrix& b) {
  require_square(a, "solve_linear: A");
  if (a.rows() != b.rows()) {
    throw InvalidArgument("solve_linear: row mismatch between A and B");
  }
  if (a.rows() == 0) return Matrix(0, b.cols());
  Eigen::FullPivLU<Matrix> lu(a);
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot >= 1e-12 * a.norm()) || a.norm() == 0.0) {
    throw SingularMatrix("pivot " + std::to_string(min_pivot) +
                         " below threshold");
  }
  return lu.solve(b);
}

inline Vector solve_linear(const Matrix& a, const Vector& b) {
  return solve_linear(a, Matrix(b)).col(0);
}

/// Real Schur form W^T K W = T with the eigenvalues of negative real part
/// gathered in the leading k_stable x k_stable block.
struct OrderedSchurForm {
  Matrix W;
  Matrix T;
  Index k_stable = 0;
};

namespace detail {

// Eigenvalues of the 1x1 or 2x2 diagonal block of T starting at j.
inline std::pair<Complex, Complex> block_eigenvalues(const Matrix& t, Index j,
                                                     Index size) {
  if (size == 1) return {Complex(t(j, j)), Complex(t(j, j))};
  const double a = t(j, j), b = t(j, j + 1), c = t(j + 1, j),
               d = t(j + 1, j + 1);
  const double half_tr = 0.5 * (a + d);
  const double disc = 0.25 * (a - d) * (a - d) + b * c;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    return {Complex(half_tr - r), Complex(half_tr + r)};
  }
  const double im = std::sqrt(-disc);
  return {Complex(half_tr, im), Complex(half_tr, -im)};
}

// Applies the orthogonal similarity Q (m x m) acting on indices [j, j+m).
inline void apply_window(Matrix& t, Matrix& w, Index j, const Matrix& q) {
  const Index m = q.rows();
  const Index n = t.rows();
  t.block(j, j, m, n - j) = q.transpose() * t.block(j, j, m, n - j);
  t.block(0, j, j + m, m) = t.block(0, j, j + m, m) * q;
  w.middleCols(j, m) = w.middleCols(j, m) * q;
}

// Triangularizes any 2x2 diagonal block whose eigenvalues are real, so every
// remaining 2x2 block carries a complex-conjugate pair.
inline void split_real_pairs(Matrix& t, Matrix& w) {
  const Index n = t.rows();
  for (Index j = 0; j + 1 < n; ++j) {
    if (t(j + 1, j) == 0.0) continue;
    const auto [l1, l2] = block_eigenvalues(t, j, 2);
    if (l1.imag() != 0.0) {
      ++j;
      continue;
    }
    const double a = t(j, j), b = t(j, j + 1), c = t(j + 1, j),
                 d = t(j + 1, j + 1);
    const double lambda = l1.real();
    Eigen::Vector2d v(b, lambda - a);
    if (std::abs(lambda - d) + std::abs(c) > v.cwiseAbs().sum()) {
      v = Eigen::Vector2d(lambda - d, c);
    }
    if (v.norm() == 0.0) v = Eigen::Vector2d(1.0, 0.0);
    v.normalize();
    Eigen::Matrix2d q;
    q << v(0), -v(1), v(1), v(0);
    apply_window(t, w, j, q);
    t(j + 1, j) = 0.0;
    ++j;
  }
}

// Swaps the adjacent diagonal blocks of sizes p (at j) and q (at j+p).
inline void swap_adjacent(Matrix& t, Matrix& w, Index j, Index p, Index q) {
  const Index m = p + q;
  const Matrix t11 = t.block(j, j, p, p);
  const Matrix t22 = t.block(j + p, j + p, q, q);
  const Matrix t12 = t.block(j, j + p, p, q);
  const double window_norm = t.block(j, j, m, m).norm();

  // T11 X - X T22 = T12 in Kronecker form.
  Matrix kron = Matrix::Zero(p * q, p * q);
  for (Index c = 0; c < q; ++c) {
    kron.block(c * p, c * p, p, p) += t11;
    for (Index r = 0; r < q; ++r) {
      kron.block(r * p, c * p, p, p) -= t22(c, r) * identity(p);
    }
  }
  Eigen::FullPivLU<Matrix> lu(kron);
  if (!lu.isInvertible()) {
    throw NonConvergence("Schur reordering: blocks share an eigenvalue");
  }
  const Vector x_vec = lu.solve(Eigen::Map<const Vector>(t12.data(), p * q));
  const Matrix x = Eigen::Map<const Matrix>(x_vec.data(), p, q);

  Matrix basis(m, q);
  basis.topRows(p) = -x;
  basis.bottomRows(q) = identity(q);
  Eigen::HouseholderQR<Matrix> qr(basis);
  const Matrix qmat = qr.householderQ() * identity(m);

  apply_window(t, w, j, qmat);

  const double thresh = std::max(1e3 * std::numeric_limits<double>::epsilon() *
                                     window_norm,
                                 std::numeric_limits<double>::min());
  const double leak = t.block(j + q, j, p, q).norm();
  if (!(leak <= thresh)) {
    throw NonConvergence("Schur reordering swap rejected (residual " +
                         std::to_string(leak) + ")");
  }
  t.block(j + q, j, p, q).setZero();
}

}  // namespace detail

/// Orthogonal reduction of K to real Schur form with every stable eigenvalue
/// moved into the leading block by adjacent block swaps.
///
/// Throws ImaginaryAxisEigenvalue if some eigenvalue has |Re| <= axis_tol plus
/// its rounding radius (see eigenvalues_with_radius).
inline OrderedSchurForm real_schur_ordered(
    const Matrix& k, std::optional<double> axis_tol = std::nullopt) {
  require_square(k, "real_schur_ordered: input");
  require_finite(k, "real_schur_ordered: input");
  const double tol = axis_tol.value_or(default_axis_tol(k));
  const Index n = k.rows();

  OrderedSchurForm out;
  if (n == 0) {
    out.W = Matrix(0, 0);
    out.T = Matrix(0, 0);
    return out;
  }
  Eigen::RealSchur<Matrix> schur(k, /*computeU=*/true);
  if (schur.info() != Eigen::Success) {
    throw NonConvergence("real Schur iteration did not converge");
  }
  Matrix t = schur.matrixT();
  Matrix w = schur.matrixU();
  for (Index c = 0; c < n; ++c)
    for (Index r = c + 2; r < n; ++r) t(r, c) = 0.0;
  detail::split_real_pairs(t, w);

  // The axis decision uses the radius-aware spectrum; the 2x2 block formula
  // below can itself split a double eigenvalue by sqrt(eps).
  std::vector<Complex> offending = eigenvalues_with_radius(k, tol).on_axis();
  if (!offending.empty()) {
    throw ImaginaryAxisEigenvalue(std::move(offending), tol);
  }

  std::vector<Index> sizes;
  std::vector<bool> stable;
  for (Index j = 0; j < n;) {
    const Index size = (j + 1 < n && t(j + 1, j) != 0.0) ? 2 : 1;
    const auto [l1, l2] = detail::block_eigenvalues(t, j, size);
    if (std::abs(l1.real()) <= tol) {
      offending.push_back(l1);
      if (size == 2) offending.push_back(l2);
    }
    sizes.push_back(size);
    stable.push_back(l1.real() < 0.0);
    j += size;
  }
  if (!offending.empty()) {
    sort_eigenvalues(offending);
    throw ImaginaryAxisEigenvalue(std::move(offending), tol);
  }

  std::size_t insert = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (!stable[i]) continue;
    for (std::size_t b = i; b > insert; --b) {
      Index start = 0;
      for (std::size_t s = 0; s + 1 < b; ++s) start += sizes[s];
      detail::swap_adjacent(t, w, start, sizes[b - 1], sizes[b]);
      std::swap(sizes[b - 1], sizes[b]);
      std::swap(stable[b - 1], stable[b]);
    }
    out.k_stable += sizes[insert];
    ++insert;
  }

  out.W = std::move(w);
  out.T = std::move(t);
  return out;
}

}  // namespace mflq
