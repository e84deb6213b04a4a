#pragma once

// Oracles and instance generators shared by the unit and acceptance suites.
// Nothing here calls into the solver paths it is used to check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "mflq/mflq.hpp"

namespace mflq::testing {

// ---------------------------------------------------------------------------
// Worked examples

inline ProblemData example_41() {
  ProblemData p;
  p.A = Matrix::Constant(1, 1, 2.0);
  p.B = Matrix::Constant(1, 1, 1.0);
  p.D = Matrix::Constant(1, 1, 0.2);
  p.Q = Matrix::Constant(1, 1, 2.0);
  p.R = Matrix::Constant(1, 1, 1.0);
  p.Gamma = Matrix::Constant(1, 1, 1.0);
  p.eta = Vector::Constant(1, 1.0);
  p.rho = 1.0;
  p.x0 = Vector::Constant(1, 1.0);
  return p;
}

inline ProblemData example_42(double gamma = 2.0) {
  ProblemData p;
  p.A.resize(2, 2);
  p.A << 1, -1, 0, 2;
  p.B = Matrix::Ones(2, 1);
  p.D = Matrix::Constant(2, 1, 0.2);
  p.Q.resize(2, 2);
  p.Q << 1, 0, 0, -0.5;
  p.R = Matrix::Identity(1, 1);
  p.Gamma.resize(2, 2);
  p.Gamma << 1, 0, 0.5, 1;
  p.Gamma *= gamma;
  p.eta = Vector(2);
  p.eta << 1, 0;
  p.rho = 1.0;
  p.x0 = Vector::Ones(2);
  return p;
}

inline ProblemData example_43() {
  ProblemData p;
  p.A.resize(2, 2);
  p.A << 5, -5, 0, 10;
  p.B = Matrix::Ones(2, 1);
  p.D = Matrix::Constant(2, 1, 0.2);
  p.Q = Matrix::Identity(2, 2);
  p.R = Matrix::Identity(1, 1);
  p.Gamma.resize(2, 2);
  p.Gamma << 5, 0, 2.5, 5;
  p.eta = Vector(2);
  p.eta << 1, 0;
  p.rho = 2.0;
  p.x0 = Vector::Ones(2);
  return p;
}

/// Scalar model with a = rho/2 and gamma = 1: H has a double zero eigenvalue.
inline ProblemData degenerate_scalar(double b = 1.0, double q = 1.0,
                                     double r = 1.0, double rho = 1.0) {
  ProblemData p;
  p.A = Matrix::Constant(1, 1, rho / 2);
  p.B = Matrix::Constant(1, 1, b);
  p.Q = Matrix::Constant(1, 1, q);
  p.R = Matrix::Constant(1, 1, r);
  p.Gamma = Matrix::Constant(1, 1, 1.0);
  p.eta = Vector::Zero(1);
  p.rho = rho;
  p.x0 = Vector::Constant(1, 1.0);
  return p;
}

// ---------------------------------------------------------------------------
// Random instances

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Matrix random_matrix(Rng& rng, Index rows, Index cols,
                            double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

inline Matrix random_symmetric(Rng& rng, Index n, double scale = 1.0) {
  const Matrix a = random_matrix(rng, n, n, scale);
  return 0.5 * (a + a.transpose());
}

inline Matrix random_psd(Rng& rng, Index n, Index rank, double scale = 1.0) {
  const Matrix b = random_matrix(rng, n, rank, scale);
  return b * b.transpose();
}

inline Matrix random_orthogonal(Rng& rng, Index n) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, n, n));
  return qr.householderQ() * Matrix::Identity(n, n);
}

/// Random problem; Q may be indefinite. Not guaranteed solvable.
inline ProblemData random_problem(Rng& rng, Index n, bool indefinite_q = true) {
  ProblemData p;
  const Index n1 = uniform_int(rng, 1, static_cast<int>(n));
  p.A = random_matrix(rng, n, n, 0.7);
  p.B = random_matrix(rng, n, n1);
  p.D = random_matrix(rng, n, 1, 0.2);
  p.Q = indefinite_q ? random_symmetric(rng, n)
                     : Matrix(random_psd(rng, n, n, 0.7));
  p.R = Matrix::Identity(n1, n1) + random_psd(rng, n1, n1, 0.5);
  p.Gamma = random_matrix(rng, n, n, 0.5);
  p.eta = random_matrix(rng, n, 1).col(0);
  p.rho = uniform(rng, 0.5, 2.0);
  p.x0 = random_matrix(rng, n, 1).col(0);
  return p;
}

inline double axis_distance(const Matrix& k) {
  double d = std::numeric_limits<double>::infinity();
  for (auto z : eigenvalues(k).eigenvalues) d = std::min(d, std::abs(z.real()));
  return d;
}

inline double max_real(const Matrix& k) {
  double d = -std::numeric_limits<double>::infinity();
  for (auto z : eigenvalues(k).eigenvalues) d = std::max(d, z.real());
  return d;
}

// ---------------------------------------------------------------------------
// Oracles

/// Determinant by cofactor expansion (n <= 4).
inline double cofactor_det(const Matrix& a) {
  const Index n = a.rows();
  if (n == 1) return a(0, 0);
  if (n == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  double det = 0.0;
  for (Index c = 0; c < n; ++c) {
    Matrix minor(n - 1, n - 1);
    for (Index r = 1; r < n; ++r) {
      Index cc = 0;
      for (Index k = 0; k < n; ++k) {
        if (k == c) continue;
        minor(r - 1, cc++) = a(r, k);
      }
    }
    det += ((c % 2 == 0) ? 1.0 : -1.0) * a(0, c) * cofactor_det(minor);
  }
  return det;
}

/// Cramer's rule solve of A x = b for n <= 3.
inline Vector cramer_solve(const Matrix& a, const Vector& b) {
  const double det = cofactor_det(a);
  Vector x(a.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    Matrix ai = a;
    ai.col(i) = b;
    x(i) = cofactor_det(ai) / det;
  }
  return x;
}

/// Truncated Taylor series for e^A (small ||A|| only).
inline Matrix taylor_exp(const Matrix& a, int terms = 40) {
  Matrix sum = Matrix::Identity(a.rows(), a.cols());
  Matrix term = sum;
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

using VectorField = std::function<Vector(double, const Vector&)>;

/// Classical fixed-step RK4; returns states at multiples of `record_every`
/// steps (including t0).
inline std::vector<Vector> rk4(const VectorField& f, Vector y, double t0,
                               double t1, std::size_t steps,
                               std::size_t record_every = 1) {
  const double h = (t1 - t0) / static_cast<double>(steps);
  std::vector<Vector> out{y};
  double t = t0;
  for (std::size_t i = 1; i <= steps; ++i) {
    const Vector k1 = f(t, y);
    const Vector k2 = f(t + h / 2, y + h / 2 * k1);
    const Vector k3 = f(t + h / 2, y + h / 2 * k2);
    const Vector k4 = f(t + h, y + h * k3);
    y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t = t0 + static_cast<double>(i) * h;
    if (i % record_every == 0) out.push_back(y);
  }
  return out;
}

/// Adaptive Simpson quadrature of a vector-valued integrand on [a, b].
inline Vector adaptive_simpson(const std::function<Vector(double)>& f,
                               double a, double b, double tol,
                               int max_depth = 40) {
  std::function<Vector(double, double, const Vector&, const Vector&,
                       const Vector&, const Vector&, double, int)>
      recurse = [&](double lo, double hi, const Vector& flo, const Vector& fmid,
                    const Vector& fhi, const Vector& whole, double eps,
                    int depth) -> Vector {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const Vector flm = f(lm), frm = f(rm);
    const Vector left = (mid - lo) / 6 * (flo + 4 * flm + fmid);
    const Vector right = (hi - mid) / 6 * (fmid + 4 * frm + fhi);
    const Vector delta = left + right - whole;
    if (depth <= 0 || delta.lpNorm<Eigen::Infinity>() <= 15 * eps) {
      return left + right + delta / 15;
    }
    return recurse(lo, mid, flo, flm, fmid, left, eps / 2, depth - 1) +
           recurse(mid, hi, fmid, frm, fhi, right, eps / 2, depth - 1);
  };
  // Split into panels first so narrow features are not skipped.
  const int panels = 64;
  Vector total;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + (b - a) * i / panels;
    const double hi = a + (b - a) * (i + 1) / panels;
    const Vector flo = f(lo), fhi = f(hi), fmid = f(0.5 * (lo + hi));
    const Vector whole = (hi - lo) / 6 * (flo + 4 * fmid + fhi);
    const Vector part =
        recurse(lo, hi, flo, fmid, fhi, whole, tol / panels, max_depth);
    total = (i == 0) ? part : Vector(total + part);
  }
  return total;
}

/// Greedy multiset matching: max over a of min distance to an unused b.
inline double spectrum_distance(std::vector<Complex> a,
                                std::vector<Complex> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  std::vector<bool> used(b.size(), false);
  for (const auto& z : a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(z - b[j]);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    used[best_j] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

inline Matrix symplectic_j(Index n) {
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = Matrix::Identity(n, n);
  j.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
  return j;
}

/// Random Hamiltonian [[A, -M], [-Q, -A^T]] with M PSD and Q symmetric.
inline Matrix random_hamiltonian(Rng& rng, Index n) {
  CareProblem p{random_matrix(rng, n, n),
                random_psd(rng, n, uniform_int(rng, 1, static_cast<int>(n))),
                random_symmetric(rng, n)};
  return hamiltonian_matrix(p);
}

/// Random stabilizable CARE whose Hamiltonian keeps at least `margin` from
/// the imaginary axis. Q is indefinite.
inline CareProblem random_care(Rng& rng, Index n, double margin = 1e-2) {
  while (true) {
    CareProblem p{random_matrix(rng, n, n),
                  random_psd(rng, n, uniform_int(rng, 1, static_cast<int>(n))),
                  random_symmetric(rng, n)};
    if (!pbh_stabilizability(p.A, p.M).stabilizable) continue;
    if (axis_distance(hamiltonian_matrix(p)) < margin) continue;
    return p;
  }
}

/// Random social problem for which solve_sce succeeds with both Hamiltonians
/// at least `margin` from the axis and antistable rates at most max_growth.
struct SolvedInstance {
  ProblemData problem;
  SceSolution solution;
};

inline SolvedInstance random_solved_social(Rng& rng, Index n,
                                           double margin = 5e-2,
                                           double max_growth = 1e9) {
  while (true) {
    ProblemData p = random_problem(rng, n);
    if (!validate(p).ok()) continue;
    if (axis_distance(discounted_hamiltonian(p)) < margin) continue;
    try {
      auto sol = solve_sce(p);
      if (axis_distance(sol.H) < margin) continue;
      if (max_real(sol.H) > max_growth) continue;
      return {std::move(p), std::move(sol)};
    } catch (const Error&) {
      continue;
    }
  }
}

}  // namespace mflq::testing
