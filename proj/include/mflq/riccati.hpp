#pragma once

// Stabilizing solutions of XA + A^T X - XMX + Q = 0 via stable Schur
// vectors of the Hamiltonian [[A, -M], [-Q, -A^T]]. Q may be indefinite.

#include <optional>
#include <string>

#include <Eigen/SVD>

#include "mflq/matrix_core.hpp"

namespace mflq {

/// Threshold on cond(W11) beyond which the stable subspace is not treated as
/// a graph subspace.
inline constexpr double kGraphConditionLimit = 1e12;

struct CareProblem {
  Matrix A;  // A_o
  Matrix M;  // symmetric PSD
  Matrix Q;  // symmetric, sign-indefinite allowed

  Index n() const { return A.rows(); }

  void check() const {
    require_square(A, "CareProblem: A");
    require_finite(A, "CareProblem: A");
    require_finite(M, "CareProblem: M");
    require_finite(Q, "CareProblem: Q");
    const Index dim = A.rows();
    if (M.rows() != dim || M.cols() != dim || Q.rows() != dim ||
        Q.cols() != dim) {
      throw InvalidArgument("CareProblem: M and Q must match A's dimension");
    }
    if ((M - M.transpose()).norm() > 1e-10 * M.norm()) {
      throw InvalidArgument("CareProblem: M is not symmetric");
    }
    if ((Q - Q.transpose()).norm() > 1e-10 * Q.norm()) {
      throw InvalidArgument("CareProblem: Q is not symmetric");
    }
    if (dim > 0 && M.norm() > 0.0) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()),
                                               Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-10 * M.norm()) {
        throw InvalidArgument("CareProblem: M is not positive semidefinite");
      }
    }
  }
};

struct StabilizingRiccatiSolution {
  Matrix X;
  Matrix closed_loop;       // A_o - M X
  double residual = 0.0;    // ||XA + A^T X - XMX + Q||_F
  double spectrum_margin = 0.0;  // -spectral_abscissa(closed_loop)
  double w11_condition = 1.0;
};

/// Outcome of the Hautus test rank [lambda I - A, B] = n over the eigenvalues
/// of A with Re lambda >= 0.
struct StabilizabilityReport {
  bool stabilizable = true;
  // Smallest relative singular value seen across the tested eigenvalues
  // (1 when no eigenvalue needed testing). Near-zero means borderline.
  double margin = 1.0;
  std::vector<Complex> uncontrollable_modes;
};

inline StabilizabilityReport pbh_stabilizability(const Matrix& a,
                                                 const Matrix& b,
                                                 double rank_tol = 1e-8) {
  require_square(a, "pbh_stabilizability: A");
  if (b.rows() != a.rows()) {
    throw InvalidArgument("pbh_stabilizability: B row count must match A");
  }
  StabilizabilityReport report;
  const Index n = a.rows();
  if (n == 0) return report;
  const double real_tol = 1e-10 * (1.0 + a.norm());
  for (const Complex lambda : eigenvalues(a).eigenvalues) {
    if (lambda.real() < -real_tol) continue;
    Eigen::MatrixXcd pencil(n, n + b.cols());
    pencil.leftCols(n) =
        lambda * Eigen::MatrixXcd::Identity(n, n) - a.cast<Complex>();
    pencil.rightCols(b.cols()) = b.cast<Complex>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
    const auto& sv = svd.singularValues();
    const double scale = std::max(1.0, sv(0));
    const double rel = sv(n - 1) / scale;
    report.margin = std::min(report.margin, rel);
    if (sv(n - 1) <= rank_tol * scale) {
      report.stabilizable = false;
      report.uncontrollable_modes.push_back(lambda);
    }
  }
  return report;
}

inline Matrix hamiltonian_matrix(const CareProblem& p) {
  const Index n = p.n();
  Matrix h(2 * n, 2 * n);
  h << p.A, -p.M, -p.Q, -p.A.transpose();
  return h;
}

inline double care_residual(const Matrix& x, const CareProblem& p) {
  return (x * p.A + p.A.transpose() * x - x * p.M * x + p.Q).norm();
}

/// Stabilizing (maximal) solution from the leading n ordered Schur vectors:
/// X = W21 W11^{-1}, symmetrized.
inline StabilizingRiccatiSolution solve_care_stabilizing(
    const CareProblem& p, std::optional<double> axis_tol = std::nullopt) {
  p.check();
  const Index n = p.n();

  const auto pbh = pbh_stabilizability(p.A, p.M);
  if (!pbh.stabilizable) {
    throw StabilizabilityFailure("(A, M) fails the Hautus test");
  }

  const Matrix h = hamiltonian_matrix(p);
  const auto schur = real_schur_ordered(h, axis_tol);
  if (schur.k_stable != n) {
    throw DichotomySplitFailure(schur.k_stable, n);
  }
  const Matrix w11 = schur.W.topLeftCorner(n, n);
  const Matrix w21 = schur.W.bottomLeftCorner(n, n);
  const double cond = condition_estimate(w11);
  if (!(cond <= kGraphConditionLimit)) throw GraphSubspaceFailure(cond);

  StabilizingRiccatiSolution sol;
  sol.w11_condition = cond;
  const Matrix x = solve_linear(Matrix(w11.transpose()),
                                Matrix(w21.transpose()))
                       .transpose();
  sol.X = 0.5 * (x + x.transpose());
  sol.closed_loop = p.A - p.M * sol.X;
  sol.spectrum_margin = -spectral_abscissa(sol.closed_loop);
  if (!(sol.spectrum_margin > 0.0)) {
    throw StabilityCheckFailure("closed loop A - MX is not stable");
  }
  sol.residual = care_residual(sol.X, p);
  return sol;
}

/// B R^{-1} B^T through a Cholesky factorization of R.
inline Matrix control_weight(const Matrix& b, const Matrix& r) {
  require_square(r, "R");
  if (r.rows() != b.cols()) {
    throw InvalidArgument("R dimension must match the column count of B");
  }
  if (r.rows() == 0) return Matrix::Zero(b.rows(), b.rows());
  Eigen::LLT<Matrix> llt(r);
  if (llt.info() != Eigen::Success) {
    throw NonPositiveR("R is not positive definite");
  }
  const Matrix m = b * llt.solve(Matrix(b.transpose()));
  return 0.5 * (m + m.transpose());
}

inline bool is_positive_definite(const Matrix& r) {
  if (r.rows() != r.cols()) return false;
  if (r.rows() == 0) return true;
  if ((r - r.transpose()).norm() > 1e-10 * r.norm()) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (r + r.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > 1e-10 * r.norm();
}

/// Pi with rho Pi = Pi A + A^T Pi - Pi B R^{-1} B^T Pi + Q and
/// A - B R^{-1} B^T Pi - (rho/2) I stable, solved as the stabilizing CARE on
/// the shifted data (A - rho/2 I, B R^{-1} B^T, Q).
inline StabilizingRiccatiSolution solve_discounted_are(
    const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
    double rho, std::optional<double> axis_tol = std::nullopt) {
  require_square(a, "A");
  if (!is_positive_definite(r)) {
    throw NonPositiveR("R must be symmetric positive definite");
  }
  CareProblem p{a - 0.5 * rho * identity(a.rows()), control_weight(b, r), q};
  return solve_care_stabilizing(p, axis_tol);
}

}  // namespace mflq
