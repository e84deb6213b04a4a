#pragma once

// LQ mean-field game: the coefficient matrix
//   M_mfg = [[Acal, -B R^{-1} B^T], [Q Gamma, -Acal^T]]
// is not Hamiltonian, so the dichotomy transform comes from its ordered real
// Schur vectors instead of a Riccati solution.

#include <span>

#include "mflq/bvp_dichotomy.hpp"
#include "mflq/problem.hpp"
#include "mflq/riccati.hpp"
#include "mflq/social_opt.hpp"

namespace mflq {

inline Matrix build_mfg_matrix(const ProblemData& p, const Matrix& pi) {
  const Index n = p.n();
  const Matrix acal = discounted_generator(p, pi);
  Matrix k(2 * n, 2 * n);
  k << acal, -p.control_weight(), p.Q * p.Gamma, -acal.transpose();
  return k;
}

struct MfgSolution {
  Matrix Pi;
  Matrix M_mfg;
  Vector s0;
  Vector s0_closed_form;  // U21 U11^-1 x0 + (U21 U11^-1 U12 - U22) (M22 + rho/2)^-1 V22 Q eta
  double det_U11 = 0.0;
  MeanFieldPath path;

  const DichotomyDecomposition& decomposition() const {
    return path.decomposition;
  }

  std::vector<MeanFieldSample> trajectory(std::span<const double> grid) const {
    return split_samples(path.sample(grid), Pi.rows());
  }
};

/// Closed form of s0 built directly from the blocks of U and V.
inline Vector mfg_initial_costate(const DichotomyDecomposition& d,
                                  const Vector& x0, const Vector& q_eta,
                                  double rho) {
  const Index n = d.n();
  const Matrix v22 = d.V.bottomRightCorner(n, n);
  const Vector integral = solve_linear(Matrix(d.F22 + 0.5 * rho * identity(n)),
                                       Vector(v22 * q_eta));
  const Matrix u21_u11inv =
      solve_linear(Matrix(d.U11().transpose()), Matrix(d.U21().transpose()))
          .transpose();
  return u21_u11inv * x0 + (u21_u11inv * d.U12() - d.U22()) * integral;
}

inline MfgSolution solve_mfg(const ProblemData& p,
                             std::optional<double> axis_tol = std::nullopt) {
  p.check_shapes();
  if (!(p.rho > 0.0)) throw InvalidArgument("rho must be positive");
  const Index n = p.n();

  MfgSolution sol;
  sol.Pi = solve_discounted_are(p.A, p.B, p.Q, p.R, p.rho, axis_tol).X;
  sol.M_mfg = build_mfg_matrix(p, sol.Pi);
  sol.path.decomposition = decompose_from_schur(sol.M_mfg, axis_tol);
  sol.det_U11 = sol.path.decomposition.U11().determinant();

  const Vector q_eta = p.Q * p.eta;
  Vector psi0 = Vector::Zero(2 * n);
  psi0.tail(n) = q_eta;
  sol.path.bvp = solve_decaying(sol.path.decomposition, p.x0, psi0, p.rho);
  sol.s0 = sol.path.bvp.z2_0;

  sol.s0_closed_form =
      mfg_initial_costate(sol.path.decomposition, p.x0, q_eta, p.rho);
  const double scale = 1.0 + sol.s0.norm();
  if (!((sol.s0 - sol.s0_closed_form).norm() <= 1e-8 * scale *
                                                    sol.path.decomposition
                                                        .U11_condition)) {
    throw NonConvergence("closed-form s0 disagrees with the dichotomy solve");
  }
  return sol;
}

/// Max finite-difference residual of
///   xbar' = (A - M Pi) xbar - M s,
///   s'    = Q Gamma xbar + (rho I - A^T + Pi M) s + Q eta.
inline double mfg_residual(const MfgSolution& sol, const ProblemData& p,
                           std::span<const double> t_grid) {
  const Index n = p.n();
  const Matrix m = p.control_weight();
  Matrix g(2 * n, 2 * n);
  g << p.A - m * sol.Pi, -m, p.Q * p.Gamma,
      p.rho * identity(n) - p.A.transpose() + sol.Pi * m;
  Vector f = Vector::Zero(2 * n);
  f.tail(n) = p.Q * p.eta;
  return detail::central_difference_residual(sol.path.sample(t_grid), g, f);
}

/// Decentralized strategy for the game: same feedback form as the social
/// case with the game's offset path.
inline StrategySpec decentralized_strategy(const MfgSolution& sol,
                                           const ProblemData& p) {
  const Matrix gain = p.input_gain();
  return {-gain * sol.Pi, -gain, sol.path};
}

}  // namespace mflq
