#pragma once

// Social certainty-equivalence pipeline:
//   Pi (discounted ARE) -> H -> X_+ (auxiliary CARE with weight -Q_gamma)
//   -> U = [[I, 0], [X_+, I]] -> s0 and the decaying trajectory.

#include <span>
#include <vector>

#include "mflq/bvp_dichotomy.hpp"
#include "mflq/problem.hpp"
#include "mflq/riccati.hpp"

namespace mflq {

/// H = [[Acal, -B R^{-1} B^T], [Q_gamma, -Acal^T]].
inline Matrix build_hamiltonian(const ProblemData& p, const Matrix& pi,
                                const GammaWeights& w) {
  const Index n = p.n();
  const Matrix acal = discounted_generator(p, pi);
  Matrix h(2 * n, 2 * n);
  h << acal, -p.control_weight(), w.Q_gamma, -acal.transpose();
  return h;
}

struct MeanFieldSample {
  double t = 0.0;
  Vector xbar;
  Vector s;
};

inline std::vector<MeanFieldSample> split_samples(
    const std::vector<TrajectorySample>& z, Index n) {
  std::vector<MeanFieldSample> out;
  out.reserve(z.size());
  for (const auto& sample : z) {
    out.push_back({sample.t, sample.z.head(n), sample.z.tail(n)});
  }
  return out;
}

struct SceSolution {
  Matrix Pi;
  Matrix H;
  Matrix Xplus;
  Matrix A_C;   // Acal - B R^{-1} B^T X_+
  Vector c;     // s(t) = X_+ xbar(t) + c
  Vector s0;
  Matrix A_cl;  // A_C + rho/2 I, generator of xbar
  GammaWeights weights;
  double pi_residual = 0.0;
  double xplus_residual = 0.0;
  MeanFieldPath path;

  std::vector<MeanFieldSample> trajectory(std::span<const double> grid) const {
    return split_samples(path.sample(grid), Pi.rows());
  }
};

/// Full pipeline. Throws ImaginaryAxisEigenvalue when H has eigenvalues on
/// the imaginary axis; upstream solver errors propagate unchanged.
inline SceSolution solve_sce(const ProblemData& p,
                             std::optional<double> axis_tol = std::nullopt) {
  p.check_shapes();
  if (!(p.rho > 0.0)) throw InvalidArgument("rho must be positive");
  const Index n = p.n();

  SceSolution sol;
  const auto pi = solve_discounted_are(p.A, p.B, p.Q, p.R, p.rho, axis_tol);
  sol.Pi = pi.X;
  sol.pi_residual = pi.residual;
  sol.weights = gamma_weights(p.Q, p.Gamma, p.eta);
  sol.H = build_hamiltonian(p, sol.Pi, sol.weights);

  const Matrix acal = discounted_generator(p, sol.Pi);
  const Matrix m = p.control_weight();
  // Eq. (15) in the X A + A^T X - X M X + Q_o = 0 convention: Q_o = -Q_gamma.
  const CareProblem aux{acal, m, -sol.weights.Q_gamma};
  const auto xp = solve_care_stabilizing(aux, axis_tol);
  sol.Xplus = xp.X;
  sol.xplus_residual = xp.residual;

  sol.path.decomposition =
      decompose_from_riccati(acal, m, sol.weights.Q_gamma, sol.Xplus);
  sol.A_C = sol.path.decomposition.F11;
  sol.A_cl = sol.A_C + 0.5 * p.rho * identity(n);

  Vector psi0 = Vector::Zero(2 * n);
  psi0.tail(n) = sol.weights.eta_gamma;
  sol.path.bvp = solve_decaying(sol.path.decomposition, p.x0, psi0, p.rho);
  sol.c = sol.path.bvp.y2_offset;
  sol.s0 = sol.path.bvp.z2_0;
  return sol;
}

/// u_i = K_x x_i + L s(t), with K_x = -R^{-1} B^T Pi and L = -R^{-1} B^T.
struct StrategySpec {
  Matrix K_x;
  Matrix L;
  MeanFieldPath path;

  Vector control(double t, const Vector& x) const {
    return K_x * x + L * path.at(t).tail(path.n());
  }
};

inline StrategySpec decentralized_strategy(const SceSolution& sol,
                                           const ProblemData& p) {
  const Matrix gain = p.input_gain();
  return {-gain * sol.Pi, -gain, sol.path};
}

namespace detail {

// Max over interior points of the central-difference residual of
//   d/dt (xbar, s) = G (xbar, s) + f.
inline double central_difference_residual(
    const std::vector<TrajectorySample>& z, const Matrix& g, const Vector& f) {
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < z.size(); ++i) {
    const double h = z[i + 1].t - z[i - 1].t;
    const Vector deriv = (z[i + 1].z - z[i - 1].z) / h;
    worst = std::max(worst, (deriv - g * z[i].z - f).norm());
  }
  return worst;
}

}  // namespace detail

/// Max finite-difference residual of
///   xbar' = (A - M Pi) xbar - M s,
///   s'    = Q_gamma xbar + (rho I - A^T + Pi M) s + eta_gamma
/// along the computed trajectory.
inline double sce_residual(const SceSolution& sol, const ProblemData& p,
                           std::span<const double> t_grid) {
  const Index n = p.n();
  const Matrix m = p.control_weight();
  Matrix g(2 * n, 2 * n);
  g << p.A - m * sol.Pi, -m, sol.weights.Q_gamma,
      p.rho * identity(n) - p.A.transpose() + sol.Pi * m;
  Vector f = Vector::Zero(2 * n);
  f.tail(n) = sol.weights.eta_gamma;
  return detail::central_difference_residual(sol.path.sample(t_grid), g, f);
}

}  // namespace mflq
