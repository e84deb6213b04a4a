#pragma once

// Decaying solutions of dz/dt = K z + psi0 e^{-rho t / 2} for a 2n x 2n K that
// is block-triangularized by a known transform U:
//
//   U^{-1} K U = [[F11, F12], [0, F22]],  F11 and -F22 stable, U11 invertible.
//
// With y = U^{-1} z the antistable component must be y2(t) = c e^{-rho t/2};
// any other choice of z2(0) grows like e^{F22 t}.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "mflq/matrix_core.hpp"
#include "mflq/riccati.hpp"

namespace mflq {

struct DichotomyDecomposition {
  Matrix U;
  Matrix V;  // U^{-1}
  Matrix F11;
  Matrix F12;
  Matrix F22;
  double U11_condition = 1.0;

  Index n() const { return F11.rows(); }
  Matrix U11() const { return U.topLeftCorner(n(), n()); }
  Matrix U12() const { return U.topRightCorner(n(), n()); }
  Matrix U21() const { return U.bottomLeftCorner(n(), n()); }
  Matrix U22() const { return U.bottomRightCorner(n(), n()); }

  Matrix block_triangular() const {
    const Index k = n();
    Matrix f = Matrix::Zero(2 * k, 2 * k);
    f.topLeftCorner(k, k) = F11;
    f.topRightCorner(k, k) = F12;
    f.bottomRightCorner(k, k) = F22;
    return f;
  }
};

struct DecompositionResiduals {
  double inverse = 0.0;      // ||V U - I||_F
  double similarity = 0.0;   // ||V K U - F||_F
  double f11_abscissa = 0.0;
  double minus_f22_abscissa = 0.0;
};

inline DecompositionResiduals decomposition_residuals(
    const DichotomyDecomposition& d, const Matrix& k) {
  DecompositionResiduals r;
  r.inverse = (d.V * d.U - identity(d.U.rows())).norm();
  r.similarity = (d.V * k * d.U - d.block_triangular()).norm();
  r.f11_abscissa = spectral_abscissa(d.F11);
  r.minus_f22_abscissa = spectral_abscissa(-d.F22);
  return r;
}

namespace detail {

inline void verify_decomposition(const DichotomyDecomposition& d,
                                 const Matrix& k) {
  const auto r = decomposition_residuals(d, k);
  const double dim = static_cast<double>(k.rows());
  if (!(r.f11_abscissa < 0.0) || !(r.minus_f22_abscissa < 0.0)) {
    throw StabilityCheckFailure(
        "decomposition blocks violate the stable/antistable split");
  }
  if (!(r.inverse <= 1e-8 * dim) || !(r.similarity <= 1e-7 * k.norm())) {
    throw NonConvergence("decomposition fails its similarity check");
  }
}

}  // namespace detail

/// Transform U = [[I, 0], [X, I]] built from the stabilizing solution X of
/// X A + A^T X - X M X - Q_gamma = 0 for the Hamiltonian
/// K = [[A, -M], [Q_gamma, -A^T]].
inline DichotomyDecomposition decompose_from_riccati(const Matrix& a,
                                                     const Matrix& m,
                                                     const Matrix& q_gamma,
                                                     const Matrix& x_plus) {
  const Index n = a.rows();
  DichotomyDecomposition d;
  d.U = identity(2 * n);
  d.U.bottomLeftCorner(n, n) = x_plus;
  d.V = identity(2 * n);
  d.V.bottomLeftCorner(n, n) = -x_plus;
  d.F11 = a - m * x_plus;
  d.F12 = -m;
  d.F22 = -d.F11.transpose();
  d.U11_condition = 1.0;

  Matrix k(2 * n, 2 * n);
  k << a, -m, q_gamma, -a.transpose();
  if (!(spectral_abscissa(d.F11) < 0.0)) {
    throw StabilityCheckFailure("A - M X_+ is not stable");
  }
  detail::verify_decomposition(d, k);
  return d;
}

/// Transform from the ordered real Schur vectors of K (U = W orthogonal).
inline DichotomyDecomposition decompose_from_schur(
    const Matrix& k, std::optional<double> axis_tol = std::nullopt) {
  require_square(k, "decompose_from_schur: K");
  if (k.rows() % 2 != 0) {
    throw InvalidArgument("decompose_from_schur: K must be 2n x 2n");
  }
  const Index n = k.rows() / 2;
  const auto schur = real_schur_ordered(k, axis_tol);
  if (schur.k_stable != n) throw DichotomySplitFailure(schur.k_stable, n);

  DichotomyDecomposition d;
  d.U = schur.W;
  d.V = schur.W.transpose();
  d.F11 = schur.T.topLeftCorner(n, n);
  d.F12 = schur.T.topRightCorner(n, n);
  d.F22 = schur.T.bottomRightCorner(n, n);
  d.U11_condition = condition_estimate(d.U11());
  if (!(d.U11_condition <= kGraphConditionLimit)) {
    throw GraphSubspaceFailure(d.U11_condition);
  }
  detail::verify_decomposition(d, k);
  return d;
}

struct BvpSolution {
  Vector z1_0;
  Vector z2_0;
  Vector y1_0;
  Vector y2_offset;     // c, with y2(t) = c e^{-rho t/2}
  Matrix y1_generator;  // [[F11, f], [0, -rho/2]]
  double decay_rate = 0.0;  // rho / 2
};

/// The unique z2(0) for which the solution stays in the decaying class.
/// The forcing integral -int_0^inf e^{-F22 tau} phi2 e^{-rho tau/2} dtau is
/// evaluated in closed form as -(F22 + rho/2 I)^{-1} phi2.
inline BvpSolution solve_decaying(const DichotomyDecomposition& d,
                                  const Vector& z1_0, const Vector& psi0,
                                  double rho) {
  const Index n = d.n();
  if (!(rho > 0.0)) throw InvalidArgument("solve_decaying: rho must be > 0");
  if (z1_0.size() != n || psi0.size() != 2 * n) {
    throw InvalidArgument("solve_decaying: dimension mismatch");
  }
  const double half = 0.5 * rho;
  const Vector phi = d.V * psi0;

  BvpSolution s;
  s.decay_rate = half;
  s.z1_0 = z1_0;
  s.y2_offset = -solve_linear(Matrix(d.F22 + half * identity(n)),
                              Vector(phi.tail(n)));
  s.y1_0 = solve_linear(d.U11(), Vector(z1_0 - d.U12() * s.y2_offset));
  s.z2_0 = d.U21() * s.y1_0 + d.U22() * s.y2_offset;

  s.y1_generator = Matrix::Zero(n + 1, n + 1);
  s.y1_generator.topLeftCorner(n, n) = d.F11;
  s.y1_generator.topRightCorner(n, 1) = d.F12 * s.y2_offset + phi.head(n);
  s.y1_generator(n, n) = -half;
  return s;
}

struct TrajectorySample {
  double t = 0.0;
  Vector z;  // (z1, z2)
};

namespace detail {

inline bool is_uniform(std::span<const double> grid) {
  if (grid.size() < 3) return false;
  const double h = grid[1] - grid[0];
  if (!(h > 0.0)) return false;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double expected = grid[0] + static_cast<double>(i) * h;
    if (std::abs(grid[i] - expected) > 1e-12 * (1.0 + std::abs(expected))) {
      return false;
    }
  }
  return true;
}

// Samples the augmented state e^{G t}(y1_0, 1) on the grid.
inline std::vector<Vector> propagate(const Matrix& generator,
                                     const Vector& start,
                                     std::span<const double> grid) {
  std::vector<Vector> out;
  out.reserve(grid.size());
  if (is_uniform(grid)) {
    const double h = grid[1] - grid[0];
    const Matrix step = mat_exp(generator * h);
    Vector state = mat_exp(generator * grid[0]) * start;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (i > 0) state = step * state;
      out.push_back(state);
    }
    return out;
  }
  for (double t : grid) out.push_back(mat_exp(generator * t) * start);
  return out;
}

inline void check_grid(std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw InvalidArgument("time grid must be nonnegative and increasing");
    }
  }
}

}  // namespace detail

/// z(t) = U (y1(t), c e^{-rho t/2}) sampled on an increasing grid.
inline std::vector<TrajectorySample> evaluate_trajectory(
    const BvpSolution& sol, const DichotomyDecomposition& d,
    std::span<const double> t_grid) {
  detail::check_grid(t_grid);
  const Index n = d.n();
  Vector start(n + 1);
  start << sol.y1_0, 1.0;
  const auto aug = detail::propagate(sol.y1_generator, start, t_grid);

  std::vector<TrajectorySample> out;
  out.reserve(t_grid.size());
  Vector y(2 * n);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    TrajectorySample sample{t_grid[i], Vector(2 * n)};
    if (t_grid[i] == 0.0) {
      sample.z << sol.z1_0, sol.z2_0;
    } else {
      y << aug[i].head(n), sol.y2_offset * aug[i](n);
      sample.z = d.U * y;
    }
    out.push_back(std::move(sample));
  }
  return out;
}

/// e^{rho t/2} z(t), i.e. the undiscounted variables (xbar, s). Evaluated with
/// the shifted generator so no exponentially large factor is formed.
inline std::vector<TrajectorySample> evaluate_unscaled(
    const BvpSolution& sol, const DichotomyDecomposition& d,
    std::span<const double> t_grid) {
  detail::check_grid(t_grid);
  const Index n = d.n();
  Matrix shifted = sol.y1_generator;
  shifted.diagonal().array() += sol.decay_rate;
  Vector start(n + 1);
  start << sol.y1_0, 1.0;
  const auto aug = detail::propagate(shifted, start, t_grid);

  std::vector<TrajectorySample> out;
  out.reserve(t_grid.size());
  Vector y(2 * n);
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    TrajectorySample sample{t_grid[i], Vector(2 * n)};
    if (t_grid[i] == 0.0) {
      sample.z << sol.z1_0, sol.z2_0;
    } else {
      y << aug[i].head(n), sol.y2_offset;
      sample.z = d.U * y;
    }
    out.push_back(std::move(sample));
  }
  return out;
}

/// Mean-field path (xbar(t), s(t)) carried by a decaying BVP solution.
/// Shared by the social and game pipelines and consumed by the simulator.
struct MeanFieldPath {
  DichotomyDecomposition decomposition;
  BvpSolution bvp;

  Index n() const { return decomposition.n(); }

  std::vector<TrajectorySample> sample(std::span<const double> grid) const {
    return evaluate_unscaled(bvp, decomposition, grid);
  }

  Vector at(double t) const {
    const double grid[] = {t};
    return sample(grid).front().z;
  }
};

inline std::vector<double> uniform_grid(double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end >= 0.0)) {
    throw InvalidArgument("uniform_grid: need dt > 0 and t_end >= 0");
  }
  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  std::vector<double> grid(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) grid[i] = static_cast<double>(i) * dt;
  return grid;
}

}  // namespace mflq
