#include <gtest/gtest.h>

#include "test_support.hpp"

namespace mflq {
namespace {

using testing::Rng;

TEST(Care, ScalarClosedForm) {
  // x a + a x - x^2 m + q = 0, stabilizing root (a + sqrt(a^2 + m q)) / m.
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = testing::uniform(rng, -3, 3);
    const double m = testing::uniform(rng, 0.1, 3);
    const double q = testing::uniform(rng, -0.5, 3);
    if (a * a + m * q < 1e-2) continue;
    const CareProblem p{Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, m),
                        Matrix::Constant(1, 1, q)};
    const auto sol = solve_care_stabilizing(p);
    const double expected = (a + std::sqrt(a * a + m * q)) / m;
    EXPECT_NEAR(sol.X(0, 0), expected, 1e-10 * (1 + std::abs(expected)));
    EXPECT_NEAR(sol.closed_loop(0, 0), -std::sqrt(a * a + m * q), 1e-10);
  }
}

TEST(Care, RandomInstancesResidualAndStability) {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = testing::uniform_int(rng, 1, 6);
    const auto p = testing::random_care(rng, n);
    const auto sol = solve_care_stabilizing(p);
    const double scale = 1.0 + sol.X.squaredNorm();
    EXPECT_LE(care_residual(sol.X, p), 1e-7 * scale);
    EXPECT_LE((sol.X - sol.X.transpose()).norm(), 1e-12 * (1 + sol.X.norm()));
    EXPECT_TRUE(is_stable(p.A - p.M * sol.X));
    EXPECT_GT(sol.spectrum_margin, 0.0);
  }
}

TEST(Care, AgreesWithKleinmanIterationOnPositiveDefiniteQ) {
  // Independent route: Newton-Kleinman with Lyapunov solves via Kronecker.
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = testing::uniform_int(rng, 1, 4);
    Matrix a = testing::random_matrix(rng, n, n);
    a -= (testing::max_real(a) + 1.0) * identity(n);  // stable start K = 0
    const Matrix m = testing::random_psd(rng, n, n) + 0.1 * identity(n);
    const Matrix q = testing::random_psd(rng, n, n) + 0.1 * identity(n);
    Matrix x = Matrix::Zero(n, n);
    for (int it = 0; it < 60; ++it) {
      const Matrix acl = a - m * x;
      // acl^T X + X acl = -(q + x m x)
      const Matrix rhs = -(q + x * m * x);
      Matrix kron = Matrix::Zero(n * n, n * n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
          for (Index k = 0; k < n; ++k) {
            kron(i + j * n, k + j * n) += acl(k, i);
            kron(i + j * n, i + k * n) += acl(k, j);
          }
      const Vector v = kron.fullPivLu().solve(
          Eigen::Map<const Vector>(rhs.data(), n * n));
      x = Eigen::Map<const Matrix>(v.data(), n, n);
    }
    const auto sol = solve_care_stabilizing({a, m, q});
    EXPECT_LE((sol.X - x).norm(), 1e-8 * (1 + x.norm()));
  }
}

TEST(Care, IndefiniteQAccepted) {
  const CareProblem p{Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 1.0),
                      Matrix::Constant(1, 1, -1.0)};
  const auto sol = solve_care_stabilizing(p);
  EXPECT_NEAR(sol.X(0, 0), 2.0 + std::sqrt(3.0), 1e-12);
}

TEST(Care, AxisEigenvaluesRaise) {
  // a^2 + m q = 0: Hamiltonian has a double zero eigenvalue.
  const CareProblem p{Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0),
                      Matrix::Constant(1, 1, -1.0)};
  EXPECT_THROW(solve_care_stabilizing(p), ImaginaryAxisEigenvalue);
}

TEST(Care, AlmostStabilizingSolutionRejected) {
  // Hamiltonian with a purely imaginary pair: only an almost-stabilizing
  // solution exists, which is reported rather than returned.
  const CareProblem p{Matrix::Zero(1, 1), Matrix::Constant(1, 1, 1.0),
                      Matrix::Constant(1, 1, -1.0)};
  EXPECT_THROW(solve_care_stabilizing(p), ImaginaryAxisEigenvalue);
}

TEST(Care, UnstabilizableRaises) {
  Matrix a(2, 2);
  a << 1, 0, 0, -1;
  Matrix m = Matrix::Zero(2, 2);
  m(1, 1) = 1.0;
  EXPECT_THROW(solve_care_stabilizing({a, m, identity(2)}),
               StabilizabilityFailure);
}

TEST(Care, BadInputs) {
  Matrix m(2, 2);
  m << 1, 2, 0, 1;
  EXPECT_THROW(solve_care_stabilizing({identity(2), m, identity(2)}),
               InvalidArgument);
  m << -1, 0, 0, 1;
  EXPECT_THROW(solve_care_stabilizing({identity(2), m, identity(2)}),
               InvalidArgument);
  EXPECT_THROW(solve_care_stabilizing({identity(2), identity(3), identity(2)}),
               InvalidArgument);
}

TEST(Pbh, DetectsUncontrollableUnstableMode) {
  Matrix a(2, 2);
  a << 1, 0, 0, -1;
  Matrix b(2, 1);
  b << 0, 1;
  const auto rep = pbh_stabilizability(a, b);
  EXPECT_FALSE(rep.stabilizable);
  ASSERT_EQ(rep.uncontrollable_modes.size(), 1u);
  EXPECT_NEAR(rep.uncontrollable_modes[0].real(), 1.0, 1e-12);
  b << 1, 0;
  EXPECT_TRUE(pbh_stabilizability(a, b).stabilizable);
}

TEST(Pbh, StableUncontrollableModeIsFine) {
  Matrix a(2, 2);
  a << -1, 0, 0, 2;
  Matrix b(2, 1);
  b << 0, 1;
  EXPECT_TRUE(pbh_stabilizability(a, b).stabilizable);
}

TEST(Hamiltonian, QuadrupleSymmetry) {
  Rng rng(24);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = testing::uniform_int(rng, 1, 5);
    const Matrix h = testing::random_hamiltonian(rng, n);
    const Matrix j = testing::symplectic_j(n);
    EXPECT_LE((j.transpose() * h * j + h.transpose()).norm(), 1e-14 * h.norm());
    const auto ev = eigenvalues(h).eigenvalues;
    std::vector<Complex> reflected;
    for (auto z : ev) reflected.push_back(-std::conj(z));
    EXPECT_LE(testing::spectrum_distance(ev, reflected),
              1e-8 * (1 + h.norm()));
  }
}

TEST(DiscountedAre, ScalarClosedForm) {
  // Example values: a = 2, b = 1, q = 2, r = 1, rho = 1 gives Pi = 1.5 + sqrt(4.25).
  const auto sol = solve_discounted_are(
      Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 1.0),
      Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 1.0), 1.0);
  EXPECT_NEAR(sol.X(0, 0), 1.5 + std::sqrt(4.25), 1e-12);
  EXPECT_NEAR(sol.closed_loop(0, 0), -std::sqrt(4.25), 1e-12);
}

TEST(DiscountedAre, NonPositiveRRaises) {
  EXPECT_THROW(solve_discounted_are(identity(1), identity(1), identity(1),
                                    Matrix::Constant(1, 1, -1.0), 1.0),
               NonPositiveR);
  EXPECT_THROW(control_weight(identity(2), Matrix::Zero(2, 2)), NonPositiveR);
}

TEST(ControlWeight, MatchesExplicitInverse) {
  Rng rng(25);
  const Matrix b = testing::random_matrix(rng, 3, 2);
  const Matrix r = testing::random_psd(rng, 2, 2) + identity(2);
  const Matrix expected = b * r.inverse() * b.transpose();
  EXPECT_LE((control_weight(b, r) - expected).norm(), 1e-12 * expected.norm());
}

}  // namespace
}  // namespace mflq
