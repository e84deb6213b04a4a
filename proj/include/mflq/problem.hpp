#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mflq/matrix_core.hpp"
#include "mflq/riccati.hpp"

namespace mflq {

/// One LQ mean-field instance: dx_i = (A x_i + B u_i) dt + D dW_i with
/// running cost |x_i - Gamma x^(N) - eta|_Q^2 + u_i^T R u_i discounted by rho.
struct ProblemData {
  Matrix A;
  Matrix B;
  std::optional<Matrix> D;  // only the simulator needs it
  Matrix Q;
  Matrix R;
  Matrix Gamma;
  Vector eta;
  double rho = 1.0;
  Vector x0;

  Index n() const { return A.rows(); }
  Index n1() const { return B.cols(); }
  Index n2() const { return D ? D->cols() : 0; }

  /// Throws InvalidArgument naming the first inconsistent field.
  void check_shapes() const {
    const Index dim = A.rows();
    auto expect = [](bool ok, const std::string& field,
                     const std::string& detail) {
      if (!ok) throw InvalidArgument("field '" + field + "': " + detail);
    };
    expect(dim >= 1 && A.cols() == dim, "A", "must be n x n with n >= 1");
    expect(B.rows() == dim, "B", "must have n rows");
    if (D) expect(D->rows() == dim, "D", "must have n rows");
    expect(Q.rows() == dim && Q.cols() == dim, "Q", "must be n x n");
    expect(R.rows() == B.cols() && R.cols() == B.cols(), "R",
           "must be n1 x n1");
    expect(Gamma.rows() == dim && Gamma.cols() == dim, "Gamma",
           "must be n x n");
    expect(eta.size() == dim, "eta", "must have length n");
    expect(x0.size() == dim, "x0", "must have length n");
    expect(std::isfinite(rho), "rho", "must be finite");
    for (const auto& [m, name] :
         {std::pair<const Matrix*, const char*>{&A, "A"}, {&B, "B"},
          {&Q, "Q"}, {&R, "R"}, {&Gamma, "Gamma"}}) {
      expect(m->allFinite(), name, "has non-finite entries");
    }
    if (D) expect(D->allFinite(), "D", "has non-finite entries");
    expect(eta.allFinite(), "eta", "has non-finite entries");
    expect(x0.allFinite(), "x0", "has non-finite entries");
  }

  /// B R^{-1} B^T.
  Matrix control_weight() const { return mflq::control_weight(B, R); }

  /// R^{-1} B^T.
  Matrix input_gain() const {
    if (B.cols() == 0) return Matrix(0, n());
    Eigen::LLT<Matrix> llt(R);
    if (llt.info() != Eigen::Success) throw NonPositiveR("R not positive definite");
    return llt.solve(Matrix(B.transpose()));
  }

  bool operator==(const ProblemData& o) const {
    auto same = [](const Matrix& a, const Matrix& b) {
      return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    };
    if (D.has_value() != o.D.has_value()) return false;
    if (D && !same(*D, *o.D)) return false;
    return same(A, o.A) && same(B, o.B) && same(Q, o.Q) && same(R, o.R) &&
           same(Gamma, o.Gamma) && same(eta, o.eta) && same(x0, o.x0) &&
           rho == o.rho;
  }
};

/// Discounted closed-loop generator A - B R^{-1} B^T Pi - (rho/2) I.
inline Matrix discounted_generator(const ProblemData& p, const Matrix& pi) {
  return p.A - p.control_weight() * pi - 0.5 * p.rho * identity(p.n());
}

struct GammaWeights {
  Matrix Q_gamma;  // Gamma^T Q + Q Gamma - Gamma^T Q Gamma
  Vector eta_gamma;  // (I - Gamma^T) Q eta
};

inline GammaWeights gamma_weights(const Matrix& q, const Matrix& gamma,
                                  const Vector& eta) {
  const Index n = q.rows();
  if (q.cols() != n || gamma.rows() != n || gamma.cols() != n ||
      eta.size() != n) {
    throw InvalidArgument("gamma_weights: shape mismatch");
  }
  GammaWeights w;
  const Matrix qg = gamma.transpose() * q + q * gamma -
                    gamma.transpose() * q * gamma;
  w.Q_gamma = 0.5 * (qg + qg.transpose());
  w.eta_gamma = (identity(n) - gamma.transpose()) * q * eta;
  return w;
}

/// Discounted Hamiltonian [[A - rho/2 I, -B R^{-1} B^T], [-Q, -A^T + rho/2 I]].
inline Matrix discounted_hamiltonian(const ProblemData& p) {
  const Index n = p.n();
  const Matrix shifted = p.A - 0.5 * p.rho * identity(n);
  Matrix h(2 * n, 2 * n);
  h << shifted, -p.control_weight(), -p.Q, -shifted.transpose();
  return h;
}

struct ValidationReport {
  bool shapes_ok = true;
  bool rho_positive = true;
  bool q_symmetric = true;
  bool r_positive_definite = true;
  bool stabilizable = true;
  double stabilizability_margin = 1.0;
  bool h_a_no_axis_eigenvalues = true;
  double h_a_axis_distance = 0.0;  // min |Re lambda| over eig(H_A)
  std::vector<Complex> h_a_axis_eigenvalues;
  std::vector<std::string> messages;

  bool ok() const {
    return shapes_ok && rho_positive && q_symmetric && r_positive_definite &&
           stabilizable && h_a_no_axis_eigenvalues;
  }
};

/// Checks the standing assumptions: (A, B) stabilizable, R > 0, and the
/// discounted Hamiltonian has no imaginary-axis eigenvalues. Never throws;
/// every verdict lands in the report.
inline ValidationReport validate(const ProblemData& p,
                                 std::optional<double> axis_tol = std::nullopt) {
  ValidationReport rep;
  try {
    p.check_shapes();
  } catch (const Error& e) {
    rep.shapes_ok = false;
    rep.messages.emplace_back(e.what());
    return rep;
  }
  if (!(p.rho > 0.0)) {
    rep.rho_positive = false;
    rep.messages.emplace_back("rho must be positive");
  }
  if ((p.Q - p.Q.transpose()).norm() > 1e-10 * p.Q.norm()) {
    rep.q_symmetric = false;
    rep.messages.emplace_back("Q is not symmetric");
  }
  if (!is_positive_definite(p.R)) {
    rep.r_positive_definite = false;
    rep.messages.emplace_back("R is not symmetric positive definite");
  }
  const auto pbh = pbh_stabilizability(p.A, p.B);
  rep.stabilizable = pbh.stabilizable;
  rep.stabilizability_margin = pbh.margin;
  if (!pbh.stabilizable) {
    rep.messages.emplace_back("(A, B) is not stabilizable (Hautus test)");
  } else if (pbh.margin < 1e-6) {
    rep.messages.emplace_back("warning: (A, B) is close to unstabilizable");
  }
  if (rep.r_positive_definite) {
    const Matrix h = discounted_hamiltonian(p);
    const auto spec =
        eigenvalues_with_radius(h, axis_tol.value_or(default_axis_tol(h)));
    rep.h_a_axis_eigenvalues = spec.on_axis();
    rep.h_a_no_axis_eigenvalues = rep.h_a_axis_eigenvalues.empty();
    rep.h_a_axis_distance = std::numeric_limits<double>::infinity();
    for (auto z : spec.eigenvalues) {
      rep.h_a_axis_distance = std::min(rep.h_a_axis_distance, std::abs(z.real()));
    }
    if (!rep.h_a_no_axis_eigenvalues) {
      rep.messages.emplace_back(
          "discounted Hamiltonian H_A has imaginary-axis eigenvalues");
    }
  }
  return rep;
}

}  // namespace mflq
