#pragma once

// Fixed-point contraction constant
//   beta = int_0^inf ||e^{Acal s} B R^{-1} B^T||_F ds
//        * int_0^inf ||e^{Acal^T t} Q_gamma||_F dt,
// each factor by composite Simpson on a truncated horizon with panel
// doubling. The horizon comes from a tail bound ||e^{Acal t}||_2 <= kappa e^{alpha t}.

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "mflq/matrix_core.hpp"
#include "mflq/problem.hpp"

namespace mflq {

struct QuadratureConfig {
  double truncation_tol = 1e-10;
  std::size_t base_panels = 2048;
  double rel_tol = 1e-6;
  std::size_t max_panels = std::size_t{1} << 22;
};

struct NormIntegral {
  double value = 0.0;
  double horizon = 0.0;
  std::size_t panels = 0;
  std::vector<double> estimates;  // one per doubling round
};

struct ContractionReport {
  double beta = 0.0;
  NormIntegral control_factor;  // int ||e^{Acal s} M||
  NormIntegral weight_factor;   // int ||e^{Acal^T t} Q_gamma||
  bool is_contraction = false;
  std::string note;
};

namespace detail {

struct DecayBound {
  double kappa = 1.0;
  double alpha = 0.0;  // < 0
};

// ||e^{G t}||_2 <= kappa e^{alpha t}. Uses the eigenvector condition number
// when G is comfortably diagonalizable; otherwise halves the decay rate and
// bounds the transient numerically.
inline DecayBound decay_bound(const Matrix& g) {
  const double abscissa = spectral_abscissa(g);
  if (!(abscissa < 0.0)) {
    throw UnstableGenerator("generator has spectral abscissa " +
                            std::to_string(abscissa));
  }
  Eigen::EigenSolver<Matrix> es(g, /*computeEigenvectors=*/true);
  if (es.info() == Eigen::Success) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / sv(sv.size() - 1);
    if (std::isfinite(cond) && cond < 1e8) return {cond, abscissa};
  }
  const double alpha = 0.5 * abscissa;
  const double t_max = 40.0 / -alpha;
  const int samples = 4000;
  double kappa = 1.0;
  const Matrix step = mat_exp(g * (t_max / samples));
  Matrix e = identity(g.rows());
  for (int i = 1; i <= samples; ++i) {
    e = step * e;
    const double t = t_max * i / samples;
    kappa = std::max(kappa, e.operatorNorm() * std::exp(-alpha * t));
  }
  return {kappa, alpha};
}

inline double simpson(const Matrix& g, const Matrix& c, double horizon,
                      std::size_t panels) {
  const double h = horizon / static_cast<double>(panels);
  const Matrix step = mat_exp(g * h);
  Matrix e = c;
  double sum = e.norm();
  for (std::size_t i = 1; i <= panels; ++i) {
    e = step * e;
    const double w = (i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * e.norm();
  }
  return sum * h / 3.0;
}

}  // namespace detail

/// int_0^inf ||e^{G t} C||_F dt for stable G.
inline NormIntegral norm_integral(const Matrix& g, const Matrix& c,
                                  const QuadratureConfig& cfg = {}) {
  if (!(cfg.truncation_tol > 0.0) || cfg.base_panels < 2 ||
      !(cfg.rel_tol > 0.0)) {
    throw InvalidArgument("QuadratureConfig values must be positive");
  }
  NormIntegral out;
  const double c_norm = c.norm();
  const auto bound = detail::decay_bound(g);
  if (c_norm == 0.0) return out;

  // sqrt(n) kappa ||C|| e^{alpha T} / |alpha| <= tol
  const double lead =
      std::sqrt(static_cast<double>(g.rows())) * bound.kappa * c_norm;
  const double ratio = cfg.truncation_tol * -bound.alpha / lead;
  out.horizon = ratio < 1.0 ? std::log(ratio) / bound.alpha : 0.0;
  out.horizon = std::max(out.horizon, 1.0 / -bound.alpha);

  std::size_t panels = cfg.base_panels + cfg.base_panels % 2;
  double previous = detail::simpson(g, c, out.horizon, panels);
  out.estimates.push_back(previous);
  while (true) {
    panels *= 2;
    if (panels > cfg.max_panels) {
      throw NonConvergence("norm integral: panel limit reached");
    }
    const double current = detail::simpson(g, c, out.horizon, panels);
    out.estimates.push_back(current);
    if (std::abs(current - previous) <= cfg.rel_tol * std::abs(current)) {
      out.value = current;
      out.panels = panels;
      return out;
    }
    previous = current;
  }
}

/// beta for the fixed-point map of the social system; beta < 1 certifies a
/// contraction, beta >= 1 is inconclusive since the bound may not be tight.
inline ContractionReport contraction_bound(const ProblemData& p,
                                           const Matrix& pi,
                                           const QuadratureConfig& cfg = {}) {
  const Matrix acal = discounted_generator(p, pi);
  const Matrix q_gamma = gamma_weights(p.Q, p.Gamma, p.eta).Q_gamma;

  ContractionReport rep;
  rep.control_factor = norm_integral(acal, p.control_weight(), cfg);
  rep.weight_factor = norm_integral(Matrix(acal.transpose()), q_gamma, cfg);
  rep.beta = rep.control_factor.value * rep.weight_factor.value;
  rep.is_contraction = rep.beta < 1.0;
  rep.note = rep.is_contraction
                 ? "contraction"
                 : "not a contraction (the upper bound may not be tight)";
  return rep;
}

}  // namespace mflq
