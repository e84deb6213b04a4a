#pragma once

// Monte Carlo simulation of N agents under decentralized feedback
//   u_i = K_x x_i + L s(t)
// with Euler-Maruyama stepping and left-endpoint discounted cost sums.
//
// Each (replication, agent) pair owns an RNG stream derived from the master
// seed, and replications are reduced in index order, so results do not
// depend on the thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "mflq/bvp_dichotomy.hpp"
#include "mflq/problem.hpp"
#include "mflq/social_opt.hpp"

namespace mflq {

struct SimConfig {
  std::size_t agents = 1;
  double horizon = 10.0;
  double dt = 1e-2;
  std::size_t replications = 1;
  std::uint64_t seed = 0;
  std::optional<Vector> init_mean;       // defaults to x0
  std::optional<Matrix> init_covariance;  // defaults to zero
  unsigned threads = 0;                   // 0: hardware concurrency
  bool record_mean_field = false;         // keep replication 0's x^(N) path

  void check(Index n) const {
    if (agents < 1) throw InvalidArgument("SimConfig: agents must be >= 1");
    if (!(dt > 0.0)) throw InvalidArgument("SimConfig: dt must be > 0");
    if (!(horizon >= dt)) throw InvalidArgument("SimConfig: horizon must be >= dt");
    if (replications < 1) {
      throw InvalidArgument("SimConfig: replications must be >= 1");
    }
    if (init_mean && init_mean->size() != n) {
      throw InvalidArgument("SimConfig: init_mean has wrong length");
    }
    if (init_covariance &&
        (init_covariance->rows() != n || init_covariance->cols() != n)) {
      throw InvalidArgument("SimConfig: init_covariance has wrong shape");
    }
  }
};

struct SampleStats {
  double mean = 0.0;
  double std_dev = 0.0;
  double std_error = 0.0;
};

inline SampleStats sample_stats(const std::vector<double>& v) {
  SampleStats s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std_dev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    s.std_error = s.std_dev / std::sqrt(static_cast<double>(v.size()));
  }
  return s;
}

struct SimResult {
  SampleStats per_agent_cost;
  SampleStats mean_field_gap;
  double tail_bound = 0.0;  // e^{-rho T} * |final running cost| / rho
  std::vector<double> replication_costs;
  std::vector<double> replication_gaps;
  std::vector<double> times;
  std::vector<Vector> mean_field;  // replication 0, when recorded
  std::vector<Vector> reference;   // xbar on the same grid, when recorded
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t rep,
                                 std::uint64_t agent) {
  return splitmix64(splitmix64(splitmix64(seed) ^ rep) ^ (agent + 1));
}

// Symmetric square root of a PSD covariance.
inline Matrix covariance_factor(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
  if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + cov.norm())) {
    throw InvalidArgument("init_covariance is not positive semidefinite");
  }
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

struct ReplicationOutput {
  double cost = 0.0;
  double gap = 0.0;
  double final_running_cost = 0.0;
  std::vector<Vector> mean_field;
};

}  // namespace detail

inline SimResult simulate(const ProblemData& p, const StrategySpec& strategy,
                          const SimConfig& cfg) {
  p.check_shapes();
  const Index n = p.n();
  cfg.check(n);
  if (!p.D) throw InvalidArgument("field 'D': required for simulation");
  const Matrix& d = *p.D;
  const Index noise_dim = d.cols();

  const std::size_t steps =
      static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  const double dt = cfg.dt;
  const double sqrt_dt = std::sqrt(dt);
  const auto grid = uniform_grid(static_cast<double>(steps) * dt, dt);

  // Precomputed mean-field reference and feedforward on the grid.
  const auto path = strategy.path.sample(grid);
  std::vector<Vector> xbar(grid.size()), offset(grid.size());
  std::vector<double> discount(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    xbar[k] = path[k].z.head(n);
    offset[k] = strategy.L * path[k].z.tail(n);
    discount[k] = std::exp(-p.rho * grid[k]);
  }

  const Vector init_mean = cfg.init_mean.value_or(p.x0);
  const Matrix init_factor = cfg.init_covariance
                                 ? detail::covariance_factor(*cfg.init_covariance)
                                 : Matrix::Zero(n, n);
  const bool random_init = init_factor.norm() > 0.0;
  const Index agents = static_cast<Index>(cfg.agents);

  auto run_replication = [&](std::size_t rep) {
    detail::ReplicationOutput out;
    std::vector<std::mt19937_64> engines;
    engines.reserve(cfg.agents);
    for (std::size_t i = 0; i < cfg.agents; ++i) {
      engines.emplace_back(detail::stream_seed(cfg.seed, rep, i));
    }
    std::vector<std::normal_distribution<double>> normal(cfg.agents);

    Matrix x = init_mean.replicate(1, agents);
    if (random_init) {
      Vector z(n);
      for (Index i = 0; i < agents; ++i) {
        for (Index r = 0; r < n; ++r) z(r) = normal[i](engines[i]);
        x.col(i) += init_factor * z;
      }
    }
    Vector agent_cost = Vector::Zero(agents);
    Matrix noise(noise_dim, agents);
    for (std::size_t k = 0; k <= steps; ++k) {
      const Vector mean = x.rowwise().mean();
      out.gap = std::max(out.gap, (mean - xbar[k]).norm());
      if (cfg.record_mean_field) out.mean_field.push_back(mean);
      const Matrix u = (strategy.K_x * x).colwise() + offset[k];
      const Matrix dev = x.colwise() - (p.Gamma * mean + p.eta);
      const Vector running =
          (dev.cwiseProduct(p.Q * dev)).colwise().sum().transpose() +
          (u.cwiseProduct(p.R * u)).colwise().sum().transpose();
      if (k == steps) {
        out.final_running_cost = running.mean();
        break;
      }
      agent_cost += discount[k] * dt * running;
      for (Index i = 0; i < agents; ++i) {
        for (Index r = 0; r < noise_dim; ++r) noise(r, i) = normal[i](engines[i]);
      }
      x += (p.A * x + p.B * u) * dt + d * noise * sqrt_dt;
    }
    out.cost = agent_cost.mean();
    return out;
  };

  std::vector<detail::ReplicationOutput> outputs(cfg.replications);
  unsigned threads = cfg.threads != 0
                         ? cfg.threads
                         : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, cfg.replications));
  if (threads <= 1) {
    for (std::size_t r = 0; r < cfg.replications; ++r) {
      outputs[r] = run_replication(r);
    }
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < cfg.replications; r += threads) {
          outputs[r] = run_replication(r);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  SimResult res;
  double final_running = 0.0;
  for (const auto& o : outputs) {
    res.replication_costs.push_back(o.cost);
    res.replication_gaps.push_back(o.gap);
    final_running += o.final_running_cost;
  }
  final_running /= static_cast<double>(outputs.size());
  res.per_agent_cost = sample_stats(res.replication_costs);
  res.mean_field_gap = sample_stats(res.replication_gaps);
  res.tail_bound =
      std::exp(-p.rho * grid.back()) * std::abs(final_running) / p.rho;
  if (cfg.record_mean_field) {
    res.times = grid;
    res.mean_field = std::move(outputs.front().mean_field);
    res.reference = xbar;
  }
  return res;
}

}  // namespace mflq
