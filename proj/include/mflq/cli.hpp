#pragma once

// Command-line front end. Exit codes:
//   0 success, 2 validation failure, 3 dichotomy failure,
//   4 I/O, parse or usage error, 1 any other solver failure.

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mflq/contraction.hpp"
#include "mflq/io.hpp"
#include "mflq/mfg.hpp"
#include "mflq/population_sim.hpp"
#include "mflq/social_opt.hpp"

namespace mflq::cli {

enum ExitCode : int {
  kOk = 0,
  kSolverFailure = 1,
  kValidationFailure = 2,
  kDichotomyFailure = 3,
  kInputError = 4,
};

struct CommonOptions {
  std::string input;
  std::optional<double> axis_tol;
  double t_end = 10.0;
  double dt = 0.01;
  std::string csv_path;
  std::string report_path;
};

namespace detail {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

inline bool is_dichotomy_failure(const Error& e) {
  return e.kind() == ErrorKind::kImaginaryAxisEigenvalue ||
         e.kind() == ErrorKind::kDichotomySplitFailure ||
         e.kind() == ErrorKind::kGraphSubspaceFailure;
}

inline int report_error(const Error& e, std::ostream& err) {
  if (e.kind() == ErrorKind::kImaginaryAxisEigenvalue) {
    err << "dichotomy failure: the coefficient matrix has imaginary-axis "
           "eigenvalues\n";
  } else if (e.kind() == ErrorKind::kDichotomySplitFailure) {
    err << "dichotomy failure: stable/antistable eigenvalues do not split "
           "n/n\n";
  } else if (e.kind() == ErrorKind::kGraphSubspaceFailure) {
    err << "dichotomy failure: stable invariant subspace is not a graph "
           "subspace (U11 singular)\n";
  }
  err << e.what() << '\n';
  if (is_dichotomy_failure(e)) return kDichotomyFailure;
  if (e.kind() == ErrorKind::kInvalidArgument) return kInputError;
  return kSolverFailure;
}

inline void emit(const json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw io::ParseError("", "cannot write '" + path + "'");
  f << doc.dump(2) << '\n';
}

// Loads and validates; returns an exit code when the caller must stop.
inline std::optional<int> load_validated(const CommonOptions& opt,
                                         ProblemData& p, json& report,
                                         std::ostream& out, std::ostream& err) {
  try {
    p = io::load_problem(opt.input);
  } catch (const io::ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  }
  const auto v = validate(p, opt.axis_tol);
  report["problem"] = io::problem_to_json(p);
  report["validation"] = io::validation_json(v);
  if (!v.ok()) {
    for (const auto& m : v.messages) err << "validation: " << m << '\n';
    emit(report, opt.report_path, out);
    return kValidationFailure;
  }
  for (const auto& m : v.messages) err << m << '\n';
  return std::nullopt;
}

inline std::optional<int> write_csv(const CommonOptions& opt,
                                    const std::vector<MeanFieldSample>& samples,
                                    std::ostream& err) {
  std::ofstream f(opt.csv_path, std::ios::binary);
  if (!f) {
    err << "input error: cannot write '" << opt.csv_path << "'\n";
    return kInputError;
  }
  io::write_trajectory_csv(f, samples);
  return std::nullopt;
}

inline bool check_grid_options(const CommonOptions& opt, std::ostream& err) {
  if (!(opt.dt > 0.0) || !(opt.t_end >= 0.0)) {
    err << "input error: --dt must be > 0 and --t-end >= 0\n";
    return false;
  }
  return true;
}

}  // namespace detail

inline int cmd_solve_social(const CommonOptions& opt, std::ostream& out,
                            std::ostream& err) {
  using json = detail::json;
  if (!detail::check_grid_options(opt, err)) return kInputError;
  const auto start = detail::Clock::now();
  ProblemData p;
  json report{{"command", "solve-social"}};
  if (auto code = detail::load_validated(opt, p, report, out, err)) return *code;
  try {
    const auto sol = solve_sce(p, opt.axis_tol);
    const auto grid = uniform_grid(opt.t_end, opt.dt);
    report["spectrum"] = io::spectrum_json(eigenvalues(sol.H).eigenvalues);
    report["Pi"] = io::matrix_json(sol.Pi);
    report["H"] = io::matrix_json(sol.H);
    report["Q_gamma"] = io::matrix_json(sol.weights.Q_gamma);
    report["eta_gamma"] = io::vector_json(sol.weights.eta_gamma);
    report["Xplus"] = io::matrix_json(sol.Xplus);
    report["A_C"] = io::matrix_json(sol.A_C);
    report["A_cl"] = io::matrix_json(sol.A_cl);
    report["c"] = io::vector_json(sol.c);
    report["s0"] = io::vector_json(sol.s0);
    report["feedback_gain"] =
        io::matrix_json(decentralized_strategy(sol, p).K_x);
    report["residuals"] = {{"Pi", sol.pi_residual},
                           {"Xplus", sol.xplus_residual},
                           {"sce", sce_residual(sol, p, grid)}};
    if (!opt.csv_path.empty()) {
      if (auto code = detail::write_csv(opt, sol.trajectory(grid), err)) {
        return *code;
      }
    }
  } catch (const Error& e) {
    return detail::report_error(e, err);
  }
  report["timings_ms"] = {{"total", detail::elapsed_ms(start)}};
  detail::emit(report, opt.report_path, out);
  return kOk;
}

inline int cmd_solve_game(const CommonOptions& opt, std::ostream& out,
                          std::ostream& err) {
  using json = detail::json;
  if (!detail::check_grid_options(opt, err)) return kInputError;
  const auto start = detail::Clock::now();
  ProblemData p;
  json report{{"command", "solve-game"}};
  if (auto code = detail::load_validated(opt, p, report, out, err)) return *code;
  try {
    const auto sol = solve_mfg(p, opt.axis_tol);
    const auto& d = sol.decomposition();
    const auto grid = uniform_grid(opt.t_end, opt.dt);
    report["spectrum"] = io::spectrum_json(eigenvalues(sol.M_mfg).eigenvalues);
    report["Pi"] = io::matrix_json(sol.Pi);
    report["M_mfg"] = io::matrix_json(sol.M_mfg);
    report["U"] = io::matrix_json(d.U);
    report["F11"] = io::matrix_json(d.F11);
    report["F12"] = io::matrix_json(d.F12);
    report["F22"] = io::matrix_json(d.F22);
    report["det_U11"] = sol.det_U11;
    report["U11_condition"] = d.U11_condition;
    report["c"] = io::vector_json(sol.path.bvp.y2_offset);
    report["s0"] = io::vector_json(sol.s0);
    report["s0_closed_form"] = io::vector_json(sol.s0_closed_form);
    report["feedback_gain"] =
        io::matrix_json(decentralized_strategy(sol, p).K_x);
    report["residuals"] = {{"mfg", mfg_residual(sol, p, grid)}};
    if (!opt.csv_path.empty()) {
      if (auto code = detail::write_csv(opt, sol.trajectory(grid), err)) {
        return *code;
      }
    }
  } catch (const Error& e) {
    return detail::report_error(e, err);
  }
  report["timings_ms"] = {{"total", detail::elapsed_ms(start)}};
  detail::emit(report, opt.report_path, out);
  return kOk;
}

inline int cmd_contraction(const CommonOptions& opt, std::ostream& out,
                           std::ostream& err) {
  using json = detail::json;
  const auto start = detail::Clock::now();
  ProblemData p;
  json report{{"command", "contraction"}};
  if (auto code = detail::load_validated(opt, p, report, out, err)) return *code;
  try {
    const auto pi = solve_discounted_are(p.A, p.B, p.Q, p.R, p.rho, opt.axis_tol);
    const auto c = contraction_bound(p, pi.X);
    report["Pi"] = io::matrix_json(pi.X);
    report["beta"] = c.beta;
    report["control_integral"] = {{"value", c.control_factor.value},
                                  {"horizon", c.control_factor.horizon},
                                  {"panels", c.control_factor.panels}};
    report["weight_integral"] = {{"value", c.weight_factor.value},
                                 {"horizon", c.weight_factor.horizon},
                                 {"panels", c.weight_factor.panels}};
    report["verdict"] = c.is_contraction ? "contraction" : "not a contraction";
    report["note"] = "the bound may not be tight";
  } catch (const Error& e) {
    return detail::report_error(e, err);
  }
  report["timings_ms"] = {{"total", detail::elapsed_ms(start)}};
  detail::emit(report, opt.report_path, out);
  return kOk;
}

struct SimulateOptions {
  std::size_t agents = 32;
  double horizon = 10.0;
  double dt = 0.01;
  std::size_t reps = 16;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out_path;
};

inline int cmd_simulate(const CommonOptions& opt, const SimulateOptions& sim,
                        std::ostream& out, std::ostream& err) {
  using json = detail::json;
  if (!(sim.dt > 0.0) || !(sim.horizon >= sim.dt) || sim.agents < 1 ||
      sim.reps < 1) {
    err << "input error: need --dt > 0, --horizon >= --dt, --agents >= 1, "
           "--reps >= 1\n";
    return kInputError;
  }
  const auto start = detail::Clock::now();
  ProblemData p;
  json report{{"command", "simulate"}};
  if (auto code = detail::load_validated(opt, p, report, out, err)) return *code;
  if (!p.D) {
    err << "input error: field 'D': required by simulate\n";
    return kInputError;
  }
  try {
    const auto sol = solve_sce(p, opt.axis_tol);
    SimConfig cfg;
    cfg.agents = sim.agents;
    cfg.horizon = sim.horizon;
    cfg.dt = sim.dt;
    cfg.replications = sim.reps;
    cfg.seed = sim.seed;
    cfg.threads = sim.threads;
    cfg.record_mean_field = !sim.out_path.empty();
    const auto res = simulate(p, decentralized_strategy(sol, p), cfg);
    report["config"] = {{"agents", sim.agents}, {"horizon", sim.horizon},
                        {"dt", sim.dt},         {"replications", sim.reps},
                        {"seed", sim.seed}};
    report["per_agent_cost"] = {{"mean", res.per_agent_cost.mean},
                                {"std_error", res.per_agent_cost.std_error}};
    report["mean_field_gap"] = {{"mean", res.mean_field_gap.mean},
                                {"std", res.mean_field_gap.std_dev}};
    report["tail_bound"] = res.tail_bound;
    if (!sim.out_path.empty()) {
      std::ofstream f(sim.out_path, std::ios::binary);
      if (!f) {
        err << "input error: cannot write '" << sim.out_path << "'\n";
        return kInputError;
      }
      const Index n = p.n();
      f << "t";
      for (Index i = 1; i <= n; ++i) f << ",xN_" << i;
      for (Index i = 1; i <= n; ++i) f << ",xbar_" << i;
      f << '\n';
      for (std::size_t k = 0; k < res.times.size(); ++k) {
        f << io::format_double(res.times[k]);
        for (Index i = 0; i < n; ++i) {
          f << ',' << io::format_double(res.mean_field[k](i));
        }
        for (Index i = 0; i < n; ++i) {
          f << ',' << io::format_double(res.reference[k](i));
        }
        f << '\n';
      }
    }
  } catch (const Error& e) {
    return detail::report_error(e, err);
  }
  report["timings_ms"] = {{"total", detail::elapsed_ms(start)}};
  detail::emit(report, opt.report_path, out);
  return kOk;
}

inline int cmd_spectrum(const CommonOptions& opt, const std::string& system,
                        std::ostream& out, std::ostream& err) {
  ProblemData p;
  detail::json report;
  std::ostringstream discard;
  if (auto code = detail::load_validated(opt, p, report, discard, err)) {
    return *code;
  }
  try {
    const auto pi = solve_discounted_are(p.A, p.B, p.Q, p.R, p.rho, opt.axis_tol);
    const Matrix k = system == "game"
                         ? build_mfg_matrix(p, pi.X)
                         : build_hamiltonian(p, pi.X,
                                             gamma_weights(p.Q, p.Gamma, p.eta));
    const auto spec = eigenvalues(k);
    out << "# eigenvalues of " << (system == "game" ? "M_mfg" : "H") << '\n';
    out << "re,im\n";
    for (auto z : spec.eigenvalues) {
      out << io::format_double(z.real()) << ',' << io::format_double(z.imag())
          << '\n';
    }
  } catch (const Error& e) {
    return detail::report_error(e, err);
  }
  return kOk;
}

/// Parses argv-style arguments and runs one subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"LQ mean-field social optimum and game solver"};
  app.require_subcommand(1);

  CommonOptions opt;
  SimulateOptions sim;
  std::string system = "social";
  double axis_tol = -1.0;

  auto add_common = [&](CLI::App* sub, bool grid) {
    sub->add_option("input", opt.input, "problem file (JSON)")->required();
    sub->add_option("--axis-tol", axis_tol,
                    "imaginary-axis tolerance (default 1e-9 (1 + ||K||_F))");
    sub->add_option("--report", opt.report_path,
                    "write the JSON report here instead of stdout");
    if (grid) {
      sub->add_option("--t-end", opt.t_end, "trajectory horizon")
          ->capture_default_str();
      sub->add_option("--dt", opt.dt, "trajectory step")->capture_default_str();
      sub->add_option("--csv", opt.csv_path, "write the trajectory CSV here");
    }
  };

  auto* social = app.add_subcommand("solve-social", "social optimum (SCE)");
  add_common(social, true);
  auto* game = app.add_subcommand("solve-game", "mean-field game");
  add_common(game, true);
  auto* contraction = app.add_subcommand("contraction", "contraction bound beta");
  add_common(contraction, false);
  auto* simulate_cmd = app.add_subcommand("simulate", "N-agent Monte Carlo");
  add_common(simulate_cmd, false);
  simulate_cmd->add_option("--agents", sim.agents)->capture_default_str();
  simulate_cmd->add_option("--horizon", sim.horizon)->capture_default_str();
  simulate_cmd->add_option("--dt", sim.dt)->capture_default_str();
  simulate_cmd->add_option("--reps", sim.reps)->capture_default_str();
  simulate_cmd->add_option("--seed", sim.seed)->capture_default_str();
  simulate_cmd->add_option("--threads", sim.threads,
                           "worker threads (0: all cores)");
  simulate_cmd->add_option("--out", sim.out_path,
                           "CSV of replication 0's empirical mean field");
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of H or M_mfg");
  add_common(spectrum, false);
  spectrum->add_option("--system", system)
      ->check(CLI::IsMember({"social", "game"}))
      ->capture_default_str();

  std::vector<const char*> argv;
  argv.push_back("mflq");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }
  if (axis_tol >= 0.0) opt.axis_tol = axis_tol;

  if (social->parsed()) return cmd_solve_social(opt, out, err);
  if (game->parsed()) return cmd_solve_game(opt, out, err);
  if (contraction->parsed()) return cmd_contraction(opt, out, err);
  if (simulate_cmd->parsed()) return cmd_simulate(opt, sim, out, err);
  return cmd_spectrum(opt, system, out, err);
}

}  // namespace mflq::cli
