#include "fchc/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <thread>

#include "fchc/errors.hpp"
#include "fchc/selfcheck.hpp"
#include "fchc/sensitivity.hpp"
#include "fchc/version.hpp"

namespace fchc {

namespace {

namespace fs = std::filesystem;

std::vector<std::uint64_t> axis_sizes_of(const DomainSpec& d) {
  std::vector<std::uint64_t> sizes;
  for (int n : d.grid_points) sizes.push_back(static_cast<std::uint64_t>(n));
  return sizes;
}

void cmd_simulate(const ExperimentConfig& cfg, const std::string& out,
                  RunManifest& man) {
  ExperimentSetup setup = build_setup(cfg);
  const StateTrajectory traj =
      solve_state(*setup.basis_a, *setup.basis_b, setup.problem.potential,
                  setup.control, setup.problem.y0, setup.problem.config);
  const auto sizes = axis_sizes_of(cfg.domain);
  write_time_field(out + "/y.bin", traj.y, sizes);
  write_time_field(out + "/mu.bin", traj.mu, sizes);

  std::vector<std::vector<double>> rows;
  for (int n = 0; n <= cfg.time.step_count; ++n) {
    rows.push_back({cfg.time.node(n),
                    energy(*setup.basis_b, setup.problem.potential, traj.y[n],
                           cfg.state.sigma),
                    mean(*setup.basis_a, traj.y[n]), traj.y[n].minCoeff(),
                    traj.y[n].maxCoeff(),
                    n > 0 ? static_cast<double>(
                                traj.newton_iteration_counts[static_cast<std::size_t>(n) - 1])
                          : 0.0});
  }
  write_csv(out + "/series.csv", {"time", "energy", "mass", "min_y", "max_y", "newton_iters"},
            rows);

  int newton_max = 0;
  for (int c : traj.newton_iteration_counts) newton_max = std::max(newton_max, c);
  man.diagnostics.emplace_back("newton_max_iterations", newton_max);
  man.diagnostics.emplace_back("c_hat", traj.c_hat);
  man.diagnostics.emplace_back("gb_violated", traj.gb.violated ? 1.0 : 0.0);
  man.diagnostics.emplace_back("y_min", traj.gb.min_y);
  man.diagnostics.emplace_back("y_max", traj.gb.max_y);
  man.diagnostics.emplace_back(
      "mass_drift", std::abs(mean(*setup.basis_a, traj.y[cfg.time.step_count]) -
                             mean(*setup.basis_a, traj.y[0])));
}

void cmd_linearize(const ExperimentConfig& cfg, const std::string& out,
                   RunManifest& man) {
  ExperimentSetup setup = build_setup(cfg);
  const StateTrajectory traj =
      solve_state(*setup.basis_a, *setup.basis_b, setup.problem.potential,
                  setup.control, setup.problem.y0, setup.problem.config);
  const TimeField k = resolve_time_field(cfg.direction, *setup.basis_b, cfg.time);
  const LinearizedTrajectory lin = solve_linearized(traj, k, cfg.linearize_scheme);
  const auto sizes = axis_sizes_of(cfg.domain);
  write_time_field(out + "/xi.bin", lin.xi, sizes);
  write_time_field(out + "/eta.bin", lin.eta, sizes);

  double xi_linf = 0.0;
  for (const auto& v : lin.xi.values)
    xi_linf = std::max(xi_linf, norm(*setup.basis_b, v));
  man.diagnostics.emplace_back("xi_linf_h", xi_linf);
  man.diagnostics.emplace_back(
      "scheme_stabilized", cfg.linearize_scheme == LinearizedScheme::paper_stabilized);
}

void cmd_adjoint(const ExperimentConfig& cfg, const std::string& out,
                 RunManifest& man) {
  ExperimentSetup setup = build_setup(cfg);
  const StateTrajectory traj =
      solve_state(*setup.basis_a, *setup.basis_b, setup.problem.potential,
                  setup.control, setup.problem.y0, setup.problem.config);
  const AdjointTrajectory adj = solve_adjoint(traj, setup.problem.cost);
  const auto sizes = axis_sizes_of(cfg.domain);
  write_time_field(out + "/p.bin", adj.p, sizes);
  write_time_field(out + "/q.bin", adj.q, sizes);
  if (!adj.p_mean.empty()) {
    std::vector<std::vector<double>> rows;
    for (int n = 0; n <= cfg.time.step_count; ++n)
      rows.push_back({cfg.time.node(n), adj.p_mean[static_cast<std::size_t>(n)]});
    write_csv(out + "/p_mean.csv", {"time", "p_mean"}, rows);
  }
  double q_mean_max = 0.0;
  if (setup.basis_a->has_zero_mode())
    for (const auto& v : adj.q.values)
      q_mean_max = std::max(q_mean_max, std::abs(mean(*setup.basis_a, v)));
  man.diagnostics.emplace_back("q_mean_max", q_mean_max);
}

void cmd_grad_check(const ExperimentConfig& cfg, const std::string& out,
                    RunManifest& man, std::uint64_t seed) {
  ExperimentSetup setup = build_setup(cfg);
  const ControlProblem& problem = setup.problem;
  const TimeField u = setup.control;
  const Evaluation ev = evaluate(problem, u);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int nmodes = std::min(6, setup.basis_b->mode_count());

  std::vector<std::vector<double>> rows;
  double worst = 0.0;
  for (int dir = 0; dir < cfg.grad_check.directions; ++dir) {
    Field profile = Field::Zero(static_cast<Eigen::Index>(setup.basis_b->grid_size()));
    for (int j = 0; j < nmodes; ++j)
      profile += gauss(rng) / ((1.0 + j) * (1.0 + j)) * setup.basis_b->mode_field(j);
    TimeField k(cfg.time, profile.size());
    const double shift = gauss(rng);
    for (int n = 0; n <= cfg.time.step_count; ++n)
      k[n] = profile * (1.0 + 0.3 * std::sin(shift + 2.0 * cfg.time.node(n)));

    const double pairing = inner_l2q(*setup.basis_b, ev.gradient, k);
    double best = std::numeric_limits<double>::infinity();
    double best_fd = 0.0, best_eps = 0.0;
    for (double eps : cfg.grad_check.epsilons) {
      TimeField up = u, um = u;
      for (int n = 0; n <= cfg.time.step_count; ++n) {
        up[n] += eps * k[n];
        um[n] -= eps * k[n];
      }
      const double fd =
          (reduced_cost(problem, up) - reduced_cost(problem, um)) / (2.0 * eps);
      // Matched zeros (a stationary direction) count as agreement; the floor
      // is the finite-difference noise level of the cost.
      const double floor = 1e-12 * (1.0 + std::abs(ev.cost));
      const double rel = (std::abs(pairing) <= floor && std::abs(fd) <= floor)
                             ? 0.0
                             : std::abs(pairing - fd) /
                                   (std::abs(pairing) + std::abs(fd) + 1e-30);
      if (rel < best) {
        best = rel;
        best_fd = fd;
        best_eps = eps;
      }
    }
    worst = std::max(worst, best);
    rows.push_back({static_cast<double>(dir), best_eps, best_fd, pairing, best});
  }
  write_csv(out + "/gradcheck.csv",
            {"direction", "epsilon", "fd_derivative", "adjoint_derivative",
             "relative_error"},
            rows);
  man.diagnostics.emplace_back("grad_check_worst_rel_error", worst);
  if (worst > cfg.grad_check.tolerance)
    throw SolverError("gradient check failed: worst relative error " +
                      std::to_string(worst) + " exceeds " +
                      std::to_string(cfg.grad_check.tolerance));
}

void cmd_optimize(const ExperimentConfig& cfg, const std::string& out,
                  RunManifest& man) {
  ExperimentSetup setup = build_setup(cfg);
  TimeField u0 = setup.control;
  const OptimizeReport rep =
      optimize(setup.problem, u0, cfg.optimize.max_iter, cfg.optimize.stat_tol);
  write_time_field(out + "/u_opt.bin", rep.control, axis_sizes_of(cfg.domain));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.cost_history.size(); ++i)
    rows.push_back({static_cast<double>(i), rep.cost_history[i],
                    i > 0 && i - 1 < rep.step_sizes.size() ? rep.step_sizes[i - 1] : 0.0});
  write_csv(out + "/cost_history.csv", {"iteration", "cost", "accepted_step"}, rows);
  man.diagnostics.emplace_back("iterations", rep.iterations);
  man.diagnostics.emplace_back("stationarity", rep.stationarity);
  man.diagnostics.emplace_back("final_cost", rep.cost_history.back());
  man.diagnostics.emplace_back("projection_formula_residual",
                               rep.projection_formula_residual);
  man.notes.push_back(rep.reason == TerminationReason::stationary
                          ? "terminated: stationary"
                          : "terminated: max iterations");
}

void cmd_convergence(const ExperimentConfig& cfg, const std::string& out,
                     RunManifest& man) {
  ExperimentConfig ref_cfg = cfg;
  ref_cfg.time = TimeGrid(cfg.time.horizon, cfg.convergence.reference_steps);
  ref_cfg.state.grid = ref_cfg.time;
  ExperimentSetup ref = build_setup(ref_cfg);
  const StateTrajectory ref_state =
      solve_state(*ref.basis_a, *ref.basis_b, ref.problem.potential, ref.control,
                  ref.problem.y0, ref.problem.config);
  const AdjointTrajectory ref_adj =
      solve_adjoint(ref_state, ref.problem.cost, AdjointScheme::direct);

  const auto levels = cfg.convergence.levels;
  std::vector<double> err_state(levels.size()), err_adj(levels.size());

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= levels.size()) return;
      ExperimentConfig level_cfg = cfg;
      level_cfg.time = TimeGrid(cfg.time.horizon, levels[i]);
      level_cfg.state.grid = level_cfg.time;
      ExperimentSetup s = build_setup(level_cfg);
      const StateTrajectory st =
          solve_state(*s.basis_a, *s.basis_b, s.problem.potential, s.control,
                      s.problem.y0, s.problem.config);
      const AdjointTrajectory ad = solve_adjoint(st, s.problem.cost);
      const int ratio = cfg.convergence.reference_steps / levels[i];
      double es = 0.0, ea_sq = 0.0;
      const double h = level_cfg.time.step();
      for (int n = 0; n <= levels[i]; ++n) {
        es = std::max(es, norm(*s.basis_b, st.y[n] - ref_state.y[n * ratio]));
        if (n >= 1) {
          const Field dq = ad.q[n] - ref_adj.q[n * ratio];
          ea_sq += h * inner(*s.basis_b, dq, dq);
        }
      }
      err_state[i] = es;
      err_adj[i] = std::sqrt(ea_sq);
    }
  };
  const int workers =
      std::min<int>(worker_cap(), static_cast<int>(levels.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    double order_state = 0.0, order_adj = 0.0;
    if (i > 0) {
      order_state = std::log2(err_state[i - 1] / err_state[i]);
      order_adj = std::log2(err_adj[i - 1] / err_adj[i]);
    }
    rows.push_back({static_cast<double>(levels[i]), err_state[i], order_state,
                    err_adj[i], order_adj});
  }
  write_csv(out + "/convergence.csv",
            {"steps", "state_error_linf_h", "state_order", "adjoint_error_l2",
             "adjoint_order"},
            rows);
  if (levels.size() >= 2) {
    man.diagnostics.emplace_back(
        "state_order_last",
        std::log2(err_state[levels.size() - 2] / err_state[levels.size() - 1]));
    man.diagnostics.emplace_back(
        "adjoint_order_last",
        std::log2(err_adj[levels.size() - 2] / err_adj[levels.size() - 1]));
  }
}

void cmd_selftest(const std::string& out, RunManifest& man, std::uint64_t seed) {
  const auto results = run_selfcheck(seed, &std::cout);
  int failures = 0;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].pass) ++failures;
    rows.push_back({static_cast<double>(i + 1), results[i].pass ? 1.0 : 0.0});
    man.notes.push_back((results[i].pass ? "pass: " : "FAIL: ") + results[i].name +
                        " - " + results[i].detail);
  }
  write_csv(out + "/selftest.csv", {"criterion", "pass"}, rows);
  man.diagnostics.emplace_back("selftest_failures", failures);
}

}  // namespace

int worker_cap() {
  const char* env = std::getenv("FCHC_THREADS");
  if (!env) {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
  }
  const int v = std::atoi(env);
  return v < 1 ? 1 : v;
}

RunManifest run_command(const std::string& command, const ExperimentConfig& cfg,
                        const std::string& out_dir, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);

  RunManifest man;
  man.command = command;
  man.config_hash = fnv1a64(cfg.canonical_json());
  man.toolkit_version = kVersion;
  man.seed = seed;

  if (command == "simulate") {
    cmd_simulate(cfg, out_dir, man);
  } else if (command == "linearize") {
    cmd_linearize(cfg, out_dir, man);
  } else if (command == "adjoint") {
    cmd_adjoint(cfg, out_dir, man);
  } else if (command == "grad-check") {
    cmd_grad_check(cfg, out_dir, man, seed);
  } else if (command == "optimize") {
    cmd_optimize(cfg, out_dir, man);
  } else if (command == "convergence") {
    cmd_convergence(cfg, out_dir, man);
  } else if (command == "selftest") {
    cmd_selftest(out_dir, man, seed);
  } else {
    throw ParseError("unknown command '" + command + "'");
  }

  man.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  man.write(out_dir + "/manifest.json");
  return man;
}

}  // namespace fchc
