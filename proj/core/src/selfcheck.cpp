#include "fchc/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iostream>
#include <random>
#include <sstream>

#include "fchc/config.hpp"
#include "fchc/errors.hpp"
#include "fchc/optimizer.hpp"
#include "fchc/sensitivity.hpp"

namespace fchc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Recorded bound for the stability-probe battery (criterion 11): the largest
// ratio observed on the frozen seed is about 1.8; the bound keeps headroom
// and re-runs must reproduce the ratios bit-exactly.
constexpr double kStabilityRecordedBound = 8.0;

struct Fixture {
  DomainSpec domain;
  SpectralBasis basis_a;
  SpectralBasis basis_b;

  Fixture(BoundaryCondition bca, BoundaryCondition bcb, int grid = 128,
          int modes = 64)
      : domain(1, {kPi}, {grid}),
        basis_a(domain, bca, OperatorTag::A, modes),
        basis_b(domain, bcb, OperatorTag::B, modes) {}
};

StateConfig desk_config(double r, double sigma, double T = 0.5, int N = 128) {
  StateConfig cfg;
  cfg.tau = 0.5;
  cfg.r = r;
  cfg.sigma = sigma;
  cfg.grid = TimeGrid(T, N);
  return cfg;
}

Field smooth_field(const SpectralBasis& basis, std::mt19937_64& rng, int nmodes,
                   double amplitude) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Field f = Field::Zero(static_cast<Eigen::Index>(basis.grid_size()));
  const int m = std::min(nmodes, basis.mode_count());
  for (int j = 0; j < m; ++j)
    f += amplitude * gauss(rng) / ((1.0 + j) * (1.0 + j)) * basis.mode_field(j);
  return f;
}

TimeField smooth_control(const SpectralBasis& basis, const TimeGrid& grid,
                         std::mt19937_64& rng, int nmodes, double amplitude) {
  const Field profile = smooth_field(basis, rng, nmodes, amplitude);
  std::uniform_real_distribution<double> unif(0.0, 2.0 * kPi);
  const double phase = unif(rng);
  TimeField u(grid, profile.size());
  for (int n = 0; n <= grid.step_count; ++n)
    u[n] = profile * (1.0 + 0.5 * std::sin(phase + 3.0 * grid.node(n)));
  return u;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::scientific << v;
  return ss.str();
}

// --- criterion 1 -----------------------------------------------------------

CheckResult check_spectral_exactness() {
  // The response along each mode must match lambda_j^s to 1e-12 relative;
  // cross-mode leakage is relative to the operator norm lambda_M^s (the
  // backward-stable measure: leakage in any coefficient is amplified by the
  // largest eigenvalue power, which no double-precision transform can beat
  // mode-by-mode).
  CheckResult res{"spectral exactness (eigenpairs under fractional powers)"};
  double worst_diag = 0.0, worst_leak = 0.0;
  for (BoundaryCondition bc : {BoundaryCondition::neumann, BoundaryCondition::dirichlet}) {
    const Fixture fx(bc, bc);
    for (double s : {0.5, 1.0, 0.8, 1.6}) {
      const FracOperator op(fx.basis_a, s);
      const int M = fx.basis_a.mode_count();
      const double op_norm = std::pow(fx.basis_a.eigenvalue(M - 1), s);
      for (int j = 0; j < M; ++j) {
        const Field ej = fx.basis_a.mode_field(j);
        const Field out = apply_power(op, ej);
        const double lam = fx.basis_a.eigenvalue(j);
        const double target = lam == 0.0 ? 0.0 : std::pow(lam, s);
        const double diag = inner(fx.basis_a, out, ej);
        worst_diag = std::max(worst_diag, std::abs(diag - target) /
                                              std::max(1.0, std::abs(target)));
        const Field leak = out - diag * ej;
        worst_leak =
            std::max(worst_leak, norm(fx.basis_a, leak) / std::max(1.0, op_norm));
      }
    }
  }
  res.pass = worst_diag <= 1e-12 && worst_leak <= 1e-12;
  res.detail = "max per-mode error " + fmt(worst_diag) +
               ", max leakage over the operator norm " + fmt(worst_leak) +
               " (tol 1e-12 each)";
  return res;
}

// --- criterion 2 -----------------------------------------------------------

CheckResult check_mass_conservation(std::uint64_t seed) {
  CheckResult res{"mass conservation with a zero first eigenvalue of A"};
  const Fixture fx(BoundaryCondition::neumann, BoundaryCondition::neumann);
  std::mt19937_64 rng(seed ^ 0x11);
  const StateConfig cfg = desk_config(0.5, 0.8);
  Field y0 = smooth_field(fx.basis_b, rng, 6, 0.4);
  y0.array() += 0.2;
  const TimeField u = smooth_control(fx.basis_b, cfg.grid, rng, 5, 0.3);
  const StateTrajectory traj =
      solve_state(fx.basis_a, fx.basis_b, PotentialSpec::regular(), u, y0, cfg);
  const double m0 = mean(fx.basis_a, traj.y[0]);
  double drift = 0.0;
  for (int n = 0; n <= cfg.grid.step_count; ++n)
    drift = std::max(drift, std::abs(mean(fx.basis_a, traj.y[n]) - m0));
  res.pass = drift <= 1e-10;
  res.detail = "max |mean(y^n) - mean(y^0)| = " + fmt(drift) + " (tol 1e-10)";
  return res;
}

// --- criterion 3 -----------------------------------------------------------

CheckResult check_energy_dissipation(std::uint64_t seed) {
  CheckResult res{"energy dissipation of the convex splitting at u = 0"};
  const Fixture fx(BoundaryCondition::neumann, BoundaryCondition::neumann);
  const StateConfig cfg = desk_config(0.5, 0.8);
  std::mt19937_64 rng(seed ^ 0x22);
  double worst = -1.0;
  for (int trial = 0; trial < 5; ++trial) {
    Field y0 = smooth_field(fx.basis_b, rng, 8, 0.5);
    const double m = y0.cwiseAbs().maxCoeff();
    if (m > 0.8) y0 *= 0.8 / m;
    const TimeField u(cfg.grid, y0.size());
    const StateTrajectory traj =
        solve_state(fx.basis_a, fx.basis_b, PotentialSpec::regular(), u, y0, cfg);
    for (double inc : dissipation_report(traj)) worst = std::max(worst, inc);
  }
  res.pass = worst <= 1e-10;
  res.detail = "max energy increment " + fmt(worst) + " over 5 runs (tol 1e-10)";
  return res;
}

// --- criterion 4 -----------------------------------------------------------

CheckResult check_linear_oracle(std::uint64_t seed) {
  CheckResult res{"linear regime matches the per-mode implicit recursion"};
  const Fixture fx(BoundaryCondition::neumann, BoundaryCondition::neumann);
  const StateConfig cfg = desk_config(0.7, 0.6);
  const int N = cfg.grid.step_count;
  const double h = cfg.grid.step();
  std::mt19937_64 rng(seed ^ 0x33);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const PotentialSpec zero_pot = PotentialSpec::split_polynomial({}, {});

  const int M = fx.basis_b.mode_count();
  Eigen::VectorXd beta0(M), kmode(M);
  for (int j = 0; j < M; ++j) {
    beta0[j] = gauss(rng) / (1.0 + j);
    kmode[j] = gauss(rng) / (1.0 + 0.5 * j);
  }
  const Field y0 = fx.basis_b.synthesize(beta0);
  const Field kfield = fx.basis_b.synthesize(kmode);
  TimeField u(cfg.grid, y0.size());
  for (int n = 0; n <= N; ++n) u[n] = kfield;

  const StateTrajectory traj =
      solve_state(fx.basis_a, fx.basis_b, zero_pot, u, y0, cfg);

  // Oracle: independent scalar recursion per mode.
  double worst = 0.0;
  Eigen::MatrixXd beta_oracle(M, N + 1);
  for (int j = 0; j < M; ++j) {
    const double a = fx.basis_a.eigenvalue(j) == 0.0
                         ? 0.0
                         : std::pow(fx.basis_a.eigenvalue(j), 2.0 * cfg.r);
    const double b = fx.basis_b.eigenvalue(j) == 0.0
                         ? 0.0
                         : std::pow(fx.basis_b.eigenvalue(j), 2.0 * cfg.sigma);
    double bj = beta0[j];
    beta_oracle(j, 0) = bj;
    for (int n = 0; n < N; ++n) {
      bj = ((1.0 + a * cfg.tau) * bj + h * a * kmode[j]) /
           (1.0 + a * cfg.tau + h * a * b);
      beta_oracle(j, n + 1) = bj;
    }
  }
  for (int n = 0; n <= N; ++n) {
    const Field y_oracle = fx.basis_b.synthesize(beta_oracle.col(n));
    worst = std::max(worst, norm(fx.basis_b, traj.y[n] - y_oracle));
  }
  res.pass = worst <= 1e-9;
  res.detail = "Linf(0,T;H) deviation from the mode oracle " + fmt(worst) +
               " (tol 1e-9)";
  return res;
}

// --- criterion 5 -----------------------------------------------------------

CheckResult check_frechet_order(std::uint64_t seed) {
  CheckResult res{"second-order Taylor remainder of the control-to-state map"};
  const Fixture fx(BoundaryCondition::neumann, BoundaryCondition::neumann);
  const StateConfig cfg = desk_config(0.5, 0.8);
  std::mt19937_64 rng(seed ^ 0x44);
  Field y0 = smooth_field(fx.basis_b, rng, 6, 0.4);
  const TimeField u = smooth_control(fx.basis_b, cfg.grid, rng, 4, 0.2);
  const PotentialSpec pot = PotentialSpec::regular();

  double lo = 10.0, hi = 0.0;
  for (int dir = 0; dir < 3; ++dir) {
    const TimeField k = smooth_control(fx.basis_b, cfg.grid, rng, 5, 1.0);
    const double eps = 0.05;
    const double r1 =
        frechet_remainder(fx.basis_a, fx.basis_b, pot, u, y0, cfg, k, eps);
    const double r2 =
        frechet_remainder(fx.basis_a, fx.basis_b, pot, u, y0, cfg, k, eps / 2.0);
    const double ratio = r1 / r2;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  res.pass = lo >= 3.5 && hi <= 4.5;
  res.detail = "remainder ratios in [" + fmt(lo) + ", " + fmt(hi) +
               "] (required within [3.5, 4.5])";
  return res;
}

// --- criterion 6 -----------------------------------------------------------

CheckResult check_duality(std::uint64_t seed) {
  CheckResult res{"discrete duality pairing of linearized and adjoint systems"};
  std::mt19937_64 rng(seed ^ 0x55);
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  double worst = 0.0;

  struct Setup {
    BoundaryCondition bca, bcb;
    PotentialSpec pot;
    double r, sigma;
  };
  const std::vector<Setup> setups = {
      {BoundaryCondition::neumann, BoundaryCondition::neumann,
       PotentialSpec::regular(), 0.5, 0.8},
      {BoundaryCondition::dirichlet, BoundaryCondition::neumann,
       PotentialSpec::logarithmic(2.0, 1e-4), 0.5, 0.5},
      {BoundaryCondition::dirichlet, BoundaryCondition::dirichlet,
       PotentialSpec::regular(), 0.7, 0.55},
      {BoundaryCondition::neumann, BoundaryCondition::neumann,
       PotentialSpec::split_polynomial({0.0, 0.0, 0.0, 0.0, 0.25}, {0.0, 0.0, -0.5}),
       0.4, 0.9},
      {BoundaryCondition::dirichlet, BoundaryCondition::neumann,
       PotentialSpec::regular(), 0.6, 0.5},
  };

  for (const auto& s : setups) {
    const Fixture fx(s.bca, s.bcb, 128, 48);
    const StateConfig cfg = desk_config(s.r, s.sigma, 0.25, 64);
    Field y0 = smooth_field(fx.basis_b, rng, 5, 0.3);
    const TimeField u = smooth_control(fx.basis_b, cfg.grid, rng, 4, 0.15);
    const StateTrajectory traj = solve_state(fx.basis_a, fx.basis_b, s.pot, u, y0, cfg);

    CostSpec cost;
    cost.alpha1 = unif(rng);
    cost.alpha2 = unif(rng);
    cost.alpha3 = unif(rng);
    cost.y_omega = smooth_field(fx.basis_b, rng, 6, 0.5);
    cost.y_q = smooth_control(fx.basis_b, cfg.grid, rng, 6, 0.5);

    const TimeField k = smooth_control(fx.basis_b, cfg.grid, rng, 5, 1.0);
    const LinearizedTrajectory lin = solve_linearized(traj, k, LinearizedScheme::plain);
    const AdjointTrajectory adj = solve_adjoint(traj, cost);
    worst = std::max(worst, adjoint_identity_residual(lin, adj, k, cost));
  }
  res.pass = worst <= 1e-10;
  res.detail = "max duality residual " + fmt(worst) +
               " over 5 setups (tol 1e-10)";
  return res;
}

// --- criterion 7 -----------------------------------------------------------

CheckResult check_gradient(std::uint64_t seed) {
  CheckResult res{"adjoint gradient against central finite differences"};
  const ExperimentConfig cfg = load_config_text(preset_json("example2_regular"),
                                                "example2_regular");
  ExperimentSetup setup = build_setup(cfg);
  const Evaluation ev = evaluate(setup.problem, setup.control);

  std::mt19937_64 rng(seed ^ 0x66);
  const int N = cfg.time.step_count;
  double worst = 0.0;
  for (int dir = 0; dir < 5; ++dir) {
    const TimeField k = smooth_control(*setup.basis_b, cfg.time, rng, 6, 1.0);
    const double pairing = inner_l2q(*setup.basis_b, ev.gradient, k);
    double best = 1.0;
    for (double eps : {1e-3, 1e-4, 1e-5}) {
      TimeField up = setup.control, um = setup.control;
      for (int n = 0; n <= N; ++n) {
        up[n] += eps * k[n];
        um[n] -= eps * k[n];
      }
      const double fd = (reduced_cost(setup.problem, up) -
                         reduced_cost(setup.problem, um)) /
                        (2.0 * eps);
      best = std::min(best, std::abs(pairing - fd) /
                                (std::abs(pairing) + std::abs(fd) + 1e-30));
    }
    worst = std::max(worst, best);
  }
  res.pass = worst <= 1e-5;
  res.detail = "worst relative gradient error " + fmt(worst) +
               " over 5 directions (tol 1e-5)";
  return res;
}

// --- criterion 8 -----------------------------------------------------------

CheckResult check_optimality(std::uint64_t seed) {
  CheckResult res{"projected gradient reaches the first-order conditions"};
  const Fixture fx(BoundaryCondition::neumann, BoundaryCondition::neumann);
  StateConfig cfg = desk_config(0.5, 0.8, 0.25, 128);
  std::mt19937_64 rng(seed ^ 0x77);

  Field y0 = smooth_field(fx.basis_b, rng, 4, 0.3);
  TimeField u_dag(cfg.grid, y0.size());
  const Field profile = 0.3 * fx.basis_b.mode_field(0) + 0.2 * fx.basis_b.mode_field(1);
  for (int n = 0; n <= cfg.grid.step_count; ++n)
    u_dag[n] = profile * std::sin(2.0 * kPi * cfg.grid.node(n) / cfg.grid.horizon);

  const PotentialSpec pot = PotentialSpec::regular();
  const StateTrajectory target =
      solve_state(fx.basis_a, fx.basis_b, pot, u_dag, y0, cfg);

  ControlProblem problem;
  problem.basis_a = &fx.basis_a;
  problem.basis_b = &fx.basis_b;
  problem.potential = pot;
  problem.y0 = y0;
  problem.config = cfg;
  problem.cost.alpha1 = 0.2;
  problem.cost.alpha2 = 0.5;
  problem.cost.alpha3 = 0.1;
  problem.cost.y_omega = target.y[cfg.grid.step_count];
  problem.cost.y_q = target.y;
  problem.admissible.rho1 = 5.0;

  const TimeField u0(cfg.grid, y0.size());
  const OptimizeReport rep = optimize(problem, u0, 200, 1e-8);

  bool monotone = true;
  for (std::size_t i = 1; i < rep.cost_history.size(); ++i)
    if (rep.cost_history[i] >
        rep.cost_history[i - 1] + 1e-13 * (1.0 + std::abs(rep.cost_history[i - 1])))
      monotone = false;
  const double unorm = norm_l2q(fx.basis_b, rep.control);
  const bool proj_ok = rep.projection_formula_residual >= 0.0 &&
                       rep.projection_formula_residual <= 1e-6 * (1.0 + unorm);
  res.pass = rep.reason == TerminationReason::stationary &&
             rep.stationarity <= 1e-6 && rep.iterations <= 200 && monotone && proj_ok;
  res.detail = "stationarity " + fmt(rep.stationarity) + " after " +
               std::to_string(rep.iterations) + " iterations, |u + q/a3| = " +
               fmt(rep.projection_formula_residual) + " (tol 1e-6 scaled)";
  return res;
}

// --- criterion 9 -----------------------------------------------------------

CheckResult check_convergence(std::uint64_t seed) {
  CheckResult res{"first-order accuracy in time; adjoint consistency"};
  const Fixture fx(BoundaryCondition::neumann, BoundaryCondition::neumann);
  std::mt19937_64 rng(seed ^ 0x88);
  Field y0 = smooth_field(fx.basis_b, rng, 5, 0.4);
  const PotentialSpec pot = PotentialSpec::regular();

  CostSpec cost;
  cost.alpha1 = 0.3;
  cost.alpha2 = 1.0;
  cost.alpha3 = 0.1;
  cost.y_omega = smooth_field(fx.basis_b, rng, 4, 0.3);

  const int ref_steps = 2048;
  const StateConfig ref_cfg = desk_config(0.5, 0.8, 0.5, ref_steps);
  const TimeField u_ref = [&] {
    std::mt19937_64 r2(seed ^ 0x99);
    return smooth_control(fx.basis_b, ref_cfg.grid, r2, 4, 0.25);
  }();
  cost.y_q = TimeField(ref_cfg.grid, y0.size());
  for (int n = 0; n <= ref_steps; ++n) cost.y_q[n] = cost.y_omega * 0.5;
  const StateTrajectory ref_state =
      solve_state(fx.basis_a, fx.basis_b, pot, u_ref, y0, ref_cfg);
  const AdjointTrajectory ref_adj =
      solve_adjoint(ref_state, cost, AdjointScheme::direct);

  std::vector<int> levels = {32, 64, 128};
  std::vector<double> es, ea;
  for (int N : levels) {
    const StateConfig cfg = desk_config(0.5, 0.8, 0.5, N);
    const int ratio = ref_steps / N;
    TimeField u(cfg.grid, y0.size());
    for (int n = 0; n <= N; ++n) u[n] = u_ref[n * ratio];
    CostSpec cost_level = cost;
    cost_level.y_q = TimeField(cfg.grid, y0.size());
    for (int n = 0; n <= N; ++n) cost_level.y_q[n] = cost.y_q[n * ratio];

    const StateTrajectory st = solve_state(fx.basis_a, fx.basis_b, pot, u, y0, cfg);
    const AdjointTrajectory ad = solve_adjoint(st, cost_level);
    double e_state = 0.0, e_adj_sq = 0.0;
    for (int n = 0; n <= N; ++n) {
      e_state = std::max(e_state, norm(fx.basis_b, st.y[n] - ref_state.y[n * ratio]));
      if (n >= 1) {
        const Field dq = ad.q[n] - ref_adj.q[n * ratio];
        e_adj_sq += cfg.grid.step() * inner(fx.basis_b, dq, dq);
      }
    }
    es.push_back(e_state);
    ea.push_back(std::sqrt(e_adj_sq));
  }

  // Least-squares slope of log2(error) against log2(N).
  auto slope = [&](const std::vector<double>& e) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int m = static_cast<int>(e.size());
    for (int i = 0; i < m; ++i) {
      const double x = std::log2(static_cast<double>(levels[static_cast<std::size_t>(i)]));
      const double y = std::log2(e[static_cast<std::size_t>(i)]);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  const double state_order = slope(es);
  const double adj_order = slope(ea);
  res.pass = state_order >= 0.7 && state_order <= 1.3 && adj_order >= 0.7;
  res.detail = "state order " + fmt(state_order) + " (required 1.0 +- 0.3), " +
               "adjoint-consistency order " + fmt(adj_order) + " (required >= 0.7)";
  return res;
}

// --- criterion 10 ----------------------------------------------------------

CheckResult check_gb_monitor() {
  CheckResult res{"logarithmic run stays separated from the singular endpoints"};
  const ExperimentConfig cfg =
      load_config_text(preset_json("example1_log"), "example1_log");
  ExperimentSetup setup = build_setup(cfg);
  const StateTrajectory traj =
      solve_state(*setup.basis_a, *setup.basis_b, setup.problem.potential,
                  setup.control, setup.problem.y0, setup.problem.config);
  const double reach = std::max(std::abs(traj.gb.min_y), std::abs(traj.gb.max_y));
  const double delta_obs = 1.0 - reach;

  // A tight monitor interval must abort with DomainViolation mid-run once a
  // nonconstant force drives the state across it (a constant force could
  // not; the mean is conserved).
  bool aborted = false;
  ExperimentConfig tight = cfg;
  tight.state.gb_interval = std::make_pair(-0.45, 0.45);
  tight.control.kind = "mode_sum";
  tight.control.modes = {{1, 3.0}};
  try {
    ExperimentSetup s2 = build_setup(tight);
    solve_state(*s2.basis_a, *s2.basis_b, s2.problem.potential, s2.control,
                s2.problem.y0, s2.problem.config);
  } catch (const DomainViolation&) {
    aborted = true;
  }
  res.pass = delta_obs > 0.0 && !traj.gb.violated && aborted;
  res.detail = "observed separation " + fmt(delta_obs) +
               std::string(aborted ? "; tightened monitor aborted as required"
                                   : "; tightened monitor failed to abort");
  return res;
}

// --- criterion 11 ----------------------------------------------------------

CheckResult check_stability(std::uint64_t seed) {
  CheckResult res{"stability-probe ratios bounded and reproducible"};
  const Fixture fx(BoundaryCondition::neumann, BoundaryCondition::neumann);
  const StateConfig cfg = desk_config(0.5, 0.8, 0.25, 64);

  auto battery = [&]() {
    std::mt19937_64 rng(seed ^ 0xAA);
    Field y0 = smooth_field(fx.basis_b, rng, 4, 0.3);
    std::vector<double> ratios;
    for (int trial = 0; trial < 10; ++trial) {
      const TimeField u1 = smooth_control(fx.basis_b, cfg.grid, rng, 4, 0.2);
      const TimeField u2 = smooth_control(fx.basis_b, cfg.grid, rng, 4, 0.2);
      ratios.push_back(stability_probe(fx.basis_a, fx.basis_b,
                                       PotentialSpec::regular(), u1, u2, y0, cfg)
                           .ratio);
    }
    return ratios;
  };
  const std::vector<double> first = battery();
  const std::vector<double> second = battery();
  const bool reproducible =
      std::memcmp(first.data(), second.data(), first.size() * sizeof(double)) == 0;
  const double worst = *std::max_element(first.begin(), first.end());
  res.pass = reproducible && worst <= kStabilityRecordedBound;
  res.detail = "max ratio " + fmt(worst) + " (recorded bound " +
               fmt(kStabilityRecordedBound) + "), re-run " +
               (reproducible ? "bit-identical" : "DIFFERS");
  return res;
}

// --- criterion 12 ----------------------------------------------------------

CheckResult check_interp_gronwall(std::uint64_t seed) {
  CheckResult res{"interpolant identities and the discrete Gronwall bound"};
  std::mt19937_64 rng(seed ^ 0xBB);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  double worst = 0.0;
  bool inequalities = true;
  for (int trial = 0; trial < 20; ++trial) {
    const int N = 1 + static_cast<int>(unif(rng) * 12);
    const int dim = 1 + static_cast<int>(unif(rng) * 4);
    TimeField tf(TimeGrid(0.25 + unif(rng), N), dim);
    for (auto& v : tf.values)
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    const auto rep = interp_identity_residuals(tf);
    worst = std::max(worst, rep.max_equality_residual);
    inequalities = inequalities && rep.inequalities_hold;
  }

  bool gronwall_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int N = 1 + static_cast<int>(unif(rng) * 19);
    const double M = unif(rng) * 3.0;
    std::vector<double> b(static_cast<std::size_t>(N));
    for (auto& x : b) x = unif(rng) * 0.5;
    const auto bound = discrete_gronwall_bound(M, b);
    double a = 0.0;
    std::vector<double> history;
    for (int k = 0; k <= N; ++k) {
      a = M;
      for (int n = 0; n < k; ++n) a += b[static_cast<std::size_t>(n)] * history[static_cast<std::size_t>(n)];
      history.push_back(a);
      if (a > bound[static_cast<std::size_t>(k)] * (1.0 + 1e-12)) gronwall_ok = false;
    }
  }

  res.pass = worst <= 1e-12 && inequalities && gronwall_ok;
  res.detail = "max identity residual " + fmt(worst) +
               " (tol 1e-12); inequalities " + (inequalities ? "hold" : "FAIL") +
               "; Gronwall domination " + (gronwall_ok ? "holds" : "FAIL");
  return res;
}

}  // namespace

std::vector<CheckResult> run_selfcheck(std::uint64_t seed, std::ostream* out) {
  std::vector<CheckResult> results;
  auto run = [&](int idx, CheckResult r) {
    results.push_back(r);
    if (out)
      (*out) << "criterion " << idx << " [" << r.name << "]: "
             << (r.pass ? "PASS" : "FAIL") << " - " << r.detail << "\n"
             << std::flush;
  };
  run(1, check_spectral_exactness());
  run(2, check_mass_conservation(seed));
  run(3, check_energy_dissipation(seed));
  run(4, check_linear_oracle(seed));
  run(5, check_frechet_order(seed));
  run(6, check_duality(seed));
  run(7, check_gradient(seed));
  run(8, check_optimality(seed));
  run(9, check_convergence(seed));
  run(10, check_gb_monitor());
  run(11, check_stability(seed));
  run(12, check_interp_gronwall(seed));
  return results;
}

}  // namespace fchc
