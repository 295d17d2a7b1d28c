#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fchc/errors.hpp"
#include "fchc/state.hpp"

using namespace fchc;

namespace {
constexpr double kPi = 3.14159265358979323846;

struct Lab {
  DomainSpec dom{1, {kPi}, {64}};
  SpectralBasis A{dom, BoundaryCondition::neumann, OperatorTag::A, 24};
  SpectralBasis B{dom, BoundaryCondition::neumann, OperatorTag::B, 24};
  StateConfig cfg;

  Lab(double r = 0.5, double sigma = 0.8, double T = 0.5, int N = 32) {
    cfg.tau = 0.5;
    cfg.r = r;
    cfg.sigma = sigma;
    cfg.grid = TimeGrid(T, N);
  }
  Eigen::Index G() const { return static_cast<Eigen::Index>(dom.node_count()); }
};

Field smooth(const SpectralBasis& basis, std::mt19937_64& rng, int modes, double amp) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Field f = Field::Zero(static_cast<Eigen::Index>(basis.grid_size()));
  for (int j = 0; j < modes; ++j)
    f += amp * gauss(rng) / ((1 + j) * (1 + j)) * basis.mode_field(j);
  return f;
}
}  // namespace

TEST_CASE("spatially homogeneous run reduces to the scalar fixed point") {
  Lab lab;
  const Field y0 = Field::Constant(lab.G(), 0.3);
  const TimeField u(lab.cfg.grid, lab.G());
  const auto traj =
      solve_state(lab.A, lab.B, PotentialSpec::regular(), u, y0, lab.cfg);
  const double mu_expected = 0.3 * 0.3 * 0.3 - 0.3;  // f'(0.3)
  for (int n = 0; n <= lab.cfg.grid.step_count; ++n) {
    CHECK((traj.y[n].array() - 0.3).abs().maxCoeff() < 1e-11);
    CHECK((traj.mu[n].array() - mu_expected).abs().maxCoeff() < 1e-10);
  }
  // a steady state converges within a correction or two
  for (int c : traj.newton_iteration_counts) CHECK(c <= 2);
}

TEST_CASE("pure-phase constants are fixed points") {
  Lab lab;
  const TimeField u(lab.cfg.grid, lab.G());
  for (double m : {-1.0, 0.0, 1.0}) {
    const Field y0 = Field::Constant(lab.G(), m);
    const auto traj =
        solve_state(lab.A, lab.B, PotentialSpec::regular(), u, y0, lab.cfg);
    CHECK((traj.y[lab.cfg.grid.step_count].array() - m).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("per-mode decay factor in the linear regime") {
  Lab lab(0.7, 0.6);
  const PotentialSpec zero = PotentialSpec::split_polynomial({}, {});
  const TimeField u(lab.cfg.grid, lab.G());
  const Field y0 = lab.B.mode_field(1);
  const auto traj = solve_state(lab.A, lab.B, zero, u, y0, lab.cfg);

  const double a = std::pow(lab.A.eigenvalue(1), 2 * lab.cfg.r);
  const double b = std::pow(lab.B.eigenvalue(1), 2 * lab.cfg.sigma);
  const double h = lab.cfg.grid.step();
  const double factor = 1.0 / (1.0 + h * a * b / (1.0 + lab.cfg.tau * a));
  double amp = 1.0;
  for (int n = 1; n <= lab.cfg.grid.step_count; ++n) {
    amp *= factor;
    const Field expected = amp * y0;
    CHECK(norm(lab.B, traj.y[n] - expected) < 1e-10);
  }
}

TEST_CASE("mass is conserved when the first eigenvalue of A vanishes") {
  Lab lab;
  std::mt19937_64 rng(5);
  Field y0 = smooth(lab.B, rng, 8, 0.4);
  y0.array() += 0.15;
  TimeField u(lab.cfg.grid, lab.G());
  for (int n = 0; n <= lab.cfg.grid.step_count; ++n)
    u[n] = smooth(lab.B, rng, 4, 0.2);
  const auto traj =
      solve_state(lab.A, lab.B, PotentialSpec::regular(), u, y0, lab.cfg);
  const double m0 = mean(lab.A, traj.y[0]);
  for (int n = 0; n <= lab.cfg.grid.step_count; ++n)
    CHECK(std::abs(mean(lab.A, traj.y[n]) - m0) <= 1e-10);
}

TEST_CASE("energy decreases without forcing") {
  Lab lab;
  std::mt19937_64 rng(7);
  const TimeField u(lab.cfg.grid, lab.G());
  for (int trial = 0; trial < 3; ++trial) {
    Field y0 = smooth(lab.B, rng, 8, 0.5);
    const double m = y0.cwiseAbs().maxCoeff();
    if (m > 0.8) y0 *= 0.8 / m;
    const auto traj =
        solve_state(lab.A, lab.B, PotentialSpec::regular(), u, y0, lab.cfg);
    for (double inc : dissipation_report(traj)) CHECK(inc <= 1e-10);
  }
}

TEST_CASE("energy closed forms") {
  Lab lab;
  const PotentialSpec reg = PotentialSpec::regular();
  // constant state: E = |Omega| f(m)
  const double m = 0.4;
  const double fm = 0.25 * (m * m - 1) * (m * m - 1);
  CHECK(energy(lab.B, reg, Field::Constant(lab.G(), m), lab.cfg.sigma) ==
        doctest::Approx(kPi * fm).epsilon(1e-12));
  // pure phase: E = 0
  CHECK(energy(lab.B, reg, Field::Constant(lab.G(), 1.0), lab.cfg.sigma) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // single mode with zero potential: E = a^2 lambda^{2 sigma} / 2
  const PotentialSpec zero = PotentialSpec::split_polynomial({}, {});
  const double a = 0.7;
  const double lam = lab.B.eigenvalue(1);
  CHECK(energy(lab.B, zero, a * lab.B.mode_field(1), lab.cfg.sigma) ==
        doctest::Approx(0.5 * a * a * std::pow(lam, 2 * lab.cfg.sigma))
            .epsilon(1e-12));
}

TEST_CASE("linear-regime energy increments match the mode oracle") {
  Lab lab(0.5, 0.8);
  const PotentialSpec zero = PotentialSpec::split_polynomial({}, {});
  const TimeField u(lab.cfg.grid, lab.G());
  const double a0 = 0.6;
  const Field y0 = a0 * lab.B.mode_field(2);
  const auto traj = solve_state(lab.A, lab.B, zero, u, y0, lab.cfg);
  const auto inc = dissipation_report(traj);

  const double a = std::pow(lab.A.eigenvalue(2), 2 * lab.cfg.r);
  const double lamb = std::pow(lab.B.eigenvalue(2), 2 * lab.cfg.sigma);
  const double h = lab.cfg.grid.step();
  const double factor = 1.0 / (1.0 + h * a * lamb / (1.0 + lab.cfg.tau * a));
  double amp = a0;
  for (std::size_t n = 0; n < inc.size(); ++n) {
    const double enow = 0.5 * amp * amp * lamb;
    const double enext = 0.5 * amp * factor * amp * factor * lamb;
    CHECK(inc[n] == doctest::Approx(enext - enow).epsilon(1e-9));
    amp *= factor;
  }
}

TEST_CASE("temporal convergence at first order") {
  Lab lab(0.5, 0.8, 0.5, 16);
  std::mt19937_64 rng(11);
  const Field y0 = smooth(lab.B, rng, 5, 0.4);
  const PotentialSpec reg = PotentialSpec::regular();

  auto run = [&](int N) {
    StateConfig cfg = lab.cfg;
    cfg.grid = TimeGrid(0.5, N);
    const TimeField u(cfg.grid, lab.G());
    return solve_state(lab.A, lab.B, reg, u, y0, cfg);
  };
  const auto ref = run(512);
  std::vector<double> err;
  for (int N : {16, 32, 64}) {
    const auto traj = run(N);
    double e = 0.0;
    const int ratio = 512 / N;
    for (int n = 0; n <= N; ++n)
      e = std::max(e, norm(lab.B, traj.y[n] - ref.y[n * ratio]));
    err.push_back(e);
  }
  const double o1 = std::log2(err[0] / err[1]);
  const double o2 = std::log2(err[1] / err[2]);
  CHECK(o1 >= 0.7);
  CHECK(o1 <= 1.3);
  CHECK(o2 >= 0.7);
  CHECK(o2 <= 1.3);
}

TEST_CASE("admissibility monitor aborts escaping runs") {
  Lab lab;
  StateConfig cfg = lab.cfg;
  cfg.gb_interval = std::make_pair(-0.12, 0.12);
  // A nonconstant force grows the first cosine mode past the window (a
  // constant one could not: the mean is conserved).
  TimeField u(lab.cfg.grid, lab.G());
  for (int n = 0; n <= lab.cfg.grid.step_count; ++n)
    u[n] = 4.0 * lab.B.mode_field(1);
  CHECK_THROWS_AS(solve_state(lab.A, lab.B, PotentialSpec::regular(), u,
                              Field::Constant(lab.G(), 0.0), cfg),
                  DomainViolation);
}

TEST_CASE("logarithmic runs stay separated and report the observed range") {
  Lab lab(0.5, 0.5, 0.25, 32);
  std::mt19937_64 rng(17);
  Field y0 = smooth(lab.B, rng, 4, 0.3);
  const TimeField u(lab.cfg.grid, lab.G());
  const auto traj = solve_state(lab.A, lab.B, PotentialSpec::logarithmic(2.0, 1e-4),
                                u, y0, lab.cfg);
  CHECK(!traj.gb.violated);
  CHECK(traj.gb.max_y < 1.0);
  CHECK(traj.gb.min_y > -1.0);
  CHECK(traj.c_hat > 0.0);
}

TEST_CASE("initial data outside the potential domain is rejected") {
  Lab lab;
  const TimeField u(lab.cfg.grid, lab.G());
  CHECK_THROWS_AS(solve_state(lab.A, lab.B, PotentialSpec::logarithmic(2.0, 1e-4), u,
                              Field::Constant(lab.G(), 0.99995), lab.cfg),
                  DomainViolation);
}

TEST_CASE("input validation") {
  Lab lab;
  const TimeField u(lab.cfg.grid, lab.G());
  StateConfig bad = lab.cfg;
  bad.tau = 0.0;
  CHECK_THROWS_AS(solve_state(lab.A, lab.B, PotentialSpec::regular(), u,
                              Field::Zero(lab.G()), bad),
                  ValidationError);

  // zero-mode A with a Dirichlet B cannot resolve the mean constraint
  SpectralBasis bdir(lab.dom, BoundaryCondition::dirichlet, OperatorTag::B, 24);
  CHECK_THROWS_AS(solve_state(lab.A, bdir, PotentialSpec::regular(), u,
                              Field::Zero(lab.G()), lab.cfg),
                  ValidationError);

  CHECK_THROWS_AS(solve_state(lab.A, lab.B, PotentialSpec::regular(), u,
                              Field::Zero(12), lab.cfg),
                  ShapeMismatch);
}

TEST_CASE("two-dimensional box runs conserve mass and dissipate energy") {
  DomainSpec dom(2, {kPi, kPi}, {16, 16});
  SpectralBasis A(dom, BoundaryCondition::neumann, OperatorTag::A, 25);
  SpectralBasis B(dom, BoundaryCondition::neumann, OperatorTag::B, 25);
  StateConfig cfg;
  cfg.tau = 0.5;
  cfg.r = 0.5;
  cfg.sigma = 0.8;
  cfg.grid = TimeGrid(0.25, 12);
  std::mt19937_64 rng(23);
  Field y0 = smooth(B, rng, 8, 0.4);
  y0.array() += 0.1;
  const TimeField u(cfg.grid, static_cast<Eigen::Index>(dom.node_count()));
  const auto traj = solve_state(A, B, PotentialSpec::regular(), u, y0, cfg);
  const double m0 = mean(A, traj.y[0]);
  for (int n = 0; n <= cfg.grid.step_count; ++n)
    CHECK(std::abs(mean(A, traj.y[n]) - m0) <= 1e-10);
  for (double inc : dissipation_report(traj)) CHECK(inc <= 1e-10);
}

TEST_CASE("stability probe") {
  Lab lab(0.5, 0.8, 0.25, 24);
  std::mt19937_64 rng(19);
  const Field y0 = smooth(lab.B, rng, 4, 0.3);

  TimeField u1(lab.cfg.grid, lab.G());
  CHECK_THROWS_AS(stability_probe(lab.A, lab.B, PotentialSpec::regular(), u1, u1,
                                  y0, lab.cfg),
                  IdenticalControls);

  // linear regime: the ratio matches the per-mode transfer computed from the
  // scalar recursion
  const PotentialSpec zero = PotentialSpec::split_polynomial({}, {});
  TimeField u2 = u1;
  const int j = 2;
  const double pulse = 0.35;
  for (int n = 0; n <= lab.cfg.grid.step_count; ++n)
    u2[n] = pulse * lab.B.mode_field(j);
  const auto rep =
      stability_probe(lab.A, lab.B, zero, u1, u2, Field::Zero(lab.G()), lab.cfg);

  const double a = std::pow(lab.A.eigenvalue(j), 2 * lab.cfg.r);
  const double b = std::pow(lab.B.eigenvalue(j), 2 * lab.cfg.sigma);
  const double h = lab.cfg.grid.step();
  const int N = lab.cfg.grid.step_count;
  const double T = lab.cfg.grid.horizon;
  std::vector<double> beta(static_cast<std::size_t>(N) + 1, 0.0);
  std::vector<double> alpha(static_cast<std::size_t>(N) + 1, 0.0);
  for (int n = 0; n < N; ++n) {
    beta[n + 1] = ((1 + a * lab.cfg.tau) * beta[n] + h * a * pulse) /
                  (1 + a * lab.cfg.tau + h * a * b);
    alpha[n + 1] =
        lab.cfg.tau / h * (beta[n + 1] - beta[n]) + b * beta[n + 1] - pulse;
  }
  // norms of the single-mode trajectories
  double mu_sq = 0, y_sq = 0, dt_sq = 0, y_linf = 0;
  for (int n = 1; n <= N; ++n) {
    const double apow = std::pow(lab.A.eigenvalue(j), 2 * (2 * lab.cfg.r));
    mu_sq += h * (apow * alpha[n] * alpha[n]);
    y_sq += h * beta[n] * beta[n];
    dt_sq += (beta[n] - beta[n - 1]) * (beta[n] - beta[n - 1]) / h;
    y_linf = std::max(y_linf, std::abs(beta[n]) * std::sqrt(1.0 + b));
  }
  const double expected =
      (std::sqrt(mu_sq) + std::sqrt(y_sq + dt_sq) + y_linf) /
      (pulse * std::sqrt(T));
  CHECK(rep.ratio == doctest::Approx(expected).epsilon(1e-6));

  // nonlinear case: bounded by a recorded constant over random pairs
  double worst = 0;
  for (int trial = 0; trial < 5; ++trial) {
    TimeField a1(lab.cfg.grid, lab.G()), a2(lab.cfg.grid, lab.G());
    for (int n = 0; n <= lab.cfg.grid.step_count; ++n) {
      a1[n] = smooth(lab.B, rng, 4, 0.2);
      a2[n] = smooth(lab.B, rng, 4, 0.2);
    }
    worst = std::max(worst, stability_probe(lab.A, lab.B, PotentialSpec::regular(),
                                            a1, a2, y0, lab.cfg)
                                .ratio);
  }
  CHECK(worst <= 8.0);  // recorded bound for this configuration
}
