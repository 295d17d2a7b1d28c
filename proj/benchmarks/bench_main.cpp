#include <benchmark/benchmark.h>

#include <random>

#include "fchc/sensitivity.hpp"
#include "fchc/state.hpp"

namespace {

using namespace fchc;

constexpr double kPi = 3.14159265358979323846;

struct Bench {
  DomainSpec dom;
  SpectralBasis A;
  SpectralBasis B;
  StateConfig cfg;
  Field y0;
  TimeField u;

  explicit Bench(int modes, int steps)
      : dom(1, {kPi}, {2 * modes}),
        A(dom, BoundaryCondition::neumann, OperatorTag::A, modes),
        B(dom, BoundaryCondition::neumann, OperatorTag::B, modes) {
    cfg.tau = 0.5;
    cfg.r = 0.5;
    cfg.sigma = 0.8;
    cfg.grid = TimeGrid(0.25, steps);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    y0 = Field::Zero(static_cast<Eigen::Index>(dom.node_count()));
    for (int j = 0; j < 6; ++j)
      y0 += 0.3 * gauss(rng) / ((1 + j) * (1 + j)) * B.mode_field(j);
    u = TimeField(cfg.grid, y0.size());
    for (int n = 0; n <= steps; ++n)
      u[n] = 0.2 * B.mode_field(1) * std::sin(3.0 * cfg.grid.node(n));
  }
};

void BM_BasisBuild(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  DomainSpec dom(1, {kPi}, {2 * modes});
  for (auto _ : state) {
    SpectralBasis basis(dom, BoundaryCondition::neumann, OperatorTag::A, modes);
    benchmark::DoNotOptimize(basis.eigenvalues());
  }
}
BENCHMARK(BM_BasisBuild)->Arg(32)->Arg(64)->Arg(128);

void BM_Transform(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  Bench b(modes, 8);
  const Eigen::VectorXd c = b.B.analyze(b.y0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(b.B.analyze(b.B.synthesize(c)));
  }
}
BENCHMARK(BM_Transform)->Arg(32)->Arg(64)->Arg(128);

void BM_ApplyPower(benchmark::State& state) {
  Bench b(64, 8);
  const FracOperator op(b.B, 1.6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_power(op, b.y0));
  }
}
BENCHMARK(BM_ApplyPower);

void BM_StateSolve(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  Bench b(modes, 32);
  const PotentialSpec pot = PotentialSpec::regular();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_state(b.A, b.B, pot, b.u, b.y0, b.cfg));
  }
}
BENCHMARK(BM_StateSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_AdjointSolve(benchmark::State& state) {
  Bench b(64, 32);
  const PotentialSpec pot = PotentialSpec::regular();
  const StateTrajectory traj = solve_state(b.A, b.B, pot, b.u, b.y0, b.cfg);
  CostSpec cost;
  cost.alpha1 = 0.5;
  cost.alpha2 = 1.0;
  cost.alpha3 = 0.1;
  cost.y_omega = Field::Zero(b.y0.size());
  cost.y_q = TimeField(b.cfg.grid, b.y0.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_adjoint(traj, cost));
  }
}
BENCHMARK(BM_AdjointSolve)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
