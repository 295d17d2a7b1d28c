#include "fchc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fchc/errors.hpp"

namespace fchc {

void AdmissibleSet::validate() const {
  if (!(rho1 > 0.0)) throw ValidationError("box bound rho1 must be positive");
  if (!(rho2 > 0.0)) throw ValidationError("H1 bound rho2 must be positive");
}

double inner_l2q(const SpectralBasis& basis, const TimeField& a, const TimeField& b) {
  if (a.grid != b.grid) throw ShapeMismatch("time grids differ");
  const double h = a.grid.step();
  double acc = 0.0;
  for (int n = 1; n <= a.grid.step_count; ++n) acc += h * inner(basis, a[n], b[n]);
  return acc;
}

double norm_l2q(const SpectralBasis& basis, const TimeField& a) {
  return std::sqrt(std::max(0.0, inner_l2q(basis, a, a)));
}

double norm_h1(const SpectralBasis& basis, const TimeField& u) {
  const double h = u.grid.step();
  double acc = 0.0;
  for (int n = 0; n <= u.grid.step_count; ++n) acc += h * inner(basis, u[n], u[n]);
  for (int n = 0; n < u.grid.step_count; ++n) {
    const Field d = u[n + 1] - u[n];
    acc += inner(basis, d, d) / h;
  }
  return std::sqrt(std::max(0.0, acc));
}

namespace {

double cost_of(const ControlProblem& problem, const StateTrajectory& traj,
               const TimeField& u) {
  const SpectralBasis& B = *problem.basis_b;
  const double h = problem.config.grid.step();
  const int N = problem.config.grid.step_count;
  double J = 0.0;
  if (problem.cost.alpha1 > 0.0) {
    const Field d = traj.y[N] - problem.cost.y_omega;
    J += 0.5 * problem.cost.alpha1 * inner(B, d, d);
  }
  for (int n = 1; n <= N; ++n) {
    if (problem.cost.alpha2 > 0.0) {
      const Field d = traj.y[n] - problem.cost.y_q[n];
      J += 0.5 * problem.cost.alpha2 * h * inner(B, d, d);
    }
    J += 0.5 * problem.cost.alpha3 * h * inner(B, u[n], u[n]);
  }
  return J;
}

}  // namespace

double reduced_cost(const ControlProblem& problem, const TimeField& u) {
  const StateTrajectory traj = solve_state(*problem.basis_a, *problem.basis_b,
                                           problem.potential, u, problem.y0,
                                           problem.config);
  return cost_of(problem, traj, u);
}

Evaluation evaluate(const ControlProblem& problem, const TimeField& u) {
  Evaluation ev;
  ev.state = solve_state(*problem.basis_a, *problem.basis_b, problem.potential, u,
                         problem.y0, problem.config);
  ev.adjoint = solve_adjoint(ev.state, problem.cost, AdjointScheme::transpose);
  ev.cost = cost_of(problem, ev.state, u);
  ev.gradient = TimeField(u.grid, u.field_size());
  for (int n = 0; n <= problem.config.grid.step_count; ++n)
    ev.gradient[n] = ev.adjoint.q[n] + problem.cost.alpha3 * u[n];
  return ev;
}

TimeField reduced_gradient(const ControlProblem& problem, const TimeField& u) {
  return evaluate(problem, u).gradient;
}

TimeField project_box(const TimeField& u, double rho1) {
  if (!(rho1 > 0.0)) throw ValidationError("box bound rho1 must be positive");
  TimeField out = u;
  for (auto& v : out.values) v = v.cwiseMax(-rho1).cwiseMin(rho1);
  return out;
}

namespace {

// Orthonormal cosine vectors diagonalizing the free-end second-difference
// stencil on N+1 nodes; eigenvalue of mode j is 4 sin^2(j pi / (2(N+1))).
Eigen::MatrixXd time_cosine_basis(int nodes) {
  Eigen::MatrixXd Q(nodes, nodes);
  const double pi = std::numbers::pi;
  for (int j = 0; j < nodes; ++j) {
    const double scale = j == 0 ? std::sqrt(1.0 / nodes) : std::sqrt(2.0 / nodes);
    for (int n = 0; n < nodes; ++n)
      Q(j, n) = scale * std::cos(j * pi * (n + 0.5) / nodes);
  }
  return Q;
}

// L2(Q) projection (uniform node weights) onto the discrete H1 ball.
TimeField project_h1_ball(const SpectralBasis& basis, const TimeField& u,
                          double rho2) {
  if (norm_h1(basis, u) <= rho2) return u;
  const int nodes = u.grid.node_count();
  const double h = u.grid.step();
  const double pi = std::numbers::pi;
  const Eigen::MatrixXd Q = time_cosine_basis(nodes);

  // Stack node values as rows, rotate into the cosine basis.
  Eigen::MatrixXd U(nodes, u.field_size());
  for (int n = 0; n < nodes; ++n) U.row(n) = u[n].transpose();
  Eigen::MatrixXd Uhat = Q * U;

  Eigen::VectorXd d(nodes), m(nodes);
  const Eigen::VectorXd w = basis.quadrature_weights();
  for (int j = 0; j < nodes; ++j) {
    const double s = 2.0 * std::sin(0.5 * j * pi / nodes);
    d[j] = h + (s * s) / h;
    m[j] = Uhat.row(j).transpose().cwiseAbs2().dot(w);
  }

  // phi(nu) = sum d_j m_j h^2 / (h + nu d_j)^2 - rho2^2, decreasing in nu.
  auto phi = [&](double nu) {
    double acc = 0.0;
    for (int j = 0; j < nodes; ++j) {
      const double f = h / (h + nu * d[j]);
      acc += d[j] * m[j] * f * f;
    }
    return acc - rho2 * rho2;
  };
  double lo = 0.0, hi = 1.0;
  while (phi(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) > 0.0 ? lo : hi) = mid;
  }
  const double nu = 0.5 * (lo + hi);

  for (int j = 0; j < nodes; ++j) Uhat.row(j) *= h / (h + nu * d[j]);
  const Eigen::MatrixXd V = Q.transpose() * Uhat;
  TimeField out(u.grid, u.field_size());
  for (int n = 0; n < nodes; ++n) out[n] = V.row(n).transpose();
  return out;
}

double uniform_l2_distance(const SpectralBasis& basis, const TimeField& a,
                           const TimeField& b) {
  const double h = a.grid.step();
  double acc = 0.0;
  for (int n = 0; n <= a.grid.step_count; ++n) {
    const Field d = a[n] - b[n];
    acc += h * inner(basis, d, d);
  }
  return std::sqrt(acc);
}

}  // namespace

TimeField project_uad(const SpectralBasis& basis, const TimeField& u,
                      const AdmissibleSet& set, double tol) {
  set.validate();
  if (!set.h1_bound_active()) return project_box(u, set.rho1);

  // Dykstra on the pair (box, H1 ball); both projections are taken in the
  // uniform-in-time L2 metric, under which the clamp is still exact.
  TimeField x = u;
  TimeField p(u.grid, u.field_size()), q(u.grid, u.field_size());
  TimeField prev = x;
  for (int it = 0; it < set.dykstra_max_iter; ++it) {
    TimeField xp = x;
    for (int n = 0; n <= u.grid.step_count; ++n) xp[n] += p[n];
    TimeField ybox = project_box(xp, set.rho1);
    for (int n = 0; n <= u.grid.step_count; ++n) p[n] = xp[n] - ybox[n];

    TimeField yq = ybox;
    for (int n = 0; n <= u.grid.step_count; ++n) yq[n] += q[n];
    TimeField xnew = project_h1_ball(basis, yq, set.rho2);
    for (int n = 0; n <= u.grid.step_count; ++n) q[n] = yq[n] - xnew[n];

    const double change = uniform_l2_distance(basis, xnew, prev);
    x = std::move(xnew);
    if (it > 0 && change <= tol) return x;
    prev = x;
  }
  throw NoConvergence("Dykstra projection did not settle within " +
                      std::to_string(set.dykstra_max_iter) + " iterations");
}

OptimizeReport optimize(const ControlProblem& problem, const TimeField& u0,
                        int max_iter, double stat_tol) {
  problem.admissible.validate();
  problem.cost.validate();
  const SpectralBasis& B = *problem.basis_b;
  const AdmissibleSet& set = problem.admissible;
  const int N = problem.config.grid.step_count;

  OptimizeReport rep;
  TimeField u = project_uad(B, u0, set);
  Evaluation ev = evaluate(problem, u);
  rep.cost_history.push_back(ev.cost);

  auto stationarity_of = [&]() {
    TimeField probe = u;
    for (int n = 0; n <= N; ++n) probe[n] -= ev.gradient[n];
    probe = project_uad(B, probe, set);
    for (int n = 0; n <= N; ++n) probe[n] = u[n] - probe[n];
    return norm_l2q(B, probe);
  };

  while (true) {
    rep.stationarity = stationarity_of();
    rep.stationarity_history.push_back(rep.stationarity);
    if (rep.stationarity <= stat_tol) {
      rep.reason = TerminationReason::stationary;
      break;
    }
    if (rep.iterations >= max_iter) {
      rep.reason = TerminationReason::max_iterations;
      break;
    }

    double step = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings <= 60; ++halvings) {
      TimeField trial = u;
      for (int n = 0; n <= N; ++n) trial[n] -= step * ev.gradient[n];
      trial = project_uad(B, trial, set);
      TimeField d = trial;
      for (int n = 0; n <= N; ++n) d[n] -= u[n];
      const double slope = inner_l2q(B, ev.gradient, d);
      const StateTrajectory traj_trial =
          solve_state(*problem.basis_a, *problem.basis_b, problem.potential, trial,
                      problem.y0, problem.config);
      const double J_trial = cost_of(problem, traj_trial, trial);
      // The decrease test carries a round-off allowance; without it the
      // search stalls once the attainable decrease drops below the cost's
      // floating-point resolution.
      const double noise = 1e-14 * (1.0 + std::abs(rep.cost_history.back()));
      if (slope < 0.0 &&
          J_trial <= rep.cost_history.back() + 1e-4 * slope + noise) {
        u = std::move(trial);
        ev.state = traj_trial;
        ev.adjoint = solve_adjoint(ev.state, problem.cost, AdjointScheme::transpose);
        ev.cost = J_trial;
        for (int n = 0; n <= N; ++n)
          ev.gradient[n] = ev.adjoint.q[n] + problem.cost.alpha3 * u[n];
        rep.cost_history.push_back(ev.cost);
        rep.step_sizes.push_back(step);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
      throw LineSearchFailure("no sufficient decrease after 60 halvings (cost " +
                              std::to_string(rep.cost_history.back()) + ")");
    ++rep.iterations;
  }

  rep.control = u;

  // Projection-formula residual when the solution sits strictly inside U_ad.
  if (problem.cost.alpha3 > 0.0) {
    double umax = 0.0;
    for (const auto& v : u.values) umax = std::max(umax, v.cwiseAbs().maxCoeff());
    const bool box_inactive = umax < set.rho1 * (1.0 - 1e-8);
    const bool h1_inactive =
        !set.h1_bound_active() || norm_h1(B, u) < set.rho2 * (1.0 - 1e-8);
    if (box_inactive && h1_inactive) {
      TimeField resid = u;
      for (int n = 0; n <= N; ++n)
        resid[n] += ev.adjoint.q[n] / problem.cost.alpha3;
      rep.projection_formula_residual = norm_l2q(B, resid);
    }
  }
  return rep;
}

double variational_inequality_residual(const SpectralBasis& basis, const TimeField& u,
                                       const TimeField& g, const AdmissibleSet& set,
                                       int probes, std::uint64_t seed) {
  set.validate();
  const int N = u.grid.step_count;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-set.rho1, set.rho1);

  double worst = 0.0;
  auto consider = [&](const TimeField& v) {
    TimeField d = v;
    for (int n = 0; n <= N; ++n) d[n] -= u[n];
    worst = std::min(worst, inner_l2q(basis, g, d));
  };

  TimeField v(u.grid, u.field_size());
  for (auto& node : v.values) node.setConstant(set.rho1);
  consider(set.h1_bound_active() ? project_uad(basis, v, set) : v);
  for (auto& node : v.values) node.setConstant(-set.rho1);
  consider(set.h1_bound_active() ? project_uad(basis, v, set) : v);

  for (int trial = 0; trial < probes; ++trial) {
    for (auto& node : v.values)
      for (Eigen::Index i = 0; i < node.size(); ++i) node[i] = unif(rng);
    consider(project_uad(basis, v, set));
  }
  return worst;
}

}  // namespace fchc
