#include "fchc/state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fchc/errors.hpp"
#include "step_system.hpp"

namespace fchc {

namespace detail {

StepSystem::StepSystem(const SpectralBasis& basis_a, const SpectralBasis& basis_b,
                       const StateConfig& cfg)
    : A(basis_a), B(basis_b), tau(cfg.tau), h(cfg.grid.step()) {
  if (A.domain() != B.domain())
    throw ValidationError("operators A and B must share one collocation grid");
  if (A.has_zero_mode() && basis_b.boundary_condition() == BoundaryCondition::dirichlet)
    throw ValidationError(
        "a zero first eigenvalue of A requires the constant mode to be "
        "resolved by B (Neumann boundary condition)");
  pow_a.resize(A.mode_count());
  for (int j = 0; j < A.mode_count(); ++j)
    pow_a[j] = A.eigenvalue(j) == 0.0 ? 0.0 : std::pow(A.eigenvalue(j), 2.0 * cfg.r);
  pow_b.resize(B.mode_count());
  for (int j = 0; j < B.mode_count(); ++j)
    pow_b[j] = B.eigenvalue(j) == 0.0 ? 0.0 : std::pow(B.eigenvalue(j), 2.0 * cfg.sigma);
  anal_b = B.sample_matrix() * B.quadrature_weights().asDiagonal();
  gram = A.sample_matrix() * B.quadrature_weights().asDiagonal() *
         B.sample_matrix().transpose();
}

Eigen::MatrixXd StepSystem::multiplier_matrix(const Eigen::VectorXd& d) const {
  return anal_b * d.asDiagonal() * B.sample_matrix().transpose();
}

Eigen::VectorXd StepSystem::multiplier_apply(const Eigen::VectorXd& d,
                                             const Eigen::VectorXd& beta) const {
  return anal_b * d.cwiseProduct(B.sample_matrix().transpose() * beta);
}

Eigen::MatrixXd StepSystem::stacked_matrix(const Eigen::VectorXd& grid_diagonal,
                                           double shift,
                                           bool identity_in_first_block) const {
  const int na = ma();
  const int nb = mb();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(na + nb, nb + na);
  K.topLeftCorner(na, nb) = gram / h;
  K.topRightCorner(na, na) = pow_a.asDiagonal();
  if (identity_in_first_block)
    K.topRightCorner(na, na) += Eigen::MatrixXd::Identity(na, na);
  K.bottomLeftCorner(nb, nb) = multiplier_matrix(grid_diagonal);
  K.bottomLeftCorner(nb, nb).diagonal() +=
      (tau / h + shift) * Eigen::VectorXd::Ones(nb) + pow_b;
  K.bottomRightCorner(nb, na) = -gram.transpose();
  return K;
}

}  // namespace detail

void StateConfig::validate() const {
  if (!(tau > 0.0)) throw ValidationError("viscosity tau must be positive");
  if (!(r > 0.0) || !(sigma > 0.0))
    throw ValidationError("fractional exponents r and sigma must be positive");
  if (!(newton_tol > 0.0) || newton_max_iter < 1 || !(linear_tol > 0.0))
    throw ValidationError("solver tolerances must be positive");
  if (gb_interval && !(gb_interval->first < gb_interval->second))
    throw ValidationError("admissibility interval is empty");
}

std::pair<double, double> StateConfig::monitor_interval(const PotentialSpec& pot) const {
  if (gb_interval) return *gb_interval;
  if (pot.bounded_domain()) {
    const double hw = pot.domain_halfwidth();
    return {-hw, hw};
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {-inf, inf};
}

namespace {

using detail::StepSystem;

struct StepResidual {
  Eigen::VectorXd r;  // stacked [eq1; eq2]
  double norm = 0.0;
};

// Residual of the implicit convex-splitting step at iterate (beta_new, alpha).
StepResidual step_residual(const StepSystem& sys, const PotentialSpec& pot,
                           const Eigen::VectorXd& beta_old,
                           const Eigen::VectorXd& f2_old_coeffs,
                           const Eigen::VectorXd& u_coeffs,
                           const Eigen::VectorXd& beta_new,
                           const Eigen::VectorXd& alpha,
                           const Field& y_new_grid) {
  StepResidual res;
  res.r.resize(sys.size());
  res.r.head(sys.ma()) =
      sys.gram * (beta_new - beta_old) / sys.h + sys.pow_a.cwiseProduct(alpha);
  const Eigen::VectorXd f1_coeffs =
      sys.anal_b * eval_potential(pot, PotentialPart::f1, 1, y_new_grid);
  res.r.tail(sys.mb()) = (sys.tau / sys.h) * (beta_new - beta_old) +
                         sys.pow_b.cwiseProduct(beta_new) + f1_coeffs +
                         f2_old_coeffs - sys.gram.transpose() * alpha - u_coeffs;
  res.norm = res.r.norm();
  return res;
}

}  // namespace

StateTrajectory solve_state(const SpectralBasis& basis_a, const SpectralBasis& basis_b,
                            const PotentialSpec& potential, const TimeField& u,
                            const Field& y0, const StateConfig& cfg) {
  cfg.validate();
  const StepSystem sys(basis_a, basis_b, cfg);
  const int N = cfg.grid.step_count;
  if (u.grid != cfg.grid || u.field_size() != static_cast<Eigen::Index>(basis_b.grid_size()))
    throw ShapeMismatch("control is not sampled on the solver's space-time grid");
  if (y0.size() != static_cast<Eigen::Index>(basis_b.grid_size()))
    throw ShapeMismatch("initial value does not match the collocation grid");

  const auto [mon_lo, mon_hi] = cfg.monitor_interval(potential);
  // (A5)-type check: f'(y0) must be evaluable.
  if (potential.bounded_domain()) {
    const double hw = potential.domain_halfwidth();
    for (Eigen::Index i = 0; i < y0.size(); ++i)
      if (std::abs(y0[i]) > hw)
        throw DomainViolation("initial value " + std::to_string(y0[i]) +
                                  " lies outside the potential domain",
                              y0[i], static_cast<long>(i));
  }
  if (y0.minCoeff() < mon_lo || y0.maxCoeff() > mon_hi)
    throw DomainViolation("initial value escapes the admissibility interval",
                          y0.minCoeff() < mon_lo ? y0.minCoeff() : y0.maxCoeff(), 0);

  StateTrajectory traj;
  traj.basis_a = &basis_a;
  traj.basis_b = &basis_b;
  traj.potential = potential;
  traj.config = cfg;
  traj.y = TimeField(cfg.grid, y0.size());
  traj.mu = TimeField(cfg.grid, y0.size());
  traj.y_coeffs.resize(static_cast<std::size_t>(N) + 1);
  traj.mu_coeffs.resize(static_cast<std::size_t>(N) + 1);
  traj.newton_iteration_counts.assign(static_cast<std::size_t>(N), 0);

  traj.y[0] = y0;
  Eigen::VectorXd beta = basis_b.analyze(y0);
  traj.y_coeffs[0] = beta;

  // Diagnostic initializer for mu at t = 0 (the stepping never uses it).
  {
    Field mu0 = basis_b.synthesize(sys.pow_b.cwiseProduct(beta)) +
                eval_potential(potential, PotentialPart::f, 1, y0) - u[0];
    traj.mu_coeffs[0] = basis_a.analyze(mu0);
    traj.mu[0] = basis_a.synthesize(traj.mu_coeffs[0]);
  }

  Eigen::VectorXd alpha = traj.mu_coeffs[0];
  Field y_grid = basis_b.synthesize(beta);
  const double boundary = potential.bounded_domain()
                              ? potential.domain_halfwidth() * (1.0 - 1e-12)
                              : std::numeric_limits<double>::infinity();

  for (int n = 0; n < N; ++n) {
    const Eigen::VectorXd f2_old =
        sys.anal_b * eval_potential(potential, PotentialPart::f2, 1, y_grid);
    const Eigen::VectorXd u_coeffs = sys.anal_b * u[n + 1];
    Eigen::VectorXd beta_new = beta;
    Eigen::VectorXd alpha_new = alpha;
    Field y_new = y_grid;

    StepResidual res = step_residual(sys, potential, beta, f2_old, u_coeffs,
                                     beta_new, alpha_new, y_new);
    int iters = 0;
    while (res.norm > cfg.newton_tol) {
      if (iters >= cfg.newton_max_iter)
        throw NewtonDivergence("step " + std::to_string(n) + ": residual " +
                               std::to_string(res.norm) + " after " +
                               std::to_string(iters) + " iterations");
      const Eigen::VectorXd f1pp =
          eval_potential(potential, PotentialPart::f1, 2, y_new);
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.stacked_matrix(f1pp));
      const Eigen::VectorXd delta = lu.solve(-res.r);
      if (!delta.allFinite())
        throw SingularStep("step " + std::to_string(n) +
                           ": non-finite Newton update");
      const Eigen::VectorXd dbeta = delta.head(sys.mb());
      const Eigen::VectorXd dalpha = delta.tail(sys.ma());
      const Field dy = basis_b.synthesize(dbeta);

      // Keep the iterate strictly inside the potential domain, then insist
      // on residual decrease.
      double s = 1.0;
      if (std::isfinite(boundary)) {
        for (Eigen::Index i = 0; i < y_new.size(); ++i) {
          const double target = y_new[i] + dy[i];
          if (std::abs(target) > boundary) {
            const double room =
                (dy[i] > 0.0 ? boundary - y_new[i] : boundary + y_new[i]);
            s = std::min(s, std::max(0.0, room / std::abs(dy[i])));
          }
        }
        if (s <= 1e-10)
          throw NewtonDivergence("step " + std::to_string(n) +
                                 ": iterate pinned to the potential domain "
                                 "boundary");
      }

      StepResidual trial;
      int halvings = 0;
      for (;; ++halvings) {
        const Eigen::VectorXd b_try = beta_new + s * dbeta;
        const Eigen::VectorXd a_try = alpha_new + s * dalpha;
        const Field y_try = y_new + s * dy;
        trial = step_residual(sys, potential, beta, f2_old, u_coeffs, b_try,
                              a_try, y_try);
        if (trial.norm < res.norm || trial.norm <= cfg.newton_tol) {
          beta_new = b_try;
          alpha_new = a_try;
          y_new = y_try;
          break;
        }
        if (halvings >= 40)
          throw NewtonDivergence("step " + std::to_string(n) +
                                 ": residual stagnates at " +
                                 std::to_string(res.norm));
        s *= 0.5;
      }
      res = trial;
      ++iters;
    }

    traj.newton_iteration_counts[static_cast<std::size_t>(n)] = iters;
    beta = beta_new;
    alpha = alpha_new;
    y_grid = y_new;
    traj.y_coeffs[static_cast<std::size_t>(n) + 1] = beta;
    traj.mu_coeffs[static_cast<std::size_t>(n) + 1] = alpha;
    traj.y[n + 1] = y_grid;
    traj.mu[n + 1] = basis_a.synthesize(alpha);

    if (y_grid.minCoeff() < mon_lo || y_grid.maxCoeff() > mon_hi) {
      const double bad = y_grid.minCoeff() < mon_lo ? y_grid.minCoeff()
                                                    : y_grid.maxCoeff();
      throw DomainViolation("state escaped the admissibility interval at step " +
                                std::to_string(n + 1) + " (value " +
                                std::to_string(bad) + ")",
                            bad, n + 1);
    }
  }

  const auto [lo, hi] = cfg.monitor_interval(potential);
  const double scan_lo = std::isfinite(lo) ? lo : -1e30;
  const double scan_hi = std::isfinite(hi) ? hi : 1e30;
  traj.gb = check_admissible(potential, traj.y, scan_lo, scan_hi);
  traj.c_hat = 0.0;
  for (const auto& yn : traj.y.values) {
    const Field fpp = eval_potential(potential, PotentialPart::f, 2, yn);
    traj.c_hat = std::max(traj.c_hat, fpp.cwiseAbs().maxCoeff());
  }
  return traj;
}

double energy(const SpectralBasis& basis_b, const PotentialSpec& potential,
              const Field& y, double sigma) {
  const Eigen::VectorXd b = basis_b.analyze(y);
  double quad = 0.0;
  for (int j = 0; j < basis_b.mode_count(); ++j) {
    const double lam = basis_b.eigenvalue(j);
    if (lam > 0.0) quad += std::pow(lam, 2.0 * sigma) * b[j] * b[j];
  }
  const Field f = eval_potential(potential, PotentialPart::f, 0, y);
  return 0.5 * quad + f.dot(basis_b.quadrature_weights());
}

std::vector<double> dissipation_report(const StateTrajectory& traj) {
  std::vector<double> increments;
  increments.reserve(traj.y.values.size() - 1);
  double prev = energy(*traj.basis_b, traj.potential, traj.y[0], traj.config.sigma);
  for (int n = 1; n < traj.y.grid.node_count(); ++n) {
    const double cur =
        energy(*traj.basis_b, traj.potential, traj.y[n], traj.config.sigma);
    increments.push_back(cur - prev);
    prev = cur;
  }
  return increments;
}

StabilityReport stability_probe(const SpectralBasis& basis_a,
                                const SpectralBasis& basis_b,
                                const PotentialSpec& potential, const TimeField& u1,
                                const TimeField& u2, const Field& y0,
                                const StateConfig& cfg) {
  const int N = cfg.grid.step_count;
  const double h = cfg.grid.step();

  double du_sq = 0.0;
  for (int n = 1; n <= N; ++n) {
    const Field d = u1[n] - u2[n];
    du_sq += h * inner(basis_b, d, d);
  }
  const double du = std::sqrt(du_sq);
  if (du <= 1e-14)
    throw IdenticalControls("stability probe needs two distinct controls");

  const StateTrajectory t1 = solve_state(basis_a, basis_b, potential, u1, y0, cfg);
  const StateTrajectory t2 = solve_state(basis_a, basis_b, potential, u2, y0, cfg);

  StabilityReport rep;
  rep.control_norm = du;

  double mu_sq = 0.0, y_l2_sq = 0.0, y_dt_sq = 0.0, y_linf = 0.0;
  for (int n = 0; n <= N; ++n) {
    const Field dy = t1.y[n] - t2.y[n];
    y_linf = std::max(y_linf, norm_Ar(basis_b, cfg.sigma, dy, /*graph_mode=*/true));
    if (n >= 1) {
      const Field dmu = t1.mu[n] - t2.mu[n];
      mu_sq += h * inner_product_Ar(basis_a, 2.0 * cfg.r, dmu, dmu);
      y_l2_sq += h * inner(basis_b, dy, dy);
      const Field ddy = (t1.y[n] - t2.y[n]) - (t1.y[n - 1] - t2.y[n - 1]);
      y_dt_sq += inner(basis_b, ddy, ddy) / h;
    }
  }
  rep.mu_part = std::sqrt(mu_sq);
  rep.y_h1_part = std::sqrt(y_l2_sq + y_dt_sq);
  rep.y_linf_part = y_linf;
  rep.ratio = (rep.mu_part + rep.y_h1_part + rep.y_linf_part) / du;
  return rep;
}

}  // namespace fchc
