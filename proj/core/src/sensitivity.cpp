#include "fchc/sensitivity.hpp"

#include <cmath>
#include <string>

#include "fchc/errors.hpp"
#include "step_system.hpp"

namespace fchc {

namespace {

using detail::StepSystem;

void check_state(const StateTrajectory& state) {
  if (!state.basis_a || !state.basis_b)
    throw ValidationError("state trajectory carries no operator bases");
  if (!std::isfinite(state.c_hat))
    throw ValidationError("state trajectory has no finite curvature bound");
}

Eigen::PartialPivLU<Eigen::MatrixXd> factor_checked(Eigen::MatrixXd m, int step,
                                                    double linear_tol) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(std::move(m));
  const double rc = lu.rcond();
  if (!(rc > 1e-14) || !std::isfinite(rc))
    throw SingularStep("per-step system at step " + std::to_string(step) +
                       " is numerically singular (rcond " + std::to_string(rc) +
                       ")");
  (void)linear_tol;
  return lu;
}

}  // namespace

LinearizedTrajectory solve_linearized(const StateTrajectory& state, const TimeField& k,
                                      LinearizedScheme scheme) {
  check_state(state);
  const StateConfig& cfg = state.config;
  const StepSystem sys(*state.basis_a, *state.basis_b, cfg);
  const int N = cfg.grid.step_count;
  if (k.grid != cfg.grid ||
      k.field_size() != static_cast<Eigen::Index>(state.basis_b->grid_size()))
    throw ShapeMismatch("direction is not sampled on the state's space-time grid");

  LinearizedTrajectory lin;
  lin.scheme = scheme;
  lin.basis_a = state.basis_a;
  lin.basis_b = state.basis_b;
  lin.xi = TimeField(cfg.grid, static_cast<Eigen::Index>(state.basis_b->grid_size()));
  lin.eta = TimeField(cfg.grid, static_cast<Eigen::Index>(state.basis_b->grid_size()));
  lin.xi_coeffs.assign(static_cast<std::size_t>(N) + 1,
                       Eigen::VectorXd::Zero(sys.mb()));
  lin.eta_coeffs.assign(static_cast<std::size_t>(N) + 1,
                        Eigen::VectorXd::Zero(sys.ma()));

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(sys.mb());
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(sys.ma());

  for (int n = 0; n < N; ++n) {
    Eigen::MatrixXd K;
    Eigen::VectorXd rhs(sys.size());
    const Eigen::VectorXd k_coeffs = sys.anal_b * k[n + 1];
    if (scheme == LinearizedScheme::plain) {
      const Eigen::VectorXd f1pp =
          eval_potential(state.potential, PotentialPart::f1, 2, state.y[n + 1]);
      const Eigen::VectorXd f2pp =
          eval_potential(state.potential, PotentialPart::f2, 2, state.y[n]);
      K = sys.stacked_matrix(f1pp);
      rhs.head(sys.ma()) = sys.gram * beta / sys.h;
      rhs.tail(sys.mb()) = (sys.tau / sys.h) * beta -
                           sys.multiplier_apply(f2pp, beta) + k_coeffs;
    } else {
      const Eigen::VectorXd fpp =
          eval_potential(state.potential, PotentialPart::f, 2, state.y[n + 1]);
      K = sys.stacked_matrix(fpp, state.c_hat, /*identity_in_first_block=*/true);
      rhs.head(sys.ma()) = sys.gram * beta / sys.h + alpha;
      rhs.tail(sys.mb()) = (sys.tau / sys.h + state.c_hat) * beta + k_coeffs;
    }
    const auto lu = factor_checked(std::move(K), n, cfg.linear_tol);
    const Eigen::VectorXd x = lu.solve(rhs);
    beta = x.head(sys.mb());
    alpha = x.tail(sys.ma());
    lin.xi_coeffs[static_cast<std::size_t>(n) + 1] = beta;
    lin.eta_coeffs[static_cast<std::size_t>(n) + 1] = alpha;
    lin.xi[n + 1] = state.basis_b->synthesize(beta);
    lin.eta[n + 1] = state.basis_a->synthesize(alpha);
  }
  return lin;
}

void CostSpec::validate() const {
  if (alpha1 < 0.0 || alpha2 < 0.0 || alpha3 < 0.0)
    throw ValidationError("cost weights must be nonnegative");
  if (alpha1 + alpha2 + alpha3 <= 0.0)
    throw ValidationError("cost weights must not all vanish");
}

AdjointTrajectory solve_adjoint(const StateTrajectory& state, const CostSpec& cost,
                                AdjointScheme scheme) {
  check_state(state);
  cost.validate();
  const StateConfig& cfg = state.config;
  const StepSystem sys(*state.basis_a, *state.basis_b, cfg);
  const SpectralBasis& A = *state.basis_a;
  const SpectralBasis& B = *state.basis_b;
  const int N = cfg.grid.step_count;
  const double h = cfg.grid.step();
  const auto G = static_cast<Eigen::Index>(B.grid_size());
  if (cost.y_omega.size() != G)
    throw ShapeMismatch("terminal target does not match the grid");
  if (cost.y_q.grid != cfg.grid || cost.y_q.field_size() != G)
    throw ShapeMismatch("distributed target is not sampled on the state's grid");

  AdjointTrajectory adj;
  adj.scheme = scheme;
  adj.basis_a = state.basis_a;
  adj.basis_b = state.basis_b;
  adj.p = TimeField(cfg.grid, G);
  adj.q = TimeField(cfg.grid, G);
  adj.psi = TimeField(cfg.grid, G);
  adj.g1 = cost.alpha1 * (state.y[N] - cost.y_omega);
  adj.g2 = TimeField(cfg.grid, G);
  for (int n = 0; n <= N; ++n) {
    adj.g2[n] = cost.alpha2 * (state.y[n] - cost.y_q[n]);
    adj.psi[n] = eval_potential(state.potential, PotentialPart::f, 2, state.y[n]);
  }
  adj.p_coeffs.assign(static_cast<std::size_t>(N) + 1, Eigen::VectorXd::Zero(sys.ma()));
  adj.q_coeffs.assign(static_cast<std::size_t>(N) + 1, Eigen::VectorXd::Zero(sys.mb()));

  const Eigen::VectorXd g1_b = sys.anal_b * adj.g1;
  Eigen::VectorXd p_next;  // basis-A coefficients at node n+1
  Eigen::VectorXd q_next;  // basis-B coefficients at node n+1

  auto store = [&](int n, const Eigen::VectorXd& pc, const Eigen::VectorXd& qc) {
    adj.p_coeffs[static_cast<std::size_t>(n)] = pc;
    adj.q_coeffs[static_cast<std::size_t>(n)] = qc;
    adj.p[n] = A.synthesize(pc);
    adj.q[n] = B.synthesize(qc);
  };

  if (scheme == AdjointScheme::direct) {
    // Terminal pair: p + tau q = g1 tested against basis B, q = A^{2r} p
    // tested against basis A.
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(sys.size(), sys.size());
    K.topLeftCorner(sys.mb(), sys.ma()) = sys.gram.transpose();
    K.topRightCorner(sys.mb(), sys.mb()) =
        cfg.tau * Eigen::MatrixXd::Identity(sys.mb(), sys.mb());
    K.bottomLeftCorner(sys.ma(), sys.ma()) =
        Eigen::MatrixXd(sys.pow_a.asDiagonal());
    K.bottomRightCorner(sys.ma(), sys.mb()) = -sys.gram;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sys.size());
    rhs.head(sys.mb()) = g1_b;
    const auto lu = factor_checked(std::move(K), N, cfg.linear_tol);
    const Eigen::VectorXd z = lu.solve(rhs);
    p_next = z.head(sys.ma());
    q_next = z.tail(sys.mb());
    store(N, p_next, q_next);
  }

  const int first = (scheme == AdjointScheme::transpose) ? N : N - 1;
  for (int n = first; n >= 0; --n) {
    // Backward step: solve for (p^n, q^n) from the pair one node ahead.
    Eigen::VectorXd rhs_b = sys.anal_b * adj.g2[n];
    if (scheme == AdjointScheme::transpose) {
      if (n == N) {
        rhs_b += g1_b / h;
      } else {
        const Eigen::VectorXd f2pp =
            eval_potential(state.potential, PotentialPart::f2, 2, state.y[n]);
        rhs_b += sys.gram.transpose() * p_next / h + (cfg.tau / h) * q_next -
                 sys.multiplier_apply(f2pp, q_next);
      }
      const Eigen::VectorXd f1pp =
          eval_potential(state.potential, PotentialPart::f1, 2, state.y[n]);
      // Transpose of the forward stacked matrix at node n, unknowns [p; q].
      Eigen::MatrixXd Kt = sys.stacked_matrix(f1pp).transpose();
      Eigen::VectorXd rhs(sys.size());
      rhs.head(sys.mb()) = rhs_b;
      rhs.tail(sys.ma()).setZero();
      const auto lu = factor_checked(std::move(Kt), n, cfg.linear_tol);
      const Eigen::VectorXd z = lu.solve(rhs);
      p_next = z.head(sys.ma());
      q_next = z.tail(sys.mb());
      store(n, p_next, q_next);
    } else {
      rhs_b += sys.gram.transpose() * p_next / h + (cfg.tau / h) * q_next;
      const Eigen::VectorXd fpp =
          eval_potential(state.potential, PotentialPart::f, 2, state.y[n]);
      Eigen::MatrixXd Kt = sys.stacked_matrix(fpp).transpose();
      Eigen::VectorXd rhs(sys.size());
      rhs.head(sys.mb()) = rhs_b;
      rhs.tail(sys.ma()).setZero();
      const auto lu = factor_checked(std::move(Kt), n, cfg.linear_tol);
      const Eigen::VectorXd z = lu.solve(rhs);
      p_next = z.head(sys.ma());
      q_next = z.tail(sys.mb());
      store(n, p_next, q_next);
    }
  }

  if (A.has_zero_mode()) {
    adj.p_mean.resize(static_cast<std::size_t>(N) + 1);
    for (int n = 0; n <= N; ++n)
      adj.p_mean[static_cast<std::size_t>(n)] = mean(A, adj.p[n]);
  }
  return adj;
}

double adjoint_identity_residual(const LinearizedTrajectory& lin,
                                 const AdjointTrajectory& adj, const TimeField& k,
                                 const CostSpec& cost) {
  if (lin.scheme != LinearizedScheme::plain)
    throw SchemeMismatch(
        "duality pairing requires the plain linearized scheme (the stabilized "
        "one is not the transpose partner)");
  if (adj.scheme != AdjointScheme::transpose)
    throw SchemeMismatch("duality pairing requires the transpose adjoint");
  (void)cost;
  const SpectralBasis& B = *adj.basis_b;
  const TimeGrid grid = lin.xi.grid;
  const double h = grid.step();
  const int N = grid.step_count;
  const Eigen::Index G = lin.xi.field_size();
  if (adj.q.field_size() != G || k.field_size() != G)
    throw ShapeMismatch("duality pairing: field sizes differ");
  double lhs = 0.0, rhs = 0.0;
  for (int n = 1; n <= N; ++n) {
    lhs += h * inner(B, adj.g2[n], lin.xi[n]);
    rhs += h * inner(B, adj.q[n], k[n]);
  }
  lhs += inner(B, adj.g1, lin.xi[N]);
  return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1e-30);
}

std::vector<double> recover_p_mean(const StateTrajectory& state,
                                   const AdjointTrajectory& adj) {
  check_state(state);
  const SpectralBasis& A = *state.basis_a;
  const SpectralBasis& B = *state.basis_b;
  if (!A.has_zero_mode())
    throw ValidationError("mean recovery is defined only when lambda_1(A) = 0");
  const StateConfig& cfg = state.config;
  const int N = cfg.grid.step_count;
  const double h = cfg.grid.step();
  const double vol = A.volume();
  const Field one = Field::Ones(static_cast<Eigen::Index>(A.grid_size()));
  const FracOperator b_sigma(B, cfg.sigma);
  const Field bs_one = apply_power(b_sigma, one);

  auto load = [&](int n, const Field& q_here, const Field& q_ahead,
                  bool with_ahead) {
    const Field f1pp =
        eval_potential(state.potential, PotentialPart::f1, 2, state.y[n]);
    double acc = inner(B, adj.g2[n], one);
    acc -= inner(B, apply_power(b_sigma, q_here), bs_one);
    acc -= inner(B, f1pp.cwiseProduct(q_here), one);
    if (with_ahead) {
      const Field f2pp =
          eval_potential(state.potential, PotentialPart::f2, 2, state.y[n]);
      acc -= inner(B, f2pp.cwiseProduct(q_ahead), one);
    }
    return acc / vol;
  };

  std::vector<double> means(static_cast<std::size_t>(N) + 1, 0.0);
  means[static_cast<std::size_t>(N)] =
      mean(A, adj.g1) + h * load(N, adj.q[N], adj.q[N], /*with_ahead=*/false);
  for (int n = N - 1; n >= 0; --n)
    means[static_cast<std::size_t>(n)] =
        means[static_cast<std::size_t>(n) + 1] +
        h * load(n, adj.q[n], adj.q[n + 1], /*with_ahead=*/true);
  return means;
}

double frechet_remainder(const SpectralBasis& basis_a, const SpectralBasis& basis_b,
                         const PotentialSpec& potential, const TimeField& u,
                         const Field& y0, const StateConfig& cfg, const TimeField& k,
                         double eps) {
  const int N = cfg.grid.step_count;
  const double h = cfg.grid.step();
  TimeField u_pert = u;
  for (int n = 0; n <= N; ++n) u_pert[n] += eps * k[n];

  const StateTrajectory base = solve_state(basis_a, basis_b, potential, u, y0, cfg);
  const StateTrajectory pert =
      solve_state(basis_a, basis_b, potential, u_pert, y0, cfg);
  const LinearizedTrajectory lin =
      solve_linearized(base, k, LinearizedScheme::plain);

  double mu_sq = 0.0, y_l2_sq = 0.0, y_dt_sq = 0.0, y_linf = 0.0;
  Field prev;
  for (int n = 0; n <= N; ++n) {
    const Field ry = pert.y[n] - base.y[n] - eps * lin.xi[n];
    y_linf = std::max(y_linf, norm_Ar(basis_b, cfg.sigma, ry, /*graph_mode=*/true));
    if (n >= 1) {
      const Field rmu = pert.mu[n] - base.mu[n] - eps * lin.eta[n];
      mu_sq += h * inner_product_Ar(basis_a, cfg.r, rmu, rmu);
      y_l2_sq += h * inner(basis_b, ry, ry);
      const Field dr = ry - prev;
      y_dt_sq += inner(basis_b, dr, dr) / h;
    }
    prev = ry;
  }
  return std::sqrt(mu_sq) + std::sqrt(y_l2_sq + y_dt_sq) + y_linf;
}

}  // namespace fchc
