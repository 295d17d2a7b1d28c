#include "fchc/time_discrete.hpp"

#include <cmath>
#include <string>

#include "fchc/errors.hpp"

namespace fchc {

namespace {

double wnorm(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  return std::sqrt(std::max(0.0, v.cwiseProduct(v).dot(w)));
}

double rel_residual(double lhs, double rhs) {
  return std::abs(lhs - rhs) / (std::abs(lhs) + std::abs(rhs) + 1e-300);
}

}  // namespace

TimeGrid::TimeGrid(double T, int N) : horizon(T), step_count(N) {
  if (!(T > 0.0)) throw ValidationError("time horizon must be positive");
  if (N < 1) throw ValidationError("need at least one time step");
}

TimeField::TimeField(TimeGrid g, Eigen::Index field_size) : grid(g) {
  values.assign(static_cast<std::size_t>(g.node_count()),
                Eigen::VectorXd::Zero(field_size));
}

TimeField::TimeField(TimeGrid g, std::vector<Eigen::VectorXd> vals)
    : grid(g), values(std::move(vals)) {
  if (values.size() != static_cast<std::size_t>(g.node_count()))
    throw ShapeMismatch("time field needs N+1 node values, got " +
                        std::to_string(values.size()));
}

Eigen::VectorXd interp_eval(const TimeField& tf, double t, InterpKind kind) {
  const double T = tf.grid.horizon;
  const double h = tf.grid.step();
  const int N = tf.grid.step_count;
  if (t < 0.0 || t > T)
    throw ValidationError("interp_eval: t = " + std::to_string(t) +
                          " outside [0, " + std::to_string(T) + "]");
  // Interval index n with t in ((n-1)h, nh]; t = 0 belongs to the first one.
  int n = static_cast<int>(std::ceil(t / h));
  n = std::min(std::max(n, 1), N);
  switch (kind) {
    case InterpKind::forward_constant:
      return tf[n];
    case InterpKind::backward_constant:
      return tf[n - 1];
    case InterpKind::linear: {
      const double theta = (t - (n - 1) * h) / h;
      return (1.0 - theta) * tf[n - 1] + theta * tf[n];
    }
  }
  throw ValidationError("interp_eval: unknown kind");
}

InterpIdentityReport interp_identity_residuals(const TimeField& tf,
                                               const Eigen::VectorXd& w) {
  const int N = tf.grid.step_count;
  const double h = tf.grid.step();
  InterpIdentityReport rep;

  // Closed forms from the node values.
  double max_zn = 0.0, max_slope = 0.0;
  double sum_zn = 0.0, slope_energy = 0.0, sum_diff_sq = 0.0;
  for (int n = 1; n <= N; ++n) {
    const double zn = wnorm(tf[n], w);
    max_zn = std::max(max_zn, zn);
    sum_zn += h * zn * zn;
    const double dn = wnorm(tf[n] - tf[n - 1], w);
    max_slope = std::max(max_slope, dn / h);
    slope_energy += h * (dn / h) * (dn / h);
    sum_diff_sq += dn * dn;
  }
  const double max_node_all = std::max(max_zn, wnorm(tf[0], w));

  // Two-point Gauss quadrature per interval; exact for the piecewise
  // constant/linear integrands and independent of the closed forms above.
  const double gauss_off = 0.5 / std::sqrt(3.0);
  auto quad_l2 = [&](auto&& eval) {
    double acc = 0.0;
    for (int n = 1; n <= N; ++n) {
      const double tc = (n - 0.5) * h;
      for (double s : {tc - gauss_off * h, tc + gauss_off * h}) {
        const double val = wnorm(eval(s), w);
        acc += 0.5 * h * val * val;
      }
    }
    return acc;
  };
  auto fwd = [&](double s) { return interp_eval(tf, s, InterpKind::forward_constant); };
  auto lin = [&](double s) { return interp_eval(tf, s, InterpKind::linear); };
  auto diff = [&](double s) {
    return (interp_eval(tf, s, InterpKind::forward_constant) -
            interp_eval(tf, s, InterpKind::linear))
        .eval();
  };

  // Suprema of the piecewise-affine integrands sit at interval endpoints;
  // evaluate the interpolants exactly there (constant pieces at midpoints,
  // affine pieces at nodes, left limits as fwd(mid) - lin(left node)).
  double sup_fwd = 0.0, sup_lin = wnorm(lin(0.0), w), sup_diff_scan = 0.0;
  for (int n = 1; n <= N; ++n) {
    const double mid = (n - 0.5) * h;
    const double left = (n - 1) * h;
    sup_fwd = std::max(sup_fwd, wnorm(fwd(mid), w));
    sup_lin = std::max(sup_lin, wnorm(lin(n * h), w));
    sup_diff_scan = std::max(sup_diff_scan, wnorm(fwd(mid) - lin(left), w));
  }

  rep.pc_forward_linf = rel_residual(sup_fwd, max_zn);
  rep.pc_forward_l2 = rel_residual(quad_l2(fwd), sum_zn);
  rep.lin_linf = rel_residual(sup_lin, max_node_all);
  rep.diff_fc_lin_linf = rel_residual(sup_diff_scan, h * max_slope);
  rep.diff_fc_lin_l2 = rel_residual(quad_l2(diff), h * h / 3.0 * slope_energy);
  // Derivative energy: recompute by the backward-difference route.
  double slope_energy_alt = sum_diff_sq / h;
  rep.deriv_l2 = rel_residual(slope_energy_alt, slope_energy);

  rep.max_equality_residual =
      std::max({rep.pc_forward_linf, rep.pc_forward_l2, rep.lin_linf,
                rep.diff_fc_lin_linf, rep.diff_fc_lin_l2, rep.deriv_l2});

  // Inequalities tying the two constant interpolants together, plus the
  // L2 bound on the linear interpolant.
  double max_fb = 0.0, sum_fb_sq = 0.0;
  for (int n = 1; n <= N; ++n) {
    const double d = wnorm(tf[n] - tf[n - 1], w);
    max_fb = std::max(max_fb, d);
    sum_fb_sq += h * d * d;
  }
  const double lin_l2 = quad_l2(lin);
  const double z0 = wnorm(tf[0], w);
  const double tol = 1e-12;
  rep.inequalities_hold =
      max_fb <= 2.0 * h * max_slope * (1.0 + tol) + tol &&
      sum_fb_sq <= 4.0 / 3.0 * h * h * slope_energy * (1.0 + tol) + tol &&
      lin_l2 <= h * z0 * z0 + 2.0 * sum_zn + tol;
  return rep;
}

InterpIdentityReport interp_identity_residuals(const TimeField& tf) {
  return interp_identity_residuals(tf, Eigen::VectorXd::Ones(tf.field_size()));
}

std::vector<double> discrete_gronwall_bound(double M, const std::vector<double>& b) {
  if (M < 0.0) throw ValidationError("discrete_gronwall_bound: M must be nonnegative");
  for (double x : b)
    if (x < 0.0) throw ValidationError("discrete_gronwall_bound: b must be nonnegative");
  std::vector<double> bound(b.size() + 1);
  double acc = 0.0;
  bound[0] = M;
  for (std::size_t k = 0; k < b.size(); ++k) {
    acc += b[k];
    bound[k + 1] = M * std::exp(acc);
  }
  return bound;
}

}  // namespace fchc
