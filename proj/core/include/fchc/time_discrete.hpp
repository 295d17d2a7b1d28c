#ifndef FCHC_TIME_DISCRETE_HPP
#define FCHC_TIME_DISCRETE_HPP

#include <Eigen/Dense>
#include <vector>

#include "fchc/domain.hpp"

namespace fchc {

/// Uniform time grid on [0, T] with N steps of size h = T/N.
struct TimeGrid {
  double horizon = 1.0;
  int step_count = 1;

  TimeGrid() = default;
  TimeGrid(double T, int N);

  double step() const { return horizon / step_count; }
  double node(int n) const { return n * step(); }
  int node_count() const { return step_count + 1; }

  bool operator==(const TimeGrid&) const = default;
};

/// Node-indexed family z^0..z^N of equally sized vectors (grid fields or
/// scalar sequences stored as 1-vectors).
struct TimeField {
  TimeGrid grid;
  std::vector<Eigen::VectorXd> values;

  TimeField() = default;
  TimeField(TimeGrid g, Eigen::Index field_size);
  TimeField(TimeGrid g, std::vector<Eigen::VectorXd> vals);

  Eigen::Index field_size() const { return values.empty() ? 0 : values.front().size(); }
  const Eigen::VectorXd& operator[](int n) const { return values[static_cast<std::size_t>(n)]; }
  Eigen::VectorXd& operator[](int n) { return values[static_cast<std::size_t>(n)]; }
};

enum class InterpKind { forward_constant, backward_constant, linear };

/// Evaluates the piecewise interpolant of tf at time t in [0, T]. The
/// constant interpolants use the half-open convention on ((n-1)h, nh]; t = 0
/// is treated as the limit from the right.
Eigen::VectorXd interp_eval(const TimeField& tf, double t, InterpKind kind);

/// Residual report of the closed-form interpolant identities, each equality
/// evaluated by an independent quadrature/scan route on one side.
/// Norms are weighted L2 norms in space (pass the quadrature weights, or an
/// all-ones vector for plain sequences).
struct InterpIdentityReport {
  double max_equality_residual = 0.0;  // worst relative residual
  bool inequalities_hold = true;
  // Individual relative residuals, for diagnostics.
  double pc_forward_linf = 0.0;   // sup norm of the forward-constant interpolant
  double pc_forward_l2 = 0.0;     // L2(0,T) norm of the same
  double deriv_l2 = 0.0;          // L2 norm of d/dt of the linear interpolant
  double lin_linf = 0.0;          // sup norm of the linear interpolant
  double diff_fc_lin_linf = 0.0;  // sup of fwd-const minus linear vs h * sup slope
  double diff_fc_lin_l2 = 0.0;    // L2 of the same vs h^2/3 * slope energy
};

InterpIdentityReport interp_identity_residuals(const TimeField& tf,
                                               const Eigen::VectorXd& space_weights);
InterpIdentityReport interp_identity_residuals(const TimeField& tf);

/// a_k <= M * exp(sum_{n<k} b_n), k = 0..N (empty sums are zero). Inputs must
/// be nonnegative.
std::vector<double> discrete_gronwall_bound(double M, const std::vector<double>& b);

}  // namespace fchc

#endif
