#ifndef FCHC_STATE_HPP
#define FCHC_STATE_HPP

#include <optional>
#include <utility>
#include <vector>

#include "fchc/potentials.hpp"
#include "fchc/spectral.hpp"
#include "fchc/time_discrete.hpp"

namespace fchc {

/// Parameters of one state solve. tau is the viscosity, r and sigma the
/// fractional exponents of the two operators.
struct StateConfig {
  double tau = 0.5;
  double r = 0.5;
  double sigma = 0.5;
  TimeGrid grid;
  double newton_tol = 1e-11;
  int newton_max_iter = 50;
  double linear_tol = 1e-12;
  /// Runtime admissibility interval for the order parameter. Unset means
  /// the potential's own domain (logarithmic) or no monitoring (entire
  /// variants).
  std::optional<std::pair<double, double>> gb_interval;

  void validate() const;
  std::pair<double, double> monitor_interval(const PotentialSpec& pot) const;
};

/// Discrete solution of the two-equation system: order parameter y and
/// chemical potential mu at every node, with per-step Newton diagnostics and
/// the admissibility scan. Node 0 of mu is the consistent initializer
/// B^{2sigma} y0 + f'(y0) - u0 projected on the mu basis (the time-stepping
/// itself only produces mu^1..mu^N).
///
/// Holds non-owning pointers to the bases; keep them alive while the
/// trajectory is in use.
struct StateTrajectory {
  const SpectralBasis* basis_a = nullptr;
  const SpectralBasis* basis_b = nullptr;
  PotentialSpec potential;
  StateConfig config;

  TimeField y;   // grid fields, y[0] is the supplied initial value
  TimeField mu;  // grid fields
  std::vector<Eigen::VectorXd> y_coeffs;   // basis-B coefficients per node
  std::vector<Eigen::VectorXd> mu_coeffs;  // basis-A coefficients per node
  std::vector<int> newton_iteration_counts;
  GBReport gb;
  double c_hat = 0.0;  // observed sup |f''(y)| along the trajectory
};

/// Implicit Euler with convex splitting: f1' implicit, f2' explicit. The
/// control is sampled at the right endpoint of each step. Throws
/// NewtonDivergence, DomainViolation (monitor or potential domain), or
/// ValidationError for inconsistent inputs.
StateTrajectory solve_state(const SpectralBasis& basis_a, const SpectralBasis& basis_b,
                            const PotentialSpec& potential, const TimeField& u,
                            const Field& y0, const StateConfig& cfg);

/// Lyapunov functional E(y) = 1/2 ||B^sigma y||^2 + int f(y).
double energy(const SpectralBasis& basis_b, const PotentialSpec& potential,
              const Field& y, double sigma);

/// Per-step energy increments E(y^{n+1}) - E(y^n). With u = 0 the splitting
/// makes every increment nonpositive up to round-off.
std::vector<double> dissipation_report(const StateTrajectory& traj);

/// Ratio of the state-difference norms to the control-difference norm for
/// one pair of controls, all norms discrete.
struct StabilityReport {
  double ratio = 0.0;
  double mu_part = 0.0;    // L2(0,T; V_A^{2r}) of mu1 - mu2
  double y_h1_part = 0.0;  // H1(0,T; H) of y1 - y2
  double y_linf_part = 0.0;  // L-infinity(0,T; V_B^sigma graph norm)
  double control_norm = 0.0;
};

StabilityReport stability_probe(const SpectralBasis& basis_a,
                                const SpectralBasis& basis_b,
                                const PotentialSpec& potential, const TimeField& u1,
                                const TimeField& u2, const Field& y0,
                                const StateConfig& cfg);

}  // namespace fchc

#endif
