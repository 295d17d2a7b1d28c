#ifndef FCHC_OPTIMIZER_HPP
#define FCHC_OPTIMIZER_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fchc/sensitivity.hpp"
#include "fchc/state.hpp"

namespace fchc {

/// Box bound plus optional ball in the discrete H1(0,T; H) norm
///   ||u||^2 = h sum_n ||u^n||^2 + h sum_n ||(u^{n+1}-u^n)/h||^2.
struct AdmissibleSet {
  double rho1 = 1.0;
  double rho2 = std::numeric_limits<double>::infinity();
  int dykstra_max_iter = 10000;

  bool h1_bound_active() const { return std::isfinite(rho2); }
  void validate() const;
};

/// Everything a reduced-cost evaluation needs. Bases are non-owning.
struct ControlProblem {
  const SpectralBasis* basis_a = nullptr;
  const SpectralBasis* basis_b = nullptr;
  PotentialSpec potential;
  Field y0;
  StateConfig config;
  CostSpec cost;
  AdmissibleSet admissible;
};

/// Discrete L2(0,T; H) inner product (right-endpoint in time, quadrature in
/// space), the metric in which gradients and stationarity are measured.
double inner_l2q(const SpectralBasis& basis, const TimeField& a, const TimeField& b);
double norm_l2q(const SpectralBasis& basis, const TimeField& a);

/// Discrete H1(0,T; H) norm of the admissible set.
double norm_h1(const SpectralBasis& basis, const TimeField& u);

/// J(u) = alpha1/2 ||y^N - y_Omega||^2 + alpha2/2 h sum ||y^n - y_Q^n||^2
///       + alpha3/2 h sum ||u^n||^2.
double reduced_cost(const ControlProblem& problem, const TimeField& u);

/// Riesz representative q + alpha3 u of the reduced-cost derivative in the
/// discrete L2(0,T; H) metric.
TimeField reduced_gradient(const ControlProblem& problem, const TimeField& u);

/// Cost, gradient and intermediate trajectories of one evaluation.
struct Evaluation {
  double cost = 0.0;
  TimeField gradient;
  StateTrajectory state;
  AdjointTrajectory adjoint;
};

Evaluation evaluate(const ControlProblem& problem, const TimeField& u);

/// Pointwise clamp to [-rho1, rho1], the L2(Q) projection onto the box.
TimeField project_box(const TimeField& u, double rho1);

/// Projection onto the admissible set. Identical to project_box when the H1
/// bound is off; otherwise Dykstra alternation between the box and the H1
/// ball (the latter projected by diagonalizing the time stencil in a cosine
/// basis and solving the scalar multiplier equation).
TimeField project_uad(const SpectralBasis& basis, const TimeField& u,
                      const AdmissibleSet& set, double tol = 1e-10);

enum class TerminationReason { stationary, max_iterations };

struct OptimizeReport {
  std::vector<double> cost_history;
  std::vector<double> stationarity_history;
  std::vector<double> step_sizes;
  TimeField control;
  double stationarity = 0.0;
  int iterations = 0;
  TerminationReason reason = TerminationReason::max_iterations;
  /// ||u + q/alpha3|| when alpha3 > 0 and no constraint is active at the end;
  /// negative when not applicable.
  double projection_formula_residual = -1.0;
};

/// Projected gradient with Armijo backtracking (initial step 1, shrink 1/2,
/// sufficient decrease 1e-4). Stops when ||u - P(u - g)|| <= stat_tol.
OptimizeReport optimize(const ControlProblem& problem, const TimeField& u0,
                        int max_iter, double stat_tol);

/// Most negative <g, v - u> over random admissible probes and the clamped
/// extreme points; values >= -tol certify discrete stationarity against the
/// probe set.
double variational_inequality_residual(const SpectralBasis& basis, const TimeField& u,
                                       const TimeField& g, const AdmissibleSet& set,
                                       int probes, std::uint64_t seed = 0);

}  // namespace fchc

#endif
