#ifndef FCHC_SENSITIVITY_HPP
#define FCHC_SENSITIVITY_HPP

#include <vector>

#include "fchc/state.hpp"

namespace fchc {

enum class LinearizedScheme { plain, paper_stabilized };

/// Discrete solution (xi, eta) of the linearized system with xi(0) = eta(0) = 0.
///
/// plain is the exact directional derivative of the nonlinear stepper
/// (f1'' implicit at the new node, f2'' explicit at the old one) and is the
/// scheme the adjoint transposes. paper_stabilized carries the extra eta
/// identity term and the curvature shift by the observed bound c_hat.
struct LinearizedTrajectory {
  LinearizedScheme scheme = LinearizedScheme::plain;
  const SpectralBasis* basis_a = nullptr;
  const SpectralBasis* basis_b = nullptr;
  TimeField xi;   // grid fields
  TimeField eta;  // grid fields
  std::vector<Eigen::VectorXd> xi_coeffs;   // basis-B coefficients
  std::vector<Eigen::VectorXd> eta_coeffs;  // basis-A coefficients
};

LinearizedTrajectory solve_linearized(const StateTrajectory& state, const TimeField& k,
                                      LinearizedScheme scheme);

/// Cost data entering the adjoint loads: weights and targets.
struct CostSpec {
  double alpha1 = 0.0;
  double alpha2 = 1.0;
  double alpha3 = 0.1;
  Field y_omega;   // terminal target
  TimeField y_q;   // distributed target

  void validate() const;
};

enum class AdjointScheme {
  transpose,  // exact algebraic transpose of the plain linearized stepper
  direct      // backward implicit discretization of the adjoint equations
};

/// Adjoint pair (p, q) with the mean bookkeeping of the zero-eigenvalue case.
///
/// transpose: node n >= 1 holds the multiplier of forward step n; pairing
/// h * sum (q^n, k^n) reproduces the reduced-cost derivative to round-off.
/// The terminal identity p^N + tau q^N = g1 then holds in its backward-Euler
/// embedded form p^N + tau q^N = g1 + h (g2^N - (B^{2sigma} + f1''(y^N)) q^N);
/// the plain form is O(h) and is what the direct scheme satisfies exactly.
/// Node 0 extends the backward recursion once more (diagnostic only).
struct AdjointTrajectory {
  AdjointScheme scheme = AdjointScheme::transpose;
  const SpectralBasis* basis_a = nullptr;
  const SpectralBasis* basis_b = nullptr;
  TimeField p;
  TimeField q;
  std::vector<double> p_mean;  // mean(p^n); populated only when lambda_1(A) = 0
  TimeField psi;               // f''(y^n) on the grid
  Field g1;
  TimeField g2;
  std::vector<Eigen::VectorXd> p_coeffs;  // basis-A coefficients
  std::vector<Eigen::VectorXd> q_coeffs;  // basis-B coefficients
};

AdjointTrajectory solve_adjoint(const StateTrajectory& state, const CostSpec& cost,
                                AdjointScheme scheme = AdjointScheme::transpose);

/// Relative defect of the discrete duality pairing
///   (g1, xi^N) + h sum (g2^n, xi^n)  =  h sum (q^n, k^n).
/// Exact (round-off) for the plain/transpose pair; SchemeMismatch otherwise.
double adjoint_identity_residual(const LinearizedTrajectory& lin,
                                 const AdjointTrajectory& adj, const TimeField& k,
                                 const CostSpec& cost);

/// Independent recovery of the mean of p by backward quadrature of the
/// mean-mode balance (requires lambda_1(A) = 0).
std::vector<double> recover_p_mean(const StateTrajectory& state,
                                   const AdjointTrajectory& adj);

/// Norm of S(u + eps k) - S(u) - eps (eta, xi) in the solution space
/// (mu part in L2(0,T; V_A^r), y part in H1(0,T; H) + Linf(0,T; V_B^sigma)).
/// Halving eps divides this by about four.
double frechet_remainder(const SpectralBasis& basis_a, const SpectralBasis& basis_b,
                         const PotentialSpec& potential, const TimeField& u,
                         const Field& y0, const StateConfig& cfg, const TimeField& k,
                         double eps);

}  // namespace fchc

#endif
