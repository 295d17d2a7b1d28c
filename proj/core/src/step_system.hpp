#ifndef FCHC_STEP_SYSTEM_HPP
#define FCHC_STEP_SYSTEM_HPP

// Shared internals of the implicit steppers: the stacked per-step linear
// algebra on the coefficient pair (beta, alpha) = (y in basis B, mu in
// basis A). Not installed; state and sensitivity both include this.

#include <Eigen/Dense>

#include "fchc/spectral.hpp"
#include "fchc/state.hpp"

namespace fchc::detail {

struct StepSystem {
  const SpectralBasis& A;
  const SpectralBasis& B;
  double tau;
  double h;
  Eigen::VectorXd pow_a;   // lambda_A^{2r} per mode
  Eigen::VectorXd pow_b;   // lambda_B^{2sigma} per mode
  Eigen::MatrixXd gram;    // (e'_j, e_i): M_A x M_B cross-Gram
  Eigen::MatrixXd anal_b;  // E_B diag(w): analysis matrix of B, M_B x G

  StepSystem(const SpectralBasis& basis_a, const SpectralBasis& basis_b,
             const StateConfig& cfg);

  int ma() const { return A.mode_count(); }
  int mb() const { return B.mode_count(); }
  int size() const { return ma() + mb(); }

  /// (f''-type multiplier) projected on basis B: anal_b * diag(d) * E_B^T.
  Eigen::MatrixXd multiplier_matrix(const Eigen::VectorXd& grid_diagonal) const;

  /// Coefficients of the pointwise product diag * (field given by B-coeffs).
  Eigen::VectorXd multiplier_apply(const Eigen::VectorXd& grid_diagonal,
                                   const Eigen::VectorXd& beta) const;

  /// Stacked matrix [[G/h, diag(pow_a)], [(tau/h) I + diag(pow_b) + Psi, -G^T]]
  /// acting on [beta; alpha], with Psi the multiplier matrix of
  /// `grid_diagonal`. `shift` adds to the (tau/h) diagonal and
  /// `identity_in_first_block` turns diag(pow_a) into I + diag(pow_a); the
  /// stabilized linearized scheme uses both.
  Eigen::MatrixXd stacked_matrix(const Eigen::VectorXd& grid_diagonal,
                                 double shift = 0.0,
                                 bool identity_in_first_block = false) const;
};

}  // namespace fchc::detail

#endif
