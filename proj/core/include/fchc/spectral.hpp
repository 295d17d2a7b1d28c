#ifndef FCHC_SPECTRAL_HPP
#define FCHC_SPECTRAL_HPP

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "fchc/domain.hpp"

namespace fchc {

enum class BoundaryCondition { dirichlet, neumann };
enum class OperatorTag { A, B };
enum class TransformDirection { analyze, synthesize };

/// Eigenpairs and dense transform tables of one box-Laplacian operator.
///
/// Eigenfunctions are tensor products of per-axis sine (Dirichlet) or cosine
/// (Neumann) modes, normalized in L2(Omega); on the midpoint grid the discrete
/// quadrature reproduces that normalization to round-off, so analysis and
/// synthesis are exact mutual inverses on coefficient space. Immutable after
/// construction.
class SpectralBasis {
public:
  SpectralBasis(DomainSpec domain, BoundaryCondition bc, OperatorTag tag,
                int mode_count);

  const DomainSpec& domain() const { return domain_; }
  BoundaryCondition boundary_condition() const { return bc_; }
  OperatorTag tag() const { return tag_; }
  int mode_count() const { return static_cast<int>(eigenvalues_.size()); }
  std::size_t grid_size() const { return domain_.node_count(); }

  /// Nondecreasing Laplacian eigenvalues, sums of (k pi / L)^2 per axis.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  double eigenvalue(int j) const { return eigenvalues_[j]; }
  bool has_zero_mode() const { return eigenvalues_[0] == 0.0; }

  /// Per-axis wavenumbers of mode j (after sorting).
  const std::vector<std::array<int, 2>>& mode_indices() const { return modes_; }

  const Eigen::VectorXd& quadrature_weights() const { return weights_; }
  double volume() const { return domain_.volume(); }

  /// Coefficients (v, e_j), j = 1..M, by quadrature.
  Eigen::VectorXd analyze(const Field& grid_values) const;
  /// Grid values of sum_j c_j e_j.
  Field synthesize(const Eigen::VectorXd& coefficients) const;

  /// Mode j sampled on the grid.
  Field mode_field(int j) const;

  /// M x G matrix of eigenfunction samples (row j = e_j on the grid).
  const Eigen::MatrixXd& sample_matrix() const { return samples_; }

private:
  DomainSpec domain_;
  BoundaryCondition bc_;
  OperatorTag tag_;
  Eigen::VectorXd eigenvalues_;
  std::vector<std::array<int, 2>> modes_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd samples_;  // mode_count x grid_size
};

Eigen::VectorXd transform(const SpectralBasis& basis, const Eigen::VectorXd& input,
                          TransformDirection direction);

/// Quadrature inner product and norm on grid fields.
double inner(const SpectralBasis& basis, const Field& v, const Field& w);
double norm(const SpectralBasis& basis, const Field& v);

/// Mean value (1/|Omega|) integral of v.
double mean(const SpectralBasis& basis, const Field& v);

/// A fractional power of the basis operator, applied or inverted in
/// coefficient space. Negative exponents require either a positive first
/// eigenvalue or the explicit zero-mean restriction.
struct FracOperator {
  const SpectralBasis* basis = nullptr;
  double exponent = 1.0;
  bool zero_mean_restricted = false;

  FracOperator(const SpectralBasis& b, double e, bool zero_mean = false);
};

/// lambda_j^exponent on each coefficient; the zero mode is annihilated for
/// positive exponents and pinned to zero mean for negative ones.
Field apply_power(const FracOperator& op, const Field& v);

/// Solves apply_power(op, w) = rhs for w, op.exponent > 0. With a zero first
/// eigenvalue this is the zero-mean inverse; a right-hand side with
/// |mean| > 1e-10 * ||rhs|| raises NonZeroMeanRhs.
Field solve_power(const FracOperator& op, const Field& rhs);

/// Inner product inducing the working norm of the fractional space.
/// Plain mode: (A^r v, A^r w), augmented by (v,e1)(w,e1) when lambda_1 = 0.
/// graph_mode: (v,w) + (B^r v, B^r w), the graph inner product used for B.
double inner_product_Ar(const SpectralBasis& basis, double r, const Field& v,
                        const Field& w, bool graph_mode = false);

double norm_Ar(const SpectralBasis& basis, double r, const Field& v,
               bool graph_mode = false);

/// ||v - mean v|| / ||A^r (v - mean v)||; bounded by lambda_2^{-r} for fields
/// resolved by the basis. Throws ZeroField when v is (numerically) constant.
double poincare_residual(const SpectralBasis& basis, double r, const Field& v);

}  // namespace fchc

#endif
