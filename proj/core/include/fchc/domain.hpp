#ifndef FCHC_DOMAIN_HPP
#define FCHC_DOMAIN_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace fchc {

/// A real-valued function sampled on the collocation grid of a DomainSpec,
/// flattened row-major (axis 0 outermost).
using Field = Eigen::VectorXd;

/// Box domain in one or two dimensions, discretized by a midpoint
/// (cell-centered) collocation grid. Midpoint nodes make both the sine and
/// the cosine eigenfamilies of the box Laplacian exactly orthogonal under the
/// uniform quadrature weights, which the spectral layer relies on.
struct DomainSpec {
  int dimension = 1;
  std::vector<double> side_lengths;  // one positive entry per axis
  std::vector<int> grid_points;      // >= 4 nodes per axis

  DomainSpec() = default;
  DomainSpec(int dim, std::vector<double> lengths, std::vector<int> points);

  std::size_t node_count() const;
  double volume() const;

  /// Coordinate of node i along the given axis: (i + 1/2) * L / n.
  double axis_node(int axis, int i) const;

  /// Uniform quadrature weight of one cell, prod_a (L_a / n_a).
  double cell_weight() const;

  /// Quadrature weights for all nodes (constant vector at desk scale; kept
  /// as a vector so callers never assume uniformity).
  Eigen::VectorXd quadrature_weights() const;

  bool operator==(const DomainSpec& other) const = default;
};

/// Throws ValidationError when dimension/side_lengths/grid_points violate the
/// constructor contract. Used by both the constructor and config loading.
void validate_domain(const DomainSpec& d);

}  // namespace fchc

#endif
