#include "fchc/domain.hpp"

#include <string>

#include "fchc/errors.hpp"

namespace fchc {

void validate_domain(const DomainSpec& d) {
  if (d.dimension != 1 && d.dimension != 2)
    throw ValidationError("domain dimension must be 1 or 2, got " +
                          std::to_string(d.dimension));
  if (static_cast<int>(d.side_lengths.size()) != d.dimension ||
      static_cast<int>(d.grid_points.size()) != d.dimension)
    throw ValidationError("domain needs one side length and one grid size per axis");
  for (double L : d.side_lengths)
    if (!(L > 0.0)) throw ValidationError("side lengths must be positive");
  for (int n : d.grid_points)
    if (n < 4) throw ValidationError("need at least 4 grid points per axis");
}

DomainSpec::DomainSpec(int dim, std::vector<double> lengths, std::vector<int> points)
    : dimension(dim), side_lengths(std::move(lengths)), grid_points(std::move(points)) {
  validate_domain(*this);
}

std::size_t DomainSpec::node_count() const {
  std::size_t n = 1;
  for (int g : grid_points) n *= static_cast<std::size_t>(g);
  return n;
}

double DomainSpec::volume() const {
  double v = 1.0;
  for (double L : side_lengths) v *= L;
  return v;
}

double DomainSpec::axis_node(int axis, int i) const {
  return (i + 0.5) * side_lengths[axis] / grid_points[axis];
}

double DomainSpec::cell_weight() const {
  double w = 1.0;
  for (int a = 0; a < dimension; ++a) w *= side_lengths[a] / grid_points[a];
  return w;
}

Eigen::VectorXd DomainSpec::quadrature_weights() const {
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(node_count()),
                                   cell_weight());
}

}  // namespace fchc
