#include "fchc/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>

#include "fchc/errors.hpp"

namespace fchc {

namespace {

constexpr double kPi = std::numbers::pi;

// lambda^s with the convention 0^s = 0 for s > 0 (annihilated zero mode).
double eigen_power(double lambda, double s) {
  if (lambda == 0.0) return s > 0.0 ? 0.0 : 1.0;
  return std::pow(lambda, s);
}

// Per-axis mode values on midpoint node i of n: Neumann k=0.. are cosines
// including the constant, Dirichlet k=1.. are sines. Normalized in L2(0, L).
// The trig argument k pi (i+1/2)/n is reduced modulo the period with exact
// integer arithmetic so high modes are sampled to full precision.
double axis_mode_value(BoundaryCondition bc, int k, int i, int n, double L) {
  if (bc == BoundaryCondition::neumann && k == 0) return 1.0 / std::sqrt(L);
  const long m = static_cast<long>(k) * (2 * i + 1) % (4L * n);
  const double angle = static_cast<double>(m) * (kPi / (2.0 * n));
  const double trig =
      bc == BoundaryCondition::neumann ? std::cos(angle) : std::sin(angle);
  return std::sqrt(2.0 / L) * trig;
}

}  // namespace

SpectralBasis::SpectralBasis(DomainSpec domain, BoundaryCondition bc,
                             OperatorTag tag, int mode_count)
    : domain_(std::move(domain)), bc_(bc), tag_(tag) {
  validate_domain(domain_);
  if (mode_count < 1) throw ValidationError("mode_count must be positive");

  // Per-axis admissible wavenumbers. The midpoint-grid orthogonality of the
  // trigonometric families holds for k <= n-1, which also leaves the usual
  // dealiasing margin when n >= 2M.
  const int dim = domain_.dimension;
  std::vector<std::vector<int>> axis_modes(dim);
  long available = 1;
  for (int a = 0; a < dim; ++a) {
    const int n = domain_.grid_points[a];
    const int k0 = (bc_ == BoundaryCondition::neumann) ? 0 : 1;
    for (int k = k0; k <= n - 1; ++k) axis_modes[a].push_back(k);
    available *= static_cast<long>(axis_modes[a].size());
  }
  if (mode_count > available)
    throw ValidationError("mode_count " + std::to_string(mode_count) +
                          " exceeds the " + std::to_string(available) +
                          " modes resolved by the grid");

  // Enumerate tensor modes, sort by eigenvalue with a deterministic
  // wavenumber tie-break, keep the first mode_count.
  struct Entry {
    double lambda;
    std::array<int, 2> k;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(available));
  auto axis_lambda = [&](int a, int k) {
    const double w = k * kPi / domain_.side_lengths[a];
    return w * w;
  };
  if (dim == 1) {
    for (int k : axis_modes[0]) entries.push_back({axis_lambda(0, k), {k, 0}});
  } else {
    for (int k1 : axis_modes[0])
      for (int k2 : axis_modes[1])
        entries.push_back({axis_lambda(0, k1) + axis_lambda(1, k2), {k1, k2}});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.lambda, a.k[0], a.k[1]) < std::tie(b.lambda, b.k[0], b.k[1]);
  });
  entries.resize(static_cast<std::size_t>(mode_count));

  eigenvalues_.resize(mode_count);
  modes_.resize(static_cast<std::size_t>(mode_count));
  for (int j = 0; j < mode_count; ++j) {
    eigenvalues_[j] = entries[static_cast<std::size_t>(j)].lambda;
    modes_[static_cast<std::size_t>(j)] = entries[static_cast<std::size_t>(j)].k;
  }

  weights_ = domain_.quadrature_weights();

  // Dense sample table. Desk scale keeps M x G small enough for this.
  const auto G = static_cast<Eigen::Index>(domain_.node_count());
  samples_.resize(mode_count, G);
  if (dim == 1) {
    const int n0 = domain_.grid_points[0];
    const double L = domain_.side_lengths[0];
    for (int j = 0; j < mode_count; ++j) {
      const int k = modes_[static_cast<std::size_t>(j)][0];
      for (Eigen::Index i = 0; i < G; ++i)
        samples_(j, i) = axis_mode_value(bc_, k, static_cast<int>(i), n0, L);
    }
  } else {
    const int n0 = domain_.grid_points[0];
    const int n1 = domain_.grid_points[1];
    const double L0 = domain_.side_lengths[0];
    const double L1 = domain_.side_lengths[1];
    for (int j = 0; j < mode_count; ++j) {
      const auto [k1, k2] = modes_[static_cast<std::size_t>(j)];
      for (Eigen::Index i = 0; i < G; ++i) {
        const int i0 = static_cast<int>(i) / n1;
        const int i1 = static_cast<int>(i) % n1;
        samples_(j, i) = axis_mode_value(bc_, k1, i0, n0, L0) *
                         axis_mode_value(bc_, k2, i1, n1, L1);
      }
    }
  }
}

Eigen::VectorXd SpectralBasis::analyze(const Field& grid_values) const {
  if (grid_values.size() != static_cast<Eigen::Index>(grid_size()))
    throw ShapeMismatch("analyze: field has " + std::to_string(grid_values.size()) +
                        " values, grid has " + std::to_string(grid_size()));
  return samples_ * weights_.cwiseProduct(grid_values);
}

Field SpectralBasis::synthesize(const Eigen::VectorXd& coefficients) const {
  if (coefficients.size() != mode_count())
    throw ShapeMismatch("synthesize: got " + std::to_string(coefficients.size()) +
                        " coefficients for " + std::to_string(mode_count()) + " modes");
  return samples_.transpose() * coefficients;
}

Field SpectralBasis::mode_field(int j) const {
  if (j < 0 || j >= mode_count()) throw ShapeMismatch("mode index out of range");
  return samples_.row(j).transpose();
}

Eigen::VectorXd transform(const SpectralBasis& basis, const Eigen::VectorXd& input,
                          TransformDirection direction) {
  return direction == TransformDirection::analyze ? basis.analyze(input)
                                                  : basis.synthesize(input);
}

double inner(const SpectralBasis& basis, const Field& v, const Field& w) {
  if (v.size() != w.size() || v.size() != static_cast<Eigen::Index>(basis.grid_size()))
    throw ShapeMismatch("inner: field sizes do not match the grid");
  return v.cwiseProduct(w).dot(basis.quadrature_weights());
}

double norm(const SpectralBasis& basis, const Field& v) {
  return std::sqrt(std::max(0.0, inner(basis, v, v)));
}

double mean(const SpectralBasis& basis, const Field& v) {
  if (v.size() != static_cast<Eigen::Index>(basis.grid_size()))
    throw ShapeMismatch("mean: field size does not match the grid");
  return v.dot(basis.quadrature_weights()) / basis.volume();
}

FracOperator::FracOperator(const SpectralBasis& b, double e, bool zero_mean)
    : basis(&b), exponent(e), zero_mean_restricted(zero_mean) {
  if (exponent < 0.0 && b.has_zero_mode() && !zero_mean_restricted)
    throw ValidationError(
        "negative exponent with a zero first eigenvalue requires the "
        "zero-mean restriction");
}

Field apply_power(const FracOperator& op, const Field& v) {
  const SpectralBasis& basis = *op.basis;
  Eigen::VectorXd c = basis.analyze(v);
  if (op.exponent < 0.0 && basis.has_zero_mode()) {
    const double vn = v.norm();
    if (std::abs(mean(basis, v)) > 1e-10 * std::max(1e-300, vn))
      throw NonZeroMeanRhs("apply_power: negative power of a field with nonzero mean");
    c[0] = 0.0;
  }
  for (int j = 0; j < basis.mode_count(); ++j)
    c[j] *= eigen_power(basis.eigenvalue(j), op.exponent);
  if (op.exponent < 0.0 && basis.has_zero_mode()) c[0] = 0.0;
  return basis.synthesize(c);
}

Field solve_power(const FracOperator& op, const Field& rhs) {
  if (!(op.exponent > 0.0))
    throw ValidationError("solve_power requires a positive exponent");
  const SpectralBasis& basis = *op.basis;
  Eigen::VectorXd c = basis.analyze(rhs);
  if (basis.has_zero_mode()) {
    const double rn = norm(basis, rhs);
    if (std::abs(mean(basis, rhs)) > 1e-10 * std::max(1e-300, rn))
      throw NonZeroMeanRhs("solve_power: right-hand side has nonzero mean (" +
                           std::to_string(mean(basis, rhs)) +
                           ") while the first eigenvalue vanishes");
    c[0] = 0.0;
    for (int j = 1; j < basis.mode_count(); ++j)
      c[j] /= eigen_power(basis.eigenvalue(j), op.exponent);
  } else {
    for (int j = 0; j < basis.mode_count(); ++j)
      c[j] /= eigen_power(basis.eigenvalue(j), op.exponent);
  }
  return basis.synthesize(c);
}

double inner_product_Ar(const SpectralBasis& basis, double r, const Field& v,
                        const Field& w, bool graph_mode) {
  const Eigen::VectorXd cv = basis.analyze(v);
  const Eigen::VectorXd cw = basis.analyze(w);
  double acc = 0.0;
  for (int j = 0; j < basis.mode_count(); ++j)
    acc += eigen_power(basis.eigenvalue(j), 2.0 * r) * cv[j] * cw[j];
  if (graph_mode) return inner(basis, v, w) + acc;
  if (basis.has_zero_mode()) acc += cv[0] * cw[0];
  return acc;
}

double norm_Ar(const SpectralBasis& basis, double r, const Field& v, bool graph_mode) {
  return std::sqrt(std::max(0.0, inner_product_Ar(basis, r, v, v, graph_mode)));
}

double poincare_residual(const SpectralBasis& basis, double r, const Field& v) {
  Field z = v.array() - mean(basis, v);
  const double nz = norm(basis, z);
  if (nz <= 1e-14 * std::max(1.0, v.norm()))
    throw ZeroField("poincare_residual: field is constant up to round-off");
  const FracOperator op(basis, r, false);
  const double na = norm(basis, apply_power(op, z));
  return nz / na;
}

}  // namespace fchc
