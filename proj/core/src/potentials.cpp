#include "fchc/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fchc/errors.hpp"

namespace fchc {

namespace {

double poly_eval(const std::vector<double>& coeffs, int order, double x) {
  // Derivative of order `order` of sum_k c_k x^k, by Horner on the shifted
  // coefficient list.
  double acc = 0.0;
  const int n = static_cast<int>(coeffs.size());
  for (int k = n - 1; k >= order; --k) {
    double factor = 1.0;
    for (int j = 0; j < order; ++j) factor *= (k - j);
    acc = acc * x + coeffs[static_cast<std::size_t>(k)] * factor;
  }
  return acc;
}

double log_f1(int order, double x) {
  switch (order) {
    case 0: return (1.0 + x) * std::log1p(x) + (1.0 - x) * std::log1p(-x);
    case 1: return std::log1p(x) - std::log1p(-x);
    case 2: return 2.0 / (1.0 - x * x);
    case 3: {
      const double d = 1.0 - x * x;
      return 4.0 * x / (d * d);
    }
  }
  throw ValidationError("potential derivative order must be 0..3");
}

double regular_f1(int order, double x) {
  switch (order) {
    case 0: return 0.25 * x * x * x * x + 0.25;
    case 1: return x * x * x;
    case 2: return 3.0 * x * x;
    case 3: return 6.0 * x;
  }
  throw ValidationError("potential derivative order must be 0..3");
}

}  // namespace

PotentialSpec PotentialSpec::regular() { return PotentialSpec{}; }

PotentialSpec PotentialSpec::logarithmic(double c1, double safeguard_delta) {
  if (!(c1 > 1.0))
    throw ValidationError("logarithmic potential needs c1 > 1 to be a double well");
  if (!(safeguard_delta > 0.0 && safeguard_delta < 0.5))
    throw ValidationError("logarithmic safeguard must lie in (0, 0.5)");
  PotentialSpec s;
  s.variant = PotentialVariant::logarithmic;
  s.c1 = c1;
  s.safeguard_delta = safeguard_delta;
  return s;
}

PotentialSpec PotentialSpec::split_polynomial(std::vector<double> f1_coeffs,
                                              std::vector<double> f2_coeffs) {
  PotentialSpec s;
  s.variant = PotentialVariant::split_polynomial;
  s.f1_coefficients = std::move(f1_coeffs);
  s.f2_coefficients = std::move(f2_coeffs);
  return s;
}

double PotentialSpec::domain_halfwidth() const {
  if (variant == PotentialVariant::logarithmic) return 1.0 - safeguard_delta;
  return std::numeric_limits<double>::infinity();
}

void validate_potential(const PotentialSpec& spec, double lo, double hi) {
  if (!(lo < hi)) throw ValidationError("potential check interval is empty");
  const double hw = spec.domain_halfwidth();
  const double a = std::max(lo, -hw);
  const double b = std::min(hi, hw);
  if (!(a < b)) throw ValidationError("check interval lies outside the potential domain");
  double f2pp_max = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = a + (b - a) * i / 1000.0;
    if (eval_potential(spec, PotentialPart::f1, 2, x) < -1e-12)
      throw ValidationError("convex part has negative curvature at x = " +
                            std::to_string(x));
    f2pp_max = std::max(f2pp_max,
                        std::abs(eval_potential(spec, PotentialPart::f2, 2, x)));
  }
  if (!std::isfinite(f2pp_max))
    throw ValidationError("f2 curvature is unbounded on the check interval");
}

double eval_potential(const PotentialSpec& spec, PotentialPart part, int order,
                      double x) {
  if (order < 0 || order > 3)
    throw ValidationError("potential derivative order must be 0..3");
  const bool needs_f1 = part != PotentialPart::f2;
  if (needs_f1 && spec.bounded_domain() && std::abs(x) > spec.domain_halfwidth())
    throw DomainViolation("potential evaluated at x = " + std::to_string(x) +
                              " outside the safeguarded interval [-" +
                              std::to_string(spec.domain_halfwidth()) + ", " +
                              std::to_string(spec.domain_halfwidth()) + "]",
                          x, -1);

  auto f1 = [&](int k) -> double {
    switch (spec.variant) {
      case PotentialVariant::regular: return regular_f1(k, x);
      case PotentialVariant::logarithmic: return log_f1(k, x);
      case PotentialVariant::split_polynomial: return poly_eval(spec.f1_coefficients, k, x);
    }
    return 0.0;
  };
  auto f2 = [&](int k) -> double {
    switch (spec.variant) {
      case PotentialVariant::regular:
        return k == 0 ? -0.5 * x * x : (k == 1 ? -x : (k == 2 ? -1.0 : 0.0));
      case PotentialVariant::logarithmic:
        return k == 0 ? -spec.c1 * x * x
                      : (k == 1 ? -2.0 * spec.c1 * x : (k == 2 ? -2.0 * spec.c1 : 0.0));
      case PotentialVariant::split_polynomial:
        return poly_eval(spec.f2_coefficients, k, x);
    }
    return 0.0;
  };

  switch (part) {
    case PotentialPart::f1: return f1(order);
    case PotentialPart::f2: return f2(order);
    case PotentialPart::f: return f1(order) + f2(order);
  }
  return 0.0;
}

Field eval_potential(const PotentialSpec& spec, PotentialPart part, int order,
                     const Field& x) {
  Field out(x.size());
  const bool needs_f1 = part != PotentialPart::f2;
  const double hw = spec.domain_halfwidth();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (needs_f1 && spec.bounded_domain() && std::abs(x[i]) > hw)
      throw DomainViolation("potential evaluated at value " + std::to_string(x[i]) +
                                " (grid index " + std::to_string(i) +
                                ") outside the safeguarded interval",
                            x[i], static_cast<long>(i));
    out[i] = eval_potential(spec, part, order, x[i]);
  }
  return out;
}

namespace {

GBReport scan(const PotentialSpec& spec, double ymin, double ymax, double lo,
              double hi) {
  GBReport rep;
  rep.min_y = ymin;
  rep.max_y = ymax;
  rep.interval_lo = lo;
  rep.interval_hi = hi;
  rep.violated = ymin < lo || ymax > hi;

  // Sup of |f1^(i)| over the observed range, by dense sampling including the
  // endpoints; clamp to the potential's own domain so the scan itself cannot
  // throw.
  const double hw = spec.domain_halfwidth();
  const double a = std::max(ymin, -hw);
  const double b = std::min(ymax, hw);
  if (a <= b) {
    for (int i = 0; i <= 1000; ++i) {
      const double x = a + (b - a) * i / 1000.0;
      for (int k = 0; k <= 3; ++k)
        rep.f1_sup[k] =
            std::max(rep.f1_sup[k],
                     std::abs(eval_potential(spec, PotentialPart::f1, k, x)));
    }
  }
  return rep;
}

}  // namespace

GBReport check_admissible(const PotentialSpec& spec, const Field& y, double lo,
                          double hi) {
  if (!(lo < hi)) throw ValidationError("admissibility interval is empty");
  return scan(spec, y.minCoeff(), y.maxCoeff(), lo, hi);
}

GBReport check_admissible(const PotentialSpec& spec, const TimeField& y, double lo,
                          double hi) {
  if (!(lo < hi)) throw ValidationError("admissibility interval is empty");
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  for (const auto& v : y.values) {
    ymin = std::min(ymin, v.minCoeff());
    ymax = std::max(ymax, v.maxCoeff());
  }
  return scan(spec, ymin, ymax, lo, hi);
}

}  // namespace fchc
