#ifndef FCHC_POTENTIALS_HPP
#define FCHC_POTENTIALS_HPP

#include <Eigen/Dense>
#include <vector>

#include "fchc/domain.hpp"
#include "fchc/time_discrete.hpp"

namespace fchc {

enum class PotentialVariant { regular, logarithmic, split_polynomial };
enum class PotentialPart { f1, f2, f };

/// Double-well nonlinearity split into a convex part f1 and a smooth part f2
/// with Lipschitz derivative.
///
/// regular:      f1 = x^4/4 + 1/4,  f2 = -x^2/2  (so f = (x^2-1)^2/4)
/// logarithmic:  f1 = (1+x)ln(1+x) + (1-x)ln(1-x) on (-1,1),  f2 = -c1 x^2
/// split_polynomial: caller-supplied coefficient lists (ascending powers)
///
/// Logarithmic evaluations of f1 (and f) are guarded: |x| must stay at least
/// safeguard_delta away from the endpoints, otherwise DomainViolation. The
/// lower-semicontinuous extension f1(+-1) = 2 ln 2 exists mathematically but
/// is never evaluated numerically; computation stays strictly inside (-1, 1).
struct PotentialSpec {
  PotentialVariant variant = PotentialVariant::regular;
  double c1 = 2.0;                // logarithmic only, must exceed 1
  double safeguard_delta = 1e-4;  // logarithmic only, in (0, 0.5)
  std::vector<double> f1_coefficients;  // split_polynomial only
  std::vector<double> f2_coefficients;  // split_polynomial only

  static PotentialSpec regular();
  static PotentialSpec logarithmic(double c1, double safeguard_delta = 1e-4);
  static PotentialSpec split_polynomial(std::vector<double> f1_coeffs,
                                        std::vector<double> f2_coeffs);

  bool bounded_domain() const { return variant == PotentialVariant::logarithmic; }
  /// Largest |x| admitted for f1 evaluations (infinity for entire variants).
  double domain_halfwidth() const;
};

/// Checks the structural assumptions on an interval: f1 convex (sampled at
/// 1001 points) and f2'' bounded. Throws ValidationError on failure.
void validate_potential(const PotentialSpec& spec, double lo, double hi);

/// Pointwise evaluation of f1/f2/f or one of their first three derivatives.
double eval_potential(const PotentialSpec& spec, PotentialPart part, int order,
                      double x);
Field eval_potential(const PotentialSpec& spec, PotentialPart part, int order,
                     const Field& x);

/// Result of scanning a state against a compact admissibility interval.
struct GBReport {
  double min_y = 0.0;
  double max_y = 0.0;
  double interval_lo = 0.0;
  double interval_hi = 0.0;
  bool violated = false;
  // sup |f1^(i)| over [min_y, max_y] for i = 0..3
  double f1_sup[4] = {0.0, 0.0, 0.0, 0.0};
};

GBReport check_admissible(const PotentialSpec& spec, const Field& y, double lo,
                          double hi);
GBReport check_admissible(const PotentialSpec& spec, const TimeField& y, double lo,
                          double hi);

}  // namespace fchc

#endif
