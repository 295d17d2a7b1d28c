#ifndef FCHC_SELFCHECK_HPP
#define FCHC_SELFCHECK_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fchc {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Runs the full acceptance battery (criteria 1..12) at desk scale. Every
/// tolerance is pinned here. When `out` is nonnull, one line per criterion is
/// printed as it completes. Deterministic for a fixed seed.
std::vector<CheckResult> run_selfcheck(std::uint64_t seed, std::ostream* out);

}  // namespace fchc

#endif
