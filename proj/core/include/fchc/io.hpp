#ifndef FCHC_IO_HPP
#define FCHC_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fchc/domain.hpp"
#include "fchc/time_discrete.hpp"

namespace fchc {

/// Binary field container: magic "FCHC1\0", then little-endian u64 counts
/// (dimension, one size per axis, time node count), then row-major f64
/// payload, node-major in time. A single space field is stored with one time
/// node.
void write_field(const std::string& path, const Field& f,
                 const std::vector<std::uint64_t>& axis_sizes);
void write_time_field(const std::string& path, const TimeField& tf,
                      const std::vector<std::uint64_t>& axis_sizes);

struct StoredField {
  std::vector<std::uint64_t> axis_sizes;
  std::vector<Eigen::VectorXd> nodes;  // one entry per time node
};

StoredField read_field_file(const std::string& path);

/// RFC-4180 CSV with a header row; numeric cells carry full double precision.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// FNV-1a 64-bit, used for config hashes.
std::uint64_t fnv1a64(const std::string& bytes);

/// End-of-run record, written atomically (temp file + rename).
struct RunManifest {
  std::string command;
  std::uint64_t config_hash = 0;
  std::string toolkit_version;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  // Per-phase diagnostics as flat key/value pairs.
  std::vector<std::pair<std::string, double>> diagnostics;
  std::vector<std::string> notes;

  void write(const std::string& path) const;
};

}  // namespace fchc

#endif
