#include "fchc/io.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "fchc/errors.hpp"
#include "fchc/version.hpp"

namespace fchc {

namespace {

constexpr char kMagic[6] = {'F', 'C', 'H', 'C', '1', '\0'};

void put_u64(std::ofstream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64(std::ifstream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw ParseError("field file truncated while reading a count");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

void put_f64(std::ofstream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double get_f64(std::ifstream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw ParseError("field file truncated while reading payload");
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | buf[i];
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

void write_nodes(const std::string& path,
                 const std::vector<const Eigen::VectorXd*>& nodes,
                 const std::vector<std::uint64_t>& axis_sizes) {
  std::uint64_t per_node = 1;
  for (auto s : axis_sizes) per_node *= s;
  for (const auto* n : nodes)
    if (static_cast<std::uint64_t>(n->size()) != per_node)
      throw ShapeMismatch("field size does not match the declared axis sizes");

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ParseError("cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put_u64(os, axis_sizes.size());
  for (auto s : axis_sizes) put_u64(os, s);
  put_u64(os, nodes.size());
  for (const auto* n : nodes)
    for (Eigen::Index i = 0; i < n->size(); ++i) put_f64(os, (*n)[i]);
  if (!os) throw ParseError("write to " + path + " failed");
}

}  // namespace

void write_field(const std::string& path, const Field& f,
                 const std::vector<std::uint64_t>& axis_sizes) {
  write_nodes(path, {&f}, axis_sizes);
}

void write_time_field(const std::string& path, const TimeField& tf,
                      const std::vector<std::uint64_t>& axis_sizes) {
  std::vector<const Eigen::VectorXd*> nodes;
  nodes.reserve(tf.values.size());
  for (const auto& v : tf.values) nodes.push_back(&v);
  write_nodes(path, nodes, axis_sizes);
}

StoredField read_field_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open field file " + path);
  char magic[6];
  is.read(magic, 6);
  if (!is || std::memcmp(magic, kMagic, 6) != 0)
    throw ParseError(path + " is not a field file (bad magic)");
  StoredField out;
  const std::uint64_t dim = get_u64(is);
  if (dim == 0 || dim > 2) throw ParseError(path + ": unsupported dimension");
  std::uint64_t per_node = 1;
  for (std::uint64_t a = 0; a < dim; ++a) {
    out.axis_sizes.push_back(get_u64(is));
    per_node *= out.axis_sizes.back();
  }
  const std::uint64_t nodes = get_u64(is);
  if (per_node == 0 || nodes == 0 || per_node * nodes > (1ull << 28))
    throw ParseError(path + ": implausible payload size");
  out.nodes.resize(nodes);
  for (auto& n : out.nodes) {
    n.resize(static_cast<Eigen::Index>(per_node));
    for (std::uint64_t i = 0; i < per_node; ++i) n[static_cast<Eigen::Index>(i)] = get_f64(is);
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ParseError("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i)
    os << header[i] << (i + 1 < header.size() ? "," : "\r\n");
  char buf[64];
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
      os << buf << (i + 1 < row.size() ? "," : "\r\n");
    }
  }
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["toolkit_version"] = toolkit_version.empty() ? std::string(kVersion) : toolkit_version;
  j["wall_seconds"] = wall_seconds;
  j["seed"] = seed;
  nlohmann::json diag = nlohmann::json::object();
  for (const auto& [k, v] : diagnostics) diag[k] = v;
  j["diagnostics"] = diag;
  j["notes"] = notes;

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw ParseError("cannot open " + tmp + " for writing");
    os << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace fchc
