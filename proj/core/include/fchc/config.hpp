#ifndef FCHC_CONFIG_HPP
#define FCHC_CONFIG_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fchc/optimizer.hpp"

namespace fchc {

/// Descriptor of a field: zero, constant, a sum of basis modes (zero-based
/// mode indices), or a binary file. When used for a control or target over
/// time, the non-file kinds are replicated at every node and the file kind
/// reads a time-field container.
struct FieldDescriptor {
  std::string kind = "zero";  // zero | constant | mode_sum | file
  double value = 0.0;
  std::vector<std::pair<int, double>> modes;  // (mode index, amplitude)
  std::string path;
};

using TimeFieldDescriptor = FieldDescriptor;

struct OperatorConfig {
  BoundaryCondition bc = BoundaryCondition::neumann;
  double exponent = 0.5;  // r for A, sigma for B
  int modes = 64;
};

struct OptimizeConfig {
  int max_iter = 200;
  double stat_tol = 1e-6;
  double projection_tol = 1e-10;
};

struct ConvergenceConfig {
  std::vector<int> levels = {32, 64, 128};
  int reference_steps = 2048;
};

struct GradCheckConfig {
  int directions = 5;
  std::vector<double> epsilons = {1e-3, 1e-4, 1e-5};
  double tolerance = 1e-5;
};

/// Fully parsed and validated experiment description.
struct ExperimentConfig {
  DomainSpec domain;
  OperatorConfig op_a;
  OperatorConfig op_b;
  PotentialSpec potential;
  TimeGrid time;
  StateConfig state;  // grid/r/sigma filled from the blocks above
  FieldDescriptor initial;
  TimeFieldDescriptor control;
  CostSpec cost_weights;  // targets resolved later against the bases
  TimeFieldDescriptor y_q;
  FieldDescriptor y_omega;
  AdmissibleSet admissible;
  OptimizeConfig optimize;
  ConvergenceConfig convergence;
  GradCheckConfig grad_check;
  LinearizedScheme linearize_scheme = LinearizedScheme::plain;
  TimeFieldDescriptor direction;  // for linearize / grad-check
  std::string output_directory = "out";
  std::uint64_t seed = 0;

  /// Canonical serialized form (sorted keys); hashing this gives the config
  /// hash recorded in run manifests.
  std::string canonical_json() const;
};

/// Parses and validates a config file. Unknown keys are rejected. `text`
/// variant parses from memory (used for presets and tests).
ExperimentConfig load_config(const std::string& path);
ExperimentConfig load_config_text(const std::string& text,
                                  const std::string& origin = "<memory>");

/// Applies one `--override key.path=value` assignment to raw JSON text.
std::string apply_override(const std::string& json_text, const std::string& assignment);

/// Embedded presets: example1_log, example2_regular, example3_growth.
std::vector<std::string> preset_names();
std::string preset_json(const std::string& name);

/// Materialized operator bases plus resolved fields for one experiment.
struct ExperimentSetup {
  std::shared_ptr<SpectralBasis> basis_a;
  std::shared_ptr<SpectralBasis> basis_b;
  ControlProblem problem;
  TimeField control;
};

ExperimentSetup build_setup(const ExperimentConfig& cfg);

/// Resolves a field/time-field descriptor against a basis (mode_sum uses the
/// basis's eigenfunctions; file descriptors read the binary format).
Field resolve_field(const FieldDescriptor& d, const SpectralBasis& basis);
TimeField resolve_time_field(const TimeFieldDescriptor& d, const SpectralBasis& basis,
                             const TimeGrid& grid);

}  // namespace fchc

#endif
