#ifndef FCHC_HARNESS_HPP
#define FCHC_HARNESS_HPP

#include <string>

#include "fchc/config.hpp"
#include "fchc/io.hpp"

namespace fchc {

/// Executes one CLI command against a parsed config and writes snapshots,
/// scalar series, and the run manifest into out_dir. Returns the manifest.
/// Commands: simulate, linearize, adjoint, grad-check, optimize, convergence,
/// selftest. Throws the solver/config error families; selftest failures are
/// reported via the `selftest_failures` diagnostic instead (the CLI maps them
/// to its own exit code).
RunManifest run_command(const std::string& command, const ExperimentConfig& cfg,
                        const std::string& out_dir, std::uint64_t seed);

/// Worker cap for commands that parallelize (convergence levels): the
/// FCHC_THREADS environment variable, clamped to at least 1.
int worker_cap();

}  // namespace fchc

#endif
