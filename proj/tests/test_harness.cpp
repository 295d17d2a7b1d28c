#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fchc/config.hpp"
#include "fchc/errors.hpp"
#include "fchc/harness.hpp"
#include "fchc/io.hpp"

using namespace fchc;

namespace {

const char* kMinimalConfig = R"json({
  "domain": {"dimension": 1, "side_lengths": [3.141592653589793], "grid_points": [32]},
  "operator_a": {"bc": "neumann", "exponent": 0.5, "modes": 12},
  "operator_b": {"bc": "neumann", "exponent": 0.8, "modes": 12},
  "potential": {"variant": "regular"},
  "time": {"horizon": 0.2, "steps": 8},
  "state": {"tau": 0.5},
  "initial": {"kind": "constant", "value": 0.2},
  "control": {"kind": "zero"},
  "cost": {"alpha1": 0.0, "alpha2": 1.0, "alpha3": 0.1,
           "y_omega": {"kind": "zero"}, "y_q": {"kind": "zero"}},
  "seed": 7
})json";

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct TempDir {
  std::filesystem::path path;
  TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("fchc_test_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("minimal config parses and validates") {
  const ExperimentConfig cfg = load_config_text(kMinimalConfig);
  CHECK(cfg.domain.grid_points[0] == 32);
  CHECK(cfg.op_b.exponent == doctest::Approx(0.8));
  CHECK(cfg.state.sigma == doctest::Approx(0.8));
  CHECK(cfg.seed == 7);
  CHECK_NOTHROW(build_setup(cfg));
}

TEST_CASE("assumption tags in validation errors") {
  // tau = 0 violates the positivity assumption
  const std::string tau0 = apply_override(kMinimalConfig, "state.tau=0.0");
  try {
    load_config_text(tau0);
    CHECK(false);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("(A3)") != std::string::npos);
  }

  // all cost weights zero
  std::string zeroed = kMinimalConfig;
  for (const char* ov : {"cost.alpha1=0", "cost.alpha2=0", "cost.alpha3=0"})
    zeroed = apply_override(zeroed, ov);
  try {
    load_config_text(zeroed);
    CHECK(false);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("(A6)") != std::string::npos);
  }

  // zero-mode A with Dirichlet B
  const std::string bad_pair = apply_override(kMinimalConfig, "operator_b.bc=dirichlet");
  try {
    load_config_text(bad_pair);
    CHECK(false);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("(A2)") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected with their location") {
  const std::string extra = apply_override(kMinimalConfig, "state.relaxation=3");
  CHECK_THROWS_AS(load_config_text(extra), ParseError);
  const std::string top = apply_override(kMinimalConfig, "extra_block=1");
  CHECK_THROWS_AS(load_config_text(top), ParseError);
}

TEST_CASE("dealiasing margin is enforced") {
  const std::string dense = apply_override(kMinimalConfig, "operator_a.modes=20");
  CHECK_THROWS_AS(load_config_text(dense), ValidationError);
}

TEST_CASE("overrides reach nested keys and keep types") {
  std::string text = apply_override(kMinimalConfig, "time.steps=16");
  text = apply_override(text, "potential.variant=logarithmic");
  text = apply_override(text, "initial.value=0.1");
  const ExperimentConfig cfg = load_config_text(text);
  CHECK(cfg.time.step_count == 16);
  CHECK(cfg.potential.variant == PotentialVariant::logarithmic);
}

TEST_CASE("presets parse and build") {
  for (const auto& name : preset_names()) {
    const ExperimentConfig cfg = load_config_text(preset_json(name), name);
    CHECK_NOTHROW(build_setup(cfg));
  }
  CHECK_THROWS_AS(preset_json("nonexistent"), ParseError);
}

TEST_CASE("field files round trip bit-exactly") {
  TempDir dir("io");
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Field f(24);
  for (auto& x : f.reshaped()) x = gauss(rng);
  const std::string path = dir.str() + "/field.bin";
  write_field(path, f, {24});
  const StoredField back = read_field_file(path);
  REQUIRE(back.nodes.size() == 1);
  CHECK(std::memcmp(back.nodes[0].data(), f.data(), 24 * sizeof(double)) == 0);

  TimeField tf(TimeGrid(1.0, 3), 8);
  for (auto& v : tf.values)
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
  const std::string tpath = dir.str() + "/tf.bin";
  write_time_field(tpath, tf, {8});
  const StoredField tback = read_field_file(tpath);
  REQUIRE(tback.nodes.size() == 4);
  for (int n = 0; n < 4; ++n)
    CHECK(std::memcmp(tback.nodes[static_cast<std::size_t>(n)].data(), tf[n].data(),
                      8 * sizeof(double)) == 0);

  CHECK_THROWS_AS(read_field_file(dir.str() + "/missing.bin"), ParseError);
  std::ofstream junk(dir.str() + "/junk.bin", std::ios::binary);
  junk << "not a field";
  junk.close();
  CHECK_THROWS_AS(read_field_file(dir.str() + "/junk.bin"), ParseError);
}

TEST_CASE("csv format") {
  TempDir dir("csv");
  const std::string path = dir.str() + "/s.csv";
  write_csv(path, {"a", "b"}, {{1.0, 0.5}, {2.0, 0.25}});
  const std::string text = slurp(path);
  CHECK(text.find("a,b\r\n") == 0);
  CHECK(text.find("1,0.5\r\n") != std::string::npos);
}

TEST_CASE("simulate writes snapshots, series, and a manifest") {
  TempDir dir("simulate");
  const ExperimentConfig cfg = load_config_text(kMinimalConfig);
  const RunManifest man = run_command("simulate", cfg, dir.str(), cfg.seed);
  CHECK(std::filesystem::exists(dir.path / "y.bin"));
  CHECK(std::filesystem::exists(dir.path / "mu.bin"));
  CHECK(std::filesystem::exists(dir.path / "series.csv"));
  CHECK(std::filesystem::exists(dir.path / "manifest.json"));
  CHECK(man.config_hash == fnv1a64(cfg.canonical_json()));

  const StoredField y = read_field_file((dir.path / "y.bin").string());
  CHECK(y.nodes.size() == 9);
  CHECK(y.axis_sizes == std::vector<std::uint64_t>{32});

  // steady run: all Newton counts small
  for (const auto& [key, value] : man.diagnostics)
    if (key == "newton_max_iterations") CHECK(value <= 2.0);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
  TempDir d1("det1"), d2("det2");
  std::string text = apply_override(kMinimalConfig, "initial.kind=mode_sum");
  text = apply_override(text, R"(initial.modes=[{"index":0,"amplitude":0.2},{"index":2,"amplitude":0.1}])");
  const ExperimentConfig cfg = load_config_text(text);
  run_command("simulate", cfg, d1.str(), 42);
  run_command("simulate", cfg, d2.str(), 42);
  CHECK(slurp(d1.str() + "/y.bin") == slurp(d2.str() + "/y.bin"));
  CHECK(slurp(d1.str() + "/mu.bin") == slurp(d2.str() + "/mu.bin"));
  CHECK(slurp(d1.str() + "/series.csv") == slurp(d2.str() + "/series.csv"));
}

TEST_CASE("linearize and adjoint commands") {
  TempDir dir("linadj");
  std::string text = apply_override(kMinimalConfig, "initial.kind=mode_sum");
  text = apply_override(text, R"(initial.modes=[{"index":1,"amplitude":0.3}])");
  const ExperimentConfig cfg = load_config_text(text);
  run_command("linearize", cfg, dir.str(), 1);
  CHECK(std::filesystem::exists(dir.path / "xi.bin"));
  CHECK(std::filesystem::exists(dir.path / "eta.bin"));

  run_command("adjoint", cfg, dir.str(), 1);
  CHECK(std::filesystem::exists(dir.path / "p.bin"));
  CHECK(std::filesystem::exists(dir.path / "q.bin"));
  CHECK(std::filesystem::exists(dir.path / "p_mean.csv"));  // Neumann A
}

TEST_CASE("grad-check command verifies the preset gradient") {
  TempDir dir("gradcheck");
  // Non-mean initial content makes the tracking terms sensitive to the
  // control (the conserved mean alone would leave u = 0 exactly stationary).
  std::string text = apply_override(kMinimalConfig, "grad_check.directions=2");
  text = apply_override(text, "initial.kind=mode_sum");
  text = apply_override(
      text, R"(initial.modes=[{"index":0,"amplitude":0.3},{"index":2,"amplitude":0.2}])");
  const ExperimentConfig cfg = load_config_text(text);
  const RunManifest man = run_command("grad-check", cfg, dir.str(), 5);
  double worst = 1.0;
  for (const auto& [key, value] : man.diagnostics)
    if (key == "grad_check_worst_rel_error") worst = value;
  CHECK(worst <= 1e-5);
  CHECK(std::filesystem::exists(dir.path / "gradcheck.csv"));
}

TEST_CASE("optimize command reports a monotone history") {
  TempDir dir("optimize");
  std::string text = apply_override(kMinimalConfig, "cost.alpha2=0.0");
  text = apply_override(text, "cost.alpha3=1.0");
  text = apply_override(text, "control.kind=constant");
  text = apply_override(text, "control.value=0.4");
  text = apply_override(text, "optimize.stat_tol=1e-8");
  const ExperimentConfig cfg = load_config_text(text);
  const RunManifest man = run_command("optimize", cfg, dir.str(), 1);
  CHECK(std::filesystem::exists(dir.path / "u_opt.bin"));
  CHECK(std::filesystem::exists(dir.path / "cost_history.csv"));
  double stat = 1.0;
  for (const auto& [key, value] : man.diagnostics)
    if (key == "stationarity") stat = value;
  CHECK(stat <= 1e-8);
}

TEST_CASE("convergence command produces decreasing errors") {
  TempDir dir("conv");
  std::string text = apply_override(kMinimalConfig, "initial.kind=mode_sum");
  text = apply_override(text, R"(initial.modes=[{"index":1,"amplitude":0.3}])");
  text = apply_override(text, R"(convergence.levels=[4,8,16])");
  text = apply_override(text, "convergence.reference_steps=256");
  const ExperimentConfig cfg = load_config_text(text);
  const RunManifest man = run_command("convergence", cfg, dir.str(), 1);
  CHECK(std::filesystem::exists(dir.path / "convergence.csv"));
  double order = 0.0;
  for (const auto& [key, value] : man.diagnostics)
    if (key == "state_order_last") order = value;
  CHECK(order >= 0.6);
  CHECK(order <= 1.4);
}

TEST_CASE("descriptor resolution against a basis") {
  const ExperimentConfig cfg = load_config_text(kMinimalConfig);
  ExperimentSetup setup = build_setup(cfg);
  FieldDescriptor d;
  d.kind = "mode_sum";
  d.modes = {{0, 2.0}};
  const Field f = resolve_field(d, *setup.basis_b);
  CHECK(f.size() == 32);
  d.modes = {{99, 1.0}};
  CHECK_THROWS_AS(resolve_field(d, *setup.basis_b), ValidationError);
}

TEST_CASE("config canonical form is stable under key order") {
  const std::string reordered = R"json({
  "seed": 7,
  "cost": {"alpha3": 0.1, "alpha2": 1.0, "alpha1": 0.0,
           "y_q": {"kind": "zero"}, "y_omega": {"kind": "zero"}},
  "control": {"kind": "zero"},
  "initial": {"kind": "constant", "value": 0.2},
  "state": {"tau": 0.5},
  "time": {"steps": 8, "horizon": 0.2},
  "potential": {"variant": "regular"},
  "operator_b": {"modes": 12, "exponent": 0.8, "bc": "neumann"},
  "operator_a": {"modes": 12, "exponent": 0.5, "bc": "neumann"},
  "domain": {"grid_points": [32], "side_lengths": [3.141592653589793], "dimension": 1}
})json";
  const ExperimentConfig a = load_config_text(kMinimalConfig);
  const ExperimentConfig b = load_config_text(reordered);
  CHECK(a.canonical_json() == b.canonical_json());
  CHECK(fnv1a64(a.canonical_json()) == fnv1a64(b.canonical_json()));
}

TEST_CASE("unknown command is a config error") {
  const ExperimentConfig cfg = load_config_text(kMinimalConfig);
  CHECK_THROWS_AS(run_command("explode", cfg, "/tmp/fchc_nocmd", 0), ParseError);
}

TEST_CASE("worker cap follows the environment variable") {
  setenv("FCHC_THREADS", "3", 1);
  CHECK(worker_cap() == 3);
  setenv("FCHC_THREADS", "0", 1);
  CHECK(worker_cap() == 1);
  unsetenv("FCHC_THREADS");
  CHECK(worker_cap() >= 1);
}
