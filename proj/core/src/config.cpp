#include "fchc/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fchc/errors.hpp"
#include "fchc/io.hpp"

namespace fchc {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ParseError("unknown key '" + it.key() + "' in " + where);
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ParseError("missing key '" + key + "' in " + where);
  if (!obj[key].is_number()) throw ParseError("'" + key + "' in " + where + " must be a number");
  return obj[key].get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return obj[key].get<double>();
}

FieldDescriptor parse_descriptor(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + " must be an object");
  reject_unknown(j, {"kind", "value", "modes", "path"}, where);
  FieldDescriptor d;
  d.kind = j.value("kind", std::string("zero"));
  if (d.kind != "zero" && d.kind != "constant" && d.kind != "mode_sum" && d.kind != "file")
    throw ParseError(where + ": kind must be zero|constant|mode_sum|file");
  d.value = number_or(j, "value", 0.0);
  if (j.contains("modes")) {
    for (const auto& m : j["modes"]) {
      reject_unknown(m, {"index", "amplitude"}, where + ".modes[]");
      d.modes.emplace_back(m.at("index").get<int>(), m.at("amplitude").get<double>());
    }
  }
  d.path = j.value("path", std::string());
  if (d.kind == "file" && d.path.empty())
    throw ParseError(where + ": file descriptor needs a path");
  return d;
}

json descriptor_json(const FieldDescriptor& d) {
  json j;
  j["kind"] = d.kind;
  if (d.kind == "constant") j["value"] = d.value;
  if (d.kind == "mode_sum") {
    json arr = json::array();
    for (const auto& [idx, amp] : d.modes)
      arr.push_back({{"index", idx}, {"amplitude", amp}});
    j["modes"] = arr;
  }
  if (d.kind == "file") j["path"] = d.path;
  return j;
}

BoundaryCondition parse_bc(const std::string& s, const std::string& where) {
  if (s == "dirichlet") return BoundaryCondition::dirichlet;
  if (s == "neumann") return BoundaryCondition::neumann;
  throw ParseError(where + ": boundary condition must be dirichlet or neumann");
}

ExperimentConfig parse(const json& root, const std::string& origin) {
  if (!root.is_object()) throw ParseError(origin + ": top level must be an object");
  reject_unknown(root,
                 {"domain", "operator_a", "operator_b", "potential", "time", "state",
                  "initial", "control", "cost", "admissible", "optimize",
                  "convergence", "grad_check", "linearize", "output", "seed"},
                 origin);
  ExperimentConfig cfg;

  {
    if (!root.contains("domain")) throw ParseError(origin + ": missing 'domain'");
    const json& d = root["domain"];
    reject_unknown(d, {"dimension", "side_lengths", "grid_points"}, "domain");
    cfg.domain.dimension = d.at("dimension").get<int>();
    cfg.domain.side_lengths = d.at("side_lengths").get<std::vector<double>>();
    cfg.domain.grid_points = d.at("grid_points").get<std::vector<int>>();
    validate_domain(cfg.domain);
  }

  auto parse_operator = [&](const char* key) {
    if (!root.contains(key)) throw ParseError(origin + ": missing '" + std::string(key) + "'");
    const json& o = root[key];
    reject_unknown(o, {"bc", "exponent", "modes"}, key);
    OperatorConfig oc;
    oc.bc = parse_bc(o.at("bc").get<std::string>(), key);
    oc.exponent = require_number(o, "exponent", key);
    oc.modes = o.at("modes").get<int>();
    if (!(oc.exponent > 0.0))
      throw ValidationError(std::string(key) +
                            ": fractional exponent must be positive ((A3))");
    if (oc.modes < 1) throw ValidationError(std::string(key) + ": modes must be positive");
    return oc;
  };
  cfg.op_a = parse_operator("operator_a");
  cfg.op_b = parse_operator("operator_b");

  if (cfg.op_a.bc == BoundaryCondition::neumann &&
      cfg.op_b.bc == BoundaryCondition::dirichlet)
    throw ValidationError(
        "operator A with a zero first eigenvalue requires the constant mode in "
        "the domain of B^sigma; use a Neumann B ((A2))");

  long capacity = 1;
  for (int a = 0; a < cfg.domain.dimension; ++a)
    capacity *= cfg.domain.grid_points[a] / 2;
  if (cfg.op_a.modes > capacity || cfg.op_b.modes > capacity)
    throw ValidationError(
        "mode counts exceed half the grid resolution (dealiasing margin)");

  {
    if (!root.contains("potential")) throw ParseError(origin + ": missing 'potential'");
    const json& p = root["potential"];
    reject_unknown(p, {"variant", "c1", "safeguard_delta", "f1_coefficients",
                       "f2_coefficients"},
                   "potential");
    const std::string variant = p.at("variant").get<std::string>();
    if (variant == "regular") {
      cfg.potential = PotentialSpec::regular();
    } else if (variant == "logarithmic") {
      cfg.potential = PotentialSpec::logarithmic(number_or(p, "c1", 2.0),
                                                 number_or(p, "safeguard_delta", 1e-4));
    } else if (variant == "split_polynomial") {
      cfg.potential = PotentialSpec::split_polynomial(
          p.value("f1_coefficients", std::vector<double>{}),
          p.value("f2_coefficients", std::vector<double>{}));
    } else {
      throw ParseError("potential.variant must be regular|logarithmic|split_polynomial");
    }
  }

  {
    if (!root.contains("time")) throw ParseError(origin + ": missing 'time'");
    const json& t = root["time"];
    reject_unknown(t, {"horizon", "steps"}, "time");
    cfg.time = TimeGrid(require_number(t, "horizon", "time"), t.at("steps").get<int>());
  }

  {
    if (!root.contains("state")) throw ParseError(origin + ": missing 'state'");
    const json& s = root["state"];
    reject_unknown(s, {"tau", "newton_tol", "newton_max_iter", "linear_tol",
                       "gb_interval"},
                   "state");
    cfg.state.tau = require_number(s, "tau", "state");
    if (!(cfg.state.tau > 0.0))
      throw ValidationError("viscosity tau must be positive ((A3))");
    cfg.state.newton_tol = number_or(s, "newton_tol", 1e-11);
    cfg.state.newton_max_iter =
        s.contains("newton_max_iter") ? s["newton_max_iter"].get<int>() : 50;
    cfg.state.linear_tol = number_or(s, "linear_tol", 1e-12);
    if (s.contains("gb_interval")) {
      const auto iv = s["gb_interval"].get<std::vector<double>>();
      if (iv.size() != 2 || !(iv[0] < iv[1]))
        throw ValidationError("state.gb_interval must be [lo, hi] with lo < hi");
      cfg.state.gb_interval = std::make_pair(iv[0], iv[1]);
    }
    cfg.state.r = cfg.op_a.exponent;
    cfg.state.sigma = cfg.op_b.exponent;
    cfg.state.grid = cfg.time;
    cfg.state.validate();
  }

  cfg.initial = root.contains("initial")
                    ? parse_descriptor(root["initial"], "initial")
                    : FieldDescriptor{};
  cfg.control = root.contains("control")
                    ? parse_descriptor(root["control"], "control")
                    : FieldDescriptor{};

  {
    if (!root.contains("cost")) throw ParseError(origin + ": missing 'cost'");
    const json& c = root["cost"];
    reject_unknown(c, {"alpha1", "alpha2", "alpha3", "y_omega", "y_q"}, "cost");
    cfg.cost_weights.alpha1 = number_or(c, "alpha1", 0.0);
    cfg.cost_weights.alpha2 = number_or(c, "alpha2", 0.0);
    cfg.cost_weights.alpha3 = number_or(c, "alpha3", 0.0);
    if (cfg.cost_weights.alpha1 < 0 || cfg.cost_weights.alpha2 < 0 ||
        cfg.cost_weights.alpha3 < 0 ||
        cfg.cost_weights.alpha1 + cfg.cost_weights.alpha2 + cfg.cost_weights.alpha3 <= 0.0)
      throw ValidationError(
          "cost weights must be nonnegative and not all zero ((A6))");
    cfg.y_omega = c.contains("y_omega") ? parse_descriptor(c["y_omega"], "cost.y_omega")
                                        : FieldDescriptor{};
    cfg.y_q = c.contains("y_q") ? parse_descriptor(c["y_q"], "cost.y_q")
                                : FieldDescriptor{};
  }

  if (root.contains("admissible")) {
    const json& a = root["admissible"];
    reject_unknown(a, {"rho1", "rho2"}, "admissible");
    cfg.admissible.rho1 = number_or(a, "rho1", 1.0);
    if (a.contains("rho2")) {
      if (a["rho2"].is_string()) {
        if (a["rho2"].get<std::string>() != "inf")
          throw ParseError("admissible.rho2 must be a number or \"inf\"");
      } else {
        cfg.admissible.rho2 = a["rho2"].get<double>();
      }
    }
    if (!(cfg.admissible.rho1 > 0.0) || !(cfg.admissible.rho2 > 0.0))
      throw ValidationError("admissible-set radii must be positive ((A6))");
  }

  if (root.contains("optimize")) {
    const json& o = root["optimize"];
    reject_unknown(o, {"max_iter", "stat_tol", "projection_tol"}, "optimize");
    cfg.optimize.max_iter = o.value("max_iter", 200);
    cfg.optimize.stat_tol = number_or(o, "stat_tol", 1e-6);
    cfg.optimize.projection_tol = number_or(o, "projection_tol", 1e-10);
  }

  if (root.contains("convergence")) {
    const json& c = root["convergence"];
    reject_unknown(c, {"levels", "reference_steps"}, "convergence");
    if (c.contains("levels")) cfg.convergence.levels = c["levels"].get<std::vector<int>>();
    cfg.convergence.reference_steps = c.value("reference_steps", 2048);
    for (int lvl : cfg.convergence.levels)
      if (lvl < 1 || cfg.convergence.reference_steps % lvl != 0)
        throw ValidationError(
            "convergence levels must divide the reference step count");
  }

  if (root.contains("grad_check")) {
    const json& g = root["grad_check"];
    reject_unknown(g, {"directions", "epsilons", "tolerance"}, "grad_check");
    cfg.grad_check.directions = g.value("directions", 5);
    if (g.contains("epsilons"))
      cfg.grad_check.epsilons = g["epsilons"].get<std::vector<double>>();
    cfg.grad_check.tolerance = number_or(g, "tolerance", 1e-5);
  }

  if (root.contains("linearize")) {
    const json& l = root["linearize"];
    reject_unknown(l, {"scheme", "direction"}, "linearize");
    const std::string scheme = l.value("scheme", std::string("plain"));
    if (scheme == "plain")
      cfg.linearize_scheme = LinearizedScheme::plain;
    else if (scheme == "paper_stabilized")
      cfg.linearize_scheme = LinearizedScheme::paper_stabilized;
    else
      throw ParseError("linearize.scheme must be plain or paper_stabilized");
    if (l.contains("direction"))
      cfg.direction = parse_descriptor(l["direction"], "linearize.direction");
  }
  if (cfg.direction.kind == "zero" && !root.contains("linearize")) {
    // Default probe direction: first nonconstant mode, unit amplitude.
    cfg.direction.kind = "mode_sum";
    cfg.direction.modes = {{1, 1.0}};
  }

  if (root.contains("output")) {
    const json& o = root["output"];
    reject_unknown(o, {"directory"}, "output");
    cfg.output_directory = o.value("directory", std::string("out"));
  }
  if (root.contains("seed")) cfg.seed = root["seed"].get<std::uint64_t>();

  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json root;
  root["domain"] = {{"dimension", cfg.domain.dimension},
                    {"side_lengths", cfg.domain.side_lengths},
                    {"grid_points", cfg.domain.grid_points}};
  auto op_json = [](const OperatorConfig& oc) {
    return json{{"bc", oc.bc == BoundaryCondition::neumann ? "neumann" : "dirichlet"},
                {"exponent", oc.exponent},
                {"modes", oc.modes}};
  };
  root["operator_a"] = op_json(cfg.op_a);
  root["operator_b"] = op_json(cfg.op_b);
  json pot;
  switch (cfg.potential.variant) {
    case PotentialVariant::regular:
      pot["variant"] = "regular";
      break;
    case PotentialVariant::logarithmic:
      pot["variant"] = "logarithmic";
      pot["c1"] = cfg.potential.c1;
      pot["safeguard_delta"] = cfg.potential.safeguard_delta;
      break;
    case PotentialVariant::split_polynomial:
      pot["variant"] = "split_polynomial";
      pot["f1_coefficients"] = cfg.potential.f1_coefficients;
      pot["f2_coefficients"] = cfg.potential.f2_coefficients;
      break;
  }
  root["potential"] = pot;
  root["time"] = {{"horizon", cfg.time.horizon}, {"steps", cfg.time.step_count}};
  json st = {{"tau", cfg.state.tau},
             {"newton_tol", cfg.state.newton_tol},
             {"newton_max_iter", cfg.state.newton_max_iter},
             {"linear_tol", cfg.state.linear_tol}};
  if (cfg.state.gb_interval)
    st["gb_interval"] = {cfg.state.gb_interval->first, cfg.state.gb_interval->second};
  root["state"] = st;
  root["initial"] = descriptor_json(cfg.initial);
  root["control"] = descriptor_json(cfg.control);
  root["cost"] = {{"alpha1", cfg.cost_weights.alpha1},
                  {"alpha2", cfg.cost_weights.alpha2},
                  {"alpha3", cfg.cost_weights.alpha3},
                  {"y_omega", descriptor_json(cfg.y_omega)},
                  {"y_q", descriptor_json(cfg.y_q)}};
  root["admissible"] = {{"rho1", cfg.admissible.rho1}};
  if (std::isfinite(cfg.admissible.rho2))
    root["admissible"]["rho2"] = cfg.admissible.rho2;
  else
    root["admissible"]["rho2"] = "inf";
  root["optimize"] = {{"max_iter", cfg.optimize.max_iter},
                      {"stat_tol", cfg.optimize.stat_tol},
                      {"projection_tol", cfg.optimize.projection_tol}};
  root["convergence"] = {{"levels", cfg.convergence.levels},
                         {"reference_steps", cfg.convergence.reference_steps}};
  root["grad_check"] = {{"directions", cfg.grad_check.directions},
                        {"epsilons", cfg.grad_check.epsilons},
                        {"tolerance", cfg.grad_check.tolerance}};
  root["linearize"] = {
      {"scheme", cfg.linearize_scheme == LinearizedScheme::plain ? "plain"
                                                                 : "paper_stabilized"},
      {"direction", descriptor_json(cfg.direction)}};
  root["output"] = {{"directory", cfg.output_directory}};
  root["seed"] = cfg.seed;
  return root;
}

}  // namespace

std::string ExperimentConfig::canonical_json() const { return to_json(*this).dump(); }

ExperimentConfig load_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  try {
    return parse(root, origin);
  } catch (const json::exception& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return load_config_text(ss.str(), path);
}

std::string apply_override(const std::string& json_text, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ParseError("override '" + assignment + "' is not of the form key.path=value");
  const std::string keypath = assignment.substr(0, eq);
  const std::string value_text = assignment.substr(eq + 1);

  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("override target is not valid JSON: ") + e.what());
  }
  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::parse_error&) {
    value = value_text;  // bare strings are allowed
  }

  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = keypath.find('.', start);
    const std::string key = keypath.substr(start, dot - start);
    if (key.empty()) throw ParseError("override has an empty key segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
  return root.dump();
}

namespace {

const std::map<std::string, std::string>& preset_table() {
  // Presets follow the three canonical configurations: the logarithmic
  // potential with Neumann B and 2 sigma = 1; the smooth potential with
  // sigma > 3/4; and the growth-limited case with Dirichlet B and
  // sigma in (9/20, 3/4].
  static const std::map<std::string, std::string> presets = {
      {"example1_log", R"json({
  "domain": {"dimension": 1, "side_lengths": [3.141592653589793], "grid_points": [128]},
  "operator_a": {"bc": "neumann", "exponent": 0.5, "modes": 64},
  "operator_b": {"bc": "neumann", "exponent": 0.5, "modes": 64},
  "potential": {"variant": "logarithmic", "c1": 2.0, "safeguard_delta": 1e-4},
  "time": {"horizon": 0.5, "steps": 128},
  "state": {"tau": 0.5},
  "initial": {"kind": "mode_sum", "modes": [{"index": 0, "amplitude": 0.18}, {"index": 1, "amplitude": 0.25}, {"index": 3, "amplitude": 0.1}]},
  "control": {"kind": "zero"},
  "cost": {"alpha1": 0.0, "alpha2": 1.0, "alpha3": 0.1,
           "y_omega": {"kind": "zero"}, "y_q": {"kind": "zero"}},
  "admissible": {"rho1": 1.0, "rho2": "inf"},
  "seed": 1
})json"},
      {"example2_regular", R"json({
  "domain": {"dimension": 1, "side_lengths": [3.141592653589793], "grid_points": [128]},
  "operator_a": {"bc": "neumann", "exponent": 0.5, "modes": 64},
  "operator_b": {"bc": "neumann", "exponent": 0.8, "modes": 64},
  "potential": {"variant": "regular"},
  "time": {"horizon": 0.5, "steps": 128},
  "state": {"tau": 0.5},
  "initial": {"kind": "mode_sum", "modes": [{"index": 0, "amplitude": 0.35}, {"index": 2, "amplitude": 0.2}]},
  "control": {"kind": "zero"},
  "cost": {"alpha1": 0.5, "alpha2": 1.0, "alpha3": 0.1,
           "y_omega": {"kind": "constant", "value": 0.1}, "y_q": {"kind": "constant", "value": 0.1}},
  "admissible": {"rho1": 1.0, "rho2": "inf"},
  "seed": 2
})json"},
      {"example3_growth", R"json({
  "domain": {"dimension": 1, "side_lengths": [3.141592653589793], "grid_points": [128]},
  "operator_a": {"bc": "dirichlet", "exponent": 0.5, "modes": 64},
  "operator_b": {"bc": "dirichlet", "exponent": 0.55, "modes": 64},
  "potential": {"variant": "regular"},
  "time": {"horizon": 0.5, "steps": 128},
  "state": {"tau": 0.5},
  "initial": {"kind": "mode_sum", "modes": [{"index": 0, "amplitude": 0.4}, {"index": 1, "amplitude": 0.15}]},
  "control": {"kind": "zero"},
  "cost": {"alpha1": 0.0, "alpha2": 1.0, "alpha3": 0.1,
           "y_omega": {"kind": "zero"}, "y_q": {"kind": "zero"}},
  "admissible": {"rho1": 1.0, "rho2": "inf"},
  "seed": 3
})json"}};
  return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : preset_table()) names.push_back(k);
  return names;
}

std::string preset_json(const std::string& name) {
  const auto& t = preset_table();
  const auto it = t.find(name);
  if (it == t.end()) throw ParseError("unknown preset '" + name + "'");
  return it->second;
}

Field resolve_field(const FieldDescriptor& d, const SpectralBasis& basis) {
  const auto G = static_cast<Eigen::Index>(basis.grid_size());
  if (d.kind == "zero") return Field::Zero(G);
  if (d.kind == "constant") return Field::Constant(G, d.value);
  if (d.kind == "mode_sum") {
    Field f = Field::Zero(G);
    for (const auto& [idx, amp] : d.modes) {
      if (idx < 0 || idx >= basis.mode_count())
        throw ValidationError("mode index " + std::to_string(idx) +
                              " outside the basis");
      f += amp * basis.mode_field(idx);
    }
    return f;
  }
  const StoredField sf = read_field_file(d.path);
  if (sf.nodes.size() != 1 || sf.nodes[0].size() != G)
    throw ValidationError(d.path + " does not hold one field on this grid");
  return sf.nodes[0];
}

TimeField resolve_time_field(const TimeFieldDescriptor& d, const SpectralBasis& basis,
                             const TimeGrid& grid) {
  const auto G = static_cast<Eigen::Index>(basis.grid_size());
  if (d.kind == "file") {
    const StoredField sf = read_field_file(d.path);
    if (sf.nodes.size() != static_cast<std::size_t>(grid.node_count()))
      throw ValidationError(d.path + " holds " + std::to_string(sf.nodes.size()) +
                            " nodes, expected " + std::to_string(grid.node_count()));
    TimeField tf(grid, G);
    for (int n = 0; n < grid.node_count(); ++n) {
      if (sf.nodes[static_cast<std::size_t>(n)].size() != G)
        throw ValidationError(d.path + " field size does not match the grid");
      tf[n] = sf.nodes[static_cast<std::size_t>(n)];
    }
    return tf;
  }
  const Field f = resolve_field(d, basis);
  TimeField tf(grid, G);
  for (int n = 0; n < grid.node_count(); ++n) tf[n] = f;
  return tf;
}

ExperimentSetup build_setup(const ExperimentConfig& cfg) {
  ExperimentSetup setup;
  setup.basis_a = std::make_shared<SpectralBasis>(cfg.domain, cfg.op_a.bc,
                                                  OperatorTag::A, cfg.op_a.modes);
  setup.basis_b = std::make_shared<SpectralBasis>(cfg.domain, cfg.op_b.bc,
                                                  OperatorTag::B, cfg.op_b.modes);
  // Structural checks on the potential over the monitoring window.
  const auto [lo, hi] = cfg.state.monitor_interval(cfg.potential);
  validate_potential(cfg.potential, std::isfinite(lo) ? lo : -2.0,
                     std::isfinite(hi) ? hi : 2.0);

  setup.problem.basis_a = setup.basis_a.get();
  setup.problem.basis_b = setup.basis_b.get();
  setup.problem.potential = cfg.potential;
  setup.problem.y0 = resolve_field(cfg.initial, *setup.basis_b);
  setup.problem.config = cfg.state;
  setup.problem.cost = cfg.cost_weights;
  setup.problem.cost.y_omega = resolve_field(cfg.y_omega, *setup.basis_b);
  setup.problem.cost.y_q = resolve_time_field(cfg.y_q, *setup.basis_b, cfg.time);
  setup.problem.admissible = cfg.admissible;
  setup.control = resolve_time_field(cfg.control, *setup.basis_b, cfg.time);
  return setup;
}

}  // namespace fchc
