#include "flapsim/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "json.hpp"

namespace flapsim {

using nlohmann::json;

namespace {

// Defaults, written in the same units a user would write them.
const char* kDefaults = R"({
  "format_version": 1,
  "seed": 1,
  "model": {
    "mass": {"unit": "g", "body": 5.0, "arm": 0.35, "wing": 5.6},
    "inertia": {"unit": "g*cm^2", "body": [0.625, 3.65, 3.65], "arm": [0.147, 0.147, 0.040],
                "wing": [1.05, 2.11, 2.11]},
    "links": {"unit": "mm", "left": [[0, 25, 25], [0, 0, 50], [0, 0, 150]],
              "right": [[0, -25, 25], [0, 0, 50], [0, 0, 150]]},
    "wing": {"unit": "mm", "chord": 150, "span": 150},
    "air_density": {"unit": "kg/m^3", "value": 1.0},
    "flap_frequency": {"unit": "Hz", "value": 10.0},
    "gravity": {"unit": "m/s^2", "value": 9.81}
  },
  "sim": {"unit": "s", "dt": 1e-4, "t_end": 2.0, "record_stride": 10, "aero": true,
          "wind": {"unit": "m/s", "value": [0, 0, 0]}},
  "optimizer": {
    "budget": 300, "workers": 1, "population": 0, "initial_step": 0.2,
    "gait": {"q_diag": [5, 5, 5, 1e-5],
             "bounds": {"unit": "deg", "lower": [-90, -90, -90, -90, 0, 0, 0, 0, -180, -180, -180],
                        "upper": [90, 90, 90, 90, 60, 60, 60, 60, 180, 180, 180]}},
    "perch": {"bounds": {"unit": "deg", "time_unit": "s", "t0": [1.0, 1.1],
                         "offset_lower": [-90, -90, -90, -90], "offset_upper": [90, 90, 90, 90]}}
  }
})";

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) fail(join(path, item.key()), "unknown key");
  }
}

const json& field(const json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(join(path, key), "missing required field");
  return *it;
}

double number(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(join(path, key), "must be finite");
  return x;
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != static_cast<std::size_t>(N)) {
    fail(path, "expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) {
    if (!v[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out[i] = v[i].get<double>();
  }
  return out;
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& obj, const std::string& path, const char* key) {
  return vec<N>(field(obj, path, key), join(path, key));
}

/// Factor converting the section's declared unit to SI.
double unit(const json& obj, const std::string& path, std::initializer_list<std::pair<const char*, double>> allowed,
            const char* key = "unit") {
  const json& v = field(obj, path, key);
  if (!v.is_string()) fail(join(path, key), "expected a unit string");
  const std::string u = v.get<std::string>();
  std::string names;
  for (const auto& [name, factor] : allowed) {
    if (u == name) return factor;
    names += names.empty() ? name : std::string(", ") + name;
  }
  fail(join(path, key), "unsupported unit '" + u + "' (expected " + names + ")");
}

bool boolean(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  if (!v.is_boolean()) fail(join(path, key), "expected true or false");
  return v.get<bool>();
}

long integer(const json& obj, const std::string& path, const char* key, long lo) {
  const json& v = field(obj, path, key);
  if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
  const long x = v.get<long>();
  if (x < lo) fail(join(path, key), "must be >= " + std::to_string(lo));
  return x;
}

void parse_model(const json& m, ModelParams& p) {
  const std::string path = "model";
  check_keys(m, path, {"mass", "inertia", "links", "wing", "air_density", "flap_frequency", "gravity"});

  const json& mass = field(m, path, "mass");
  check_keys(mass, "model.mass", {"unit", "body", "arm", "wing"});
  const double kg = unit(mass, "model.mass", {{"g", units::kGram}, {"kg", 1.0}});
  p.mass_body = kg * number(mass, "model.mass", "body");
  p.mass_arm = kg * number(mass, "model.mass", "arm");
  p.mass_wing = kg * number(mass, "model.mass", "wing");

  const json& inertia = field(m, path, "inertia");
  check_keys(inertia, "model.inertia", {"unit", "body", "arm", "wing"});
  const double ki = unit(inertia, "model.inertia", {{"g*cm^2", units::kGramCm2}, {"kg*m^2", 1.0}});
  p.inertia_body = ki * vec<3>(inertia, "model.inertia", "body");
  p.inertia_arm = ki * vec<3>(inertia, "model.inertia", "arm");
  p.inertia_wing = ki * vec<3>(inertia, "model.inertia", "wing");

  const json& links = field(m, path, "links");
  check_keys(links, "model.links", {"unit", "left", "right"});
  const double kl = unit(links, "model.links", {{"mm", units::kMillimeter}, {"m", 1.0}});
  for (const char* side : {"left", "right"}) {
    const json& arr = field(links, "model.links", side);
    const std::string sp = join("model.links", side);
    if (!arr.is_array() || arr.size() != 3) fail(sp, "expected three 3-vectors (l1, l2, l3)");
    auto& dst = std::string(side) == "left" ? p.links_left : p.links_right;
    for (int j = 0; j < 3; ++j) dst[j] = kl * vec<3>(arr[j], sp + "[" + std::to_string(j) + "]");
  }

  const json& wing = field(m, path, "wing");
  check_keys(wing, "model.wing", {"unit", "chord", "span"});
  const double kw = unit(wing, "model.wing", {{"mm", units::kMillimeter}, {"m", 1.0}});
  p.chord = kw * number(wing, "model.wing", "chord");
  p.span = kw * number(wing, "model.wing", "span");

  auto scalar = [&](const char* key, const char* u) {
    const json& s = field(m, path, key);
    const std::string sp = join(path, key);
    check_keys(s, sp, {"unit", "value"});
    unit(s, sp, {{u, 1.0}});
    return number(s, sp, "value");
  };
  p.air_density = scalar("air_density", "kg/m^3");
  p.omega_flap = 2.0 * M_PI * scalar("flap_frequency", "Hz");
  p.gravity = scalar("gravity", "m/s^2");
  try {
    p.validate();
  } catch (const ModelError& e) {
    throw ConfigError(std::string("model.") + e.what());
  }
}

void parse_sim(const json& s, SimConfig& c) {
  const std::string path = "sim";
  check_keys(s, path, {"unit", "dt", "t_end", "record_stride", "aero", "wind"});
  unit(s, path, {{"s", 1.0}});
  c.dt = number(s, path, "dt");
  c.t_end = number(s, path, "t_end");
  c.record_stride = static_cast<int>(integer(s, path, "record_stride", 1));
  c.aero = boolean(s, path, "aero");
  const json& wind = field(s, path, "wind");
  check_keys(wind, "sim.wind", {"unit", "value"});
  unit(wind, "sim.wind", {{"m/s", 1.0}});
  c.wind.velocity = vec<3>(wind, "sim.wind", "value");
  if (!(c.dt > 0.0)) fail("sim.dt", "must be positive");
  if (!(c.t_end >= c.dt)) fail("sim.t_end", "must be at least dt");
}

GaitParams parse_gait(const json& g) {
  const std::string path = "gait";
  check_keys(g, path, {"unit", "mean", "amplitude", "phase"});
  const double k = unit(g, path, {{"deg", units::kDegree}});
  GaitParams out;
  out.mean = k * vec<4>(g, path, "mean");
  out.amplitude = k * vec<4>(g, path, "amplitude");
  out.phase = k * vec<3>(g, path, "phase");
  return out;
}

ManeuverParams parse_maneuver(const json& m) {
  const std::string path = "maneuver";
  check_keys(m, path, {"unit", "time_unit", "t0", "ramp", "offset"});
  const double k = unit(m, path, {{"deg", units::kDegree}});
  unit(m, path, {{"s", 1.0}}, "time_unit");
  ManeuverParams out;
  out.t0 = number(m, path, "t0");
  out.ramp = number(m, path, "ramp");
  out.offset = k * vec<4>(m, path, "offset");
  if (!(out.ramp > 0.0)) fail("maneuver.ramp", "must be positive");
  return out;
}

PidGains parse_pid(const json& p) {
  const std::string path = "pid";
  check_keys(p, path, {"unit", "kp", "ki", "kd", "integral_clamp"});
  unit(p, path, {{"SI", 1.0}});
  PidGains g;
  g.kp = number(p, path, "kp");
  g.ki = number(p, path, "ki");
  g.kd = number(p, path, "kd");
  g.integral_clamp = number(p, path, "integral_clamp");
  for (const auto& [key, value] : {std::pair{"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}, {"integral_clamp", g.integral_clamp}}) {
    if (value < 0.0) fail(join(path, key), "must be non-negative");
  }
  return g;
}

void parse_optimizer(const json& o, OptimizerConfig& c) {
  const std::string path = "optimizer";
  check_keys(o, path, {"budget", "workers", "population", "initial_step", "gait", "perch"});
  c.settings.budget = static_cast<int>(integer(o, path, "budget", 1));
  c.settings.workers = static_cast<int>(integer(o, path, "workers", 1));
  c.settings.population = static_cast<int>(integer(o, path, "population", 0));
  c.settings.initial_step = number(o, path, "initial_step");
  if (!(c.settings.initial_step > 0.0)) fail("optimizer.initial_step", "must be positive");

  const json& g = field(o, path, "gait");
  check_keys(g, "optimizer.gait", {"q_diag", "bounds"});
  c.gait_q_diag = vec<4>(g, "optimizer.gait", "q_diag");
  if ((c.gait_q_diag.array() < 0.0).any()) fail("optimizer.gait.q_diag", "weights must be non-negative");
  const json& gb = field(g, "optimizer.gait", "bounds");
  check_keys(gb, "optimizer.gait.bounds", {"unit", "lower", "upper"});
  const double k = unit(gb, "optimizer.gait.bounds", {{"deg", units::kDegree}});
  c.gait_bounds.lower = k * vec<11>(gb, "optimizer.gait.bounds", "lower");
  c.gait_bounds.upper = k * vec<11>(gb, "optimizer.gait.bounds", "upper");

  const json& p = field(o, path, "perch");
  check_keys(p, "optimizer.perch", {"bounds"});
  const json& pb = field(p, "optimizer.perch", "bounds");
  const std::string bp = "optimizer.perch.bounds";
  check_keys(pb, bp, {"unit", "time_unit", "t0", "offset_lower", "offset_upper"});
  const double kd = unit(pb, bp, {{"deg", units::kDegree}});
  unit(pb, bp, {{"s", 1.0}}, "time_unit");
  const Eigen::Vector2d t0 = vec<2>(pb, bp, "t0");
  c.perch_bounds.lower.resize(5);
  c.perch_bounds.upper.resize(5);
  c.perch_bounds.lower << t0[0], kd * vec<4>(pb, bp, "offset_lower");
  c.perch_bounds.upper << t0[1], kd * vec<4>(pb, bp, "offset_upper");

  for (const auto* b : {&c.gait_bounds, &c.perch_bounds}) {
    try {
      b->validate();
    } catch (const ModelError& e) {
      fail(b == &c.gait_bounds ? "optimizer.gait.bounds" : bp, e.what());
    }
  }
}

}  // namespace

std::string default_config_json() { return json::parse(kDefaults).dump(2); }

ScenarioConfig parse_config(const std::string& json_text, const ConfigOverrides& overrides) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<config>: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("<config>", "expected a JSON object");
  check_keys(doc, "", {"format_version", "seed", "model", "sim", "gait", "maneuver", "pid", "optimizer"});
  if (doc.contains("format_version") && integer(doc, "", "format_version", 1) != kConfigFormatVersion) {
    fail("format_version", "unsupported version (expected " + std::to_string(kConfigFormatVersion) + ")");
  }

  const json defaults = json::parse(kDefaults);
  for (const char* key : {"format_version", "seed", "model", "sim", "optimizer"}) {
    if (!doc.contains(key)) doc[key] = defaults[key];
  }
  if (overrides.seed) doc["seed"] = *overrides.seed;
  if (overrides.dt) doc["sim"]["dt"] = *overrides.dt;
  if (overrides.workers) doc["optimizer"]["workers"] = *overrides.workers;

  ScenarioConfig c;
  const json& seed = doc["seed"];
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    fail("seed", "expected a non-negative integer");
  }
  c.seed = seed.get<std::uint64_t>();
  parse_model(doc["model"], c.model);
  parse_sim(doc["sim"], c.sim);
  if (doc.contains("gait")) c.gait = parse_gait(doc["gait"]);
  if (doc.contains("maneuver")) c.maneuver = parse_maneuver(doc["maneuver"]);
  if (doc.contains("pid")) c.pid = parse_pid(doc["pid"]);
  parse_optimizer(doc["optimizer"], c.optimizer);
  c.optimizer.settings.seed = c.seed;
  c.resolved_json = doc.dump(2) + "\n";
  return c;
}

ScenarioConfig load_config(const std::string& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<config>: cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides);
}

}  // namespace flapsim
