#include "flapsim/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "flapsim/blade_kernel.hpp"
#include "json.hpp"

namespace flapsim::cli {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

void write_trace_csv(std::ostream& out, const Trace& trace) {
  const auto& header = trace_header();
  for (int i = 0; i < kTraceColumns; ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  char buf[32];
  for (const TraceRow& row : trace.rows) {
    const auto cols = row.columns();
    for (int i = 0; i < kTraceColumns; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", cols[i]);
      if (i) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

std::string trace_csv(const Trace& trace) {
  std::ostringstream s;
  write_trace_csv(s, trace);
  return s.str();
}

std::vector<std::array<double, kTraceColumns>> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: empty input");
  std::string expected;
  for (int i = 0; i < kTraceColumns; ++i) expected += (i ? "," : "") + trace_header()[i];
  if (line != expected) throw ConfigError("csv: unexpected header");
  std::vector<std::array<double, kTraceColumns>> rows;
  while (std::getline(in, line)) {
    std::array<double, kTraceColumns> row{};
    std::istringstream cells(line);
    std::string cell;
    int i = 0;
    while (std::getline(cells, cell, ',')) {
      if (i >= kTraceColumns) throw ConfigError("csv: too many columns in row " + std::to_string(rows.size() + 1));
      std::size_t used = 0;
      try {
        row[i] = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || cell.empty()) throw ConfigError("csv: bad number '" + cell + "'");
      ++i;
    }
    if (i != kTraceColumns) throw ConfigError("csv: short row " + std::to_string(rows.size() + 1));
    rows.push_back(row);
  }
  return rows;
}

std::string plot_script(const std::string& command, const std::string& csv_name) {
  std::ostringstream g;
  g << "# gnuplot -c plot.gp\n"
    << "set datafile separator ','\n"
    << "set terminal pngcairo size 1000,900\n"
    << "set output '" << command << ".png'\n"
    << "set xlabel 't [s]'\n"
    << "set grid\n"
    << "f = '" << csv_name << "'\n";
  auto col = [](const char* name) { return std::string("(column('") + name + "'))"; };
  if (command == "simulate-gait" || command == "optimize-gait") {
    g << "set multiplot layout 3,1\n"
      << "set ylabel 'Pi [kg m^2/s]'\n"
      << "plot f using 1:" << col("Pi_x") << " w l t 'Pi_x', '' using 1:" << col("Pi_y") << " w l t 'Pi_y', '' using 1:"
      << col("Pi_z") << " w l t 'Pi_z'\n"
      << "set ylabel 'v [m/s]'\n"
      << "plot f using 1:" << col("pdot_B_x") << " w l t 'x', '' using 1:" << col("pdot_B_y")
      << " w l t 'y', '' using 1:" << col("pdot_B_z") << " w l t 'z'\n"
      << "set ylabel 'theta_L [rad]'\n"
      << "plot f using 1:" << col("theta_L_p") << " w l t 'plunge', '' using 1:" << col("theta_L_m")
      << " w l t 'mediolateral', '' using 1:" << col("theta_L_e") << " w l t 'elbow', '' using 1:"
      << col("theta_L_f") << " w l t 'feathering'\n"
      << "unset multiplot\n";
  } else {
    g << "set multiplot layout 3,1\n"
      << "set ylabel 'omega_x [rad/s]'\n"
      << "plot f using 1:" << col("omega_B_x") << " w l t 'omega_x'\n"
      << "set ylabel 'angle [deg]'\n"
      << "plot f using 1:(column('roll')*180/pi) w l t 'roll', '' using 1:(column('pitch')*180/pi) w l t 'pitch', "
         "'' using 1:(column('yaw')*180/pi) w l t 'yaw'\n"
      << "set ylabel 'theta [rad]'\n"
      << "plot f using 1:" << col("theta_L_p") << " w l t 'L plunge', '' using 1:" << col("theta_R_p")
      << " w l t 'R plunge', '' using 1:" << col("theta_L_f") << " w l t 'L feathering', '' using 1:"
      << col("theta_R_f") << " w l t 'R feathering'\n"
      << "unset multiplot\n";
  }
  return g.str();
}

namespace {

ojson vec_json(const Eigen::Ref<const Eigen::VectorXd>& v, double scale = 1.0) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i] * scale);
  return a;
}

double to_deg(double rad) { return rad / units::kDegree; }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

ojson gait_json(const GaitParams& g) {
  ojson j;
  j["unit"] = "deg";
  j["mean"] = vec_json(g.mean, 1.0 / units::kDegree);
  j["amplitude"] = vec_json(g.amplitude, 1.0 / units::kDegree);
  j["phase"] = vec_json(g.phase, 1.0 / units::kDegree);
  return j;
}

ojson maneuver_json(const ManeuverParams& m) {
  ojson j;
  j["unit"] = "deg";
  j["time_unit"] = "s";
  j["t0"] = m.t0;
  j["ramp"] = m.ramp;
  j["offset"] = vec_json(m.offset, 1.0 / units::kDegree);
  return j;
}

ojson trace_status(const Trace& tr) {
  ojson j;
  j["completed"] = !tr.failed;
  j["failure"] = tr.failure;
  j["samples"] = tr.rows.size();
  j["t_final"] = tr.rows.empty() ? 0.0 : tr.rows.back().t;
  j["max_constraint_residual"] = tr.max_constraint_residual;
  j["max_orthonormality_error"] = tr.max_orthonormality_error;
  return j;
}

ojson gait_metrics(const Trace& tr, const ModelParams& p) {
  const double t_final = tr.rows.empty() ? 0.0 : tr.rows.back().t;
  const double start = std::max(0.0, t_final - 1.0);
  const GaitReport r = gait_report(tr, p.flap_period(), start);
  ojson j;
  j["window_start"] = start;
  j["wingbeats"] = r.wingbeats;
  j["mean_momentum_norm"] = r.mean_momentum;
  j["momentum_peak_to_peak"] = r.momentum_peak_to_peak;
  j["momentum_ratio"] = r.momentum_peak_to_peak > 0 ? r.mean_momentum / r.momentum_peak_to_peak : 0.0;
  j["mean_velocity"] = vec_json(r.mean_velocity);
  j["velocity_spread"] = r.velocity_spread;
  j["mean_pitch_deg"] = to_deg(r.mean_pitch);
  return j;
}

ojson maneuver_metrics(const Trace& tr, const ManeuverParams& m, const ModelParams& p) {
  const ManeuverReport r = maneuver_report(tr, m, p.flap_period());
  ojson j;
  j["start_phase_of_wingbeat"] = r.start_phase;
  j["roll_excursion_deg"] = to_deg(r.roll_excursion);
  j["time_to_150deg"] = r.time_to_excursion;
  j["final_integrated_roll_deg"] = to_deg(r.final_roll);
  j["roll_rate_tracking_cost"] = r.tracking_cost;
  j["euler_roll_min_deg"] = to_deg(r.min_euler_roll);
  j["euler_roll_max_deg"] = to_deg(r.max_euler_roll);
  return j;
}

struct Outputs {
  fs::path dir;
  ojson result;
  Trace trace;
  bool have_trace = false;
};

template <typename T>
const T& need(const std::optional<T>& v, const char* section) {
  if (!v) throw ConfigError(std::string(section) + ": section required by this command");
  return *v;
}

int finish(Outputs& o, const ScenarioConfig& c, const std::string& command, int code, std::ostream& out) {
  fs::create_directories(o.dir);
  if (o.have_trace) {
    write_file(o.dir / "trace.csv", trace_csv(o.trace));
    write_file(o.dir / "plot.gp", plot_script(command, "trace.csv"));
  }
  write_file(o.dir / "config.json", c.resolved_json);
  o.result["exit_code"] = code;
  write_file(o.dir / "result.json", o.result.dump(2) + "\n");
  out << command << ": wrote " << o.dir.string() << " (exit " << code << ")\n";
  return code;
}

int simulate_gait_cmd(const ScenarioConfig& c, Outputs& o) {
  const GaitParams& g = need(c.gait, "gait");
  o.trace = simulate_gait(g, c.model, c.sim);
  o.have_trace = true;
  o.result["status"] = trace_status(o.trace);
  o.result["metrics"] = gait_metrics(o.trace, c.model);
  return o.trace.failed ? kBlowUp : kOk;
}

int simulate_perch_cmd(const ScenarioConfig& c, Outputs& o) {
  const GaitParams& g = need(c.gait, "gait");
  const ManeuverParams& m = need(c.maneuver, "maneuver");
  o.trace = simulate_perch(g, m, c.model, c.sim);
  o.have_trace = true;
  o.result["status"] = trace_status(o.trace);
  o.result["metrics"] = maneuver_metrics(o.trace, m, c.model);
  return o.trace.failed ? kBlowUp : kOk;
}

int track_pid_cmd(const ScenarioConfig& c, Outputs& o) {
  const GaitParams& g = need(c.gait, "gait");
  const ManeuverParams& m = need(c.maneuver, "maneuver");
  const PidGains& gains = need(c.pid, "pid");
  o.trace = simulate_pid(g, m, c.model, c.sim, gains);
  o.have_trace = true;
  const Trace constrained = simulate_perch(g, m, c.model, c.sim);
  const double omega = c.model.omega_flap;
  const auto reference = [&](double t) { return maneuver_reference(t, g, m, omega).theta; };
  o.result["status"] = trace_status(o.trace);
  ojson metrics = maneuver_metrics(o.trace, m, c.model);
  metrics["joint_tracking_rms"] = joint_tracking_rms(o.trace, reference);
  metrics["constrained_joint_tracking_rms"] = joint_tracking_rms(constrained, reference);
  metrics["constrained_completed"] = !constrained.failed;
  o.result["metrics"] = metrics;
  return o.trace.failed ? kBlowUp : kOk;
}

ojson optimizer_json(const OptimizeResult& r) {
  ojson j;
  j["success"] = r.success;
  j["diagnostic"] = r.diagnostic;
  j["evaluations"] = r.evaluations;
  j["initial_cost"] = r.initial_cost;
  j["best_cost"] = r.best_cost;
  j["history"] = r.history;
  return j;
}

int optimize_gait_cmd(const ScenarioConfig& c, Outputs& o) {
  GaitCostConfig cost;
  cost.q_diag = c.optimizer.gait_q_diag;
  cost.bounds = c.optimizer.gait_bounds;
  cost.sim = c.sim;
  cost.params = c.model;
  const VecX x0 = c.gait ? VecX(c.gait->to_vector()) : VecX(0.5 * (cost.bounds.lower + cost.bounds.upper));
  if (!cost.bounds.contains(x0)) throw ConfigError("gait: start point lies outside optimizer.gait.bounds");
  const OptimizeResult r =
      optimize([&](const VecX& x) { return gait_cost(GaitVector(x), cost); }, cost.bounds, x0, c.optimizer.settings);
  o.result["optimizer"] = optimizer_json(r);
  if (!r.success) return kOptimizerFailure;
  const GaitParams best = GaitParams::from_vector(GaitVector(r.best_params));
  o.result["best"] = {{"gait", gait_json(best)}, {"k1_rad", vec_json(r.best_params)}};
  o.trace = simulate_gait(best, c.model, c.sim);
  o.have_trace = true;
  o.result["status"] = trace_status(o.trace);
  o.result["metrics"] = gait_metrics(o.trace, c.model);
  return kOk;
}

int optimize_perch_cmd(const ScenarioConfig& c, Outputs& o) {
  PerchCostConfig cost;
  cost.bounds = c.optimizer.perch_bounds;
  cost.sim = c.sim;
  cost.params = c.model;
  cost.gait = need(c.gait, "gait");
  cost.ramp = c.maneuver ? c.maneuver->ramp : 0.2;
  const VecX x0 =
      c.maneuver ? VecX(c.maneuver->to_vector()) : VecX(0.5 * (cost.bounds.lower + cost.bounds.upper));
  if (!cost.bounds.contains(x0)) throw ConfigError("maneuver: start point lies outside optimizer.perch.bounds");
  const OptimizeResult r = optimize([&](const VecX& x) { return perch_cost(ManeuverVector(x), cost); }, cost.bounds,
                                    x0, c.optimizer.settings);
  o.result["optimizer"] = optimizer_json(r);
  if (!r.success) return kOptimizerFailure;
  const ManeuverParams best = ManeuverParams::from_vector(ManeuverVector(r.best_params), cost.ramp);
  o.result["best"] = {{"maneuver", maneuver_json(best)}, {"k2", vec_json(r.best_params)}};
  o.trace = simulate_perch(cost.gait, best, c.model, c.sim);
  o.have_trace = true;
  o.result["status"] = trace_status(o.trace);
  o.result["metrics"] = maneuver_metrics(o.trace, best, c.model);
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Five-body flapping robot simulator and gait optimizer"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);

  std::string config_path, out_dir = "out", kernel = "auto";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> dt;
  const char* commands[][2] = {
      {"simulate-gait", "open-loop gait with joint acceleration constraints"},
      {"optimize-gait", "search the 11 gait parameters for low angular momentum"},
      {"optimize-perch", "search the maneuver start time and offsets for a 180 deg roll"},
      {"simulate-perch", "gait plus offset maneuver through the PD closure"},
      {"track-pid", "torque-driven joints tracking the maneuver with PID control"},
  };
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd[0], cmd[1]);
    sub->add_option("--config", config_path, "scenario JSON file")->required();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "optimizer seed (overrides config)");
    sub->add_option("--workers", workers, "parallel cost evaluations")->check(CLI::PositiveNumber);
    sub->add_option("--dt", dt, "integration step [s] (overrides config)")->check(CLI::PositiveNumber);
    sub->add_option("--kernel", kernel, "blade-element kernel")
        ->check(CLI::IsMember({"auto", "scalar", "simd"}))
        ->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  if (kernel == "scalar") {
    kernel::force_variant(kernel::Variant::Scalar);
  } else if (kernel == "simd") {
    if (!kernel::simd_available()) {
      err << "error: --kernel simd: vector kernel not available on this machine\n";
      return kConfigError;
    }
    kernel::force_variant(kernel::Variant::Simd);
  }

  ScenarioConfig config;
  try {
    config = load_config(config_path, {seed, workers, dt});
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  Outputs o;
  o.dir = out_dir;
  o.result["format_version"] = kResultFormatVersion;
  o.result["command"] = command;
  o.result["version"] = kVersion;
  o.result["seed"] = config.seed;
  o.result["kernel"] = std::string(kernel::variant_name(kernel::active_variant()));
  o.result["config_file"] = "config.json";

  const auto start = std::chrono::steady_clock::now();
  int code = kOk;
  try {
    if (command == "simulate-gait") code = simulate_gait_cmd(config, o);
    else if (command == "optimize-gait") code = optimize_gait_cmd(config, o);
    else if (command == "optimize-perch") code = optimize_perch_cmd(config, o);
    else if (command == "simulate-perch") code = simulate_perch_cmd(config, o);
    else code = track_pid_cmd(config, o);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
  o.result["timings"] = {
      {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
  if (code == kBlowUp) err << "simulation blew up: " << o.trace.failure << "\n";
  if (code == kOptimizerFailure) err << "optimizer failed: " << o.result["optimizer"]["diagnostic"] << "\n";
  try {
    return finish(o, config, command, code, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace flapsim::cli
