#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "flapsim/gait.hpp"
#include "flapsim/sim.hpp"

namespace flapsim {

using VecX = Eigen::VectorXd;

struct Bounds {
  VecX lower;
  VecX upper;

  void validate() const;  // finite, same size, lower <= upper
  bool contains(const VecX& x) const;
  VecX clip(const VecX& x) const;
  int dimension() const { return static_cast<int>(lower.size()); }
};

// --- rollouts -------------------------------------------------------------

/// Open-loop gait: joints constrained to the analytic reference accelerations.
Trace simulate_gait(const GaitParams& gait, const ModelParams& params, const SimConfig& sim);

/// Gait plus offset maneuver through the PD acceleration closure.
Trace simulate_perch(const GaitParams& gait, const ManeuverParams& maneuver, const ModelParams& params,
                     const SimConfig& sim);

/// Torque-driven joints tracking the maneuver reference with a PID loop.
Trace simulate_pid(const GaitParams& gait, const ManeuverParams& maneuver, const ModelParams& params,
                   const SimConfig& sim, const PidGains& gains);

// --- costs ----------------------------------------------------------------

struct GaitCostConfig {
  Vec4 q_diag{5.0, 5.0, 5.0, 1e-5};  // weights on [Pi, pdot_z]
  Bounds bounds;                     // k1 box [rad]
  SimConfig sim;                     // t_end is the horizon
  ModelParams params = ModelParams::nominal();
};

/// Sum over recorded rows of z^T Q z, z = [Pi, pdot_z]. +inf for a failed trace.
double gait_cost_from_trace(const Trace& trace, const Vec4& q_diag);

/// Throws ModelError if k1 lies outside the bounds.
double gait_cost(const GaitVector& k1, const GaitCostConfig& config);

struct PerchCostConfig {
  double ramp = 0.2;  // s
  Bounds bounds;      // k2 box: [t0 (s), d (rad)]
  SimConfig sim;      // t_end is ignored; rollouts stop at t0 + 2T
  ModelParams params = ModelParams::nominal();
  GaitParams gait;
};

/// Sum of (omega_x - phidot_r)^2 over rows with t0 <= t <= t0 + 2T.
double perch_cost_from_trace(const Trace& trace, double t0, double ramp);

double perch_cost(const ManeuverVector& k2, const PerchCostConfig& config);

/// Default search boxes [rad]. k1: means +-90 deg, amplitudes 0..60 deg,
/// phases +-180 deg. k2: t0 in [1.0, 1.1] s, offsets +-90 deg.
Bounds default_gait_bounds();
Bounds default_perch_bounds();

// --- maneuver metrics -----------------------------------------------------

struct ManeuverReport {
  double start_phase = 0.0;          // fraction of a wingbeat at t0
  double roll_excursion = 0.0;       // signed extremum of the integrated roll rate after t0 [rad]
  double time_to_excursion = 0.0;    // s after t0 at which |excursion| first reaches 150 deg, or -1
  double final_roll = 0.0;           // integrated roll rate at the end of the trace [rad]
  double tracking_cost = 0.0;        // perch cost over the window
  double min_euler_roll = 0.0;       // rad, Z-Y-X diagnostic
  double max_euler_roll = 0.0;
};

struct GaitReport {
  double mean_momentum = 0.0;          // mean |Pi| over the window [kg m^2/s]
  double momentum_peak_to_peak = 0.0;  // mean over wingbeats of max |Pi| - min |Pi|
  Vec3 mean_velocity = Vec3::Zero();   // mean of the per-wingbeat mean body velocities
  double velocity_spread = 0.0;        // RMS deviation of per-wingbeat means from mean_velocity
  double mean_pitch = 0.0;             // rad, Z-Y-X diagnostic
  int wingbeats = 0;
};

/// Statistics over whole wingbeats starting at t_start.
GaitReport gait_report(const Trace& trace, double wingbeat, double t_start);

/// Integrated body roll rate int omega_x dt (trapezoid on recorded rows), from t_start.
std::vector<double> integrated_roll(const Trace& trace, double t_start);

ManeuverReport maneuver_report(const Trace& trace, const ManeuverParams& maneuver, double wingbeat);

/// RMS over rows and joints of theta - theta_ref.
double joint_tracking_rms(const Trace& trace, const std::function<Vec8(double)>& reference);

// --- optimizer ------------------------------------------------------------

struct OptimizerSettings {
  int budget = 300;
  std::uint64_t seed = 1;
  int workers = 1;
  int population = 0;          // 0: 4 + floor(3 ln n)
  double initial_step = 0.2;   // sigma, as a fraction of each box width
};

struct OptimizeResult {
  VecX best_params;
  double best_cost = 0.0;
  double initial_cost = 0.0;
  std::vector<double> history;  // best cost so far after each evaluation
  int evaluations = 0;
  bool success = false;
  std::string diagnostic;
};

using CostFn = std::function<double(const VecX&)>;

/// CMA-ES restricted to the box by projecting every candidate onto it. x0 is
/// evaluated first, so the result is never worse than x0. Candidates of one
/// generation may run on several threads; results are gathered by index, so
/// the outcome does not depend on the worker count. Non-finite costs count
/// as +inf.
OptimizeResult optimize(const CostFn& cost, const Bounds& bounds, const VecX& x0, const OptimizerSettings& settings);

/// Same, starting at the box centre.
OptimizeResult optimize(const CostFn& cost, const Bounds& bounds, const OptimizerSettings& settings);

}  // namespace flapsim
