#pragma once

#include <functional>
#include <string>
#include <vector>

#include "flapsim/aero.hpp"
#include "flapsim/dynamics.hpp"

namespace flapsim {

enum class SimMode { Passive, ConstrainedGait, TorquePid };

struct SimConfig {
  double dt = 1e-4;     // s
  double t_end = 2.0;   // s
  WindField wind;
  bool aero = true;
  int record_stride = 10;

  void validate() const;  // throws ModelError
  long step_count() const;
};

/// Time derivative of the composite state. `rotation` holds R_B S(omega).
struct StateRate {
  Mat3 rotation = Mat3::Zero();
  Vec3 position = Vec3::Zero();
  Vec8 theta = Vec8::Zero();
  Vec14 qd = Vec14::Zero();
  double power = 0.0;  // qd . (aero + motor + constraint generalized forces) [W]
};

using DerivativeFn = std::function<StateRate(double t, const State& state)>;

struct StepResult {
  State state;
  double work = 0.0;  // integrated input power over the step [J]
};

/// One classical RK4 step on (R, p, theta, qd); R is projected back onto
/// SO(3) once at the end. Throws ModelError on a non-finite derivative.
StepResult rk4_step(const State& state, double t, double dt, const DerivativeFn& f);

/// Nearest rotation (orthogonal polar factor) via Newton iteration. Throws
/// ModelError if the input is far from orthonormal or improper.
Mat3 reorthonormalize(const Mat3& r);

Vec3 system_com(const Kinematics& kin, const ModelParams& params);
Vec3 system_com(const State& state, const ModelParams& params);

/// Total angular momentum about the system CoM, inertial frame.
Vec3 angular_momentum(const Kinematics& kin, const ModelParams& params);
Vec3 angular_momentum(const State& state, const ModelParams& params);

double total_energy(const Kinematics& kin, const ModelParams& params);

struct EulerAngles {
  double roll = 0.0, pitch = 0.0, yaw = 0.0;  // rad
};

/// Z-Y-X extraction for reporting; the dynamics never use it.
EulerAngles euler_zyx(const Mat3& r);

struct PidGains {
  double kp = 0.0;  // N m / rad
  double ki = 0.0;  // N m / (rad s)
  double kd = 0.0;  // N m s / rad
  double integral_clamp = 0.05;  // |k_i * integral| limit [N m]
};

struct PidState {
  PidGains gains;
  Vec8 integral = Vec8::Zero();  // rad s

  void reset() { integral.setZero(); }
};

/// u = -kp e - ki sum(e dt) - kd edot, e = theta - theta_ref. The integral is
/// advanced by one rectangle of width dt before the torque is formed; dt = 0
/// evaluates without touching it.
Vec8 pid_torque(PidState& pid, const Vec8& theta, const Vec8& theta_dot, const Vec8& theta_ref,
                const Vec8& theta_dot_ref, double dt);

/// How the joints are driven.
struct Drive {
  SimMode mode = SimMode::Passive;
  /// ConstrainedGait: prescribed joint accelerations, evaluated at each RK4 stage.
  std::function<Vec8(double t, const State&)> joint_acceleration;
  /// TorquePid: joint torques, evaluated at each RK4 stage.
  std::function<Vec8(double t, const State&)> joint_torque;
  /// TorquePid, optional: called once before each step (integrator updates).
  std::function<void(double t, const State&, double dt)> begin_step;
  /// TorquePid: gains of the torque law on joint rate [N m s/rad] and angle
  /// [N m/rad]. When set, each step is split so that, with mu the largest
  /// joint mobility, kd mu h and h sqrt(kp mu) stay below kSubstepLimit.
  double joint_damping = 0.0;
  double joint_stiffness = 0.0;

  static Drive passive() { return {}; }
  static Drive constrained(std::function<Vec8(double, const State&)> accel);
  static Drive torque(std::function<Vec8(double, const State&)> torque,
                      std::function<void(double, const State&, double)> begin_step = {});
};

/// Everything the right-hand side produces at one instant.
struct Evaluation {
  StateRate rate;
  Vec8 lambda = Vec8::Zero();
  Vec8 theta_ddot_cmd = Vec8::Zero();
  double constraint_residual = 0.0;  // max |J_c qdd - theta_ddot_c|
};

Evaluation evaluate_dynamics(double t, const State& state, const ModelParams& params, const SimConfig& config,
                             SimMode mode, const Vec8& joint_input);

inline constexpr int kTraceColumns = 42;

struct TraceRow {
  double t = 0.0;
  State state;
  Vec3 momentum = Vec3::Zero();
  double energy = 0.0;
  EulerAngles euler;

  std::array<double, kTraceColumns> columns() const;
};

struct Trace {
  std::vector<TraceRow> rows;
  std::vector<double> work;  // accumulated input work at each row [J]
  double max_constraint_residual = 0.0;
  double max_orthonormality_error = 0.0;
  bool failed = false;
  std::string failure;
};

/// Column names, in CSV order.
const std::array<std::string, kTraceColumns>& trace_header();

/// Initial condition: R = I, p = 0, body at rest, joints on the given reference.
State initial_state(const Vec8& theta, const Vec8& theta_dot);

/// Largest eigenvalue of the joint block of M^-1 [1/(kg m^2)]: the joint-space
/// mobility with the base free.
double max_joint_mobility(const State& state, const ModelParams& params);

inline constexpr double kSubstepLimit = 1.0;  // RK4 stability bound is about 2.8
inline constexpr int kMaxSubsteps = 4096;

Trace run_simulation(const SimConfig& config, const ModelParams& params, const Drive& drive, const State& initial);

}  // namespace flapsim
