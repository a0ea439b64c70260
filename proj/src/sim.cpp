#include "flapsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace flapsim {

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ModelError("sim.dt: must be positive");
  if (!(t_end >= dt) || !std::isfinite(t_end)) throw ModelError("sim.t_end: must be at least dt");
  if (record_stride < 1) throw ModelError("sim.record_stride: must be >= 1");
  if (!wind.velocity.allFinite()) throw ModelError("sim.wind: must be finite");
}

long SimConfig::step_count() const { return std::lround(t_end / dt); }

namespace {

State advance(const State& s, const StateRate& k, double h) {
  State out;
  out.rotation = s.rotation + h * k.rotation;
  out.position = s.position + h * k.position;
  out.theta = s.theta + h * k.theta;
  out.qd = s.qd + h * k.qd;
  return out;
}

bool rate_finite(const StateRate& k) {
  return k.rotation.allFinite() && k.position.allFinite() && k.theta.allFinite() && k.qd.allFinite() &&
         std::isfinite(k.power);
}

double orthonormality_error(const Mat3& r) { return (r.transpose() * r - Mat3::Identity()).norm(); }

}  // namespace

StepResult rk4_step(const State& state, double t, double dt, const DerivativeFn& f) {
  if (!(dt > 0.0)) throw ModelError("rk4_step: dt must be positive");
  auto eval = [&](double tt, const State& x) {
    StateRate k = f(tt, x);
    if (!rate_finite(k)) {
      std::ostringstream msg;
      msg << "non-finite state derivative at t = " << tt;
      throw ModelError(msg.str());
    }
    return k;
  };
  const double half = 0.5 * dt;
  const StateRate k1 = eval(t, state);
  const StateRate k2 = eval(t + half, advance(state, k1, half));
  const StateRate k3 = eval(t + half, advance(state, k2, half));
  const StateRate k4 = eval(t + dt, advance(state, k3, dt));

  const double w = dt / 6.0;
  StepResult out;
  out.state.rotation = state.rotation + w * (k1.rotation + 2.0 * k2.rotation + 2.0 * k3.rotation + k4.rotation);
  out.state.position = state.position + w * (k1.position + 2.0 * k2.position + 2.0 * k3.position + k4.position);
  out.state.theta = state.theta + w * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta);
  out.state.qd = state.qd + w * (k1.qd + 2.0 * k2.qd + 2.0 * k3.qd + k4.qd);
  out.state.rotation = reorthonormalize(out.state.rotation);
  out.work = w * (k1.power + 2.0 * k2.power + 2.0 * k3.power + k4.power);
  return out;
}

Mat3 reorthonormalize(const Mat3& r) {
  if (!r.allFinite() || !(orthonormality_error(r) < 0.1)) {
    throw ModelError("reorthonormalize: matrix is too far from a rotation");
  }
  // R <- (R + R^-T) / 2 keeps zero patterns of reflection-symmetric inputs.
  Mat3 x = r;
  for (int iter = 0; iter < 20; ++iter) {
    const Mat3 next = 0.5 * (x + x.inverse().transpose());
    const double change = (next - x).cwiseAbs().maxCoeff();
    x = next;
    if (change < 1e-16) break;
  }
  if (!(x.determinant() > 0.0)) throw ModelError("reorthonormalize: improper rotation");
  return x;
}

Vec3 system_com(const Kinematics& kin, const ModelParams& params) {
  auto moment = [&](Body b) { return params.mass(b) * kin.body(b).position; };
  const Vec3 arms = moment(Body::ArmLeft) + moment(Body::ArmRight);
  const Vec3 wings = moment(Body::WingLeft) + moment(Body::WingRight);
  return (moment(Body::Body) + (arms + wings)) / params.total_mass();
}

Vec3 system_com(const State& state, const ModelParams& params) {
  return system_com(velocity_jacobians(state, params), params);
}

Vec3 angular_momentum(const Kinematics& kin, const ModelParams& params) {
  const Vec3 com = system_com(kin, params);
  auto term = [&](Body b) {
    const BodyFrame& f = kin.body(b);
    const Vec3 spin = f.rotation * params.inertia(b).cwiseProduct(f.omega);
    return Vec3(spin + params.mass(b) * (f.position - com).cross(f.velocity));
  };
  const Vec3 arms = term(Body::ArmLeft) + term(Body::ArmRight);
  const Vec3 wings = term(Body::WingLeft) + term(Body::WingRight);
  return term(Body::Body) + (arms + wings);
}

Vec3 angular_momentum(const State& state, const ModelParams& params) {
  return angular_momentum(velocity_jacobians(state, params), params);
}

double total_energy(const Kinematics& kin, const ModelParams& params) {
  return kinetic_energy(kin, params) + potential_energy(kin, params);
}

EulerAngles euler_zyx(const Mat3& r) {
  EulerAngles e;
  e.roll = std::atan2(r(2, 1), r(2, 2));
  e.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  e.yaw = std::atan2(r(1, 0), r(0, 0));
  return e;
}

Vec8 pid_torque(PidState& pid, const Vec8& theta, const Vec8& theta_dot, const Vec8& theta_ref,
                const Vec8& theta_dot_ref, double dt) {
  const Vec8 e = theta - theta_ref;
  const Vec8 e_dot = theta_dot - theta_dot_ref;
  pid.integral += dt * e;
  const PidGains& g = pid.gains;
  if (g.ki > 0.0 && g.integral_clamp > 0.0) {
    const double limit = g.integral_clamp / g.ki;
    pid.integral = pid.integral.cwiseMax(-limit).cwiseMin(limit);
  }
  return -g.kp * e - g.ki * pid.integral - g.kd * e_dot;
}

Drive Drive::constrained(std::function<Vec8(double, const State&)> accel) {
  Drive d;
  d.mode = SimMode::ConstrainedGait;
  d.joint_acceleration = std::move(accel);
  return d;
}

Drive Drive::torque(std::function<Vec8(double, const State&)> torque,
                    std::function<void(double, const State&, double)> begin_step) {
  Drive d;
  d.mode = SimMode::TorquePid;
  d.joint_torque = std::move(torque);
  d.begin_step = std::move(begin_step);
  return d;
}

Evaluation evaluate_dynamics(double t, const State& state, const ModelParams& params, const SimConfig& config,
                             SimMode mode, const Vec8& joint_input) {
  (void)t;
  const Kinematics kin = velocity_jacobians(state, params);
  const EomTerms eom = eom_terms(kin, state, params);

  Vec14 u_aero = Vec14::Zero();
  if (config.aero) {
    const std::array<AeroWrench, 2> wr{wing_wrench(kin, config.wind, params, Side::Left),
                                       wing_wrench(kin, config.wind, params, Side::Right)};
    u_aero = generalized_aero_forces(kin, wr);
  }

  Evaluation ev;
  Vec14 qdd;
  if (mode == SimMode::ConstrainedGait) {
    ConstraintSpec spec;
    spec.theta_ddot = joint_input;
    const ConstrainedSolution sol = lagrange_multiplier(eom, u_aero, spec);
    qdd = sol.qdd;
    ev.lambda = sol.lambda;
    ev.theta_ddot_cmd = joint_input;
    ev.constraint_residual = (ConstraintSpec::selector() * qdd - joint_input).cwiseAbs().maxCoeff();
    ev.rate.power = state.qd.dot(u_aero) + state.theta_dot().dot(sol.lambda);
  } else {
    Vec14 u = u_aero;
    if (mode == SimMode::TorquePid) u.tail<8>() += joint_input;
    qdd = forward_dynamics(eom, u);
    ev.rate.power = state.qd.dot(u);
  }
  ev.rate.rotation = state.rotation * skew(state.omega());
  ev.rate.position = state.velocity();
  ev.rate.theta = state.theta_dot();
  ev.rate.qd = qdd;
  return ev;
}

std::array<double, kTraceColumns> TraceRow::columns() const {
  std::array<double, kTraceColumns> c{};
  int i = 0;
  c[i++] = t;
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) c[i++] = state.rotation(r, k);
  for (int k = 0; k < 3; ++k) c[i++] = state.position[k];
  for (int k = 0; k < 8; ++k) c[i++] = state.theta[k];
  for (int k = 0; k < kDof; ++k) c[i++] = state.qd[k];
  for (int k = 0; k < 3; ++k) c[i++] = momentum[k];
  c[i++] = energy;
  c[i++] = euler.roll;
  c[i++] = euler.pitch;
  c[i++] = euler.yaw;
  return c;
}

const std::array<std::string, kTraceColumns>& trace_header() {
  static const std::array<std::string, kTraceColumns> header = [] {
    std::array<std::string, kTraceColumns> h;
    int i = 0;
    h[i++] = "t";
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) h[i++] = "r_B_" + std::to_string(r) + std::to_string(k);
    for (const char* a : {"x", "y", "z"}) h[i++] = std::string("p_B_") + a;
    const char* joints[] = {"p", "m", "e", "f"};
    for (const char* side : {"L", "R"})
      for (const char* j : joints) h[i++] = std::string("theta_") + side + "_" + j;
    for (const char* a : {"x", "y", "z"}) h[i++] = std::string("omega_B_") + a;
    for (const char* a : {"x", "y", "z"}) h[i++] = std::string("pdot_B_") + a;
    for (const char* side : {"L", "R"})
      for (const char* j : joints) h[i++] = std::string("thetadot_") + side + "_" + j;
    for (const char* a : {"x", "y", "z"}) h[i++] = std::string("Pi_") + a;
    h[i++] = "E";
    h[i++] = "roll";
    h[i++] = "pitch";
    h[i++] = "yaw";
    return h;
  }();
  return header;
}

State initial_state(const Vec8& theta, const Vec8& theta_dot) {
  State s;
  s.theta = theta;
  s.qd.tail<8>() = theta_dot;
  return s;
}

double max_joint_mobility(const State& state, const ModelParams& params) {
  const Mat14 m = mass_matrix(state, params);
  const Eigen::Matrix<double, 14, 14> inv = m.ldlt().solve(Eigen::Matrix<double, 14, 14>::Identity());
  const Eigen::Matrix<double, 8, 8> block = 0.5 * (inv.bottomRightCorner<8, 8>() + inv.bottomRightCorner<8, 8>().transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>>(block, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

Trace run_simulation(const SimConfig& config, const ModelParams& params, const Drive& drive, const State& initial) {
  config.validate();
  params.validate();
  if (drive.mode == SimMode::ConstrainedGait && !drive.joint_acceleration) {
    throw ModelError("run_simulation: constrained drive needs a joint acceleration law");
  }
  if (drive.mode == SimMode::TorquePid && !drive.joint_torque) {
    throw ModelError("run_simulation: torque drive needs a torque law");
  }

  Trace trace;
  const long steps = config.step_count();
  trace.rows.reserve(static_cast<std::size_t>(steps / config.record_stride + 1));
  trace.work.reserve(trace.rows.capacity());

  double work = 0.0;
  auto record = [&](double t, const State& s) {
    const Kinematics kin = velocity_jacobians(s, params);
    TraceRow row;
    row.t = t;
    row.state = s;
    row.momentum = angular_momentum(kin, params);
    row.energy = total_energy(kin, params);
    row.euler = euler_zyx(s.rotation);
    trace.max_orthonormality_error = std::max(trace.max_orthonormality_error, orthonormality_error(s.rotation));
    trace.rows.push_back(row);
    trace.work.push_back(work);
  };

  State state = initial;
  if (!state.all_finite()) {
    trace.failed = true;
    trace.failure = "initial state is not finite";
    return trace;
  }
  record(0.0, state);

  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * config.dt;
    try {
      int substeps = 1;
      if (drive.mode == SimMode::TorquePid && (drive.joint_damping > 0.0 || drive.joint_stiffness > 0.0)) {
        const double mu = max_joint_mobility(state, params);
        const double load = std::max(drive.joint_damping * mu, std::sqrt(drive.joint_stiffness * mu)) * config.dt;
        if (!std::isfinite(load)) throw ModelError("non-finite joint mobility");
        substeps = std::max(1, static_cast<int>(std::ceil(load / kSubstepLimit)));
        if (substeps > kMaxSubsteps) throw ModelError("torque loop too stiff for the step");
      }
      const double h = config.dt / substeps;
      for (int j = 0; j < substeps; ++j) {
        const double tj = t + j * h;
        if (drive.mode == SimMode::TorquePid && drive.begin_step) drive.begin_step(tj, state, h);
        const DerivativeFn f = [&](double tt, const State& x) {
          Vec8 input = Vec8::Zero();
          if (drive.mode == SimMode::ConstrainedGait) input = drive.joint_acceleration(tt, x);
          if (drive.mode == SimMode::TorquePid) input = drive.joint_torque(tt, x);
          const Evaluation ev = evaluate_dynamics(tt, x, params, config, drive.mode, input);
          trace.max_constraint_residual = std::max(trace.max_constraint_residual, ev.constraint_residual);
          return ev.rate;
        };
        const StepResult step = rk4_step(state, tj, h, f);
        if (!step.state.all_finite()) throw ModelError("non-finite state");
        state = step.state;
        work += step.work;
      }
    } catch (const ModelError& e) {
      trace.failed = true;
      std::ostringstream msg;
      msg << "blow-up at t = " << t << ": " << e.what();
      trace.failure = msg.str();
      return trace;
    }
    if ((k + 1) % config.record_stride == 0) record(static_cast<double>(k + 1) * config.dt, state);
  }
  return trace;
}

}  // namespace flapsim
