#include "flapsim/gait.hpp"

#include <cmath>

namespace flapsim {

GaitParams GaitParams::from_vector(const GaitVector& k) {
  GaitParams g;
  g.mean = k.segment<4>(0);
  g.amplitude = k.segment<4>(4);
  g.phase = k.segment<3>(8);
  return g;
}

GaitVector GaitParams::to_vector() const {
  GaitVector k;
  k << mean, amplitude, phase;
  return k;
}

ManeuverParams ManeuverParams::from_vector(const ManeuverVector& k, double ramp) {
  return {k[0], k.tail<4>(), ramp};
}

ManeuverVector ManeuverParams::to_vector() const {
  ManeuverVector k;
  k << t0, offset;
  return k;
}

JointReference joint_reference(double t, const GaitParams& gait, double omega) {
  const Vec4 phase(0.0, gait.phase[0], gait.phase[1], gait.phase[2]);
  Vec4 theta, rate, accel;
  for (int j = 0; j < 4; ++j) {
    const double arg = omega * t + phase[j];
    const double c = std::cos(arg), s = std::sin(arg);
    theta[j] = gait.amplitude[j] * c + gait.mean[j];
    rate[j] = -gait.amplitude[j] * omega * s;
    accel[j] = -gait.amplitude[j] * omega * omega * c;
  }
  JointReference ref;
  ref.theta << theta, mirror_joints(theta);
  ref.theta_dot << rate, mirror_joints(rate);
  ref.theta_ddot << accel, mirror_joints(accel);
  return ref;
}

OffsetSample offset_trajectory(double t, const ManeuverParams& m) {
  OffsetSample out;
  const double t1 = m.t0 + m.ramp;
  const double t2 = m.t0 + 2.0 * m.ramp;
  if (t >= m.t0 && t < t1) {
    out.rate = m.offset / m.ramp;
    out.offset = m.offset * ((t - m.t0) / m.ramp);
  } else if (t >= t1 && t < t2) {
    out.rate = -m.offset / m.ramp;
    out.offset = m.offset * ((t2 - t) / m.ramp);
  }
  return out;
}

JointReference maneuver_reference(double t, const GaitParams& gait, const ManeuverParams& maneuver, double omega) {
  JointReference ref = joint_reference(t, gait, omega);
  const OffsetSample off = offset_trajectory(t, maneuver);
  ref.theta.head<4>() += off.offset;
  ref.theta.tail<4>() += co_rotating_joints(off.offset);
  ref.theta_dot.head<4>() += off.rate;
  ref.theta_dot.tail<4>() += co_rotating_joints(off.rate);
  return ref;
}

Vec8 pd_acceleration_constraint(const Vec8& theta, const Vec8& theta_dot, const JointReference& reference) {
  return -kPdGain * (theta - reference.theta) - kPdGain * (theta_dot - reference.theta_dot);
}

RollReference roll_reference(double t, double t0, double ramp) {
  const double eta = (6.0 / (2.0 * ramp)) * (t - t0) - 3.0;
  const double th = std::tanh(eta);
  return {0.5 * M_PI * th, 0.5 * M_PI * (3.0 / ramp) * (1.0 - th * th)};
}

double roll_rate_half_prefactor(double t, double t0, double ramp) {
  const double th = std::tanh((6.0 / (2.0 * ramp)) * (t - t0) - 3.0);
  return 0.5 * M_PI * (3.0 / (2.0 * ramp)) * (1.0 - th * th);
}

}  // namespace flapsim
