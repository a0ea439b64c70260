#pragma once

#include <array>

#include "flapsim/model.hpp"

namespace flapsim {

using GaitVector = Eigen::Matrix<double, 11, 1>;
using ManeuverVector = Eigen::Matrix<double, 5, 1>;

/// Open-loop flapping gait of the left wing; the right wing mirrors it.
/// theta_j(t) = A_j cos(Omega t + phi_j) + mean_j with phi_plunge = 0.
struct GaitParams {
  Vec4 mean = Vec4::Zero();       // rad
  Vec4 amplitude = Vec4::Zero();  // rad
  Vec3 phase = Vec3::Zero();      // mediolateral, elbow, feathering [rad]

  /// [mean(4), amplitude(4), phase(3)].
  static GaitParams from_vector(const GaitVector& k);
  GaitVector to_vector() const;
};

/// Triangular mean-angle offset starting at t0, peaking at `offset` after
/// `ramp` seconds and returning to zero after 2 * ramp.
struct ManeuverParams {
  double t0 = 1.0;
  Vec4 offset = Vec4::Zero();  // rad, left-wing joint coordinates
  double ramp = 0.2;           // s

  /// [t0, offset(4)]; `ramp` is not an optimization variable.
  static ManeuverParams from_vector(const ManeuverVector& k, double ramp);
  ManeuverVector to_vector() const;
};

struct JointReference {
  Vec8 theta = Vec8::Zero();
  Vec8 theta_dot = Vec8::Zero();
  Vec8 theta_ddot = Vec8::Zero();
};

JointReference joint_reference(double t, const GaitParams& gait, double omega);

struct OffsetSample {
  Vec4 offset = Vec4::Zero();
  Vec4 rate = Vec4::Zero();
};

OffsetSample offset_trajectory(double t, const ManeuverParams& maneuver);

/// Gait with its mean angles shifted by the maneuver offset. Both wings are
/// shifted by the same physical rotation, which breaks the left/right
/// symmetry. theta_ddot carries the gait part only; the offset's rate is
/// piecewise constant.
JointReference maneuver_reference(double t, const GaitParams& gait, const ManeuverParams& maneuver, double omega);

/// PD acceleration law used as the joint constraint during the maneuver.
inline constexpr double kPdGain = 120.0;
Vec8 pd_acceleration_constraint(const Vec8& theta, const Vec8& theta_dot, const JointReference& reference);

struct RollReference {
  double angle = 0.0;  // rad
  double rate = 0.0;   // rad/s
};

/// phi_r = (pi/2) tanh(eta), eta = 3 (t - t0) / T - 3: a 180 deg roll over 2T.
/// `rate` is the exact time derivative of `angle`.
RollReference roll_reference(double t, double t0, double ramp);

/// The rate expression with the (pi/2)(3 / 2T) prefactor, half the exact
/// derivative. Kept for comparison with externally reported profiles.
double roll_rate_half_prefactor(double t, double t0, double ramp);

}  // namespace flapsim
