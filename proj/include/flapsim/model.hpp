#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace flapsim {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Vec14 = Eigen::Matrix<double, 14, 1>;
using Mat14 = Eigen::Matrix<double, 14, 14>;
using Jacobian = Eigen::Matrix<double, 3, 14>;

// Quasi-velocity layout: [omega_B^B (3), pdot_B (3), thetadot_L (4), thetadot_R (4)].
inline constexpr int kDof = 14;
inline constexpr int kOmegaIndex = 0;
inline constexpr int kLinearIndex = 3;
inline constexpr int kJointIndex = 6;
inline constexpr int kJointCount = 8;

enum class Side : int { Left = 0, Right = 1 };

// Joint order within one wing.
enum JointIndex : int { kPlunge = 0, kMediolateral = 1, kElbow = 2, kFeathering = 3 };

// Storage order of the five rigid bodies. Left/right pairs are kept adjacent in
// every sum so mirror-symmetric states cancel exactly in floating point.
enum class Body : int { Body = 0, ArmLeft = 1, WingLeft = 2, ArmRight = 3, WingRight = 4 };
inline constexpr int kBodyCount = 5;

inline int side_index(Side s) { return static_cast<int>(s); }
inline int joint_column(Side s, int joint) { return kJointIndex + 4 * side_index(s) + joint; }
inline Body arm_of(Side s) { return s == Side::Left ? Body::ArmLeft : Body::ArmRight; }
inline Body wing_of(Side s) { return s == Side::Left ? Body::WingLeft : Body::WingRight; }

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rigid-body and aerodynamic parameters of the five-body flapper, SI units.
///
/// Inertias are diagonals of the body-frame inertia tensor about each CoM.
/// links_left/right hold l_1 (body CoM to shoulder, body frame), l_2 (shoulder
/// to elbow, arm frame) and l_3 (elbow to wing CoM, wing frame).
struct ModelParams {
  double mass_body = 0.0;
  double mass_arm = 0.0;
  double mass_wing = 0.0;
  Vec3 inertia_body = Vec3::Zero();
  Vec3 inertia_arm = Vec3::Zero();
  Vec3 inertia_wing = Vec3::Zero();
  std::array<Vec3, 3> links_left{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 3> links_right{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  double chord = 0.0;        // m
  double span = 0.0;         // m
  double air_density = 0.0;  // kg/m^3
  double omega_flap = 0.0;   // rad/s
  double gravity = 9.81;     // m/s^2

  /// Nominal robot: 5 g body, 0.35 g arms, 5.6 g wings, 150 mm square wings,
  /// 10 Hz flapping.
  static ModelParams nominal();

  /// Throws ModelError naming the offending field.
  void validate() const;

  double total_mass() const { return mass_body + 2.0 * (mass_arm + mass_wing); }
  double mass(Body b) const;
  const Vec3& inertia(Body b) const;
  const std::array<Vec3, 3>& links(Side s) const { return s == Side::Left ? links_left : links_right; }
  double flap_period() const;
};

namespace units {
inline constexpr double kGram = 1e-3;             // kg
inline constexpr double kMillimeter = 1e-3;       // m
inline constexpr double kGramCm2 = 1e-7;          // kg m^2
inline constexpr double kDegree = 0.017453292519943295;  // rad
}  // namespace units

/// One wing's joint angles [rad].
struct JointAngles {
  double plunge = 0.0;
  double mediolateral = 0.0;
  double elbow = 0.0;
  double feathering = 0.0;

  static JointAngles from_vector(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }
  Vec4 to_vector() const { return {plunge, mediolateral, elbow, feathering}; }
};

// Right-wing joint coordinates are anatomical: for a mirror-symmetric pose the
// right angles equal kMirrorSign .* left angles.
inline const Vec4 kMirrorSign{1.0, -1.0, 1.0, -1.0};

/// Right-wing joint values producing the mirror image of a left-wing pose.
inline Vec4 mirror_joints(const Vec4& left) { return kMirrorSign.cwiseProduct(left); }

/// Right-wing joint values that rotate the right wing by the same physical
/// rotation (same axes, same sense) as `left` rotates the left wing.
inline Vec4 co_rotating_joints(const Vec4& left) { return -kMirrorSign.cwiseProduct(left); }

struct State {
  Mat3 rotation = Mat3::Identity();  // body to inertial
  Vec3 position = Vec3::Zero();      // body CoM, inertial [m]
  Vec8 theta = Vec8::Zero();         // [theta_L, theta_R]
  Vec14 qd = Vec14::Zero();

  Vec4 joints(Side s) const { return theta.segment<4>(4 * side_index(s)); }
  Vec4 joint_rates(Side s) const { return qd.segment<4>(kJointIndex + 4 * side_index(s)); }
  Vec3 omega() const { return qd.segment<3>(kOmegaIndex); }
  Vec3 velocity() const { return qd.segment<3>(kLinearIndex); }
  Vec8 theta_dot() const { return qd.segment<8>(kJointIndex); }
  bool all_finite() const;
};

Mat3 rot_x(double theta);
Mat3 rot_z(double theta);
Mat3 skew(const Vec3& v);

struct WingRotations {
  Mat3 arm;   // arm to body
  Mat3 wing;  // wing to arm
};

/// Left: R_A = Rz(m) Rx(p), R_W = Rx(e) Rz(f).
/// Right: R_A = Rz(m) Rx(-p), R_W = Rx(-e) Rz(f) (anatomical mirror convention).
WingRotations wing_rotations(const JointAngles& theta, Side side);

struct WingAngularVelocities {
  Vec3 arm_in_body;  // total arm angular velocity expressed in the body frame
  Vec3 wing_in_arm;  // total wing angular velocity expressed in the arm frame
};

/// Total angular velocities of both arms and wings, each in its parent frame.
std::array<WingAngularVelocities, 2> angular_velocities(const State& state);

struct ComPositions {
  Vec3 arm_left, wing_left, arm_right, wing_right;
};

ComPositions com_positions(const Mat3& rotation, const Vec3& position, const Vec8& theta,
                           const ModelParams& params);

struct BodyFrame {
  Mat3 rotation;     // body to inertial
  Vec3 position;     // CoM, inertial
  Vec3 velocity;     // CoM, inertial
  Vec3 omega;        // angular velocity, body frame
  Vec3 omega_world;  // angular velocity, inertial frame
  Jacobian jv;       // velocity = jv * qd
  Jacobian jw;       // omega = jw * qd
  Jacobian jw_world;
};

struct WingChain {
  WingRotations relative;
  Vec3 shoulder_offset;       // shoulder - body CoM, inertial
  Vec3 upper_arm;             // elbow - shoulder, inertial
  Vec3 elbow_to_wing;         // wing CoM - elbow, inertial
  Vec3 elbow;                 // elbow position, inertial
  Vec3 elbow_velocity;
  Jacobian elbow_jv;
  std::array<Vec3, 4> axes;   // joint axes (inertial), scaled by the side's sign convention
  Vec3 omega_after_mediolateral;  // intermediate frame between the two shoulder joints
  Vec3 omega_after_elbow;         // intermediate frame between the two wing joints
};

/// Poses, velocities and analytic velocity Jacobians of all bodies.
struct Kinematics {
  std::array<BodyFrame, kBodyCount> bodies;
  std::array<WingChain, 2> wings;

  const BodyFrame& body(Body b) const { return bodies[static_cast<int>(b)]; }
  const WingChain& wing(Side s) const { return wings[side_index(s)]; }
};

Kinematics velocity_jacobians(const State& state, const ModelParams& params);

/// Velocity-product accelerations Jdot * qd for every body (inertial frame).
struct BiasAccelerations {
  std::array<Vec3, kBodyCount> linear;
  std::array<Vec3, kBodyCount> angular;
  std::array<Vec3, 2> elbow_linear;
};

BiasAccelerations velocity_product_accelerations(const Kinematics& kin, const State& state);

}  // namespace flapsim
