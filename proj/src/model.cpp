#include "flapsim/model.hpp"

#include <cmath>

namespace flapsim {

ModelParams ModelParams::nominal() {
  using namespace units;
  ModelParams p;
  p.mass_body = 5.0 * kGram;
  p.mass_arm = 0.35 * kGram;
  p.mass_wing = 5.6 * kGram;
  p.inertia_body = Vec3(0.625, 3.65, 3.65) * kGramCm2;
  p.inertia_arm = Vec3(0.147, 0.147, 0.040) * kGramCm2;
  p.inertia_wing = Vec3(1.05, 2.11, 2.11) * kGramCm2;
  p.links_left = {Vec3(0, 25, 25) * kMillimeter, Vec3(0, 0, 50) * kMillimeter, Vec3(0, 0, 150) * kMillimeter};
  p.links_right = {Vec3(0, -25, 25) * kMillimeter, Vec3(0, 0, 50) * kMillimeter, Vec3(0, 0, 150) * kMillimeter};
  p.chord = 150.0 * kMillimeter;
  p.span = 150.0 * kMillimeter;
  p.air_density = 1.0;
  p.omega_flap = 2.0 * M_PI * 10.0;
  p.gravity = 9.81;
  return p;
}

void ModelParams::validate() const {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ModelError(std::string(field) + ": " + what);
  };
  require(mass_body > 0, "mass.body", "must be positive");
  require(mass_arm > 0, "mass.arm", "must be positive");
  require(mass_wing > 0, "mass.wing", "must be positive");
  require((inertia_body.array() > 0).all(), "inertia.body", "diagonal entries must be positive");
  require((inertia_arm.array() > 0).all(), "inertia.arm", "diagonal entries must be positive");
  require((inertia_wing.array() > 0).all(), "inertia.wing", "diagonal entries must be positive");
  require(chord > 0, "wing.chord", "must be positive");
  require(span > 0, "wing.span", "must be positive");
  require(air_density > 0, "air_density", "must be positive");
  require(std::isfinite(omega_flap), "flap_frequency", "must be finite");
  require(std::isfinite(gravity) && gravity >= 0, "gravity", "must be finite and non-negative");
  for (int j = 0; j < 3; ++j) {
    require(links_left[j].allFinite() && links_right[j].allFinite(), "links", "must be finite");
  }
}

double ModelParams::mass(Body b) const {
  switch (b) {
    case Body::Body: return mass_body;
    case Body::ArmLeft:
    case Body::ArmRight: return mass_arm;
    case Body::WingLeft:
    case Body::WingRight: return mass_wing;
  }
  return 0.0;
}

const Vec3& ModelParams::inertia(Body b) const {
  switch (b) {
    case Body::ArmLeft:
    case Body::ArmRight: return inertia_arm;
    case Body::WingLeft:
    case Body::WingRight: return inertia_wing;
    case Body::Body: break;
  }
  return inertia_body;
}

double ModelParams::flap_period() const { return 2.0 * M_PI / omega_flap; }

bool State::all_finite() const {
  return rotation.allFinite() && position.allFinite() && theta.allFinite() && qd.allFinite();
}

Mat3 rot_x(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

Mat3 rot_z(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return s;
}

namespace {

double side_sign(Side s) { return s == Side::Left ? 1.0 : -1.0; }

}  // namespace

WingRotations wing_rotations(const JointAngles& theta, Side side) {
  const double sg = side_sign(side);
  return {rot_z(theta.mediolateral) * rot_x(sg * theta.plunge),
          rot_x(sg * theta.elbow) * rot_z(theta.feathering)};
}

std::array<WingAngularVelocities, 2> angular_velocities(const State& state) {
  std::array<WingAngularVelocities, 2> out;
  for (Side side : {Side::Left, Side::Right}) {
    const double sg = side_sign(side);
    const Vec4 th = state.joints(side);
    const Vec4 rate = state.joint_rates(side);
    const WingRotations rel = wing_rotations(JointAngles::from_vector(th), side);
    Vec3 arm = Vec3(0, 0, rate[kMediolateral]) + rot_z(th[kMediolateral]) * Vec3(sg * rate[kPlunge], 0, 0) +
               state.omega();
    Vec3 arm_in_arm = rel.arm.transpose() * arm;
    Vec3 wing = Vec3(sg * rate[kElbow], 0, 0) + rot_x(sg * th[kElbow]) * Vec3(0, 0, rate[kFeathering]) + arm_in_arm;
    out[side_index(side)] = {arm, wing};
  }
  return out;
}

ComPositions com_positions(const Mat3& rotation, const Vec3& position, const Vec8& theta,
                           const ModelParams& params) {
  ComPositions out;
  for (Side side : {Side::Left, Side::Right}) {
    const auto& l = params.links(side);
    const WingRotations rel = wing_rotations(JointAngles::from_vector(theta.segment<4>(4 * side_index(side))), side);
    const Mat3 r_arm = rotation * rel.arm;
    const Vec3 arm = position + rotation * l[0] + 0.5 * r_arm * l[1];
    const Vec3 wing = arm + 0.5 * r_arm * l[1] + r_arm * rel.wing * l[2];
    if (side == Side::Left) {
      out.arm_left = arm;
      out.wing_left = wing;
    } else {
      out.arm_right = arm;
      out.wing_right = wing;
    }
  }
  return out;
}

namespace {

// Linear Jacobian of a point rigidly attached somewhere along one wing chain.
// `from_body` is the point minus the body CoM; `from_shoulder` and `from_elbow`
// are used for the arm and wing joint columns respectively.
Jacobian point_jacobian(const Mat3& body_rotation, const WingChain& chain, Side side, const Vec3& from_body,
                        const Vec3& from_shoulder, const Vec3* from_elbow) {
  Jacobian j = Jacobian::Zero();
  j.block<3, 3>(0, kOmegaIndex) = -skew(from_body) * body_rotation;
  j.block<3, 3>(0, kLinearIndex).setIdentity();
  j.col(joint_column(side, kMediolateral)) = chain.axes[kMediolateral].cross(from_shoulder);
  j.col(joint_column(side, kPlunge)) = chain.axes[kPlunge].cross(from_shoulder);
  if (from_elbow != nullptr) {
    j.col(joint_column(side, kElbow)) = chain.axes[kElbow].cross(*from_elbow);
    j.col(joint_column(side, kFeathering)) = chain.axes[kFeathering].cross(*from_elbow);
  }
  return j;
}

}  // namespace

Kinematics velocity_jacobians(const State& state, const ModelParams& params) {
  Kinematics kin;
  const Mat3& rb = state.rotation;
  const Vec14& qd = state.qd;

  BodyFrame& body = kin.bodies[static_cast<int>(Body::Body)];
  body.rotation = rb;
  body.position = state.position;
  body.jv.setZero();
  body.jv.block<3, 3>(0, kLinearIndex).setIdentity();
  body.jw.setZero();
  body.jw.block<3, 3>(0, kOmegaIndex).setIdentity();
  body.jw_world.setZero();
  body.jw_world.block<3, 3>(0, kOmegaIndex) = rb;
  body.velocity = state.velocity();
  body.omega = state.omega();
  body.omega_world = rb * body.omega;

  for (Side side : {Side::Left, Side::Right}) {
    const double sg = side_sign(side);
    const Vec4 th = state.joints(side);
    const Vec4 rate = state.joint_rates(side);
    const auto& l = params.links(side);
    WingChain& chain = kin.wings[side_index(side)];
    chain.relative = wing_rotations(JointAngles::from_vector(th), side);

    const Mat3 r_arm = rb * chain.relative.arm;
    const Mat3 r_wing = r_arm * chain.relative.wing;

    chain.axes[kMediolateral] = rb.col(2);
    chain.axes[kPlunge] = sg * (rb * Vec3(std::cos(th[kMediolateral]), std::sin(th[kMediolateral]), 0.0));
    chain.axes[kElbow] = sg * r_arm.col(0);
    chain.axes[kFeathering] = r_arm * Vec3(0.0, -std::sin(sg * th[kElbow]), std::cos(sg * th[kElbow]));

    const Vec3 r1 = rb * l[0];
    const Vec3 r2 = r_arm * l[1];
    const Vec3 r2_half = 0.5 * r2;
    const Vec3 r3 = r_wing * l[2];
    chain.shoulder_offset = r1;
    chain.upper_arm = r2;
    chain.elbow_to_wing = r3;

    Jacobian arm_w = body.jw_world;
    arm_w.col(joint_column(side, kMediolateral)) = chain.axes[kMediolateral];
    arm_w.col(joint_column(side, kPlunge)) = chain.axes[kPlunge];
    Jacobian wing_w = arm_w;
    wing_w.col(joint_column(side, kElbow)) = chain.axes[kElbow];
    wing_w.col(joint_column(side, kFeathering)) = chain.axes[kFeathering];

    BodyFrame& arm = kin.bodies[static_cast<int>(arm_of(side))];
    arm.rotation = r_arm;
    arm.position = state.position + (r1 + r2_half);
    arm.jv = point_jacobian(rb, chain, side, r1 + r2_half, r2_half, nullptr);
    arm.jw_world = arm_w;
    arm.jw = r_arm.transpose() * arm_w;

    const Vec3 elbow_from_body = r1 + r2;
    chain.elbow = state.position + elbow_from_body;
    chain.elbow_jv = point_jacobian(rb, chain, side, elbow_from_body, r2, nullptr);

    BodyFrame& wing = kin.bodies[static_cast<int>(wing_of(side))];
    wing.rotation = r_wing;
    wing.position = state.position + (elbow_from_body + r3);
    wing.jv = point_jacobian(rb, chain, side, elbow_from_body + r3, r2 + r3, &r3);
    wing.jw_world = wing_w;
    wing.jw = r_wing.transpose() * wing_w;

    // Angular velocities built joint by joint; the intermediate frames feed the
    // velocity-product terms.
    const Vec3& omega_b = body.omega_world;
    chain.omega_after_mediolateral = omega_b + rate[kMediolateral] * chain.axes[kMediolateral];
    arm.omega_world = chain.omega_after_mediolateral + rate[kPlunge] * chain.axes[kPlunge];
    chain.omega_after_elbow = arm.omega_world + rate[kElbow] * chain.axes[kElbow];
    wing.omega_world = chain.omega_after_elbow + rate[kFeathering] * chain.axes[kFeathering];

    arm.omega = arm.jw * qd;
    wing.omega = wing.jw * qd;
    arm.velocity = arm.jv * qd;
    wing.velocity = wing.jv * qd;
    chain.elbow_velocity = chain.elbow_jv * qd;
  }
  return kin;
}

BiasAccelerations velocity_product_accelerations(const Kinematics& kin, const State& state) {
  BiasAccelerations out;
  const BodyFrame& body = kin.body(Body::Body);
  const Vec3& wb = body.omega_world;
  out.linear[static_cast<int>(Body::Body)].setZero();
  out.angular[static_cast<int>(Body::Body)].setZero();

  for (Side side : {Side::Left, Side::Right}) {
    const WingChain& chain = kin.wing(side);
    const Vec4 rate = state.joint_rates(side);
    const BodyFrame& arm = kin.body(arm_of(side));
    const BodyFrame& wing = kin.body(wing_of(side));
    const auto& ax = chain.axes;

    const Vec3 arm_alpha = rate[kMediolateral] * wb.cross(ax[kMediolateral]) +
                           rate[kPlunge] * chain.omega_after_mediolateral.cross(ax[kPlunge]);
    const Vec3 wing_alpha = arm_alpha + rate[kElbow] * arm.omega_world.cross(ax[kElbow]) +
                            rate[kFeathering] * chain.omega_after_elbow.cross(ax[kFeathering]);

    const Vec3& r1 = chain.shoulder_offset;
    const Vec3& r2 = chain.upper_arm;
    const Vec3 r2_half = 0.5 * r2;
    const Vec3& r3 = chain.elbow_to_wing;
    const Vec3& wa = arm.omega_world;
    const Vec3& ww = wing.omega_world;

    const Vec3 shoulder_acc = wb.cross(wb.cross(r1));
    const Vec3 elbow_acc = shoulder_acc + arm_alpha.cross(r2) + wa.cross(wa.cross(r2));
    out.linear[static_cast<int>(arm_of(side))] = shoulder_acc + arm_alpha.cross(r2_half) + wa.cross(wa.cross(r2_half));
    out.elbow_linear[side_index(side)] = elbow_acc;
    out.linear[static_cast<int>(wing_of(side))] = elbow_acc + wing_alpha.cross(r3) + ww.cross(ww.cross(r3));
    out.angular[static_cast<int>(arm_of(side))] = arm_alpha;
    out.angular[static_cast<int>(wing_of(side))] = wing_alpha;
  }
  return out;
}

}  // namespace flapsim
