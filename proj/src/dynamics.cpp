#include "flapsim/dynamics.hpp"

namespace flapsim {

InputMap EomTerms::motor_map() {
  InputMap b = InputMap::Zero();
  b.bottomRows<8>().setIdentity();
  return b;
}

ConstraintJacobian ConstraintSpec::selector() { return EomTerms::motor_map().transpose(); }

namespace {

Mat14 body_mass_contribution(const BodyFrame& f, double mass, const Vec3& inertia) {
  return mass * (f.jv.transpose() * f.jv) + f.jw.transpose() * inertia.asDiagonal() * f.jw;
}

Vec14 body_bias_contribution(const BodyFrame& f, double mass, const Vec3& inertia, const Vec3& lin_acc,
                             const Vec3& ang_acc_world, const Vec3& gravity) {
  const Vec3 ang_acc = f.rotation.transpose() * ang_acc_world;
  const Vec3 spin = inertia.cwiseProduct(f.omega);
  const Vec3 torque = inertia.cwiseProduct(ang_acc) + f.omega.cross(spin);
  return f.jv.transpose() * (mass * (lin_acc - gravity)) + f.jw.transpose() * torque;
}

int idx(Body b) { return static_cast<int>(b); }

}  // namespace

Mat14 mass_matrix(const Kinematics& kin, const ModelParams& params) {
  auto term = [&](Body b) { return body_mass_contribution(kin.body(b), params.mass(b), params.inertia(b)); };
  const Mat14 arms = term(Body::ArmLeft) + term(Body::ArmRight);
  const Mat14 wings = term(Body::WingLeft) + term(Body::WingRight);
  return term(Body::Body) + (arms + wings);
}

Mat14 mass_matrix(const State& state, const ModelParams& params) {
  return mass_matrix(velocity_jacobians(state, params), params);
}

Vec14 bias_vector(const Kinematics& kin, const State& state, const ModelParams& params) {
  const BiasAccelerations acc = velocity_product_accelerations(kin, state);
  const Vec3 gravity(0.0, 0.0, -params.gravity);
  auto term = [&](Body b) {
    return body_bias_contribution(kin.body(b), params.mass(b), params.inertia(b), acc.linear[idx(b)],
                                  acc.angular[idx(b)], gravity);
  };
  const Vec14 arms = term(Body::ArmLeft) + term(Body::ArmRight);
  const Vec14 wings = term(Body::WingLeft) + term(Body::WingRight);
  return term(Body::Body) + (arms + wings);
}

Vec14 bias_vector(const State& state, const ModelParams& params) {
  return bias_vector(velocity_jacobians(state, params), state, params);
}

EomTerms eom_terms(const Kinematics& kin, const State& state, const ModelParams& params) {
  return {mass_matrix(kin, params), bias_vector(kin, state, params)};
}

double kinetic_energy(const Kinematics& kin, const ModelParams& params) {
  double t = 0.0;
  for (int i = 0; i < kBodyCount; ++i) {
    const auto b = static_cast<Body>(i);
    const BodyFrame& f = kin.bodies[i];
    t += 0.5 * params.mass(b) * f.velocity.squaredNorm() + 0.5 * f.omega.dot(params.inertia(b).cwiseProduct(f.omega));
  }
  return t;
}

double potential_energy(const Kinematics& kin, const ModelParams& params) {
  double u = 0.0;
  for (int i = 0; i < kBodyCount; ++i) {
    u += params.mass(static_cast<Body>(i)) * params.gravity * kin.bodies[i].position.z();
  }
  return u;
}

Vec14 forward_dynamics(const EomTerms& eom, const Vec14& u_total) {
  const Eigen::LLT<Mat14> llt(eom.mass);
  if (llt.info() != Eigen::Success) throw ModelError("forward_dynamics: mass matrix is not positive definite");
  return llt.solve(u_total - eom.bias);
}

Vec14 forward_dynamics(const State& state, const ModelParams& params, const Vec14& u_total) {
  const Kinematics kin = velocity_jacobians(state, params);
  return forward_dynamics(eom_terms(kin, state, params), u_total);
}

ConstrainedSolution lagrange_multiplier(const EomTerms& eom, const Vec14& u_total, const ConstraintSpec& constraint) {
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  const Mat6 base = eom.mass.topLeftCorner<6, 6>();
  const Vec4 acc_left = constraint.theta_ddot.head<4>();
  const Vec4 acc_right = constraint.theta_ddot.tail<4>();
  const Vec6 coupling_left = eom.mass.block<6, 4>(0, kJointIndex) * acc_left;
  const Vec6 coupling_right = eom.mass.block<6, 4>(0, kJointIndex + 4) * acc_right;
  const Vec6 rhs = (u_total - eom.bias).head<6>() - (coupling_left + coupling_right);

  const Eigen::LLT<Mat6> llt(base);
  if (llt.info() != Eigen::Success) throw ModelError("lagrange_multiplier: base inertia is not positive definite");

  ConstrainedSolution out;
  out.qdd.head<6>() = llt.solve(rhs);
  out.qdd.tail<8>() = constraint.theta_ddot;
  out.lambda = (eom.mass.bottomRows<8>() * out.qdd + eom.bias.tail<8>()) - u_total.tail<8>();
  return out;
}

ConstrainedSolution lagrange_multiplier(const State& state, const ModelParams& params, const Vec14& u_total,
                                        const ConstraintSpec& constraint) {
  const Kinematics kin = velocity_jacobians(state, params);
  return lagrange_multiplier(eom_terms(kin, state, params), u_total, constraint);
}

}  // namespace flapsim
