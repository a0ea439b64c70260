#include <random>

#include <gtest/gtest.h>

#include "flapsim/model.hpp"
#include "oracles.hpp"

namespace flapsim {
namespace {

using testing::flow;
using testing::log_so3;
using testing::random_state;

TEST(ModelParams, NominalMatchesTableValues) {
  const ModelParams p = ModelParams::nominal();
  EXPECT_NEAR(p.total_mass(), 16.9e-3, 1e-15);
  EXPECT_NEAR(p.inertia_wing.y(), 2.11e-7, 1e-20);
  EXPECT_NEAR(p.flap_period(), 0.1, 1e-15);
  EXPECT_NO_THROW(p.validate());
}

TEST(ModelParams, ValidateNamesField) {
  ModelParams p = ModelParams::nominal();
  p.chord = -1.0;
  try {
    p.validate();
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("wing.chord"), std::string::npos);
  }
}

TEST(Rotations, ZeroJointsGiveIdentity) {
  for (Side s : {Side::Left, Side::Right}) {
    const WingRotations r = wing_rotations({}, s);
    EXPECT_TRUE(r.arm.isApprox(Mat3::Identity(), 1e-15));
    EXPECT_TRUE(r.wing.isApprox(Mat3::Identity(), 1e-15));
  }
}

TEST(Rotations, OrthonormalForRandomAngles) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 50; ++i) {
    const JointAngles j{u(rng), u(rng), u(rng), u(rng)};
    for (Side s : {Side::Left, Side::Right}) {
      const WingRotations r = wing_rotations(j, s);
      EXPECT_LT((r.arm.transpose() * r.arm - Mat3::Identity()).norm(), 1e-14);
      EXPECT_NEAR(r.wing.determinant(), 1.0, 1e-14);
    }
  }
}

TEST(Rotations, MirroredJointsGiveMirrorImage) {
  // Reflection through the x-z plane: D R D with D = diag(1, -1, 1).
  const Mat3 d = Vec3(1, -1, 1).asDiagonal();
  const Vec4 left(0.3, -0.7, 0.4, 1.1);
  const WingRotations l = wing_rotations(JointAngles::from_vector(left), Side::Left);
  const WingRotations r = wing_rotations(JointAngles::from_vector(mirror_joints(left)), Side::Right);
  EXPECT_TRUE((d * l.arm * d).isApprox(r.arm, 1e-14));
  EXPECT_TRUE((d * l.wing * d).isApprox(r.wing, 1e-14));
}

TEST(Kinematics, ZeroPoseComPositions) {
  const ModelParams p = ModelParams::nominal();
  const ComPositions c = com_positions(Mat3::Identity(), Vec3::Zero(), Vec8::Zero(), p);
  EXPECT_TRUE(c.arm_left.isApprox(Vec3(0, 0.025, 0.05), 1e-14));
  EXPECT_TRUE(c.wing_left.isApprox(Vec3(0, 0.025, 0.225), 1e-14));
  EXPECT_TRUE(c.wing_right.isApprox(Vec3(0, -0.025, 0.225), 1e-14));
}

TEST(Kinematics, PlungeAboutBodyXRaisesWing) {
  // Links start along +z; a quarter turn about x lays them along -y (left).
  const ModelParams p = ModelParams::nominal();
  Vec8 theta = Vec8::Zero();
  theta[kPlunge] = M_PI / 2;
  theta[4 + kPlunge] = M_PI / 2;
  const ComPositions c = com_positions(Mat3::Identity(), Vec3::Zero(), theta, p);
  // Mirror symmetric pose: y components opposite, z equal.
  EXPECT_NEAR(c.wing_left.y(), -c.wing_right.y(), 1e-15);
  EXPECT_NEAR(c.wing_left.z(), c.wing_right.z(), 1e-15);
  EXPECT_NEAR(c.wing_left.y(), 0.025 - 0.2, 1e-14);
  EXPECT_NEAR(c.wing_left.z(), 0.025, 1e-14);
}

TEST(Kinematics, JacobianVelocitiesMatchRecordedVelocities) {
  std::mt19937_64 rng(11);
  const ModelParams p = ModelParams::nominal();
  const State s = random_state(rng);
  const Kinematics kin = velocity_jacobians(s, p);
  for (const BodyFrame& f : kin.bodies) {
    EXPECT_TRUE((f.jv * s.qd).isApprox(f.velocity, 1e-13));
    EXPECT_TRUE((f.jw * s.qd).isApprox(f.omega, 1e-13));
    EXPECT_TRUE((f.rotation * f.omega).isApprox(f.omega_world, 1e-13));
  }
}

// Central differences along each quasi-velocity direction.
class JacobianFd : public ::testing::TestWithParam<int> {};

TEST_P(JacobianFd, MatchesCentralDifferences) {
  std::mt19937_64 rng(1000 + GetParam());
  const ModelParams p = ModelParams::nominal();
  const State s = random_state(rng);
  const Kinematics kin = velocity_jacobians(s, p);
  const double eps = 1e-6;
  for (int b = 0; b < kBodyCount; ++b) {
    Jacobian jv_fd, jw_fd;
    for (int i = 0; i < kDof; ++i) {
      const Kinematics kp = velocity_jacobians(flow(s, Vec14::Unit(i), eps), p);
      const Kinematics km = velocity_jacobians(flow(s, Vec14::Unit(i), -eps), p);
      jv_fd.col(i) = (kp.bodies[b].position - km.bodies[b].position) / (2 * eps);
      jw_fd.col(i) = log_so3(km.bodies[b].rotation.transpose() * kp.bodies[b].rotation) / (2 * eps);
    }
    EXPECT_LT((jv_fd - kin.bodies[b].jv).norm() / kin.bodies[b].jv.norm(), 1e-6) << "body " << b;
    EXPECT_LT((jw_fd - kin.bodies[b].jw).norm() / kin.bodies[b].jw.norm(), 1e-6) << "body " << b;
  }
}

TEST_P(JacobianFd, VelocityProductsMatchJacobianRates) {
  std::mt19937_64 rng(2000 + GetParam());
  const ModelParams p = ModelParams::nominal();
  const State s = random_state(rng);
  const Kinematics kin = velocity_jacobians(s, p);
  const BiasAccelerations acc = velocity_product_accelerations(kin, s);
  const double eps = 1e-6;
  const Kinematics kp = velocity_jacobians(flow(s, s.qd, eps), p);
  const Kinematics km = velocity_jacobians(flow(s, s.qd, -eps), p);
  for (int b = 0; b < kBodyCount; ++b) {
    const Vec3 lin = (kp.bodies[b].jv - km.bodies[b].jv) * s.qd / (2 * eps);
    const Vec3 ang = (kp.bodies[b].jw_world - km.bodies[b].jw_world) * s.qd / (2 * eps);
    EXPECT_LT((lin - acc.linear[b]).norm() / std::max(1.0, lin.norm()), 1e-6) << "body " << b;
    EXPECT_LT((ang - acc.angular[b]).norm() / std::max(1.0, ang.norm()), 1e-6) << "body " << b;
  }
  for (Side side : {Side::Left, Side::Right}) {
    const int i = side_index(side);
    const Vec3 lin = (kp.wings[i].elbow_jv - km.wings[i].elbow_jv) * s.qd / (2 * eps);
    EXPECT_LT((lin - acc.elbow_linear[i]).norm() / std::max(1.0, lin.norm()), 1e-6);
  }
}

INSTANTIATE_TEST_SUITE_P(RandomStates, JacobianFd, ::testing::Range(0, 10));

}  // namespace
}  // namespace flapsim
