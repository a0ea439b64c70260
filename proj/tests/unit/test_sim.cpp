#include <memory>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "flapsim/dynamics.hpp"
#include "flapsim/gait.hpp"
#include "flapsim/opt.hpp"
#include "flapsim/sim.hpp"
#include "oracles.hpp"

namespace flapsim {
namespace {

ModelParams no_gravity() {
  ModelParams p = ModelParams::nominal();
  p.gravity = 0.0;
  return p;
}

SimConfig quiet(double t_end) {
  SimConfig c;
  c.t_end = t_end;
  c.aero = false;
  return c;
}

using testing::gentle_state;
using testing::tumbling_state;

TEST(Rk4, RigidRotationMatchesClosedForm) {
  State s;
  s.qd[0] = 1.0;
  const DerivativeFn f = [](double, const State& x) {
    StateRate k;
    k.rotation = x.rotation * skew(x.omega());
    return k;
  };
  for (int i = 0; i < 10000; ++i) s = rk4_step(s, i * 1e-4, 1e-4, f).state;
  EXPECT_LT((s.rotation - rot_x(1.0)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Rk4, ZeroDynamicsIsFixedPoint) {
  State s;
  s.theta.setConstant(0.3);
  const StepResult r = rk4_step(s, 0.0, 1e-3, [](double, const State&) { return StateRate{}; });
  EXPECT_EQ(r.state.theta, s.theta);
  EXPECT_EQ(r.state.rotation, s.rotation);
  EXPECT_EQ(r.work, 0.0);
}

TEST(Rk4, NonFiniteDerivativeThrows) {
  const DerivativeFn f = [](double, const State&) {
    StateRate k;
    k.qd[0] = std::nan("");
    return k;
  };
  EXPECT_THROW(rk4_step(State{}, 0.0, 1e-3, f), ModelError);
}

TEST(Rk4, FourthOrderOnFreeFall) {
  const ModelParams p = ModelParams::nominal();
  auto run = [&](double dt) {
    SimConfig c = quiet(0.2);
    c.dt = dt;
    c.record_stride = static_cast<int>(std::lround(0.2 / dt));
    const Trace tr = run_simulation(c, p, Drive::passive(), tumbling_state());
    EXPECT_FALSE(tr.failed);
    const State& s = tr.rows.back().state;
    Eigen::Matrix<double, 31, 1> v;
    v << Eigen::Map<const Eigen::Matrix<double, 9, 1>>(s.rotation.data()), s.position, s.theta, s.qd.tail<11>();
    return v;
  };
  const auto ref = run(2.5e-5);
  const double e1 = (run(2e-4) - ref).norm();
  const double e2 = (run(1e-4) - ref).norm();
  EXPECT_GT(std::log2(e1 / e2), 3.5) << e1 << " " << e2;
}

TEST(Reorthonormalize, ExactRotationUnchanged) {
  const Mat3 r = rot_z(0.4) * rot_x(-1.1);
  EXPECT_LT((reorthonormalize(r) - r).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Reorthonormalize, MatchesSvdProjection) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  const Mat3 r = testing::expm_so3(Vec3(0.3, -1.2, 0.8));
  Mat3 noisy = r;
  for (int i = 0; i < 9; ++i) noisy(i % 3, i / 3) += 1e-6 * u(rng);
  const Mat3 out = reorthonormalize(noisy);
  const Eigen::JacobiSVD<Mat3> svd(noisy, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 oracle = svd.matrixU() * svd.matrixV().transpose();
  EXPECT_LT((out - oracle).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((out.transpose() * out - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT((out - r).cwiseAbs().maxCoeff(), 2e-6);
  EXPECT_NEAR(out.determinant(), 1.0, 1e-14);
}

TEST(Reorthonormalize, RemovesScale) {
  const Mat3 r = rot_x(0.7);
  EXPECT_LT((reorthonormalize(1.001 * r) - r).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Reorthonormalize, RejectsCorruptMatrices) {
  EXPECT_THROW(reorthonormalize(2.0 * Mat3::Identity()), ModelError);
  EXPECT_THROW(reorthonormalize(Mat3(Vec3(1, 1, -1).asDiagonal())), ModelError);
}

TEST(SystemCom, ZeroPose) {
  const Vec3 c = system_com(State{}, ModelParams::nominal());
  EXPECT_NEAR(c.z(), 0.1512, 5e-5);
  EXPECT_EQ(c.x(), 0.0);
  EXPECT_EQ(c.y(), 0.0);
}

TEST(SystemCom, TranslationEquivariant) {
  const ModelParams p = ModelParams::nominal();
  State s = tumbling_state();
  const Vec3 c0 = system_com(s, p);
  s.position += Vec3(0.5, -2.0, 3.0);
  EXPECT_LT((system_com(s, p) - c0 - Vec3(0.5, -2.0, 3.0)).norm(), 1e-14);
}

TEST(AngularMomentum, PureTranslationHasNone) {
  State s;
  s.qd.segment<3>(kLinearIndex) = Vec3(1, 2, -3);
  EXPECT_LT(angular_momentum(s, ModelParams::nominal()).norm(), 1e-18);
}

TEST(AngularMomentum, MatchesFiniteDifferenceOracle) {
  // Velocities and spins from differencing poses, not from the Jacobians.
  const ModelParams p = ModelParams::nominal();
  std::mt19937_64 rng(8);
  const State s = testing::random_state(rng);
  const double eps = 1e-6;
  const Kinematics kp = velocity_jacobians(testing::flow(s, s.qd, eps), p);
  const Kinematics km = velocity_jacobians(testing::flow(s, s.qd, -eps), p);
  const Kinematics k0 = velocity_jacobians(s, p);
  const Vec3 com = system_com(k0, p);
  Vec3 oracle = Vec3::Zero();
  for (int b = 0; b < kBodyCount; ++b) {
    const Vec3 v = (kp.bodies[b].position - km.bodies[b].position) / (2 * eps);
    const Eigen::AngleAxisd aa(km.bodies[b].rotation.transpose() * kp.bodies[b].rotation);
    const Vec3 w = aa.angle() * aa.axis() / (2 * eps);
    const Body body = static_cast<Body>(b);
    oracle += k0.bodies[b].rotation * p.inertia(body).cwiseProduct(w) +
              p.mass(body) * (k0.bodies[b].position - com).cross(v);
  }
  EXPECT_LT(testing::rel_err_vec(angular_momentum(k0, p), oracle), 1e-7);
}

TEST(Conservation, FreeFallMomentumAndEnergy) {
  const ModelParams p = ModelParams::nominal();
  const Trace tr = run_simulation(quiet(1.0), p, Drive::passive(), gentle_state());
  ASSERT_FALSE(tr.failed);
  const Vec3 pi0 = tr.rows.front().momentum;
  const double e0 = tr.rows.front().energy;
  double dpi = 0.0, de = 0.0;
  for (const TraceRow& r : tr.rows) {
    dpi = std::max(dpi, (r.momentum - pi0).norm());
    de = std::max(de, std::abs(r.energy - e0));
  }
  EXPECT_LT(dpi, 1e-6 * std::max(pi0.norm(), 1e-6));
  EXPECT_LT(de, 1e-6 * std::abs(e0));
  EXPECT_LT(tr.max_orthonormality_error, 1e-9);
}

TEST(Conservation, RigidizedSpinKeepsKineticEnergy) {
  const ModelParams p = no_gravity();
  State s;
  s.theta << -0.8, 0.2, -0.6, 0.1, -0.8, -0.2, -0.6, -0.1;
  s.qd.head<3>() = Vec3(3.0, -2.0, 5.0);
  const Trace tr = run_simulation(quiet(1.0), p, Drive::constrained([](double, const State&) { return Vec8::Zero(); }), s);
  ASSERT_FALSE(tr.failed);
  const double e0 = tr.rows.front().energy;
  for (const TraceRow& r : tr.rows) ASSERT_LT(std::abs(r.energy - e0), 1e-8 * e0);
}

TEST(Conservation, EnergyBalanceWithAeroAndConstraints) {
  const ModelParams p = ModelParams::nominal();
  GaitParams g;
  g.mean = Vec4(-75.3, -16.2, -50.7, -9.2) * units::kDegree;
  g.amplitude = Vec4(45, 17.3, 27.2, 29.1) * units::kDegree;
  g.phase = Vec3(-91, -112, -92.5) * units::kDegree;
  SimConfig c;
  c.t_end = 0.3;
  c.wind.velocity = Vec3(-2, 0, 0);
  const Trace tr = simulate_gait(g, p, c);
  ASSERT_FALSE(tr.failed);
  double scale = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < tr.rows.size(); ++i) {
    const double de = tr.rows[i].energy - tr.rows[0].energy;
    scale = std::max({scale, std::abs(de), std::abs(tr.work[i])});
    worst = std::max(worst, std::abs(de - tr.work[i]));
  }
  EXPECT_LT(worst, 1e-4 * scale);
}

TEST(Euler, RoundTrip) {
  const Mat3 r = rot_z(0.3) * Eigen::AngleAxisd(-0.5, Vec3::UnitY()).toRotationMatrix() * rot_x(1.2);
  const EulerAngles e = euler_zyx(r);
  EXPECT_NEAR(e.yaw, 0.3, 1e-14);
  EXPECT_NEAR(e.pitch, -0.5, 1e-14);
  EXPECT_NEAR(e.roll, 1.2, 1e-14);
}

TEST(Pid, ZeroErrorZeroTorque) {
  PidState pid;
  pid.gains = {0.0012, 0.006, 0.0012};
  const Vec8 z = Vec8::Zero();
  EXPECT_EQ(pid_torque(pid, z, z, z, z, 1e-4).norm(), 0.0);
}

TEST(Pid, IntegralRectangleRule) {
  PidState pid;
  pid.gains = {0.0, 0.006, 0.0};
  const Vec8 e = Vec8::Ones(), z = Vec8::Zero();
  Vec8 u;
  for (int i = 0; i < 10000; ++i) u = pid_torque(pid, e, z, z, z, 1e-4);
  EXPECT_NEAR(u[0], -0.006, 1e-12);
}

TEST(Pid, DerivativeTerm) {
  PidState pid;
  pid.gains = {0.0012, 0.006, 0.0012};
  const Vec8 z = Vec8::Zero();
  EXPECT_NEAR(pid_torque(pid, z, Vec8::Ones(), z, z, 1e-4)[3], -0.0012, 1e-15);
}

TEST(Pid, IntegralIsClamped) {
  PidState pid;
  pid.gains = {0.0, 0.006, 0.0};
  const Vec8 z = Vec8::Zero();
  Vec8 u;
  for (int i = 0; i < 100; ++i) u = pid_torque(pid, Vec8::Constant(100.0), z, z, z, 1.0);
  EXPECT_NEAR(u[0], -0.05, 1e-15);
}

TEST(Substeps, MobilityMatchesSchurComplement) {
  const State s = tumbling_state();
  const Mat14 m = mass_matrix(s, ModelParams::nominal());
  const Eigen::Matrix<double, 8, 8> schur =
      m.bottomRightCorner<8, 8>() -
      m.bottomLeftCorner<8, 6>() * m.topLeftCorner<6, 6>().inverse() * m.topRightCorner<6, 8>();
  const double oracle = 1.0 / Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>>(schur).eigenvalues().minCoeff();
  EXPECT_NEAR(max_joint_mobility(s, ModelParams::nominal()) / oracle, 1.0, 1e-9);
}

Trace stiff_pd_run(double damping_hint) {
  // PD tracking a flapping reference: near t = 0.015 s the elbow straightens and
  // the joint mobility outgrows one RK4 step at 1e-4 s.
  GaitParams g;
  g.mean = Vec4(-75.3, -16.2, -50.7, -9.2) * units::kDegree;
  g.amplitude = Vec4(45, 17.3, 27.2, 29.1) * units::kDegree;
  g.phase = Vec3(-91, -112, -92.5) * units::kDegree;
  const double omega = ModelParams::nominal().omega_flap;
  auto pid = std::make_shared<PidState>();
  pid->gains = {0.0012, 0.0, 0.0012};
  Drive d = Drive::torque([pid, g, omega](double t, const State& s) {
    const JointReference r = joint_reference(t, g, omega);
    return pid_torque(*pid, s.theta, s.theta_dot(), r.theta, r.theta_dot, 0.0);
  });
  d.joint_damping = damping_hint;
  const JointReference r0 = joint_reference(0.0, g, omega);
  return run_simulation(quiet(0.03), ModelParams::nominal(), d, initial_state(r0.theta, r0.theta_dot));
}

TEST(Substeps, StiffPdNeedsSubsteps) {
  const Trace held = stiff_pd_run(0.0012);
  EXPECT_FALSE(held.failed) << held.failure;
  EXPECT_EQ(held.rows.size(), 31u);
  EXPECT_TRUE(stiff_pd_run(0.0).failed);
}

TEST(Substeps, SingleSubstepReproducesPlainStep) {
  // A tiny hint never splits, so the run matches the unhinted one bit for bit.
  const ModelParams p = ModelParams::nominal();
  const Drive plain = Drive::torque([](double, const State& s) -> Vec8 { return -1e-6 * s.theta_dot(); });
  Drive hinted = plain;
  hinted.joint_damping = 1e-12;
  const Trace a = run_simulation(quiet(0.02), p, plain, gentle_state());
  const Trace b = run_simulation(quiet(0.02), p, hinted, gentle_state());
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) ASSERT_EQ(a.rows[i].columns(), b.rows[i].columns());
}

TEST(RunSimulation, RestStaysAtRest) {
  const Trace tr = run_simulation(quiet(0.05), no_gravity(), Drive::passive(), State{});
  ASSERT_FALSE(tr.failed);
  for (const TraceRow& r : tr.rows) {
    ASSERT_EQ(r.state.qd.norm(), 0.0);
    ASSERT_EQ(r.state.position.norm(), 0.0);
  }
}

TEST(RunSimulation, SampleTimesAndStride) {
  const Trace tr = run_simulation(quiet(0.05), no_gravity(), Drive::passive(), State{});
  ASSERT_EQ(tr.rows.size(), 51u);
  for (std::size_t i = 0; i < tr.rows.size(); ++i) EXPECT_DOUBLE_EQ(tr.rows[i].t, i * 1e-3);
}

TEST(RunSimulation, BallisticFreeFall) {
  const Trace tr = run_simulation(quiet(0.1), ModelParams::nominal(), Drive::passive(), State{});
  EXPECT_NEAR(tr.rows.back().state.position.z(), -0.5 * 9.81 * 0.01, 1e-6);
}

TEST(RunSimulation, BlowUpTruncatesTrace) {
  const Drive d = Drive::constrained([](double t, const State&) {
    return t > 0.0105 ? Vec8::Constant(std::nan("")) : Vec8::Zero();
  });
  const Trace tr = run_simulation(quiet(1.0), ModelParams::nominal(), d, State{});
  EXPECT_TRUE(tr.failed);
  EXPECT_FALSE(tr.failure.empty());
  EXPECT_EQ(tr.rows.size(), 11u);
}

TEST(RunSimulation, Deterministic) {
  const ModelParams p = ModelParams::nominal();
  SimConfig c;
  c.t_end = 0.05;
  c.wind.velocity = Vec3(-2, 0, 0);
  const Trace a = run_simulation(c, p, Drive::passive(), tumbling_state());
  const Trace b = run_simulation(c, p, Drive::passive(), tumbling_state());
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) ASSERT_EQ(a.rows[i].columns(), b.rows[i].columns());
}

TEST(RunSimulation, InvalidConfigRejected) {
  SimConfig c;
  c.dt = 0.0;
  EXPECT_THROW(run_simulation(c, ModelParams::nominal(), Drive::passive(), State{}), ModelError);
}

TEST(Trace, HeaderHasFixedWidth) {
  EXPECT_EQ(trace_header().front(), "t");
  EXPECT_EQ(trace_header().back(), "yaw");
  EXPECT_EQ(trace_header()[35], "Pi_x");
}

}  // namespace
}  // namespace flapsim
