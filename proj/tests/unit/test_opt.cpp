#include <gtest/gtest.h>

#include "flapsim/opt.hpp"

namespace flapsim {
namespace {

Bounds cube(int n, double lo, double hi) {
  return {VecX::Constant(n, lo), VecX::Constant(n, hi)};
}

double sphere(const VecX& x) { return x.squaredNorm(); }

GaitParams reference_gait() {
  GaitParams g;
  g.mean = Vec4(-75.3, -16.2, -50.7, -9.2) * units::kDegree;
  g.amplitude = Vec4(45, 17.3, 27.2, 29.1) * units::kDegree;
  g.phase = Vec3(-91, -112, -92.5) * units::kDegree;
  return g;
}

TEST(Optimizer, SphereReachesOptimum) {
  OptimizerSettings s;
  s.budget = 2000;
  s.seed = 7;
  const OptimizeResult r = optimize(sphere, cube(11, -1, 1), VecX::Constant(11, 0.7), s);
  EXPECT_TRUE(r.success);
  EXPECT_LT(r.best_cost, 1e-3);
  EXPECT_LT(r.best_params.norm(), 1e-3);
  EXPECT_LE(r.evaluations, 2000);
}

TEST(Optimizer, HistoryIsMonotoneAndSeeded) {
  OptimizerSettings s;
  s.budget = 300;
  s.seed = 11;
  const Bounds b = cube(5, -2, 3);
  const OptimizeResult a = optimize(sphere, b, s), c = optimize(sphere, b, s);
  EXPECT_EQ(a.history, c.history);
  ASSERT_EQ(a.history.size(), 300u);
  for (std::size_t i = 1; i < a.history.size(); ++i) EXPECT_LE(a.history[i], a.history[i - 1]);
  s.seed = 12;
  EXPECT_NE(optimize(sphere, b, s).history, a.history);
}

TEST(Optimizer, WorkerCountDoesNotChangeResult) {
  OptimizerSettings s;
  s.budget = 200;
  s.seed = 3;
  const Bounds b = cube(4, -1, 1);
  const OptimizeResult one = optimize(sphere, b, s);
  s.workers = 3;
  const OptimizeResult three = optimize(sphere, b, s);
  EXPECT_EQ(one.history, three.history);
  EXPECT_EQ(one.best_params, three.best_params);
}

TEST(Optimizer, CandidatesStayInBox) {
  OptimizerSettings s;
  s.budget = 400;
  const Bounds b = cube(3, 0.5, 1.0);
  bool inside = true;
  const OptimizeResult r = optimize(
      [&](const VecX& x) {
        inside = inside && b.contains(x);
        return sphere(x);
      },
      b, s);
  EXPECT_TRUE(inside);
  EXPECT_NEAR(r.best_cost, 0.75, 1e-6);
}

TEST(Optimizer, BudgetOneReturnsStart) {
  OptimizerSettings s;
  s.budget = 1;
  const VecX x0 = VecX::Constant(3, 0.25);
  const OptimizeResult r = optimize(sphere, cube(3, -1, 1), x0, s);
  EXPECT_EQ(r.best_params, x0);
  EXPECT_EQ(r.best_cost, sphere(x0));
  EXPECT_EQ(r.evaluations, 1);
}

TEST(Optimizer, AllNonFiniteIsFailure) {
  OptimizerSettings s;
  s.budget = 20;
  const OptimizeResult r = optimize([](const VecX&) { return std::nan(""); }, cube(2, -1, 1), s);
  EXPECT_FALSE(r.success);
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(Optimizer, RejectsBadInput) {
  OptimizerSettings s;
  EXPECT_THROW(optimize(sphere, cube(2, -1, 1), VecX::Constant(2, 5.0), s), ModelError);
  s.budget = 0;
  EXPECT_THROW(optimize(sphere, cube(2, -1, 1), s), ModelError);
  EXPECT_THROW(optimize(sphere, Bounds{VecX::Constant(2, 1.0), VecX::Constant(2, 0.0)}, OptimizerSettings{}),
               ModelError);
}

TEST(GaitCost, ZeroWeightsGiveZero) {
  GaitCostConfig c;
  c.bounds = default_gait_bounds();
  c.sim.t_end = 0.05;
  c.q_diag.setZero();
  EXPECT_EQ(gait_cost(reference_gait().to_vector(), c), 0.0);
}

TEST(GaitCost, ReplayFromTrace) {
  GaitCostConfig c;
  c.bounds = default_gait_bounds();
  c.sim.t_end = 0.2;
  c.sim.wind.velocity = Vec3(-2, 0, 0);
  const double cost = gait_cost(reference_gait().to_vector(), c);
  const Trace tr = simulate_gait(reference_gait(), c.params, c.sim);
  double replay = 0.0;
  for (const TraceRow& r : tr.rows) {
    const auto col = r.columns();
    // Pi at 35..37, pdot_z at 26.
    replay += 5.0 * (col[35] * col[35] + col[36] * col[36] + col[37] * col[37]) + 1e-5 * col[26] * col[26];
  }
  EXPECT_NEAR(cost, replay, 1e-10 * replay);
  EXPECT_GT(cost, 0.0);
}

TEST(GaitCost, OutOfBoundsRejected) {
  GaitCostConfig c;
  c.bounds = default_gait_bounds();
  GaitVector k = reference_gait().to_vector();
  k[4] = -0.1;
  EXPECT_THROW(gait_cost(k, c), ModelError);
}

TEST(GaitCost, FailedTraceIsInfinite) {
  Trace t;
  t.failed = true;
  EXPECT_TRUE(std::isinf(gait_cost_from_trace(t, Vec4::Ones())));
}

TEST(PerchCost, NullManeuverIsReferenceEnergy) {
  // Symmetric gait, no offset: no roll, so the cost is the sum of phidot_r^2.
  PerchCostConfig c;
  c.bounds = default_perch_bounds();
  c.gait = reference_gait();
  c.sim.wind.velocity = Vec3(-2, 0, 0);
  ManeuverVector k2;
  k2 << 1.0, 0, 0, 0, 0;
  const double cost = perch_cost(k2, c);
  double ref = 0.0;
  for (int i = 1000; i <= 1400; ++i) {
    const double rate = roll_reference(i * 1e-3, 1.0, 0.2).rate;
    ref += rate * rate;
  }
  EXPECT_NEAR(cost, ref, 1e-6 * ref);
}

TEST(PerchCost, IgnoresRowsOutsideWindow) {
  Trace t;
  TraceRow row;
  row.t = 0.5;
  row.state.qd[0] = 1e6;
  t.rows.push_back(row);
  row.t = 2.0;
  t.rows.push_back(row);
  EXPECT_EQ(perch_cost_from_trace(t, 1.0, 0.2), 0.0);
}

TEST(Maneuver, StartPhaseOfWingbeat) {
  ManeuverParams m;
  m.t0 = 1.0724;
  const ManeuverReport r = maneuver_report(Trace{}, m, 0.1);
  EXPECT_NEAR(r.start_phase, 0.724, 1e-9);
}

TEST(Maneuver, IntegratedRollOfConstantRate) {
  Trace t;
  for (int i = 0; i <= 100; ++i) {
    TraceRow row;
    row.t = i * 0.01;
    row.state.qd[0] = 2.0;
    t.rows.push_back(row);
  }
  const std::vector<double> roll = integrated_roll(t, 0.255);
  EXPECT_NEAR(roll.back(), 2.0 * (1.0 - 0.255), 1e-12);
  EXPECT_EQ(roll[25], 0.0);
}

}  // namespace
}  // namespace flapsim
