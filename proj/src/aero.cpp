#include "flapsim/aero.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "flapsim/blade_kernel.hpp"

namespace flapsim {

WingFrameBasis WingFrameBasis::for_side(Side side) {
  const double sn = side == Side::Left ? -1.0 : 1.0;
  return {Vec3::UnitX(), sn * Vec3::UnitY(), Vec3::UnitZ()};
}

double lift_coefficient(double alpha_deg) {
  using namespace kernel::fit;
  return kLiftOffset + kLiftAmplitude * std::sin((kLiftSlope * alpha_deg - kLiftPhaseDeg) * kDegToRad);
}

double drag_coefficient(double alpha_deg) {
  using namespace kernel::fit;
  return kDragOffset - kDragAmplitude * std::cos((kDragSlope * alpha_deg - kDragPhaseDeg) * kDegToRad);
}

double angle_of_attack(const Vec3& v_wing, const WingFrameBasis& basis) {
  if (v_wing.norm() < kernel::kStallSpeed) return 0.0;
  return std::atan2(basis.normal.dot(v_wing), basis.chordwise.dot(v_wing)) * kernel::fit::kRadToDeg;
}

Vec3 force_line_point(const ModelParams& params, Side side, double r_hat) {
  const WingFrameBasis basis = WingFrameBasis::for_side(side);
  return r_hat * params.span * basis.spanwise + kForceLineChord * params.chord * basis.chordwise;
}

Vec3 airfoil_velocity(const Kinematics& kin, const WindField& wind, const ModelParams& params, Side side,
                      double r_hat) {
  const BodyFrame& wing = kin.body(wing_of(side));
  const WingChain& chain = kin.wing(side);
  return wing.rotation.transpose() * (chain.elbow_velocity - wind.velocity) +
         wing.omega.cross(force_line_point(params, side, r_hat));
}

SpanFlow span_flow(const Kinematics& kin, const WindField& wind, const ModelParams& params, Side side) {
  const BodyFrame& wing = kin.body(wing_of(side));
  const WingChain& chain = kin.wing(side);
  const WingFrameBasis basis = WingFrameBasis::for_side(side);
  SpanFlow flow;
  flow.root = wing.rotation.transpose() * (chain.elbow_velocity - wind.velocity) +
              wing.omega.cross(kForceLineChord * params.chord * basis.chordwise);
  flow.slope = wing.omega.cross(params.span * basis.spanwise);
  return flow;
}

const GaussLegendre& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, GaussLegendre> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guess.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

SpanStations span_stations(const SpanFlow& flow, const WingFrameBasis& basis, int nodes_per_piece) {
  std::array<double, 4> breaks{0.0, 1.0, 0.0, 0.0};
  int count = 2;
  auto add_root = [&](double a0, double a1) {
    if (a1 == 0.0) return;
    const double root = -a0 / a1;
    if (root > 0.0 && root < 1.0) breaks[count++] = root;
  };
  add_root(basis.chordwise.dot(flow.root), basis.chordwise.dot(flow.slope));
  add_root(basis.normal.dot(flow.root), basis.normal.dot(flow.slope));
  std::sort(breaks.begin(), breaks.begin() + count);

  const GaussLegendre& rule = gauss_legendre(nodes_per_piece);
  SpanStations out;
  out.r.reserve(3 * nodes_per_piece);
  out.weight.reserve(3 * nodes_per_piece);
  for (int piece = 0; piece + 1 < count; ++piece) {
    const double a = breaks[piece], b = breaks[piece + 1];
    const double half = 0.5 * (b - a);
    if (!(half > 1e-15)) continue;
    for (int k = 0; k < nodes_per_piece; ++k) {
      out.r.push_back(a + half * (rule.nodes[k] + 1.0));
      out.weight.push_back(half * rule.weights[k]);
    }
  }
  return out;
}

AeroWrench wing_wrench(const Kinematics& kin, const WindField& wind, const ModelParams& params, Side side,
                       int nodes_per_piece) {
  const WingFrameBasis basis = WingFrameBasis::for_side(side);
  const SpanFlow flow = span_flow(kin, wind, params, side);
  const SpanStations stations = span_stations(flow, basis, nodes_per_piece);

  const kernel::BladeFlow blade{{flow.root.x(), flow.root.y(), flow.root.z()},
                                {flow.slope.x(), flow.slope.y(), flow.slope.z()},
                                basis.normal.y(),
                                params.chord,
                                params.span,
                                params.air_density};
  const kernel::BladeSums sums = kernel::blade_sums(blade, stations.r.data(), stations.weight.data(), stations.r.size());

  // l(r) = r s e_r + 0.25 c e_c, force density f_l e_n - f_d e_c.
  AeroWrench out;
  out.side = side;
  out.force = sums.lift * basis.normal - sums.drag * basis.chordwise;
  out.torque = params.span * (sums.lift_moment * basis.spanwise.cross(basis.normal) -
                              sums.drag_moment * basis.spanwise.cross(basis.chordwise)) +
               kForceLineChord * params.chord * sums.lift * basis.chordwise.cross(basis.normal);
  return out;
}

Vec14 generalized_aero_forces(const Kinematics& kin, const std::array<AeroWrench, 2>& wrenches) {
  std::array<Vec14, 2> per_wing;
  for (Side side : {Side::Left, Side::Right}) {
    const AeroWrench& wr = wrenches[side_index(side)];
    if (wr.side != side) throw ModelError("generalized_aero_forces: wrench order must be {left, right}");
    const BodyFrame& wing = kin.body(wing_of(side));
    const Vec3 force_world = wing.rotation * wr.force;
    per_wing[side_index(side)] = kin.wing(side).elbow_jv.transpose() * force_world + wing.jw.transpose() * wr.torque;
  }
  return per_wing[0] + per_wing[1];
}

}  // namespace flapsim
