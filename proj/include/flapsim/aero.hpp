#pragma once

#include <array>
#include <vector>

#include "flapsim/model.hpp"

namespace flapsim {

struct WindField {
  Vec3 velocity = Vec3::Zero();  // ambient air velocity, inertial [m/s]
};

/// Aerodynamic force and torque on one wing, wing frame, torque about the elbow.
struct AeroWrench {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  Side side = Side::Left;
};

/// Chordwise, normal and spanwise unit vectors in the wing frame.
/// Left wing: {e1, -e2, e3}; the right wing is its mirror image {e1, e2, e3}.
struct WingFrameBasis {
  Vec3 chordwise;
  Vec3 normal;
  Vec3 spanwise;

  static WingFrameBasis for_side(Side side);
};

// Quadrature settings for the spanwise integral.
inline constexpr int kDefaultSpanNodes = 16;  // Gauss-Legendre nodes per smooth piece

double lift_coefficient(double alpha_deg);
double drag_coefficient(double alpha_deg);

/// Angle of attack [deg]; 0 for (numerically) still air.
double angle_of_attack(const Vec3& v_wing, const WingFrameBasis& basis);

/// Chordwise position of the force line, as a fraction of the chord.
inline constexpr double kForceLineChord = 0.25;

/// Wing point at spanwise fraction r on the force line, wing frame, from the elbow.
Vec3 force_line_point(const ModelParams& params, Side side, double r_hat);

/// Airspeed of the force-line point at r_hat relative to the ambient air, wing frame.
Vec3 airfoil_velocity(const Kinematics& kin, const WindField& wind, const ModelParams& params, Side side,
                      double r_hat);

/// Relative airflow over one wing in the wing frame: v(r) = root + r * slope.
struct SpanFlow {
  Vec3 root;
  Vec3 slope;
};

SpanFlow span_flow(const Kinematics& kin, const WindField& wind, const ModelParams& params, Side side);

struct SpanStations {
  std::vector<double> r;
  std::vector<double> weight;
};

/// Quadrature nodes on [0, 1]. The integrand is smooth except where the
/// chordwise or normal flow component changes sign (sgn jump, atan2 branch
/// cut); both are affine in r, so [0, 1] is split at their roots and each
/// piece gets an n-point Gauss-Legendre rule.
SpanStations span_stations(const SpanFlow& flow, const WingFrameBasis& basis, int nodes_per_piece = kDefaultSpanNodes);

/// Integrated blade-element wrench of one wing.
AeroWrench wing_wrench(const Kinematics& kin, const WindField& wind, const ModelParams& params, Side side,
                       int nodes_per_piece = kDefaultSpanNodes);

/// B_a u_a: generalized forces on the 14 quasi-velocities from both wing wrenches.
Vec14 generalized_aero_forces(const Kinematics& kin, const std::array<AeroWrench, 2>& wrenches);

/// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussLegendre& gauss_legendre(int n);

}  // namespace flapsim
