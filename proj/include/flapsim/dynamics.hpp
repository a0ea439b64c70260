#pragma once

#include "flapsim/model.hpp"

namespace flapsim {

using InputMap = Eigen::Matrix<double, 14, 8>;
using ConstraintJacobian = Eigen::Matrix<double, 8, 14>;

/// Terms of M(q) qdd + h(q, qd) = B_a u_a + B_m u_m.
struct EomTerms {
  Mat14 mass;
  Vec14 bias;

  static InputMap motor_map();  // B_m = [0_{8x6}, I_8]^T
};

/// Joint-acceleration constraint J_c qdd = theta_ddot.
struct ConstraintSpec {
  Vec8 theta_ddot = Vec8::Zero();

  static ConstraintJacobian selector();  // J_c = [0_{8x6}, I_8]
};

struct ConstrainedSolution {
  Vec8 lambda;  // constraint forces on the joint rows
  Vec14 qdd;
};

Mat14 mass_matrix(const Kinematics& kin, const ModelParams& params);
Mat14 mass_matrix(const State& state, const ModelParams& params);

/// Velocity-product (Coriolis, centrifugal, gyroscopic) plus gravity terms.
///
/// Projected Newton-Euler: every body's d'Alembert force and torque is mapped
/// back through its velocity Jacobians,
///   h = sum_F J_v^T m (Jdot_v qd - g) + J_w^T (I Jdot_w qd + w x I w).
/// Because qd contains the body-frame rate omega_B^B, this also carries the
/// SO(3) terms omega x dL/domega and the attitude derivative of the potential.
Vec14 bias_vector(const Kinematics& kin, const State& state, const ModelParams& params);
Vec14 bias_vector(const State& state, const ModelParams& params);

EomTerms eom_terms(const Kinematics& kin, const State& state, const ModelParams& params);

double kinetic_energy(const Kinematics& kin, const ModelParams& params);
double potential_energy(const Kinematics& kin, const ModelParams& params);

/// qdd = M^-1 (u_total - h) via Cholesky. Throws ModelError if M is not SPD.
Vec14 forward_dynamics(const EomTerms& eom, const Vec14& u_total);
Vec14 forward_dynamics(const State& state, const ModelParams& params, const Vec14& u_total);

/// Accelerations and multipliers with M qdd + h = u_total + J_c^T lambda and
/// J_c qdd = theta_ddot. Since J_c selects the joint rows, the base block is
/// solved directly: M_bb a_b = (u - h)_b - M_bj theta_ddot, then lambda is
/// read off the joint rows. Left and right joint blocks are accumulated
/// separately so mirror-symmetric inputs give exactly zero lateral motion.
ConstrainedSolution lagrange_multiplier(const EomTerms& eom, const Vec14& u_total, const ConstraintSpec& constraint);
ConstrainedSolution lagrange_multiplier(const State& state, const ModelParams& params, const Vec14& u_total,
                                        const ConstraintSpec& constraint);

}  // namespace flapsim
