#pragma once

// Spanwise blade-element sums for one wing strip set.
//
// The relative airflow over a rigid wing plate is affine in the spanwise
// coordinate r: v(r) = v0 + r * v1 (wing frame). For each station the kernel
// evaluates the quasi-steady lift and drag magnitudes
//   f_l = rho c s |v|^2 C_L(alpha) / 2
//   f_d = rho c s |v|^2 C_D(alpha) sgn(v_c) / 2
// with alpha = atan2(v_n, v_c) in degrees, and accumulates the four weighted
// moments the wrench needs. This header is deliberately free of Eigen so the
// SIMD translation unit can be compiled with wider ISA flags without sharing
// inline code with the rest of the library.

#include <cstddef>
#include <optional>
#include <string_view>

namespace flapsim::kernel {

struct BladeFlow {
  double v0[3];        // relative velocity at r = 0, wing frame [m/s]
  double v1[3];        // d v / d r, wing frame [m/s]
  double normal_sign;  // e_n = normal_sign * e_2 in the wing frame
  double chord;        // m
  double span;         // m
  double rho;          // kg/m^3
};

struct BladeSums {
  double lift = 0.0;         // sum w f_l
  double drag = 0.0;         // sum w f_d
  double lift_moment = 0.0;  // sum w r f_l
  double drag_moment = 0.0;  // sum w r f_d
};

// Below this relative airspeed a station contributes nothing.
inline constexpr double kStallSpeed = 1e-9;

// C_L(a) = 0.225 + 1.58 sin(2.13 a - 7.2 deg), C_D(a) = 1.92 - 1.55 cos(2.04 a - 9.82 deg), a in degrees.
namespace fit {
inline constexpr double kLiftOffset = 0.225;
inline constexpr double kLiftAmplitude = 1.58;
inline constexpr double kLiftSlope = 2.13;
inline constexpr double kLiftPhaseDeg = 7.2;
inline constexpr double kDragOffset = 1.92;
inline constexpr double kDragAmplitude = 1.55;
inline constexpr double kDragSlope = 2.04;
inline constexpr double kDragPhaseDeg = 9.82;
inline constexpr double kDegToRad = 0.017453292519943295;
inline constexpr double kRadToDeg = 57.295779513082323;
}  // namespace fit

enum class Variant { Scalar, Simd };

BladeSums blade_sums_scalar(const BladeFlow& flow, const double* r, const double* w, std::size_t n);

/// Only callable when simd_available() is true.
BladeSums blade_sums_simd(const BladeFlow& flow, const double* r, const double* w, std::size_t n);

/// True if the SIMD variant was compiled in and the running CPU supports it.
bool simd_available();

/// Routes to the active variant.
BladeSums blade_sums(const BladeFlow& flow, const double* r, const double* w, std::size_t n);

/// Variant used by blade_sums(): the forced one if set, otherwise SIMD when
/// available. The FLAPSIM_KERNEL environment variable ("scalar" or "simd")
/// seeds the override at first use.
Variant active_variant();
void force_variant(std::optional<Variant> v);
std::string_view variant_name(Variant v);

}  // namespace flapsim::kernel
