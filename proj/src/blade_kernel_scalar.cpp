#include <cmath>

#include "flapsim/blade_kernel.hpp"

namespace flapsim::kernel {

BladeSums blade_sums_scalar(const BladeFlow& flow, const double* r, const double* w, std::size_t n) {
  using namespace fit;
  const double q = 0.5 * flow.rho * flow.chord * flow.span;
  BladeSums out;
  for (std::size_t k = 0; k < n; ++k) {
    const double vx = flow.v0[0] + r[k] * flow.v1[0];
    const double vy = flow.v0[1] + r[k] * flow.v1[1];
    const double vz = flow.v0[2] + r[k] * flow.v1[2];
    const double speed2 = vx * vx + vy * vy + vz * vz;
    if (!(speed2 >= kStallSpeed * kStallSpeed)) continue;
    const double vn = flow.normal_sign * vy;
    const double alpha = std::atan2(vn, vx) * kRadToDeg;
    const double cl = kLiftOffset + kLiftAmplitude * std::sin((kLiftSlope * alpha - kLiftPhaseDeg) * kDegToRad);
    const double cd = kDragOffset - kDragAmplitude * std::cos((kDragSlope * alpha - kDragPhaseDeg) * kDegToRad);
    const double sgn = vx > 0.0 ? 1.0 : (vx < 0.0 ? -1.0 : 0.0);
    const double fl = q * speed2 * cl;
    const double fd = q * speed2 * cd * sgn;
    out.lift += w[k] * fl;
    out.drag += w[k] * fd;
    out.lift_moment += w[k] * r[k] * fl;
    out.drag_moment += w[k] * r[k] * fd;
  }
  return out;
}

}  // namespace flapsim::kernel
