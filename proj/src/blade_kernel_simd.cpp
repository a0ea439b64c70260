// Compiled with AVX2/FMA flags; must not include Eigen or other shared inline code.
#include <experimental/simd>

#include "flapsim/blade_kernel.hpp"

namespace flapsim::kernel {

namespace stdx = std::experimental;

namespace {

using V = stdx::native_simd<double>;
constexpr std::size_t kLanes = V::size();

struct Accumulators {
  V lift = 0.0, drag = 0.0, lift_moment = 0.0, drag_moment = 0.0;
};

inline void accumulate(const BladeFlow& flow, double q, const V& r, const V& w, Accumulators& acc) {
  using namespace fit;
  const V vx = flow.v0[0] + r * flow.v1[0];
  const V vy = flow.v0[1] + r * flow.v1[1];
  const V vz = flow.v0[2] + r * flow.v1[2];
  const V speed2 = vx * vx + vy * vy + vz * vz;
  const V vn = flow.normal_sign * vy;
  const V alpha = stdx::atan2(vn, vx) * kRadToDeg;
  const V cl = kLiftOffset + kLiftAmplitude * stdx::sin((kLiftSlope * alpha - kLiftPhaseDeg) * kDegToRad);
  const V cd = kDragOffset - kDragAmplitude * stdx::cos((kDragSlope * alpha - kDragPhaseDeg) * kDegToRad);
  V sgn = 0.0;
  stdx::where(vx > 0.0, sgn) = 1.0;
  stdx::where(vx < 0.0, sgn) = -1.0;
  V fl = q * speed2 * cl;
  V fd = q * speed2 * cd * sgn;
  const auto stalled = !(speed2 >= kStallSpeed * kStallSpeed);
  stdx::where(stalled, fl) = 0.0;
  stdx::where(stalled, fd) = 0.0;
  acc.lift += w * fl;
  acc.drag += w * fd;
  acc.lift_moment += w * r * fl;
  acc.drag_moment += w * r * fd;
}

}  // namespace

BladeSums blade_sums_simd(const BladeFlow& flow, const double* r, const double* w, std::size_t n) {
  const double q = 0.5 * flow.rho * flow.chord * flow.span;
  Accumulators acc;
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    accumulate(flow, q, V(r + k, stdx::element_aligned), V(w + k, stdx::element_aligned), acc);
  }
  if (k < n) {
    // Zero-weight padding lanes contribute nothing.
    alignas(64) double rt[kLanes] = {};
    alignas(64) double wt[kLanes] = {};
    for (std::size_t j = 0; k + j < n; ++j) {
      rt[j] = r[k + j];
      wt[j] = w[k + j];
    }
    accumulate(flow, q, V(rt, stdx::element_aligned), V(wt, stdx::element_aligned), acc);
  }
  return {stdx::reduce(acc.lift), stdx::reduce(acc.drag), stdx::reduce(acc.lift_moment),
          stdx::reduce(acc.drag_moment)};
}

}  // namespace flapsim::kernel
