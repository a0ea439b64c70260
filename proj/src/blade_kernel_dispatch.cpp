#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>

#include "flapsim/blade_kernel.hpp"

namespace flapsim::kernel {

namespace {

bool cpu_supports_simd() {
#if defined(FLAPSIM_HAVE_SIMD_KERNEL) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

// -1: no override, otherwise static_cast<int>(Variant).
std::atomic<int> g_forced{-1};
std::once_flag g_env_once;

void read_environment() {
  const char* env = std::getenv("FLAPSIM_KERNEL");
  if (env == nullptr) return;
  const std::string value(env);
  if (value == "scalar") g_forced.store(static_cast<int>(Variant::Scalar));
  if (value == "simd") g_forced.store(static_cast<int>(Variant::Simd));
}

}  // namespace

bool simd_available() {
  static const bool available = cpu_supports_simd();
  return available;
}

Variant active_variant() {
  std::call_once(g_env_once, read_environment);
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced == static_cast<int>(Variant::Scalar)) return Variant::Scalar;
  return simd_available() ? Variant::Simd : Variant::Scalar;
}

void force_variant(std::optional<Variant> v) {
  std::call_once(g_env_once, read_environment);
  g_forced.store(v ? static_cast<int>(*v) : -1);
}

std::string_view variant_name(Variant v) { return v == Variant::Simd ? "simd-avx2" : "scalar"; }

BladeSums blade_sums(const BladeFlow& flow, const double* r, const double* w, std::size_t n) {
#ifdef FLAPSIM_HAVE_SIMD_KERNEL
  if (active_variant() == Variant::Simd) return blade_sums_simd(flow, r, w, n);
#endif
  return blade_sums_scalar(flow, r, w, n);
}

}  // namespace flapsim::kernel
