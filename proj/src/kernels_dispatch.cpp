#include "spinbath/kernels.hpp"

#include "spinbath/errors.hpp"

namespace spinbath::kernels {

namespace {

Backend detect() {
#ifdef SPINBATH_HAVE_AVX2_BUILD
  if (cpu_has_avx2()) return Backend::avx2;
#endif
  return Backend::scalar;
}

Backend g_backend = detect();

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops& active() {
  switch (g_backend) {
#ifdef SPINBATH_HAVE_AVX2_BUILD
    case Backend::avx2:
      return avx2_ops;
#endif
    default:
      return scalar_ops;
  }
}

Backend active_backend() { return g_backend; }

std::string backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

void force_backend(Backend b) {
  if (b == Backend::avx2) {
#ifdef SPINBATH_HAVE_AVX2_BUILD
    if (!cpu_has_avx2())
      throw ConfigError("kernels: avx2 backend requested but this CPU lacks AVX2/FMA");
#else
    throw ConfigError("kernels: avx2 backend not compiled into this binary");
#endif
  }
  g_backend = b;
}

void reset_backend() { g_backend = detect(); }

}  // namespace spinbath::kernels
