#include <cstdlib>
#include <cstring>

#include "panoptic/simd.hpp"

namespace panoptic::simd {

namespace {

const Kernels* pick_default() {
  if (const char* env = std::getenv("PANOPTIC_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_kernels();
#if defined(__x86_64__) && defined(PANOPTIC_WITH_AVX2)
    if (std::strcmp(env, "avx2") == 0 && __builtin_cpu_supports("avx2") &&
        __builtin_cpu_supports("fma")) {
      return &avx2_kernels();
    }
#endif
#if defined(__aarch64__) && defined(PANOPTIC_WITH_NEON)
    if (std::strcmp(env, "neon") == 0) return &neon_kernels();
#endif
    return &scalar_kernels();  // unknown/unavailable name: safe fallback
  }
#if defined(__x86_64__) && defined(PANOPTIC_WITH_AVX2)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return &avx2_kernels();
  }
#endif
#if defined(__aarch64__) && defined(PANOPTIC_WITH_NEON)
  return &neon_kernels();
#endif
  return &scalar_kernels();
}

const Kernels*& slot() {
  static const Kernels* k = pick_default();
  return k;
}

}  // namespace

const Kernels& active() { return *slot(); }

bool set_backend(const char* name) {
  if (std::strcmp(name, "scalar") == 0) {
    slot() = &scalar_kernels();
    return true;
  }
#if defined(__x86_64__) && defined(PANOPTIC_WITH_AVX2)
  if (std::strcmp(name, "avx2") == 0 && __builtin_cpu_supports("avx2") &&
      __builtin_cpu_supports("fma")) {
    slot() = &avx2_kernels();
    return true;
  }
#endif
#if defined(__aarch64__) && defined(PANOPTIC_WITH_NEON)
  if (std::strcmp(name, "neon") == 0) {
    slot() = &neon_kernels();
    return true;
  }
#endif
  return false;
}

}  // namespace panoptic::simd
