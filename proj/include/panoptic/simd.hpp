#pragma once
// Runtime-dispatched kernels for the hot reduction loops. Scalar versions are
// the reference; vector backends must agree within accumulation-order noise
// (see test_simd). Backend can be forced with PANOPTIC_SIMD=scalar|avx2|neon
// or set_backend(), e.g. for A/B tests.

#include <cstddef>

namespace panoptic::simd {

struct Kernels {
  const char* name;
  double (*reduce_add)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // Point-charge far-field accumulation at a single observation point:
  //   phi += sum q_i / r_i,   E += sum q_i * (p - c_i) / r_i^3
  // (Gaussian-style kernel; the 1/(4 pi eps0) lives in the caller.)
  void (*point_charge_sum)(const double* cx, const double* cy, const double* cz,
                           const double* q, std::size_t n, double px, double py,
                           double pz, double* phi, double* ex, double* ey,
                           double* ez);
};

const Kernels& scalar_kernels();
#ifdef __x86_64__
const Kernels& avx2_kernels();
#endif
#ifdef __aarch64__
const Kernels& neon_kernels();
#endif

// Best backend for this CPU (after env override). Stable for process lifetime
// unless set_backend is called.
const Kernels& active();
bool set_backend(const char* name);  // returns false if unavailable

}  // namespace panoptic::simd
