// NEON backend (aarch64). Two lanes of f64; same exactness notes as AVX2.
#include <arm_neon.h>

#include <cmath>

#include "panoptic/simd.hpp"

namespace panoptic::simd {

namespace {

double reduce_add_neon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void point_charge_sum_neon(const double* cx, const double* cy, const double* cz,
                           const double* q, std::size_t n, double px, double py,
                           double pz, double* phi, double* ex, double* ey,
                           double* ez) {
  float64x2_t vpx = vdupq_n_f64(px), vpy = vdupq_n_f64(py), vpz = vdupq_n_f64(pz);
  float64x2_t ap = vdupq_n_f64(0.0), ax = ap, ay = ap, az = ap;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t dx = vsubq_f64(vpx, vld1q_f64(cx + i));
    float64x2_t dy = vsubq_f64(vpy, vld1q_f64(cy + i));
    float64x2_t dz = vsubq_f64(vpz, vld1q_f64(cz + i));
    float64x2_t r2 = vfmaq_f64(vfmaq_f64(vmulq_f64(dz, dz), dy, dy), dx, dx);
    float64x2_t r = vsqrtq_f64(r2);
    float64x2_t inv = vdivq_f64(vld1q_f64(q + i), r);
    float64x2_t inv3 = vdivq_f64(inv, r2);
    ap = vaddq_f64(ap, inv);
    ax = vfmaq_f64(ax, dx, inv3);
    ay = vfmaq_f64(ay, dy, inv3);
    az = vfmaq_f64(az, dz, inv3);
  }
  double sp = vaddvq_f64(ap), sx = vaddvq_f64(ax);
  double sy = vaddvq_f64(ay), sz = vaddvq_f64(az);
  for (; i < n; ++i) {
    double dx = px - cx[i], dy = py - cy[i], dz = pz - cz[i];
    double r2 = dx * dx + dy * dy + dz * dz;
    double r = std::sqrt(r2);
    double inv = q[i] / r;
    double inv3 = inv / r2;
    sp += inv;
    sx += dx * inv3;
    sy += dy * inv3;
    sz += dz * inv3;
  }
  *phi += sp;
  *ex += sx;
  *ey += sy;
  *ez += sz;
}

}  // namespace

const Kernels& neon_kernels() {
  static const Kernels k = {"neon", reduce_add_neon, dot_neon,
                            point_charge_sum_neon};
  return k;
}

}  // namespace panoptic::simd
