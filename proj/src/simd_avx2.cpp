// AVX2+FMA backend. sqrt/div are IEEE-exact, so the only deviation from the
// scalar kernels is the 4-lane accumulation order.
#include <immintrin.h>

#include <cmath>

#include "panoptic/simd.hpp"

namespace panoptic::simd {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double reduce_add_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void point_charge_sum_avx2(const double* cx, const double* cy, const double* cz,
                           const double* q, std::size_t n, double px, double py,
                           double pz, double* phi, double* ex, double* ey,
                           double* ez) {
  __m256d vpx = _mm256_set1_pd(px);
  __m256d vpy = _mm256_set1_pd(py);
  __m256d vpz = _mm256_set1_pd(pz);
  __m256d ap = _mm256_setzero_pd(), ax = _mm256_setzero_pd();
  __m256d ay = _mm256_setzero_pd(), az = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d dx = _mm256_sub_pd(vpx, _mm256_loadu_pd(cx + i));
    __m256d dy = _mm256_sub_pd(vpy, _mm256_loadu_pd(cy + i));
    __m256d dz = _mm256_sub_pd(vpz, _mm256_loadu_pd(cz + i));
    __m256d r2 = _mm256_fmadd_pd(dx, dx, _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dz, dz)));
    __m256d r = _mm256_sqrt_pd(r2);
    __m256d inv = _mm256_div_pd(_mm256_loadu_pd(q + i), r);
    __m256d inv3 = _mm256_div_pd(inv, r2);
    ap = _mm256_add_pd(ap, inv);
    ax = _mm256_fmadd_pd(dx, inv3, ax);
    ay = _mm256_fmadd_pd(dy, inv3, ay);
    az = _mm256_fmadd_pd(dz, inv3, az);
  }
  double sp = hsum(ap), sx = hsum(ax), sy = hsum(ay), sz = hsum(az);
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

const Kernels& avx2_kernels() {
  static const Kernels k = {"avx2", reduce_add_avx2, dot_avx2,
                            point_charge_sum_avx2};
  return k;
}

}  // namespace panoptic::simd
