#include <cmath>

#include "panoptic/simd.hpp"

namespace panoptic::simd {

namespace {

double reduce_add_scalar(const double* x, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void point_charge_sum_scalar(const double* cx, const double* cy, const double* cz,
                             const double* q, std::size_t n, double px, double py,
                             double pz, double* phi, double* ex, double* ey,
                             double* ez) {
  double sp = 0, sx = 0, sy = 0, sz = 0;
  for (std::size_t i = 0; i < n; ++i) {
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

const Kernels& scalar_kernels() {
  static const Kernels k = {"scalar", reduce_add_scalar, dot_scalar,
                            point_charge_sum_scalar};
  return k;
}

}  // namespace panoptic::simd
