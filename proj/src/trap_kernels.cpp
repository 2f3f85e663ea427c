// Exact potential/field of uniform unit-density flat panels, with the
// 1/(4 pi eps0) factor left out (applied at solve/eval time). The log and
// arctan terms are rearranged for stability near panel planes and edges.

#include <cmath>

#include "panoptic/trap.hpp"

namespace panoptic {

namespace {

// stable ln(U + R) where R = sqrt(U^2 + W2), using (U + R)(R - U) = W2
inline double slog(double U, double W2, double R) {
  if (U >= 0) return std::log(std::max(U + R, 1e-300));
  return std::log(std::max(W2, 1e-300)) - std::log(std::max(R - U, 1e-300));
}

}  // namespace

double rect_potential(double x0, double x1, double y0, double y1,
                      const Vec3& p) {
  const double zm = std::fabs(p.z);
  auto I = [&](double X, double Y) {
    double R = std::sqrt(X * X + Y * Y + zm * zm);
    double zr = zm * R;
    return X * slog(Y, X * X + zm * zm, R) + Y * slog(X, Y * Y + zm * zm, R) -
           zm * std::atan2(X * Y, zr < 1e-300 ? 1e-300 : zr);
  };
  const double XA = p.x - x0, XB = p.x - x1;
  const double YA = p.y - y0, YB = p.y - y1;
  return I(XB, YB) - I(XA, YB) - I(XB, YA) + I(XA, YA);
}

Vec3 rect_field(double x0, double x1, double y0, double y1, const Vec3& p) {
  const double zm = std::fabs(p.z);
  const double sgn = p.z >= 0 ? 1.0 : -1.0;
  double lx[4], ly[4], az[4];
  auto terms = [&](double X, double Y, int k) {
    double R = std::sqrt(X * X + Y * Y + zm * zm);
    lx[k] = slog(Y, X * X + zm * zm, R);
    ly[k] = slog(X, Y * Y + zm * zm, R);
    double zr = zm * R;
    az[k] = -std::atan2(X * Y, zr < 1e-300 ? 1e-300 : zr);
  };
  const double XA = p.x - x0, XB = p.x - x1;
  const double YA = p.y - y0, YB = p.y - y1;
  terms(XB, YB, 0);
  terms(XA, YB, 1);
  terms(XB, YA, 2);
  terms(XA, YA, 3);
  return {-(lx[0] - lx[1] - lx[2] + lx[3]), -(ly[0] - ly[1] - ly[2] + ly[3]),
          -sgn * (az[0] - az[1] - az[2] + az[3])};
}

namespace {

// shared edge walk for the triangle kernel; fills phi and E
inline void tri_eval(const Vec3& a, const Vec3& b, const Vec3& c,
                     const Vec3& p, double& phi, Vec3& E) {
  Vec3 n = cross(b - a, c - a);
  n = n * (1.0 / n.norm());
  const double d = dot(p - a, n);
  const double ad = std::fabs(d);
  const Vec3 rho = p - n * d;
  phi = 0;
  Vec3 Einp{0, 0, 0};
  double bsum = 0;
  const Vec3* verts[4] = {&a, &b, &c, &a};
  for (int k = 0; k < 3; ++k) {
    const Vec3& u = *verts[k];
    const Vec3& v = *verts[k + 1];
    Vec3 e = v - u;
    double L = e.norm();
    Vec3 s = e * (1.0 / L);
    Vec3 m = cross(s, n);
    double lm = dot(u - rho, s), lp = dot(v - rho, s);
    double P0 = dot(u - rho, m);
    double Rm = (p - u).norm(), Rp = (p - v).norm();
    double R02 = P0 * P0 + d * d;
    double f;
    if (lp + Rp > lm + Rm) {
      double den = Rm + lm;
      f = den < 1e-14 * L
              ? std::log((Rp + lp) * (Rm - lm) / std::max(R02, 1e-300))
              : std::log((Rp + lp) / den);
    } else {
      double den = Rp - lp;
      f = den < 1e-14 * L
              ? std::log((Rm - lm) * (Rp + lp) / std::max(R02, 1e-300))
              : std::log((Rm - lm) / den);
    }
    double beta = std::atan2(P0 * lp, R02 + ad * Rp) -
                  std::atan2(P0 * lm, R02 + ad * Rm);
    phi += P0 * f - ad * beta;
    Einp = Einp + m * f;
    bsum += beta;
  }
  E = Einp + n * ((d >= 0 ? 1.0 : -1.0) * bsum);
}

}  // namespace

double tri_potential(const Vec3& a, const Vec3& b, const Vec3& c,
                     const Vec3& p) {
  double phi;
  Vec3 E;
  tri_eval(a, b, c, p, phi, E);
  return phi;
}

Vec3 tri_field(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& p) {
  double phi;
  Vec3 E;
  tri_eval(a, b, c, p, phi, E);
  return E;
}

}  // namespace panoptic
