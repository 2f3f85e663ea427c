#include "panoptic/optics.hpp"

#include <algorithm>
#include <cmath>

#include "panoptic/io.hpp"

namespace panoptic {

namespace {

constexpr double mm = 1e-3;

// conic part of the sag and its slope, curvature c = 1/R, in mm
double conic_sag(double r, double R, double kappa) {
  const double arg = 1.0 - (1.0 + kappa) * r * r / (R * R);
  if (arg <= 0) throw NumericError("sag undefined at r = " + io::format_g(r) + " mm");
  return r * r / (R * (1.0 + std::sqrt(arg)));
}
double conic_slope(double r, double R, double kappa) {
  const double arg = 1.0 - (1.0 + kappa) * r * r / (R * R);
  if (arg <= 0) throw NumericError("sag undefined at r = " + io::format_g(r) + " mm");
  return (r / R) / std::sqrt(arg);
}

// lens surfaces as z = f(r) in meters, z measured in the ray frame
struct Surface {
  const LensPrescription* lens;
  bool is_asphere;
  double z_of_r(double r_m) const {
    const double r = r_m / mm;
    if (is_asphere) {
      Sag s = asphere_sag(*lens, r);
      return (lens->wd_mm + lens->thickness_mm - s.z_mm) * mm;
    }
    return (lens->wd_mm + conic_sag(r, lens->r_back_mm, 0.0)) * mm;
  }
  double dzdr(double r_m) const {
    const double r = r_m / mm;
    if (is_asphere) return -asphere_sag(*lens, r).dzdr;
    return conic_slope(r, lens->r_back_mm, 0.0);
  }
};

// Newton intersection of a ray with z = f(r); returns the parameter t or
// throws after 50 iterations
double intersect(const Surface& s, const Vec3& p, const Vec3& d) {
  double t = (s.z_of_r(0) - p.z) / d.z;  // plane through the vertex
  for (int it = 0; it < 50; ++it) {
    const Vec3 q = p + t * d;
    const double r = std::hypot(q.x, q.y);
    const double g = q.z - s.z_of_r(r);
    if (std::abs(g) < 1e-12) return t;
    const double drdt = r > 1e-15 ? (q.x * d.x + q.y * d.y) / r : 0.0;
    const double dg = d.z - s.dzdr(r) * drdt;
    t -= g / dg;
  }
  const Vec3 q = p + t * d;
  throw NumericError("surface intersection did not converge; last iterate (" +
                     io::format_g(q.x) + ", " + io::format_g(q.y) + ", " +
                     io::format_g(q.z) + ") m");
}

// vector Snell refraction; returns false on total internal reflection
bool refract(Vec3& d, const Vec3& normal, double n1, double n2) {
  Vec3 n = normal;
  double ci = -d.dot(n);
  if (ci < 0) {  // normal on the other side
    n = -n;
    ci = -ci;
  }
  const double eta = n1 / n2;
  const double k = 1.0 - eta * eta * (1.0 - ci * ci);
  if (k < 0) return false;
  d = (eta * d + (eta * ci - std::sqrt(k)) * n).normalized();
  return true;
}

}  // namespace

Sag asphere_sag(const LensPrescription& lens, double r_mm) {
  Sag s;
  s.z_mm = conic_sag(r_mm, lens.r_front_mm, lens.kappa);
  s.dzdr = conic_slope(r_mm, lens.r_front_mm, lens.kappa);
  const double r2 = r_mm * r_mm;
  const double A[7] = {lens.a4, lens.a6, lens.a8, lens.a10,
                       lens.a12, lens.a14, lens.a16};
  double rp = r2 * r2;  // r^4
  for (int i = 0; i < 7; ++i) {
    s.z_mm += A[i] * rp;
    s.dzdr += A[i] * (2 * i + 4) * rp / r_mm;
    rp *= r2;
  }
  if (r_mm == 0) s.dzdr = 0;
  return s;
}

Ray trace_ray(const LensPrescription& lens, Ray ray) {
  if (!ray.alive) return ray;
  Surface sph{&lens, false}, asp{&lens, true};
  const bool forward = ray.dir.z > 0;
  const Surface* order[2] = {forward ? &sph : &asp, forward ? &asp : &sph};
  const double idx[3] = {1.0, lens.n_g, 1.0};
  const double semi_ap = 0.5 * lens.aperture_mm * mm;
  for (int k = 0; k < 2; ++k) {
    double t;
    try {
      t = intersect(*order[k], ray.pos, ray.dir);
    } catch (const NumericError&) {
      if (std::hypot(ray.pos.x, ray.pos.y) > semi_ap) {
        ray.alive = false;  // wildly off-aperture rays never meet the surface
        return ray;
      }
      throw;
    }
    if (t <= 0) {
      ray.alive = false;
      return ray;
    }
    ray.opl_m += idx[k] * t;
    ray.pos += t * ray.dir;
    const double r = std::hypot(ray.pos.x, ray.pos.y);
    if (r > semi_ap) {
      ray.alive = false;
      return ray;
    }
    // surface z - f(r) = 0; gradient gives the normal
    const double fp = order[k]->dzdr(r);
    Vec3 n{0, 0, 1};
    if (r > 1e-15) n = Vec3{-fp * ray.pos.x / r, -fp * ray.pos.y / r, 1.0}.normalized();
    if (!refract(ray.dir, n, idx[k], idx[k + 1])) {
      ray.alive = false;
      return ray;
    }
  }
  return ray;
}

EflResult effective_focal_length(const LensPrescription& lens) {
  // reversed collimated paraxial rays; EFL = h / tan(exit angle)
  auto exit_angle = [&](double h_m) {
    Ray r;
    r.pos = {h_m, 0, (lens.wd_mm + lens.thickness_mm + 5.0) * mm};
    r.dir = {0, 0, -1};
    r = trace_ray(lens, r);
    if (!r.alive) throw NumericError("paraxial ray lost");
    return std::abs(r.dir.x / r.dir.z);
  };
  const double h = 1e-3 * (0.5 * lens.aperture_mm * mm);
  const double e1 = exit_angle(h), e2 = exit_angle(0.5 * h);
  if (e1 <= 0 || e2 <= 0) throw NumericError("degenerate paraxial system");
  EflResult out;
  out.efl_mm = h / e1 / mm;
  out.residual_mm = std::abs(h / e1 - 0.5 * h / e2) / mm;
  return out;
}

double working_distance_mm(const LensPrescription& lens, double na) {
  EflResult efl = effective_focal_length(lens);
  const double h = na * efl.efl_mm * mm;
  Ray r;
  r.pos = {h, 0, (lens.wd_mm + lens.thickness_mm + 5.0) * mm};
  r.dir = {0, 0, -1};
  r = trace_ray(lens, r);
  if (!r.alive) throw NumericError("marginal ray lost");
  const double t = -r.pos.x / r.dir.x;  // x = 0 crossing
  const double z_cross = r.pos.z + t * r.dir.z;
  return lens.wd_mm - z_cross / mm;
}

WavefrontMap wavefront_map(const LensPrescription& lens, double na, int n,
                           double lambda_m) {
  if (n < 64) throw io::UsageError("wavefront_map: pupil grid must be >= 64");
  const double exit_plane = (lens.wd_mm + lens.thickness_mm + 5.0) * mm;
  const double theta_max = std::asin(na);
  WavefrontMap map;
  map.n = n;
  map.opd_lambda.assign(size_t(n) * n, std::numeric_limits<double>::quiet_NaN());

  long alive = 0, dead = 0;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const double px = -1.0 + 2.0 * (ix + 0.5) / n;
      const double py = -1.0 + 2.0 * (iy + 0.5) / n;
      const double rho = std::hypot(px, py);
      if (rho > 1.0) continue;
      const double th = std::asin(na * rho);
      const double ph = std::atan2(py, px);
      Ray r;
      r.pos = {0, 0, 0};
      r.dir = {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
               std::cos(th)};
      r = trace_ray(lens, r);
      if (!r.alive || std::abs(r.dir.z) < 1e-9) {
        ++dead;
        continue;
      }
      // to the exit plane
      const double t = (exit_plane - r.pos.z) / r.dir.z;
      map.opd_lambda[size_t(iy) * n + ix] = (r.opl_m + t) / lambda_m;
      ++alive;
    }
  }
  if (alive == 0 || dead > 0.1 * (alive + dead))
    throw NumericError("wavefront_map: vignetting, " + std::to_string(dead) +
                       " of " + std::to_string(alive + dead) + " rays dead");

  double mean = 0;
  for (double v : map.opd_lambda)
    if (!std::isnan(v)) mean += v;
  mean /= double(alive);
  double s2 = 0, mn = 0, mx = 0;
  bool first = true;
  for (double& v : map.opd_lambda) {
    if (std::isnan(v)) continue;
    v -= mean;  // piston removed
    s2 += v * v;
    if (first) {
      mn = mx = v;
      first = false;
    } else {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
  }
  map.rms_lambda = std::sqrt(s2 / double(alive));
  map.pv_lambda = mx - mn;
  const double s = 2.0 * constants::pi * map.rms_lambda;
  map.strehl = std::exp(-s * s);
  return map;
}

double power_fraction_in_cone(const Vec3& orientation, double na) {
  if (na < 0 || na > 1) throw io::UsageError("NA outside [0, 1]");
  const double tc = std::asin(na);
  GaussRule g = gauss_legendre(96);
  const int n_ph = 192;
  const double dph = 2.0 * constants::pi / n_ph;
  double sum = 0;
  for (size_t i = 0; i < g.x.size(); ++i) {
    const double th = 0.5 * tc * (1.0 + g.x[i]);
    const double wth = 0.5 * tc * g.w[i];
    const double st = std::sin(th), ct = std::cos(th);
    double row = 0;
    for (int j = 0; j < n_ph; ++j) {
      const double ph = dph * j;
      const Vec3 u{st * std::cos(ph), st * std::sin(ph), ct};
      row += dipole_pattern(orientation, u);
    }
    sum += wth * st * dph * row;
  }
  return sum;
}

double power_fraction_perp_closed(double na) {
  if (na < 0 || na > 1) throw io::UsageError("NA outside [0, 1]");
  const double ct = std::cos(std::asin(na));
  return 3.0 / 8.0 * ((1.0 - ct) + (1.0 - ct * ct * ct) / 3.0);
}

namespace {

// density of emission into the collection cone (around -z), as a function of
// cone polar angle psi in [0, theta_c] and azimuth chi
struct ConeDensity {
  const MirrorSpec* mirror = nullptr;  // null: free space
  const DipoleEmitter* dipole;
  double T_K = 0;
  double offset = 0;        // uniform radius offset (antinode)
  double step_angle = -1;   // >= 0 switches to the step-mirror phase model
  double off_in = 0, off_out = 0;

  double operator()(double psi, double chi) const {
    const Vec3 u{std::sin(psi) * std::cos(chi), std::sin(psi) * std::sin(chi),
                 -std::cos(psi)};
    if (!mirror) return dipole_pattern(dipole->orientation, u);
    if (step_angle >= 0)
      return angular_emission_density_step(*mirror, *dipole, T_K, u,
                                           step_angle, off_in, off_out);
    return angular_emission_density(*mirror, *dipole, T_K, u, offset);
  }
};

// integral of the density over the cone, splitting psi panels at the given
// breakpoints (hole edges, step edge)
double cone_integral(const ConeDensity& f, double theta_c,
                     std::vector<double> cuts) {
  cuts.push_back(0.0);
  cuts.push_back(theta_c);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  GaussRule g = gauss_legendre(64);
  const int n_ch = 128;
  const double dch = 2.0 * constants::pi / n_ch;
  double sum = 0;
  for (size_t p = 0; p + 1 < cuts.size(); ++p) {
    if (cuts[p + 1] <= 0 || cuts[p] >= theta_c) continue;
    const double a = std::max(cuts[p], 0.0), b = std::min(cuts[p + 1], theta_c);
    for (size_t i = 0; i < g.x.size(); ++i) {
      const double psi = 0.5 * (a + b) + 0.5 * (b - a) * g.x[i];
      const double w = 0.5 * (b - a) * g.w[i] * std::sin(psi) * dch;
      double row = 0;
      for (int j = 0; j < n_ch; ++j) row += f(psi, dch * j);
      sum += w * row;
    }
  }
  return sum;
}

// Gaussian mode overlap over the pupil (radial coordinate = sin(psi),
// normalized by na): returns |int A G|^2 / (int A^2 * pi w^2 / 2)
double mode_overlap_at(const ConeDensity& f, double theta_c, double na,
                       const std::vector<double>& cuts_all, double w) {
  GaussRule g = gauss_legendre(64);
  const int n_ch = 128;
  const double dch = 2.0 * constants::pi / n_ch;
  std::vector<double> cuts = cuts_all;
  cuts.push_back(0.0);
  cuts.push_back(theta_c);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double num = 0, den = 0;
  for (size_t p = 0; p + 1 < cuts.size(); ++p) {
    if (cuts[p + 1] <= 0 || cuts[p] >= theta_c) continue;
    const double a = std::max(cuts[p], 0.0), b = std::min(cuts[p + 1], theta_c);
    for (size_t i = 0; i < g.x.size(); ++i) {
      const double psi = 0.5 * (a + b) + 0.5 * (b - a) * g.x[i];
      const double wth = 0.5 * (b - a) * g.w[i];
      // pupil radius rho = sin(psi)/na in [0,1]; dA = rho drho dchi
      const double rho = std::sin(psi) / na;
      const double jac = rho * (std::cos(psi) / na) * wth * dch;
      const double gauss = std::exp(-rho * rho / (w * w));
      double ra = 0, ra2 = 0;
      for (int j = 0; j < n_ch; ++j) {
        const double amp = std::sqrt(std::max(f(psi, dch * j), 0.0));
        ra += amp;
        ra2 += amp * amp;
      }
      num += jac * gauss * ra;
      den += jac * ra2;
    }
  }
  if (den <= 0) return 0;
  const double gnorm = 0.5 * constants::pi * w * w;
  return num * num / (den * gnorm);
}

EfficiencyResult efficiency_pipeline(const ConeDensity& f, double total_rate,
                                     double na,
                                     const std::vector<double>& cuts,
                                     double throughput) {
  const double theta_c = std::asin(na);
  EfficiencyResult out;
  if (na == 0) return out;
  const double collected = cone_integral(f, theta_c, cuts);
  out.collected_fraction = collected / total_rate;

  // waist search: coarse scan, then golden section around the best sample
  std::vector<double> ws, ms;
  for (int i = 0; i < 16; ++i) {
    ws.push_back(0.15 + i * (1.6 - 0.15) / 15.0);
    ms.push_back(mode_overlap_at(f, theta_c, na, cuts, ws.back()));
  }
  size_t best = std::max_element(ms.begin(), ms.end()) - ms.begin();
  if (best == 0 || best + 1 == ws.size()) {
    std::string list;
    for (size_t i = 0; i < ws.size(); ++i)
      list += (i ? ", " : "") + io::format_g(ws[i], 4);
    throw NumericError("waist bracket failure; scanned waists: " + list);
  }
  ScalarOpt opt = golden_section_max(
      [&](double w) { return mode_overlap_at(f, theta_c, na, cuts, w); },
      ws[best - 1], ws[best + 1], 1e-4);
  out.mode_overlap = opt.fx;
  out.waist = opt.x;
  out.eta = out.collected_fraction * out.mode_overlap * throughput;
  return out;
}

std::vector<double> hole_cuts(const MirrorSpec& mirror, double theta_c) {
  // antipodal images of hole-cap edges inside the cone
  std::vector<double> cuts;
  for (const auto& h : mirror.holes) {
    const double th = std::acos(std::clamp(h.direction.z, -1.0, 1.0));
    for (double edge : {th - h.radius_rad, th + h.radius_rad})
      if (edge > 0 && edge < theta_c) cuts.push_back(edge);
  }
  return cuts;
}

}  // namespace

EfficiencyResult single_mode_collection_efficiency(
    const DipoleEmitter& dipole, const std::optional<MirrorSpec>& mirror,
    double na, double throughput) {
  ConeDensity f;
  f.dipole = &dipole;
  double total = 1.0;
  std::vector<double> cuts;
  if (mirror) {
    f.mirror = &*mirror;
    f.T_K = mirror->T_ref_K;
    f.offset = antinode_offset(*mirror, dipole, f.T_K);
    total = coherence_factor(*mirror, dipole, f.T_K, f.offset).rate_ratio;
    cuts = hole_cuts(*mirror, std::asin(na));
  }
  return efficiency_pipeline(f, total, na, cuts, throughput);
}

EfficiencyResult step_mirror_efficiency(const MirrorSpec& mirror,
                                        const DipoleEmitter& dipole, double na,
                                        double step_angle_rad,
                                        double offset_in_m, double offset_out_m,
                                        double throughput) {
  ConeDensity f;
  f.dipole = &dipole;
  f.mirror = &mirror;
  f.T_K = mirror.T_ref_K;
  f.step_angle = std::isnan(step_angle_rad) ? std::asin(na) : step_angle_rad;
  f.off_in = std::isnan(offset_in_m) ? antinode_offset(mirror, dipole, f.T_K)
                                     : offset_in_m;
  f.off_out =
      std::isnan(offset_out_m) ? node_offset(mirror, dipole, f.T_K) : offset_out_m;
  const double total = coherence_factor_step(mirror, dipole, f.T_K,
                                             f.step_angle, f.off_in, f.off_out)
                           .rate_ratio;
  std::vector<double> cuts = hole_cuts(mirror, std::asin(na));
  if (f.step_angle > 0 && f.step_angle < std::asin(na))
    cuts.push_back(f.step_angle);
  return efficiency_pipeline(f, total, na, cuts, throughput);
}

}  // namespace panoptic
