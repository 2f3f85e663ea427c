#include "panoptic/emission.hpp"

#include <algorithm>
#include <cmath>

#include "panoptic/io.hpp"

namespace panoptic {

namespace {

void require_unit(const Vec3& v, const char* what) {
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw io::UsageError(std::string(what) + " is not a unit vector");
}

// piecewise radius offset by mirror polar angle; step_angle < 0 disables it
struct PhaseModel {
  const MirrorSpec* mirror;
  double k2;      // 2k
  double R_base;  // R(T) + global offset
  double step_angle = -1.0;
  double off_in = 0, off_out = 0;

  double radius(double th, double ph) const {
    double R = R_base;
    if (step_angle >= 0) R += (th < step_angle) ? off_in : off_out;
    if (mirror->map) R += mirror->map->sample(th, ph) * 1e-9;
    return R;
  }
};

struct CsPair {
  double c = 0, s = 0;
};

// integral of 2*D(u)*rho_amp*{cos,sin}(2k R(u)) over theta in [t0,t1] x full
// phi ring; n_th Gauss points, n_ph trapezoid points
CsPair ring_integral(const PhaseModel& pm, const Vec3& dip, double rho,
                     double t0, double t1, int n_th, int n_ph) {
  CsPair out;
  if (t1 <= t0) return out;
  GaussRule g = gauss_legendre(n_th);
  const double dphi = 2.0 * constants::pi / n_ph;
  const double norm = 2.0 * 3.0 / (8.0 * constants::pi);
  for (int i = 0; i < n_th; ++i) {
    const double th = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * g.x[i];
    const double wth = 0.5 * (t1 - t0) * g.w[i];
    const double st = std::sin(th), ct = std::cos(th);
    double rc = 0, rs = 0;
    for (int j = 0; j < n_ph; ++j) {
      const double ph = dphi * j;
      const Vec3 u{st * std::cos(ph), st * std::sin(ph), ct};
      const double proj = dip.dot(u);
      const double w = norm * (1.0 - proj * proj);
      const double arg = pm.k2 * pm.radius(th, ph);
      rc += w * std::cos(arg);
      rs += w * std::sin(arg);
    }
    out.c += wth * st * dphi * rho * rc;
    out.s += wth * st * dphi * rho * rs;
  }
  return out;
}

// same integrand over one hole cap, in polar coordinates about the hole axis;
// points falling outside the mirror aperture are skipped
CsPair cap_integral(const PhaseModel& pm, const Vec3& dip, double rho,
                    const MirrorHole& hole, double theta_max, int n_al,
                    int n_be) {
  CsPair out;
  const Vec3 d = hole.direction;
  Vec3 e1 = std::abs(d.z) > 0.999 ? Vec3{1, 0, 0}
                                  : Vec3{0, 0, 1}.cross(d).normalized();
  Vec3 e2 = d.cross(e1);
  GaussRule g = gauss_legendre(n_al);
  const double dbe = 2.0 * constants::pi / n_be;
  const double norm = 2.0 * 3.0 / (8.0 * constants::pi);
  const double cos_tm = std::cos(theta_max);
  for (int i = 0; i < n_al; ++i) {
    const double al = 0.5 * hole.radius_rad * (1.0 + g.x[i]);
    const double wal = 0.5 * hole.radius_rad * g.w[i];
    const double sa = std::sin(al), ca = std::cos(al);
    double rc = 0, rs = 0;
    for (int j = 0; j < n_be; ++j) {
      const double be = dbe * j;
      const Vec3 u = ca * d + sa * (std::cos(be) * e1 + std::sin(be) * e2);
      if (u.z < cos_tm) continue;  // cap sticking out of the aperture
      const double th = std::acos(std::clamp(u.z, -1.0, 1.0));
      const double ph = std::atan2(u.y, u.x);
      const double proj = dip.dot(u);
      const double w = norm * (1.0 - proj * proj);
      const double arg = pm.k2 * pm.radius(th, ph < 0 ? ph + 2.0 * constants::pi : ph);
      rc += w * std::cos(arg);
      rs += w * std::sin(arg);
    }
    out.c += wal * sa * dbe * rho * rc;
    out.s += wal * sa * dbe * rho * rs;
  }
  return out;
}

EmissionResult integrate(const MirrorSpec& mirror, const DipoleEmitter& dipole,
                         double T_K, double radius_offset_m, double abs_tol,
                         double step_angle, double off_in, double off_out) {
  require_unit(dipole.orientation, "dipole orientation");
  if (mirror.na < 0 || mirror.na > 1)
    throw io::UsageError("mirror NA outside [0, 1]");

  EmissionResult res;
  const double tm = mirror.theta_max();
  res.mirror_fraction = 0.5 * (1.0 - std::cos(tm));
  for (const auto& h : mirror.holes)
    res.hole_fraction += 0.5 * (1.0 - std::cos(h.radius_rad));
  if (mirror.na == 0) return res;

  PhaseModel pm;
  pm.mirror = &mirror;
  pm.k2 = 2.0 * (2.0 * constants::pi / dipole.lambda_m);
  pm.R_base = effective_radius(mirror, T_K) + radius_offset_m;
  pm.step_angle = step_angle;
  pm.off_in = off_in;
  pm.off_out = off_out;

  // theta panels split where the integrand loses smoothness
  std::vector<double> cuts{0.0, tm};
  if (step_angle > 0 && step_angle < tm) cuts.push_back(step_angle);
  std::sort(cuts.begin(), cuts.end());

  const double rho = mirror.rho_amp();
  double c_prev = 0, s_prev = 0;
  bool have_prev = false;
  for (int level = 0; level <= 7; ++level) {
    const int n_th = 24 << level, n_ph = 48 << level;
    CsPair total;
    for (size_t p = 0; p + 1 < cuts.size(); ++p) {
      CsPair r = ring_integral(pm, dipole.orientation, rho, cuts[p],
                               cuts[p + 1], n_th, n_ph);
      total.c += r.c;
      total.s += r.s;
    }
    for (const auto& h : mirror.holes) {
      CsPair r = cap_integral(pm, dipole.orientation, rho, h, tm,
                              12 << level, 24 << level);
      total.c -= r.c;
      total.s -= r.s;
    }
    if (have_prev && std::abs(total.c - c_prev) < abs_tol &&
        std::abs(total.s - s_prev) < abs_tol) {
      res.C = total.c;
      res.S = total.s;
      res.rate_ratio = 1.0 - total.c;
      return res;
    }
    c_prev = total.c;
    s_prev = total.s;
    have_prev = true;
  }
  throw NumericError("emission quadrature did not reach tolerance " +
                     io::format_g(abs_tol) + "; estimate C = " +
                     io::format_g(c_prev) + ", S = " + io::format_g(s_prev));
}

}  // namespace

double dipole_pattern(const Vec3& orientation, const Vec3& u) {
  require_unit(orientation, "dipole orientation");
  require_unit(u, "direction");
  const double p = orientation.dot(u);
  return 3.0 / (8.0 * constants::pi) * (1.0 - p * p);
}

double ideal_coherence_closed_form(double na) {
  if (na < 0 || na > 1) throw io::UsageError("NA outside [0, 1]");
  const double ct = std::cos(std::asin(na));
  return 0.75 * ((1.0 - ct) + (1.0 - ct * ct * ct) / 3.0);
}

EmissionResult coherence_factor(const MirrorSpec& mirror,
                                const DipoleEmitter& dipole, double T_K,
                                double radius_offset_m, double abs_tol) {
  return integrate(mirror, dipole, T_K, radius_offset_m, abs_tol, -1, 0, 0);
}

double decay_rate_modification(const MirrorSpec& mirror,
                               const DipoleEmitter& dipole, double T_K,
                               double radius_offset_m) {
  return coherence_factor(mirror, dipole, T_K, radius_offset_m).rate_ratio;
}

double level_shift_quadrature(const MirrorSpec& mirror,
                              const DipoleEmitter& dipole, double T_K) {
  return coherence_factor(mirror, dipole, T_K).S;
}

EmissionResult coherence_factor_step(const MirrorSpec& mirror,
                                     const DipoleEmitter& dipole, double T_K,
                                     double step_angle_rad, double offset_in_m,
                                     double offset_out_m, double abs_tol) {
  return integrate(mirror, dipole, T_K, 0.0, abs_tol, step_angle_rad,
                   offset_in_m, offset_out_m);
}

namespace {

double density(const MirrorSpec& mirror, const DipoleEmitter& dipole,
               double T_K, const Vec3& u, double radius_offset_m,
               double step_angle, double off_in, double off_out) {
  const double D = dipole_pattern(dipole.orientation, u);
  const double cos_tm = std::cos(mirror.theta_max());
  Vec3 p;
  if (u.z >= cos_tm)
    p = u;
  else if (-u.z >= cos_tm)
    p = -u;
  else
    return D;
  for (const auto& h : mirror.holes)
    if (p.dot(h.direction) >= std::cos(h.radius_rad)) return D;

  PhaseModel pm;
  pm.mirror = &mirror;
  pm.k2 = 2.0 * (2.0 * constants::pi / dipole.lambda_m);
  pm.R_base = effective_radius(mirror, T_K) + radius_offset_m;
  pm.step_angle = step_angle;
  pm.off_in = off_in;
  pm.off_out = off_out;
  const double th = std::acos(std::clamp(p.z, -1.0, 1.0));
  double ph = std::atan2(p.y, p.x);
  if (ph < 0) ph += 2.0 * constants::pi;
  return D * (1.0 - mirror.rho_amp() * std::cos(pm.k2 * pm.radius(th, ph)));
}

}  // namespace

double angular_emission_density(const MirrorSpec& mirror,
                                const DipoleEmitter& dipole, double T_K,
                                const Vec3& u, double radius_offset_m) {
  return density(mirror, dipole, T_K, u, radius_offset_m, -1, 0, 0);
}

double angular_emission_density_step(const MirrorSpec& mirror,
                                     const DipoleEmitter& dipole, double T_K,
                                     const Vec3& u, double step_angle_rad,
                                     double offset_in_m, double offset_out_m) {
  return density(mirror, dipole, T_K, u, 0.0, step_angle_rad, offset_in_m,
                 offset_out_m);
}

double retardation_ratio(const MirrorSpec& mirror,
                         const DipoleEmitter& dipole) {
  return 2.0 * mirror.radius_m * dipole.gamma0 / constants::c0;
}

namespace {

double extremal_offset(const MirrorSpec& mirror, const DipoleEmitter& dipole,
                       double T_K, bool antinode) {
  EmissionResult e = coherence_factor(mirror, dipole, T_K);
  const double z = std::hypot(e.C, e.S);
  if (z < 1e-12) return 0.0;
  // C(x) = C0 cos(2kx) - S0 sin(2kx)
  const double x = antinode ? std::atan2(e.S, -e.C) : std::atan2(-e.S, e.C);
  return x * dipole.lambda_m / (4.0 * constants::pi);
}

}  // namespace

double node_offset(const MirrorSpec& mirror, const DipoleEmitter& dipole,
                   double T_K) {
  return extremal_offset(mirror, dipole, T_K, false);
}

double antinode_offset(const MirrorSpec& mirror, const DipoleEmitter& dipole,
                       double T_K) {
  return extremal_offset(mirror, dipole, T_K, true);
}

}  // namespace panoptic
