#pragma once
// Aspheric collection-lens ray tracing (meridional-free, full 3D), wavefront
// quality, and dipole collection / single-mode coupling efficiencies with and
// without the hemispherical mirror.
//
// Lens frame: the source (ion) sits at the origin, the optical axis is +z.
// The spherical back surface faces the ion with its vertex at z = wd; the
// asphere vertex sits at z = wd + thickness and sags back toward the ion.
// Prescription lengths are in mm (matching the design table); rays are in m.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "panoptic/emission.hpp"
#include "panoptic/math.hpp"
#include "panoptic/surface.hpp"

namespace panoptic {

struct LensPrescription {
  double r_front_mm = 14.56;    // asphere base radius R_F
  double kappa = -0.776;        // conic constant
  // even asphere coefficients A4..A16, mm^(1-2i)
  double a4 = 3.2022806e-6;
  double a6 = -2.9002661e-8;
  double a8 = -9.6249910e-11;
  double a10 = -1.0236456e-13;
  double a12 = 4.5511459e-16;
  double a14 = 3.3201252e-18;
  double a16 = -8.7645298e-21;
  double r_back_mm = 202.353;   // spherical surface facing the ion
  double thickness_mm = 12.5;
  double aperture_mm = 25.0;    // clear aperture diameter
  double n_g = 1.8697;          // index at 493 nm
  double wd_mm = 9.6393;        // ion to spherical vertex (traced best focus)
  double efl_mm = 16.0478;
};

struct Sag {
  double z_mm = 0;
  double dzdr = 0;
};
// Eq-of-rotation-symmetric-asphere sag and slope at radial height r (mm);
// throws NumericError outside the real-sag domain.
Sag asphere_sag(const LensPrescription& lens, double r_mm);

struct Ray {
  Vec3 pos;        // m
  Vec3 dir;        // unit
  double opl_m = 0;
  bool alive = true;
};

// Trace through both surfaces (direction chosen from the ray's travel sense).
// Newton intersection to 1e-12 m; aperture misses and total internal
// reflection mark the ray dead.
Ray trace_ray(const LensPrescription& lens, Ray ray);

struct EflResult {
  double efl_mm = 0;
  double residual_mm = 0;  // |EFL(h) - EFL(h/2)| paraxial residual
};
EflResult effective_focal_length(const LensPrescription& lens);

// Axis crossing of the NA-defining marginal ray of a reversed collimated
// beam, measured from the spherical vertex (the working distance).
double working_distance_mm(const LensPrescription& lens, double na);

struct WavefrontMap {
  int n = 0;                       // pupil grid is n x n over [-1, 1]^2
  std::vector<double> opd_lambda;  // row-major, NaN outside pupil / dead rays
  double rms_lambda = 0;
  double pv_lambda = 0;
  double strehl = 0;
};
// Point source at the origin, pupil = directions up to asin(na), OPD to the
// exit plane referenced to the chief ray with piston removed.
WavefrontMap wavefront_map(const LensPrescription& lens, double na, int n,
                           double lambda_m);

// F = integral of D over the cone theta < asin(na) about +z.
double power_fraction_in_cone(const Vec3& orientation, double na);
// closed form for a dipole perpendicular to the axis
double power_fraction_perp_closed(double na);

struct EfficiencyResult {
  double collected_fraction = 0;  // in-cone rate / total rate
  double mode_overlap = 0;        // max over Gaussian waist
  double eta = 0;
  double waist = 0;               // optimal waist, pupil radius units
};

// Single-mode collection through an ideal NA-limited aperture on the side
// opposite the mirror. When a mirror is given it is used at its antinode
// (the enhancing radius offset is computed internally).
EfficiencyResult single_mode_collection_efficiency(
    const DipoleEmitter& dipole, const std::optional<MirrorSpec>& mirror,
    double na, double throughput = 1.0);

// Step-mirror variant: the mirror cap feeding the collection cone gets the
// enhancing offset, the rest the inhibiting offset. NaN parameters default to
// step_angle = asin(na) and the computed antinode/node offsets.
EfficiencyResult step_mirror_efficiency(
    const MirrorSpec& mirror, const DipoleEmitter& dipole, double na,
    double step_angle_rad = std::numeric_limits<double>::quiet_NaN(),
    double offset_in_m = std::numeric_limits<double>::quiet_NaN(),
    double offset_out_m = std::numeric_limits<double>::quiet_NaN(),
    double throughput = 1.0);

}  // namespace panoptic
