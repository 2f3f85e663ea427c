#pragma once
// Spontaneous-emission modification for a dipole at the center of curvature
// of an imperfect spherical mirror. Every direction u inside the mirror
// aperture retro-reflects onto the emitter with amplitude rho_amp*e^{i2kR(u)};
// the back-action weight is w(u) = 2*D(u) so an ideal hemisphere at a node
// gives full inhibition.

#include <cstdint>
#include <functional>

#include "panoptic/math.hpp"
#include "panoptic/surface.hpp"

namespace panoptic {

struct DipoleEmitter {
  double lambda_m = 493e-9;
  double gamma0 = 1.0;       // s^-1, always user-supplied
  Vec3 orientation{1, 0, 0}; // unit vector, relative to the mirror axis z
};

struct EmissionResult {
  double C = 0;  // coherence factor, in [-1, 1]
  double S = 0;  // sine quadrature of the same integral
  double rate_ratio = 1;      // Gamma/Gamma0 = 1 - C
  double mirror_fraction = 0; // aperture solid angle / 4pi
  double hole_fraction = 0;   // blocked solid angle / 4pi
};

// D(u) = (3/8pi) * (1 - (orientation.u)^2); integrates to 1 over 4pi.
double dipole_pattern(const Vec3& orientation, const Vec3& u);

// Closed form for a dipole perpendicular to the axis and an ideal mirror:
// C = 2*(3/8)*[(1 - cos t) + (1 - cos^3 t)/3], t = asin(na).
double ideal_coherence_closed_form(double na);

// C and S by adaptive product quadrature (Gauss-Legendre in theta, trapezoid
// in phi) to absolute tolerance abs_tol. Hole caps are integrated separately
// in local polar coordinates so the main integrand stays smooth.
// radius_offset_m is added to R(T) everywhere.
EmissionResult coherence_factor(const MirrorSpec& mirror,
                                const DipoleEmitter& dipole, double T_K,
                                double radius_offset_m = 0,
                                double abs_tol = 1e-6);

// Gamma/Gamma0 at R(T) + radius_offset.
double decay_rate_modification(const MirrorSpec& mirror,
                               const DipoleEmitter& dipole, double T_K,
                               double radius_offset_m);

// S, reported in units of Gamma0/2.
double level_shift_quadrature(const MirrorSpec& mirror,
                              const DipoleEmitter& dipole, double T_K);

// dGamma/dOmega(u) in units of Gamma0, per steradian:
//   D(u) * (1 - rho_amp(p) * cos(2k R(p)))
// where p is u if u lies in the mirror aperture, else -u if that does, else
// the parenthesis is 1. Holes zero rho_amp over their caps.
double angular_emission_density(const MirrorSpec& mirror,
                                const DipoleEmitter& dipole, double T_K,
                                const Vec3& u, double radius_offset_m = 0);

// 2*R0*Gamma0/c; caller judges "<< 1".
double retardation_ratio(const MirrorSpec& mirror, const DipoleEmitter& dipole);

// Radius offsets (within one lambda/2 period) that extremize the rate:
// node_offset minimizes Gamma (C -> +|Z|), antinode_offset maximizes it.
double node_offset(const MirrorSpec& mirror, const DipoleEmitter& dipole,
                   double T_K);
double antinode_offset(const MirrorSpec& mirror, const DipoleEmitter& dipole,
                       double T_K);

// Step-mirror variants: the radius offset is offset_in_m for mirror polar
// angles below step_angle_rad and offset_out_m beyond it.
EmissionResult coherence_factor_step(const MirrorSpec& mirror,
                                     const DipoleEmitter& dipole, double T_K,
                                     double step_angle_rad, double offset_in_m,
                                     double offset_out_m, double abs_tol = 1e-6);
double angular_emission_density_step(const MirrorSpec& mirror,
                                     const DipoleEmitter& dipole, double T_K,
                                     const Vec3& u, double step_angle_rad,
                                     double offset_in_m, double offset_out_m);

}  // namespace panoptic
