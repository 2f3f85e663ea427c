#pragma once
// Mirror surface-error maps (load/save/synthesize/statistics), the mirror
// description shared with the emission model, and the thermal plant with
// closed-loop temperature control.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "panoptic/math.hpp"

namespace panoptic {

// ---------------------------------------------------------------------------
// surface maps

// Regular (theta, phi) grid of signed radial height errors in nm.
// NaN marks masked cells (holes, outside aperture); masked cells never enter
// statistics or integrals.
struct SurfaceMap {
  std::vector<double> theta;      // rad, strictly increasing, size n_theta
  std::vector<double> phi;        // rad, strictly increasing in [0, 2pi)
  std::vector<double> height_nm;  // row-major, theta outer, size n_theta*n_phi

  int n_theta() const { return static_cast<int>(theta.size()); }
  int n_phi() const { return static_cast<int>(phi.size()); }
  double at(int i, int j) const { return height_nm[i * phi.size() + j]; }
  double& at(int i, int j) { return height_nm[i * phi.size() + j]; }
  bool valid(int i, int j) const { return !std::isnan(at(i, j)); }

  // bilinear sample in (theta, phi) with phi wrap; theta clamped to the grid.
  // Masked corners are dropped and the remaining weights renormalized;
  // returns 0 when the whole cell is masked.
  double sample(double th, double ph) const;
};

struct SurfaceStats {
  double rms_nm = 0;
  double pv_nm = 0;
  long n_valid = 0;
};

SurfaceMap load_surface_map(const std::string& path);
void write_surface_map(const SurfaceMap& map, const std::string& path);

// Area weights sin(theta) dtheta dphi over valid cells only.
SurfaceStats surface_stats(const SurfaceMap& map);

// Zero-mean Gaussian random field with isotropic angular correlation,
// rescaled so the area-weighted RMS equals rms_nm exactly. Deterministic in
// the seed. Throws NumericError when the grid resolves the correlation angle
// with fewer than 4 samples.
SurfaceMap synthesize_surface(double rms_nm, double corr_angle_rad,
                              std::uint64_t seed, int n_theta, int n_phi,
                              double theta_max_rad);

// ---------------------------------------------------------------------------
// mirror description

struct MirrorHole {
  Vec3 direction;     // unit vector from the center of curvature
  double radius_rad;  // angular radius of the blocked cap
};

struct MirrorSpec {
  double radius_m = 12.5e-3;
  double na = 0.996;              // half-aperture = asin(na)
  double reflectivity_int = 0.92; // intensity reflectivity
  std::vector<MirrorHole> holes;
  std::optional<SurfaceMap> map;  // heights in nm
  double alpha_per_K = 23.5e-6;
  double T_ref_K = 293.15;

  double theta_max() const { return std::asin(na); }
  double rho_amp() const { return std::sqrt(reflectivity_int); }
};

// R(T) = R0 * (1 + alpha * (T - T_ref))
double effective_radius(const MirrorSpec& mirror, double T_K);

// ---------------------------------------------------------------------------
// thermal plant and PID control

struct ThermalPlant {
  double tau_heat_s = 5.39 * 3600.0;
  double tau_cool_s = 3.89 * 3600.0;
  double T_amb_K = 293.15;
  double gain_K_per_W = 5.0;  // steady-state K per W with tau_c = tau_h
  double p_max_W = 3.0;
};

struct PidParams {
  double kp = 0;
  double ki = 0;
  double kd = 0;
  double bias_W = 0;          // feedforward added before clamping
  double dt_s = 1.0;
  double windup_limit = 0;    // |integral| clamped here; 0 = p_max/ki
};

struct ControlTrace {
  std::vector<double> t_s, temp_K, power_W;
  double ripple_rms_K = 0;   // about the mean of the final half
  double settling_time_s = 0;
};

// Explicit-Euler integration of
//   dT/dt = P * gain / tau_h  -  (T - T_amb) / tau_c
// with PID feedback on a noisy temperature reading. T(0) = T_amb.
// Throws NumericError (with the failure time) if |T - setpoint| exceeds 100 K.
ControlTrace simulate_temperature_control(const ThermalPlant& plant,
                                          const PidParams& pid,
                                          double setpoint_K, double duration_s,
                                          double dt_s, double noise_rms_K,
                                          std::uint64_t seed);

}  // namespace panoptic
