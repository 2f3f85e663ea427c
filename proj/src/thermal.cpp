#include <algorithm>
#include <cmath>
#include <limits>

#include "panoptic/io.hpp"
#include "panoptic/surface.hpp"

namespace panoptic {

ControlTrace simulate_temperature_control(const ThermalPlant& plant,
                                          const PidParams& pid,
                                          double setpoint_K, double duration_s,
                                          double dt_s, double noise_rms_K,
                                          std::uint64_t seed) {
  if (!(dt_s > 0) || duration_s < 100.0 * dt_s)
    throw io::UsageError("simulate_temperature_control: need dt > 0 and duration >= 100*dt");

  const long steps = std::lround(duration_s / dt_s);
  double windup = pid.windup_limit;
  if (windup <= 0)
    windup = pid.ki > 0 ? plant.p_max_W / pid.ki
                        : std::numeric_limits<double>::infinity();

  Rng rng(seed);
  ControlTrace tr;
  tr.t_s.reserve(steps + 1);
  tr.temp_K.reserve(steps + 1);
  tr.power_W.reserve(steps + 1);

  double T = plant.T_amb_K;
  double integral = 0, e_prev = 0, P = 0;
  for (long n = 0; n <= steps; ++n) {
    const double t = n * dt_s;
    double meas = T;
    if (noise_rms_K > 0) meas += noise_rms_K * rng.gaussian();
    const double e = setpoint_K - meas;
    integral = std::clamp(integral + e * dt_s, -windup, windup);
    const double deriv = (n == 0) ? 0.0 : (e - e_prev) / dt_s;
    e_prev = e;
    P = pid.kp * e + pid.ki * integral + pid.kd * deriv + pid.bias_W;
    P = std::clamp(P, 0.0, plant.p_max_W);
    tr.t_s.push_back(t);
    tr.temp_K.push_back(T);
    tr.power_W.push_back(P);
    if (n == steps) break;
    T += dt_s * (P * plant.gain_K_per_W / plant.tau_heat_s -
                 (T - plant.T_amb_K) / plant.tau_cool_s);
    if (std::abs(T - setpoint_K) > 100.0)
      throw NumericError("temperature control diverged at t = " +
                         io::format_g(t + dt_s) + " s");
  }

  // ripple about the mean of the final half
  const size_t half = tr.temp_K.size() / 2;
  double mean = 0;
  for (size_t i = half; i < tr.temp_K.size(); ++i) mean += tr.temp_K[i];
  mean /= double(tr.temp_K.size() - half);
  double s2 = 0;
  for (size_t i = half; i < tr.temp_K.size(); ++i) {
    const double d = tr.temp_K[i] - mean;
    s2 += d * d;
  }
  tr.ripple_rms_K = std::sqrt(s2 / double(tr.temp_K.size() - half));

  // earliest time after which the trace stays within 2 % of the initial offset
  const double band =
      std::max(0.02 * std::abs(tr.temp_K.front() - setpoint_K), 1e-12);
  long settled = -1;
  for (long i = long(tr.temp_K.size()) - 1; i >= 0; --i) {
    if (std::abs(tr.temp_K[i] - setpoint_K) <= band)
      settled = i;
    else
      break;
  }
  tr.settling_time_s = settled >= 0 ? tr.t_s[settled] : duration_s;
  return tr;
}

}  // namespace panoptic
