#include "panoptic/surface.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "panoptic/io.hpp"

namespace panoptic {

namespace {

// cell area weights: sin(theta) * dtheta * dphi, half-intervals at the theta
// ends, cyclic intervals in phi
void cell_weights(const SurfaceMap& m, std::vector<double>& wth,
                  std::vector<double>& wph) {
  const int nt = m.n_theta(), np = m.n_phi();
  wth.resize(nt);
  for (int i = 0; i < nt; ++i) {
    double lo = (i == 0) ? m.theta[0] : 0.5 * (m.theta[i - 1] + m.theta[i]);
    double hi = (i == nt - 1) ? m.theta[nt - 1]
                              : 0.5 * (m.theta[i] + m.theta[i + 1]);
    wth[i] = std::sin(m.theta[i]) * (hi - lo);
  }
  wph.resize(np);
  const double two_pi = 2.0 * constants::pi;
  for (int j = 0; j < np; ++j) {
    double prev = (j == 0) ? m.phi[np - 1] - two_pi : m.phi[j - 1];
    double next = (j == np - 1) ? m.phi[0] + two_pi : m.phi[j + 1];
    wph[j] = 0.5 * (next - prev);
  }
}

[[noreturn]] void format_error(const std::string& path, int line,
                               const std::string& what) {
  throw io::UsageError(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

double SurfaceMap::sample(double th, double ph) const {
  const int nt = n_theta(), np = n_phi();
  const double two_pi = 2.0 * constants::pi;
  // theta clamped; locate segment
  th = std::clamp(th, theta.front(), theta.back());
  int i = int(std::upper_bound(theta.begin(), theta.end(), th) -
              theta.begin()) - 1;
  i = std::clamp(i, 0, nt - 2);
  double ft = (th - theta[i]) / (theta[i + 1] - theta[i]);
  // phi wrapped; the segment between phi[np-1] and phi[0]+2pi closes the ring
  double p0 = phi.front();
  ph = std::fmod(ph - p0, two_pi);
  if (ph < 0) ph += two_pi;
  ph += p0;
  int j = int(std::upper_bound(phi.begin(), phi.end(), ph) - phi.begin()) - 1;
  int j1;
  double fp;
  if (j >= np - 1) {
    j = np - 1;
    j1 = 0;
    double span = phi.front() + two_pi - phi.back();
    fp = (ph - phi.back()) / span;
  } else {
    j1 = j + 1;
    fp = (ph - phi[j]) / (phi[j + 1] - phi[j]);
  }
  const double w[4] = {(1 - ft) * (1 - fp), (1 - ft) * fp, ft * (1 - fp),
                       ft * fp};
  const double h[4] = {at(i, j), at(i, j1), at(i + 1, j), at(i + 1, j1)};
  double sw = 0, sh = 0;
  for (int c = 0; c < 4; ++c) {
    if (!std::isnan(h[c])) {
      sw += w[c];
      sh += w[c] * h[c];
    }
  }
  return sw > 0 ? sh / sw : 0.0;
}

SurfaceMap load_surface_map(const std::string& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) format_error(path, 1, "empty file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "theta_rad,phi_rad,height_nm")
    format_error(path, lineno, "bad header, expected theta_rad,phi_rad,height_nm");

  std::vector<double> th, ph, h;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    double v[3];
    const char* s = line.c_str();
    for (int c = 0; c < 3; ++c) {
      char* end = nullptr;
      v[c] = std::strtod(s, &end);
      if (end == s) format_error(path, lineno, "expected a number");
      s = end;
      if (c < 2) {
        if (*s != ',') format_error(path, lineno, "expected 3 comma-separated fields");
        ++s;
      }
    }
    if (*s != '\0') format_error(path, lineno, "trailing characters");
    th.push_back(v[0]);
    ph.push_back(v[1]);
    h.push_back(v[2]);
  }

  const long total = long(th.size());
  if (total < 8) format_error(path, lineno, "fewer than 8 data rows");
  long np = 0;
  while (np < total && th[np] == th[0]) ++np;
  if (np < 4) format_error(path, int(np + 1), "fewer than 4 phi columns");
  if (total % np != 0)
    format_error(path, lineno, "row count " + std::to_string(total) +
                                   " not a multiple of phi count " +
                                   std::to_string(np));
  const long nt = total / np;
  if (nt < 2) format_error(path, lineno, "fewer than 2 theta rows");

  SurfaceMap m;
  m.phi.assign(ph.begin(), ph.begin() + np);
  for (long j = 1; j < np; ++j)
    if (!(m.phi[j] > m.phi[j - 1]))
      format_error(path, int(1 + j + 1), "phi not strictly increasing");
  if (m.phi.back() - m.phi.front() >= 2.0 * constants::pi)
    format_error(path, int(np + 1), "phi spans a full turn or more");
  for (long i = 0; i < nt; ++i) {
    m.theta.push_back(th[i * np]);
    if (i > 0 && !(m.theta[i] > m.theta[i - 1]))
      format_error(path, int(1 + i * np + 1), "theta not strictly increasing");
    for (long j = 0; j < np; ++j) {
      long r = i * np + j;
      if (th[r] != m.theta[i])
        format_error(path, int(r + 2), "theta changes mid-row-block");
      if (ph[r] != m.phi[j])
        format_error(path, int(r + 2), "phi grid differs between theta rows");
    }
  }
  m.height_nm = std::move(h);
  return m;
}

void write_surface_map(const SurfaceMap& map, const std::string& path) {
  std::string out = "theta_rad,phi_rad,height_nm\n";
  char buf[96];
  for (int i = 0; i < map.n_theta(); ++i) {
    for (int j = 0; j < map.n_phi(); ++j) {
      double v = map.at(i, j);
      if (std::isnan(v)) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,NaN", map.theta[i],
                      map.phi[j]);
      } else {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", map.theta[i],
                      map.phi[j], v);
      }
      out += buf;
      out += '\n';
    }
  }
  io::write_file_atomic(path, out);
}

SurfaceStats surface_stats(const SurfaceMap& map) {
  std::vector<double> wth, wph;
  cell_weights(map, wth, wph);
  double sw = 0, sh = 0;
  double mn = 0, mx = 0;
  long n = 0;
  for (int i = 0; i < map.n_theta(); ++i) {
    for (int j = 0; j < map.n_phi(); ++j) {
      double v = map.at(i, j);
      if (std::isnan(v)) continue;
      double w = wth[i] * wph[j];
      sw += w;
      sh += w * v;
      if (n == 0) {
        mn = mx = v;
      } else {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      ++n;
    }
  }
  if (n == 0) throw io::UsageError("surface map has no valid cells");
  // piston (area-weighted mean) removed before the RMS
  double mean = sw > 0 ? sh / sw : 0.0;
  double s2 = 0;
  for (int i = 0; i < map.n_theta(); ++i) {
    for (int j = 0; j < map.n_phi(); ++j) {
      double v = map.at(i, j);
      if (std::isnan(v)) continue;
      double d = v - mean;
      s2 += wth[i] * wph[j] * d * d;
    }
  }
  SurfaceStats st;
  st.rms_nm = sw > 0 ? std::sqrt(s2 / sw) : 0.0;
  st.pv_nm = mx - mn;
  st.n_valid = n;
  return st;
}

SurfaceMap synthesize_surface(double rms_nm, double corr_angle_rad,
                              std::uint64_t seed, int n_theta, int n_phi,
                              double theta_max_rad) {
  if (rms_nm < 0 || corr_angle_rad <= 0 || n_theta < 2 || n_phi < 4 ||
      theta_max_rad <= 0)
    throw io::UsageError("synthesize_surface: bad arguments");

  SurfaceMap m;
  m.theta.resize(n_theta);
  for (int i = 0; i < n_theta; ++i)
    m.theta[i] = theta_max_rad * i / double(n_theta - 1);
  m.phi.resize(n_phi);
  for (int j = 0; j < n_phi; ++j)
    m.phi[j] = 2.0 * constants::pi * j / double(n_phi);
  m.height_nm.assign(size_t(n_theta) * n_phi, 0.0);

  const double dth = theta_max_rad / (n_theta - 1);
  const double sin_max = std::sin(std::min(theta_max_rad, 0.5 * constants::pi));
  const double dph_arc = 2.0 * constants::pi / n_phi * sin_max;
  if (corr_angle_rad / std::max(dth, dph_arc) < 4.0)
    throw NumericError(
        "synthesize_surface: fewer than 4 samples per correlation length");

  if (rms_nm == 0) return m;

  // random spherical-harmonic expansion: delta = sum_l sqrt(b_l) sum_m a_lm Y_lm
  // with b_l = exp(-l(l+1)a^2/2); truncation where the spectrum is negligible
  const double a2 = corr_angle_rad * corr_angle_rad;
  int L = int(std::ceil(4.0 / corr_angle_rad));
  L = std::clamp(L, 2, 512);
  std::vector<double> sqb(L + 1);
  for (int l = 0; l <= L; ++l)
    sqb[l] = std::exp(-0.25 * l * (l + 1) * a2);

  // coefficients drawn in a fixed order: l ascending, m ascending, cos then sin
  Rng rng(seed);
  std::vector<double> cc((L + 1) * (L + 2) / 2), ss(cc.size(), 0.0);
  auto idx = [](int l, int mm) { return l * (l + 1) / 2 + mm; };
  for (int l = 0; l <= L; ++l) {
    for (int mm = 0; mm <= l; ++mm) {
      cc[idx(l, mm)] = rng.gaussian();
      if (mm > 0) ss[idx(l, mm)] = rng.gaussian();
    }
  }

  // per theta row: orthonormal associated Legendre by stable recurrence, then
  // an azimuthal cosine/sine synthesis
  const double sq4pi = std::sqrt(1.0 / (4.0 * constants::pi));
  std::vector<double> plm(size_t(L + 1));  // P~_{l,m} for fixed m, l = m..L
  std::vector<double> Am(L + 1), Bm(L + 1);
  for (int i = 0; i < n_theta; ++i) {
    const double x = std::cos(m.theta[i]);
    const double sx = std::sin(m.theta[i]);
    std::fill(Am.begin(), Am.end(), 0.0);
    std::fill(Bm.begin(), Bm.end(), 0.0);
    double pmm = sq4pi;
    for (int mm = 0; mm <= L; ++mm) {
      if (mm > 0) pmm *= -std::sqrt((2.0 * mm + 1.0) / (2.0 * mm)) * sx;
      double p_prev2 = 0.0, p_prev = pmm;
      const double root2 = mm > 0 ? std::sqrt(2.0) : 1.0;
      for (int l = mm; l <= L; ++l) {
        double p;
        if (l == mm) {
          p = pmm;
        } else if (l == mm + 1) {
          p = std::sqrt(2.0 * mm + 3.0) * x * pmm;
        } else {
          double a = std::sqrt((4.0 * l * l - 1.0) / double(l * l - mm * mm));
          double b = std::sqrt(((l - 1.0) * (l - 1.0) - mm * mm) /
                               (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
          p = a * (x * p_prev - b * p_prev2);
        }
        Am[mm] += sqb[l] * root2 * p * cc[idx(l, mm)];
        if (mm > 0) Bm[mm] += sqb[l] * root2 * p * ss[idx(l, mm)];
        p_prev2 = p_prev;
        p_prev = p;
      }
    }
    for (int j = 0; j < n_phi; ++j) {
      double s = Am[0];
      for (int mm = 1; mm <= L; ++mm)
        s += Am[mm] * std::cos(mm * m.phi[j]) + Bm[mm] * std::sin(mm * m.phi[j]);
      m.at(i, j) = s;
    }
  }

  // remove the area-weighted mean and rescale to the exact target RMS
  std::vector<double> wth, wph;
  cell_weights(m, wth, wph);
  double sw = 0, sh = 0;
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_phi; ++j) {
      sw += wth[i] * wph[j];
      sh += wth[i] * wph[j] * m.at(i, j);
    }
  double mean = sh / sw;
  double s2 = 0;
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_phi; ++j) {
      m.at(i, j) -= mean;
      s2 += wth[i] * wph[j] * m.at(i, j) * m.at(i, j);
    }
  double rms = std::sqrt(s2 / sw);
  if (!(rms > 0))
    throw NumericError("synthesize_surface: degenerate field, cannot rescale");
  double scale = rms_nm / rms;
  for (double& v : m.height_nm) v *= scale;
  return m;
}

double effective_radius(const MirrorSpec& mirror, double T_K) {
  return mirror.radius_m * (1.0 + mirror.alpha_per_K * (T_K - mirror.T_ref_K));
}

}  // namespace panoptic
