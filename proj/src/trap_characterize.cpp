// Pseudopotential characterization: minimum search (grid seed + Newton),
// secular frequencies from a Richardson-extrapolated Hessian, Mathieu
// parameters, trap depth (escape-direction fan with saddle refinement, plus
// an independent flood-fill scan), and stray-field compensation.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>
#include <vector>

#include "panoptic/io.hpp"
#include "panoptic/trap.hpp"

namespace panoptic {

namespace {

constexpr double kMm = 1e-3;  // mm -> m
const double kInf = std::numeric_limits<double>::infinity();

std::string fmt_point_mm(const Vec3& x_mm) {
  std::ostringstream os;
  os << "(" << x_mm.x << ", " << x_mm.y << ", " << x_mm.z << ") mm";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Pseudopotential

Pseudopotential::Pseudopotential(const BasisField& basis,
                                 const TrapDrive& drive)
    : drive_(drive) {
  int irf = basis.index_of(Electrode::RF);
  if (irf < 0)
    throw io::UsageError("pseudopotential: basis has no RF electrode");
  std::vector<double> vrf(size_t(basis.n_electrodes()), 0.0);
  vrf[size_t(irf)] = 1.0;
  std::vector<double> vdc = drive.dc;
  if (vdc.empty()) vdc.assign(size_t(basis.n_electrodes()), 0.0);
  if (int(vdc.size()) != basis.n_electrodes())
    throw io::UsageError(
        "pseudopotential: dc voltage count does not match the electrode "
        "count");
  drive_.dc = vdc;
  rf_fn_ = [c = basis.combine(vrf)](const Vec3& x) { return c.eval(x); };
  dc_fn_ = [c = basis.combine(vdc)](const Vec3& x) { return c.eval(x); };
  mesh_ = &basis.mesh();
  const double q = drive_.charge, U = drive_.U_rf, w = drive_.omega_rf;
  prefac_ = q * q * U * U / (4.0 * drive_.mass * w * w);
}

Pseudopotential::Pseudopotential(FieldFn rf_basis, FieldFn dc_combined,
                                 const TrapDrive& drive)
    : rf_fn_(std::move(rf_basis)), dc_fn_(std::move(dc_combined)),
      drive_(drive) {
  const double q = drive_.charge, U = drive_.U_rf, w = drive_.omega_rf;
  prefac_ = q * q * U * U / (4.0 * drive_.mass * w * w);
}

void Pseudopotential::check_domain(const Vec3& x_m) const {
  if (!mesh_ || !mesh_->has_domain) return;
  const double x = x_m.x / kMm, y = x_m.y / kMm, z = x_m.z / kMm;
  const double tol = 1e-9;
  if (y >= mesh_->y_front - tol || y <= mesh_->y_back + tol) return;
  if (x > mesh_->slot_x0 + tol && x < mesh_->slot_x1 - tol &&
      z > mesh_->slot_z0 + tol && z < mesh_->slot_z1 - tol)
    return;  // inside the slot aperture
  throw NumericError("field evaluation at " + fmt_point_mm({x, y, z}) +
                     " lies inside the substrate slab");
}

double Pseudopotential::pseudo_eV(const Vec3& x_m) const {
  check_domain(x_m);
  const BasisField::Eval rf = rf_fn_(x_m);
  return prefac_ * rf.E.dot(rf.E) / constants::e_charge;
}

double Pseudopotential::total_eV(const Vec3& x_m) const {
  check_domain(x_m);
  const BasisField::Eval rf = rf_fn_(x_m);
  const BasisField::Eval dc = dc_fn_(x_m);
  return (prefac_ * rf.E.dot(rf.E) + drive_.charge * dc.phi) /
         constants::e_charge;
}

BasisField::Eval Pseudopotential::rf_basis(const Vec3& x_m) const {
  check_domain(x_m);
  return rf_fn_(x_m);
}

BasisField::Eval Pseudopotential::dc_combined(const Vec3& x_m) const {
  check_domain(x_m);
  return dc_fn_(x_m);
}

// ---------------------------------------------------------------------------
// minimum search

namespace {

using PhiMm = std::function<double(const Vec3&)>;  // eV at a mm point

// total energy with solid-domain points mapped to +inf (scans cross the slab)
PhiMm phi_of(const Pseudopotential& pp) {
  return [&pp](const Vec3& x_mm) {
    try {
      return pp.total_eV(x_mm * kMm);
    } catch (const NumericError&) {
      return kInf;
    }
  };
}

struct ScanStats {
  double vmin = kInf, vmax = -kInf;
  void add(double v) {
    if (std::isfinite(v)) {
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  }
};

// shrinking lattice descent; the 2.2/(n-1) factor keeps the next box
// overlapping the current cell so a minimum on a cell edge is not lost
Vec3 grid_refine(const PhiMm& f, Vec3 c, Vec3 h, int n, int rounds,
                 ScanStats* stats) {
  for (int round = 0; round < rounds; ++round) {
    Vec3 best = c;
    double vbest = kInf;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double fi = 2.0 * i / (n - 1) - 1.0;
          const double fj = 2.0 * j / (n - 1) - 1.0;
          const double fk = 2.0 * k / (n - 1) - 1.0;
          const Vec3 p{c.x + fi * h.x, c.y + fj * h.y, c.z + fk * h.z};
          const double v = f(p);
          if (stats) stats->add(v);
          if (v < vbest) {
            vbest = v;
            best = p;
          }
        }
    c = best;
    h = h * (2.2 / (n - 1));
  }
  return c;
}

// gradient and (plain central) Hessian of f at x, step h (mm)
void fd_grad_hess(const PhiMm& f, const Vec3& x, double h, Eigen::Vector3d& g,
                  Eigen::Matrix3d& H) {
  const Vec3 e[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const double f0 = f(x);
  double fp[3], fm[3];
  for (int i = 0; i < 3; ++i) {
    fp[i] = f(x + e[i] * h);
    fm[i] = f(x - e[i] * h);
    g(i) = (fp[i] - fm[i]) / (2 * h);
    H(i, i) = (fp[i] - 2 * f0 + fm[i]) / (h * h);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const double v =
          (f(x + e[i] * h + e[j] * h) - f(x + e[i] * h - e[j] * h) -
           f(x - e[i] * h + e[j] * h) + f(x - e[i] * h - e[j] * h)) /
          (4 * h * h);
      H(i, j) = H(j, i) = v;
    }
}

// Newton polish with an eigenvalue-filtered step (flat directions are left
// alone, e.g. the axial direction of an ideal 2D quadrupole)
Vec3 newton_polish(const PhiMm& f, Vec3 x, int iters) {
  Eigen::Vector3d g;
  Eigen::Matrix3d H;
  for (int it = 0; it < iters; ++it) {
    fd_grad_hess(f, x, 2e-3, g, H);
    if (!g.allFinite() || !H.allFinite()) break;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
    const Eigen::Vector3d lam = es.eigenvalues();
    const double lmax = lam.cwiseAbs().maxCoeff();
    Eigen::Vector3d step = Eigen::Vector3d::Zero();
    for (int i = 0; i < 3; ++i) {
      if (lam(i) > 1e-9 * lmax) {
        const double c = es.eigenvectors().col(i).dot(g) / lam(i);
        step -= c * es.eigenvectors().col(i);
      }
    }
    const double slen = step.norm();
    if (slen > 0.05) step *= 0.05 / slen;  // trust region, mm
    const Vec3 xn{x.x + step(0), x.y + step(1), x.z + step(2)};
    if (!std::isfinite(f(xn))) break;
    x = xn;
    if (slen < 1e-9) break;
  }
  return x;
}

// Richardson-extrapolated Hessian (central differences, base step 1 um)
Eigen::Matrix3d hessian_rich(const PhiMm& f, const Vec3& x) {
  const double h = 1e-3;  // mm
  const Vec3 e[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  Eigen::Matrix3d H;
  for (int i = 0; i < 3; ++i) {
    auto f1 = [&](double t) { return f(x + e[i] * t); };
    H(i, i) = richardson_d2(f1, 0.0, h);
  }
  auto cross = [&](int i, int j, double hh) {
    return (f(x + e[i] * hh + e[j] * hh) - f(x + e[i] * hh - e[j] * hh) -
            f(x - e[i] * hh + e[j] * hh) + f(x - e[i] * hh - e[j] * hh)) /
           (4 * hh * hh);
  };
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const double v = (4.0 * cross(i, j, h) - cross(i, j, 2 * h)) / 3.0;
      H(i, j) = H(j, i) = v;
    }
  return H;
}

// scan |E_rf| along the oy axis for the seed height
double axis_null_y(const Pseudopotential& pp, double lo, double hi) {
  double best = 0.5 * (lo + hi);
  for (int round = 0; round < 3; ++round) {
    const int n = 64;
    double vbest = kInf;
    for (int i = 0; i < n; ++i) {
      const double y = lo + (hi - lo) * i / (n - 1);
      double v;
      try {
        v = pp.rf_basis(Vec3{0, y, 0} * kMm).E.norm();
      } catch (const NumericError&) {
        continue;
      }
      if (v < vbest) {
        vbest = v;
        best = y;
      }
    }
    const double step = (hi - lo) / (n - 1);
    lo = best - 1.6 * step;
    hi = best + 1.6 * step;
  }
  return best;
}

Vec3 find_minimum(const Pseudopotential& pp, ScanStats* stats) {
  const PhiMm f = phi_of(pp);
  Vec3 seed{0, 0, 0};
  if (pp.mesh()) {
    seed.y = axis_null_y(pp, 0.02, 1.5);
  } else {
    double vbest = kInf;
    for (int i = 0; i < 161; ++i) {
      const double y = -1.0 + 2.5 * i / 160.0;
      const double v = f({0, y, 0});
      if (v < vbest) {
        vbest = v;
        seed.y = y;
      }
    }
  }
  Vec3 c = grid_refine(f, seed, {0.06, 0.06, 0.06}, 7, 8, stats);
  c = newton_polish(f, c, 6);
  const bool runaway = std::abs(c.x) > 3.0 || c.y > 3.0 ||
                       std::abs(c.z) > 4.5 ||
                       (pp.mesh() && c.y < 0.015) || !std::isfinite(f(c));
  if (runaway) {
    std::ostringstream os;
    os << "characterize: no confining minimum (descent ran out to "
       << fmt_point_mm(c) << ")";
    if (stats && std::isfinite(stats->vmin))
      os << "; scanned total potential range [" << stats->vmin << ", "
         << stats->vmax << "] eV";
    throw NumericError(os.str());
  }
  return c;
}

// ---------------------------------------------------------------------------
// depth search

struct RayBarrier {
  bool escaped = false;
  double vmax = -kInf;  // highest total energy seen along the ray, eV
  double t_at = 0;      // mm
};

RayBarrier march_ray(const PhiMm& f, const Vec3& r0, const Vec3& u, double v0,
                     double t_max, double dt) {
  RayBarrier rb;
  for (double t = dt; t <= t_max + 1e-12; t += dt) {
    const double v = f(r0 + u * t);
    if (!std::isfinite(v)) return rb;     // hit the substrate: blocked
    if (v > v0 + 40.0) return rb;         // hard wall, give up early
    if (v > rb.vmax) {
      rb.vmax = v;
      rb.t_at = t;
    }
    const double drop = std::max(0.05 * (rb.vmax - v0), 2e-3);
    if (rb.vmax > v0 && v < rb.vmax - drop) {
      rb.escaped = true;
      return rb;
    }
  }
  return rb;
}

// max along the ray segment around t0: coarse scan plus a golden refine
double ray_max(const PhiMm& f, const Vec3& base, const Vec3& u, double t0,
               double half, double* t_best) {
  const int n = 31;
  const double lo = std::max(0.02, t0 - half), hi = t0 + half;
  double vb = -kInf, tb = lo;
  for (int i = 0; i < n; ++i) {
    const double t = lo + (hi - lo) * i / (n - 1);
    const double v = f(base + u * t);
    if (std::isfinite(v) && v > vb) {
      vb = v;
      tb = t;
    }
  }
  const double step = (hi - lo) / (n - 1);
  auto g = [&](double t) {
    const double v = f(base + u * t);
    return std::isfinite(v) ? v : -1e30;
  };
  ScalarOpt opt = golden_section_max(g, std::max(lo, tb - step),
                                     std::min(hi, tb + step), 1e-5);
  if (opt.fx > vb) {
    vb = opt.fx;
    tb = opt.x;
  }
  if (t_best) *t_best = tb;
  return vb;
}

void depth_by_rays(const Pseudopotential& pp, const Vec3& min_mm, double v0,
                   TrapReport& rep) {
  const PhiMm f = phi_of(pp);
  const int n_dir = 64;
  const double golden_ang = constants::pi * (3.0 - std::sqrt(5.0));
  double best_barrier = kInf, best_t = 0;
  Vec3 best_u{0, 1, 0};
  double wall_max = -kInf;
  for (int k = 0; k < n_dir; ++k) {
    const double cy = 1.0 - 2.0 * (k + 0.5) / n_dir;
    const double r = std::sqrt(std::max(0.0, 1.0 - cy * cy));
    const double ph = golden_ang * k;
    const Vec3 u{r * std::cos(ph), cy, r * std::sin(ph)};
    const RayBarrier rb = march_ray(f, min_mm, u, v0, 6.0, 0.02);
    if (rb.vmax > -kInf) wall_max = std::max(wall_max, rb.vmax);
    if (rb.escaped && rb.vmax < best_barrier) {
      best_barrier = rb.vmax;
      best_t = rb.t_at;
      best_u = u;
    }
  }
  if (!std::isfinite(best_barrier)) {
    // nothing escapes inside the scan radius: report the scanned wall height
    rep.depth_eV = (wall_max > -kInf ? wall_max - v0 : 0.0);
    rep.escape_m = min_mm * kMm;
    return;
  }
  // saddle refinement: minimize, over the transverse plane, the maximum
  // along the escape direction (the minimax point is the saddle)
  const Vec3 a = std::abs(best_u.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
  const Vec3 p = best_u.cross(a).normalized();
  const Vec3 q = best_u.cross(p);
  auto g = [&](const std::vector<double>& ab) {
    const Vec3 base = min_mm + p * ab[0] + q * ab[1];
    return ray_max(f, base, best_u, best_t, 0.6, nullptr);
  };
  NelderMeadResult nm =
      nelder_mead(g, {0.0, 0.0}, {0.08, 0.08}, {-0.5, -0.5}, {0.5, 0.5}, 70,
                  1e-6);
  double t_saddle = best_t;
  const Vec3 base = min_mm + p * nm.x[0] + q * nm.x[1];
  const double v_saddle = ray_max(f, base, best_u, best_t, 0.6, &t_saddle);
  const double barrier = std::min(best_barrier, v_saddle);
  rep.depth_eV = barrier - v0;
  rep.escape_m = (base + best_u * t_saddle) * kMm;
}

}  // namespace

// ---------------------------------------------------------------------------
// characterize

TrapReport characterize(const Pseudopotential& pp, bool depth) {
  ScanStats stats;
  const Vec3 min_mm = find_minimum(pp, &stats);
  const PhiMm f = phi_of(pp);
  const double v0 = f(min_mm);

  Eigen::Matrix3d H = hessian_rich(f, min_mm);  // eV / mm^2
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
  const Eigen::Vector3d lam = es.eigenvalues();  // ascending
  const double lmax = lam.cwiseAbs().maxCoeff();
  if (!(lmax > 0) || lam(0) < -1e-6 * lmax) {
    std::ostringstream os;
    os << "characterize: stationary point at " << fmt_point_mm(min_mm)
       << " is not a confining minimum (curvatures " << lam(0) << ", "
       << lam(1) << ", " << lam(2) << " eV/mm^2); scanned total potential "
       << "range [" << stats.vmin << ", " << stats.vmax << "] eV";
    throw NumericError(os.str());
  }

  TrapReport rep;
  rep.minimum_m = min_mm * kMm;
  const double m = pp.drive().mass;
  for (int i = 0; i < 3; ++i) {
    // eV/mm^2 -> J/m^2; omega = sqrt(U''/m)
    const double k_si = lam(i) * constants::e_charge * 1e6;
    rep.freq_hz[size_t(i)] =
        k_si > 0 ? std::sqrt(k_si / m) / (2 * constants::pi) : 0.0;
    Eigen::Vector3d v = es.eigenvectors().col(i);
    int imax = 0;
    for (int d = 1; d < 3; ++d)
      if (std::abs(v(d)) > std::abs(v(imax))) imax = d;
    if (v(imax) < 0) v = -v;
    rep.axes[size_t(i)] = Vec3{v(0), v(1), v(2)};
  }

  // Mathieu parameters from the RF/DC curvature split along each principal
  // axis (field differences, 1 um base step, Richardson-extrapolated)
  const Vec3 min_m = rep.minimum_m;
  const TrapDrive& dr = pp.drive();
  for (int i = 0; i < 3; ++i) {
    const Vec3 u = rep.axes[size_t(i)];
    auto kappa = [&](bool rf, double h) {
      const BasisField::Eval ep = rf ? pp.rf_basis(min_m + u * h)
                                     : pp.dc_combined(min_m + u * h);
      const BasisField::Eval em = rf ? pp.rf_basis(min_m - u * h)
                                     : pp.dc_combined(min_m - u * h);
      return -(ep.E.dot(u) - em.E.dot(u)) / (2 * h);  // d2(phi)/du2, V/m^2
    };
    const double k_rf = (4 * kappa(true, 1e-6) - kappa(true, 2e-6)) / 3;
    const double k_dc = (4 * kappa(false, 1e-6) - kappa(false, 2e-6)) / 3;
    const double mo2 = m * dr.omega_rf * dr.omega_rf;
    rep.mathieu_q[size_t(i)] = 2.0 * dr.charge * dr.U_rf * k_rf / mo2;
    rep.mathieu_a[size_t(i)] = 4.0 * dr.charge * k_dc / mo2;
    if (std::abs(rep.mathieu_q[size_t(i)]) >= 0.4) rep.q_warning = true;
  }

  rep.axial_rf_residual = std::abs(pp.rf_basis(min_m).E.z);

  if (pp.mesh() && pp.mesh()->has_domain)
    rep.height_m = min_m.y - pp.mesh()->y_front * kMm;
  else
    rep.height_m = min_m.y;

  if (pp.mesh()) {
    double dmin = kInf;
    for (const Panel& pl : pp.mesh()->panels) {
      if (pl.nv == 4) {
        // axis-aligned rect in a y = const plane: exact distance
        const double x0 = std::min(pl.v[0].x, pl.v[2].x);
        const double x1 = std::max(pl.v[0].x, pl.v[2].x);
        const double z0 = std::min(pl.v[0].z, pl.v[2].z);
        const double z1 = std::max(pl.v[0].z, pl.v[2].z);
        const double dx = std::max({x0 - min_mm.x, 0.0, min_mm.x - x1});
        const double dz = std::max({z0 - min_mm.z, 0.0, min_mm.z - z1});
        const double dy = min_mm.y - pl.v[0].y;
        dmin = std::min(dmin, std::sqrt(dx * dx + dy * dy + dz * dz));
      } else {
        for (int k = 0; k < 3; ++k)
          dmin = std::min(dmin, (pl.v[size_t(k)] - min_mm).norm());
        dmin = std::min(dmin, (pl.centroid - min_mm).norm());
      }
    }
    rep.min_electrode_dist_m = dmin * kMm;
  }

  if (depth) depth_by_rays(pp, min_mm, v0, rep);
  return rep;
}

TrapReport characterize(const BasisField& basis, const TrapDrive& drive,
                        bool depth) {
  Pseudopotential pp(basis, drive);
  return characterize(pp, depth);
}

// ---------------------------------------------------------------------------
// dense escape scan (depth cross-check)

double depth_dense_scan(const BasisField& basis, const TrapDrive& drive,
                        const TrapReport& report) {
  Pseudopotential pp(basis, drive);
  const PhiMm f = phi_of(pp);
  const int nx = 33, ny = 36, nz = 49;
  const double x0 = -1.3, x1 = 1.3;
  const double y0 = 0.03, y1 = 2.8;
  const double z0 = -3.8, z1 = 3.8;
  auto xs = [&](int i) { return x0 + (x1 - x0) * i / (nx - 1); };
  auto ys = [&](int j) { return y0 + (y1 - y0) * j / (ny - 1); };
  auto zs = [&](int k) { return z0 + (z1 - z0) * k / (nz - 1); };

  std::vector<double> phi(size_t(nx) * ny * nz);
  auto idx = [&](int i, int j, int k) { return (size_t(i) * ny + j) * nz + k; };
  const int nthreads = std::min(max_threads(), nx);
  auto fill = [&](int i_begin, int i_end) {
    for (int i = i_begin; i < i_end; ++i)
      for (int j = 0; j < ny; ++j)
        for (int k = 0; k < nz; ++k)
          phi[idx(i, j, k)] = f({xs(i), ys(j), zs(k)});
  };
  if (nthreads > 1) {
    std::vector<std::thread> pool;
    const int chunk = (nx + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back(fill, t * chunk, std::min(nx, (t + 1) * chunk));
    for (auto& th : pool) th.join();
  } else {
    fill(0, nx);
  }

  const Vec3 min_mm = report.minimum_m * (1.0 / kMm);
  const double v0 = f(min_mm);
  auto nearest = [](double v, double a, double b, int n) {
    int i = int(std::lround((v - a) / (b - a) * (n - 1)));
    return std::max(0, std::min(n - 1, i));
  };
  const int si = nearest(min_mm.x, x0, x1, nx);
  const int sj = nearest(min_mm.y, y0, y1, ny);
  const int sk = nearest(min_mm.z, z0, z1, nz);

  // flood fill below v0+thr from the minimum; escape when the component
  // reaches the lateral or top boundary (below-plane routes are not modeled)
  std::vector<uint8_t> seen(phi.size());
  std::vector<int> stack;
  auto escapes = [&](double thr) {
    std::fill(seen.begin(), seen.end(), 0);
    stack.clear();
    const double cap = v0 + thr;
    if (!(phi[idx(si, sj, sk)] <= cap)) return false;
    seen[idx(si, sj, sk)] = 1;
    stack.push_back(si * ny * nz + sj * nz + sk);
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      const int i = c / (ny * nz), j = (c / nz) % ny, k = c % nz;
      if (i == 0 || i == nx - 1 || j == ny - 1 || k == 0 || k == nz - 1)
        return true;
      const int di[6] = {1, -1, 0, 0, 0, 0};
      const int dj[6] = {0, 0, 1, -1, 0, 0};
      const int dk[6] = {0, 0, 0, 0, 1, -1};
      for (int d = 0; d < 6; ++d) {
        const int ii = i + di[d], jj = j + dj[d], kk = k + dk[d];
        if (ii < 0 || ii >= nx || jj < 0 || jj >= ny || kk < 0 || kk >= nz)
          continue;
        const size_t id = idx(ii, jj, kk);
        if (!seen[id] && phi[id] <= cap) {
          seen[id] = 1;
          stack.push_back(int(id));
        }
      }
    }
    return false;
  };

  double lo = 0.0, hi = 20.0;
  if (!escapes(hi)) return hi;  // deeper than the scan can resolve
  for (int round = 0; round < 18; ++round) {
    const double mid = 0.5 * (lo + hi);
    if (escapes(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// micromotion compensation

std::vector<double> compensate_micromotion(const BasisField& basis,
                                           const TrapDrive& drive,
                                           const Vec3& stray_V_per_m) {
  const Electrode comp[4] = {Electrode::DC3, Electrode::DC4, Electrode::DC5,
                             Electrode::DC6};
  int col[4];
  for (int c = 0; c < 4; ++c) {
    col[c] = basis.index_of(comp[c]);
    if (col[c] < 0)
      throw io::UsageError(std::string("compensation: basis lacks electrode ") +
                           electrode_name(comp[c]));
  }

  // operating point: the total-potential minimum under the nominal drive
  Pseudopotential pp(basis, drive);
  ScanStats stats;
  const Vec3 r0 = find_minimum(pp, &stats) * kMm;

  // control matrix: field per volt of each compensation electrode at r0.
  // The deltas cancel the uniform stray field exactly at the operating
  // point, so the static stationary point returns there.
  Eigen::Matrix<double, 3, 4> M;
  for (int c = 0; c < 4; ++c) {
    const BasisField::Eval ev = basis.eval_basis(col[c], r0);
    M(0, c) = ev.E.x;
    M(1, c) = ev.E.y;
    M(2, c) = ev.E.z;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  if (!(s(0) > 0) || s(2) / s(0) < 1e-10) {
    const Eigen::Vector3d u = svd.matrixU().col(2);
    std::ostringstream os;
    os << "compensation: stray field direction (" << u(0) << ", " << u(1)
       << ", " << u(2) << ") is uncontrollable with DC3..DC6";
    throw NumericError(os.str());
  }
  const Eigen::Vector3d rhs(-stray_V_per_m.x, -stray_V_per_m.y,
                            -stray_V_per_m.z);
  const Eigen::VectorXd delta = svd.solve(rhs);  // minimum-norm least squares
  return {delta(0), delta(1), delta(2), delta(3)};
}

}  // namespace panoptic
