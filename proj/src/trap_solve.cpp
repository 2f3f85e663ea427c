// Constant-charge collocation solve of the exterior Dirichlet problem.
// Dense assembly with the exact panel kernels, in-place partial-pivot LU,
// one RHS per driven electrode. Geometry is carried in mm; the kernel
// prefactor 1/(4 pi eps0) and the mm->m scale enter only at evaluation.

#include <algorithm>
#include <cmath>
#include <thread>

#include <Eigen/Dense>

#include "panoptic/io.hpp"
#include "panoptic/trap.hpp"

namespace panoptic {

namespace {

struct PanelGeom {
  // rect: bounds in its plane; tri: vertices
  double x0, x1, z0, z1, y;
  bool is_rect;
};

PanelGeom panel_geom(const Panel& q) {
  PanelGeom g;
  g.is_rect = q.nv == 4;
  if (g.is_rect) {
    g.x0 = std::min({q.v[0].x, q.v[1].x, q.v[2].x, q.v[3].x});
    g.x1 = std::max({q.v[0].x, q.v[1].x, q.v[2].x, q.v[3].x});
    g.z0 = std::min({q.v[0].z, q.v[1].z, q.v[2].z, q.v[3].z});
    g.z1 = std::max({q.v[0].z, q.v[1].z, q.v[2].z, q.v[3].z});
    g.y = q.v[0].y;
  }
  return g;
}

// exact kernels in the trap frame (panels lie in y = const planes)
double panel_phi(const Panel& q, const PanelGeom& g, const Vec3& p) {
  if (g.is_rect)
    return rect_potential(g.x0, g.x1, g.z0, g.z1, {p.x, p.z, p.y - g.y});
  return tri_potential(q.v[0], q.v[1], q.v[2], p);
}

Vec3 panel_E(const Panel& q, const PanelGeom& g, const Vec3& p) {
  if (g.is_rect) {
    Vec3 ek = rect_field(g.x0, g.x1, g.z0, g.z1, {p.x, p.z, p.y - g.y});
    return {ek.x, ek.z, ek.y};
  }
  return tri_field(q.v[0], q.v[1], q.v[2], p);
}

double sign_of(double v) { return v >= 0 ? 1.0 : -1.0; }

// Hager/Higham 1-norm estimate of ||A^-1|| from an LU factorization
template <typename Lu>
double inv_norm1_estimate(const Lu& lu, int n) {
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n);
  double est = 0;
  for (int it = 0; it < 5; ++it) {
    Eigen::VectorXd y = lu.solve(x);
    est = y.template lpNorm<1>();
    if (!std::isfinite(est)) return est;
    Eigen::VectorXd xi = y.unaryExpr([](double v) { return sign_of(v); });
    Eigen::VectorXd z = lu.transpose().solve(xi);
    int j = 0;
    double zmax = z.cwiseAbs().maxCoeff(&j);
    if (zmax <= z.dot(x) * (1.0 + 1e-12)) break;
    x.setZero();
    x(j) = 1.0;
  }
  return est;
}

constexpr double kNearDiameters = 5.0;  // exact kernel within 5 panel diameters

}  // namespace

int BasisField::index_of(Electrode e) const {
  for (size_t i = 0; i < active_.size(); ++i)
    if (active_[i] == e) return int(i);
  return -1;
}

BasisField BasisField::solve(const PanelMesh& mesh) {
  const int n = int(mesh.size());
  if (n == 0) throw io::UsageError("solve_basis: empty mesh");

  BasisField bf;
  bf.mesh_ = std::make_shared<PanelMesh>(mesh);
  const auto& panels = bf.mesh_->panels;

  bool present[int(Electrode::COUNT)] = {};
  for (const auto& q : panels) present[int(q.label)] = true;
  for (int e = 0; e < int(Electrode::COUNT); ++e) {
    if (!present[e]) continue;
    auto lab = Electrode(e);
    if (lab == Electrode::GR || lab == Electrode::GRB ||
        lab == Electrode::MIRROR)
      continue;  // grounded conductors carry charge but no basis vector
    bf.active_.push_back(lab);
  }
  if (bf.active_.empty())
    throw io::UsageError("solve_basis: no driven electrode labels in mesh");

  std::vector<PanelGeom> geom(n);
  for (int j = 0; j < n; ++j) geom[j] = panel_geom(panels[j]);

  Eigen::MatrixXd A(n, n);
  auto fill_cols = [&](int j0, int j1) {
    for (int j = j0; j < j1; ++j)
      for (int i = 0; i < n; ++i)
        A(i, j) = panel_phi(panels[j], geom[j], panels[i].centroid);
  };
  int nthreads = std::min(max_threads(), n);
  if (nthreads > 1) {
    std::vector<std::thread> pool;
    int chunk = (n + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back(fill_cols, t * chunk, std::min(n, (t + 1) * chunk));
    for (auto& th : pool) th.join();
  } else {
    fill_cols(0, n);
  }

  const double norm1_A = A.cwiseAbs().colwise().sum().maxCoeff();

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, int(bf.active_.size()));
  for (int i = 0; i < n; ++i) {
    int k = bf.index_of(panels[i].label);
    if (k >= 0) rhs(i, k) = 1.0;
  }

  Eigen::PartialPivLU<Eigen::Ref<Eigen::MatrixXd>> lu(A);  // in place
  double cond = norm1_A * inv_norm1_estimate(lu, n);
  if (!std::isfinite(cond) || cond > 1e12)
    throw NumericError(
        "solve_basis: ill-conditioned collocation matrix (condition estimate " +
        io::format_g(cond, 3) + "); check for degenerate or overlapping panels "
        "and refine the mesh");

  Eigen::MatrixXd sig = lu.solve(rhs);
  if (!sig.allFinite())
    throw NumericError("solve_basis: singular collocation system");

  bf.sigma_.assign(bf.active_.size(), std::vector<double>(n));
  bf.red_.assign(bf.active_.size(), std::vector<double>(n));
  // reduced density (V/mm) -> SI surface charge: sigma_SI = red * 4 pi eps0 * 1e3
  const double to_si = 4.0 * constants::pi * constants::eps0 * 1e3;
  for (size_t k = 0; k < bf.active_.size(); ++k)
    for (int i = 0; i < n; ++i) {
      bf.red_[k][i] = sig(i, int(k));
      bf.sigma_[k][i] = sig(i, int(k)) * to_si;
    }

  bf.cx_.resize(n);
  bf.cy_.resize(n);
  bf.cz_.resize(n);
  bf.area_.resize(n);
  bf.cut2_.resize(n);
  for (int i = 0; i < n; ++i) {
    bf.cx_[i] = panels[i].centroid.x;
    bf.cy_[i] = panels[i].centroid.y;
    bf.cz_[i] = panels[i].centroid.z;
    bf.area_[i] = panels[i].area;
    double cut = kNearDiameters * panels[i].diameter;
    bf.cut2_[i] = cut * cut;
  }
  return bf;
}

BasisField::Eval BasisField::eval_basis(int i, const Vec3& x_m) const {
  std::vector<double> volts(active_.size(), 0.0);
  volts[size_t(i)] = 1.0;
  return combine(volts).eval(x_m);
}

BasisField::Eval BasisField::eval(const std::vector<double>& volts,
                                  const Vec3& x_m) const {
  return combine(volts).eval(x_m);
}

BasisField::Combined BasisField::combine(const std::vector<double>& volts) const {
  if (volts.size() != active_.size())
    throw io::UsageError("BasisField: voltage vector size mismatch");
  Combined c;
  c.owner = this;
  const int n = int(cx_.size());
  c.q.assign(n, 0.0);
  for (size_t k = 0; k < active_.size(); ++k) {
    if (volts[k] == 0.0) continue;
    const auto& red = red_[k];
    for (int i = 0; i < n; ++i) c.q[i] += volts[k] * red[i] * area_[i];
  }
  return c;
}

BasisField::Eval BasisField::Combined::eval(const Vec3& x_m) const {
  const BasisField& b = *owner;
  const Vec3 p{x_m.x * 1e3, x_m.y * 1e3, x_m.z * 1e3};  // mm
  const auto& panels = b.mesh_->panels;
  const int n = int(q.size());
  double phi = 0;
  Vec3 E{0, 0, 0};
  for (int i = 0; i < n; ++i) {
    double dx = p.x - b.cx_[i], dy = p.y - b.cy_[i], dz = p.z - b.cz_[i];
    double r2 = dx * dx + dy * dy + dz * dz;
    if (r2 > b.cut2_[i]) {
      double inv_r = 1.0 / std::sqrt(r2);
      double inv_r3 = inv_r * inv_r * inv_r;
      phi += q[i] * inv_r;
      E.x += q[i] * dx * inv_r3;
      E.y += q[i] * dy * inv_r3;
      E.z += q[i] * dz * inv_r3;
    } else {
      const Panel& pan = panels[i];
      PanelGeom g = panel_geom(pan);
      double red = q[i] / pan.area;  // back to density
      phi += red * panel_phi(pan, g, p);
      E += red * panel_E(pan, g, p);
    }
  }
  Eval out;
  out.phi = phi;
  out.E = E * 1e3;  // V/mm -> V/m
  return out;
}

std::vector<std::vector<double>> BasisField::capacitance() const {
  const int ne = n_electrodes();
  const auto& panels = mesh_->panels;
  std::vector<std::vector<double>> C(ne, std::vector<double>(ne, 0.0));
  // Q_i = sum of panel charges of electrode i; reduced -> SI carries
  // 4 pi eps0 and the mm -> m length scale once
  const double to_q = 4.0 * constants::pi * constants::eps0 * 1e-3;
  for (int j = 0; j < ne; ++j)
    for (size_t p = 0; p < panels.size(); ++p) {
      int i = index_of(panels[p].label);
      if (i >= 0) C[i][j] += to_q * red_[j][p] * area_[p];
    }
  return C;
}

}  // namespace panoptic
