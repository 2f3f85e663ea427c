// Electrode layout and graded panel meshing for the slotted trap.
//
// The front plane is tiled completely: RF ring around the slot, trench
// strips (grounded), DC endcaps, ground out to plane_ext. Back-plane
// electrodes are separated by open trench gaps instead; the lens bore and
// the slot aperture stay unmeshed.

#include "panoptic/trap.hpp"

#include <algorithm>
#include <cmath>

#include "panoptic/io.hpp"

namespace panoptic {

const char* electrode_name(Electrode e) {
  static const char* names[] = {"RF",  "DC1", "DC2", "DC3", "DC4", "DC5",
                                "DC6", "CU",  "CD",  "GR",  "GRB", "MIRROR"};
  return names[static_cast<int>(e)];
}

ElectrodeSet build_geometry(const TrapParams& p) {
  using E = Electrode;
  const double s = p.slot_hw, d1h = 0.5 * p.d1, rw = p.rail_w;
  const double re = p.ring_end, tr = p.trench, pe = p.plane_ext;
  const double dl = p.dc_len, aw2 = 0.5 * p.arm_w, d2 = p.d2;
  const double zdc0 = d1h + re + tr, zdc1 = zdc0 + dl;
  if (s <= 0 || p.d1 <= 0 || rw <= 0 || re <= 0 || tr <= 0 || dl <= 0)
    throw io::UsageError("trap geometry: slot/rail/ring/trench/dc lengths must be positive");
  if (pe < zdc1 + 2 * tr || pe < s + rw + 2 * tr)
    throw io::UsageError("trap geometry: plane_ext too small for the electrode layout");
  if (d2 > s && aw2 >= d1h)
    throw io::UsageError("trap geometry: arm_w must be smaller than d1");

  ElectrodeSet set;
  auto F = [&](double x0, double x1, double z0, double z1, E lab) {
    set.rects.push_back({x0, x1, z0, z1, 0.0, lab, true});
  };
  auto B = [&](double x0, double x1, double z0, double z1, E lab) {
    set.rects.push_back({x0, x1, z0, z1, -p.t_sub, lab, true});
  };

  // RF rails; a cross arm (d2 > slot width) cuts them at |z| < arm_w/2
  if (d2 <= s + 1e-12) {
    F(s, s + rw, -d1h, d1h, E::RF);
    F(-s - rw, -s, -d1h, d1h, E::RF);
  } else {
    for (int sx : {1, -1}) {
      double x0 = sx > 0 ? s : -s - rw;
      double x1 = sx > 0 ? s + rw : -s;
      F(x0, x1, aw2, d1h, E::RF);
      F(x0, x1, -d1h, -aw2, E::RF);
      if (d2 < s + rw - 1e-12)
        F(sx > 0 ? d2 : -s - rw, sx > 0 ? s + rw : -d2, -aw2, aw2, E::RF);
    }
  }
  // RF ring ends past the slot
  F(-s - rw, s + rw, d1h, d1h + re, E::RF);
  F(-s - rw, s + rw, -d1h - re, -d1h, E::RF);
  // trench strips around the ring (grounded bottoms)
  F(s + rw, s + rw + tr, -zdc1 - tr, zdc1 + tr, E::GR);
  F(-s - rw - tr, -s - rw, -zdc1 - tr, zdc1 + tr, E::GR);
  F(-s - rw, s + rw, d1h + re, d1h + re + tr, E::GR);
  F(-s - rw, s + rw, -d1h - re - tr, -d1h - re, E::GR);
  // DC endcaps on the slot axis, trench + ground beyond
  F(-s - rw, s + rw, zdc0, zdc1, E::DC1);
  F(-s - rw, s + rw, -zdc1, -zdc0, E::DC2);
  F(-s - rw, s + rw, zdc1, zdc1 + tr, E::GR);
  F(-s - rw, s + rw, -zdc1 - tr, -zdc1, E::GR);
  F(-s - rw, s + rw, zdc1 + tr, pe, E::GR);
  F(-s - rw, s + rw, -pe, -zdc1 - tr, E::GR);
  F(s + rw + tr, pe, -pe, pe, E::GR);
  F(-pe, -s - rw - tr, -pe, pe, E::GR);

  // back plane: aperture inflated by back_inflate per side
  const double sb = s + p.back_inflate, zb = d1h + p.back_inflate;
  const double cw = p.cu_w, qz = p.quad_z0, qx = sb + tr;
  if (qz <= zb + 2 * tr || qz + 2 * tr >= pe)
    throw io::UsageError("trap geometry: quad_z0 must sit between the aperture end and plane_ext");
  // central column beyond the aperture ends
  B(-sb, sb, zb + tr, pe, E::GRB);
  B(-sb, sb, -pe, -zb - tr, E::GRB);
  // compensation strips along the aperture sides, ground beyond
  B(sb + tr, sb + tr + cw, -qz + tr, qz - tr, E::CU);
  B(-sb - tr - cw, -sb - tr, -qz + tr, qz - tr, E::CD);
  B(sb + 2 * tr + cw, pe, -qz + tr, qz - tr, E::GRB);
  B(-pe, -sb - 2 * tr - cw, -qz + tr, qz - tr, E::GRB);
  // corner quadrants past the aperture ends
  B(qx, pe, qz, pe, E::DC3);
  B(qx, pe, -pe, -qz, E::DC4);
  B(-pe, -qx, qz, pe, E::DC5);
  B(-pe, -qx, -pe, -qz, E::DC6);

  set.has_mirror = p.mirror;
  set.mirror_radius = p.mirror_radius;
  set.mirror_height = p.mirror_height;
  set.mirror_aperture_deg = p.mirror_aperture_deg;
  set.slot_x0 = -s;
  set.slot_x1 = s;
  set.slot_z0 = -d1h;
  set.slot_z1 = d1h;
  set.has_context = true;
  set.grade = {p.band_inner_r, p.band_ion_r, p.band_near_r, p.rim_fac, p.rim_k};
  return set;
}

// ---------------------------------------------------------------------------
// meshing

namespace {

double box_dist(double x0, double x1, double z0, double z1, double bx0,
                double bx1, double bz0, double bz1) {
  double dx = std::max({bx0 - x1, x0 - bx1, 0.0});
  double dz = std::max({bz0 - z1, z0 - bz1, 0.0});
  return std::hypot(dx, dz);
}

double box_dist_corner_max(double x0, double x1, double z0, double z1,
                           double bx0, double bx1, double bz0, double bz1) {
  double dmax = 0;
  for (double a : {x0, x1})
    for (double b : {z0, z1}) {
      double dx = std::max({bx0 - a, a - bx1, 0.0});
      double dz = std::max({bz0 - b, b - bz1, 0.0});
      dmax = std::max(dmax, std::hypot(dx, dz));
    }
  return dmax;
}

// 1D bisection ticks on [a,b] inside the parent electrode span [A,B]. The
// local cell cap follows a sqrt law from the rim size toward the interior
// (surface charge diverges at electrode rims). Midpoint splitting keeps
// tick sets nested when the target edge is halved: the cap is monotone in
// the edge, so every coarse leaf either survives or splits in place.
void ticks1d(double a, double b, double A, double B, double edge, double rim,
             std::vector<double>& out) {
  double d = std::max(0.0, std::min(a - A, B - b));
  double cap = std::min(edge, std::max(rim, 2.0 * std::sqrt(rim * d)));
  if (b - a > cap * (1.0 + 1e-9) && b - a > 2e-6) {
    double m = 0.5 * (a + b);
    ticks1d(a, m, A, B, edge, rim, out);
    out.push_back(m);
    ticks1d(m, b, A, B, edge, rim, out);
  }
}

void emit_quad(PanelMesh& mesh, double x0, double x1, double z0, double z1,
               double y, bool up, Electrode lab) {
  Panel q;
  q.nv = 4;
  q.label = lab;
  if (up) {  // normal +y
    q.v = {Vec3{x0, y, z0}, Vec3{x0, y, z1}, Vec3{x1, y, z1}, Vec3{x1, y, z0}};
  } else {
    q.v = {Vec3{x0, y, z0}, Vec3{x1, y, z0}, Vec3{x1, y, z1}, Vec3{x0, y, z1}};
  }
  mesh.panels.push_back(q);
}

struct Bands {
  double e_ion, e_inner, e_near, e_far;
  double ion_r, inner_r, near_r;
  double rim_fac, rim_k;
};

void mesh_rect_graded(PanelMesh& mesh, const ElectrodeRect& r,
                      const ElectrodeSet& set, const Bands& g) {
  struct Box {
    double x0, x1, z0, z1;
  };
  const bool up = r.y >= -1e-12;  // front plane faces +y, back faces -y
  std::vector<Box> stack{{r.x0, r.x1, r.z0, r.z1}};
  while (!stack.empty()) {
    Box b = stack.back();
    stack.pop_back();
    double w = b.x1 - b.x0, h = b.z1 - b.z0;
    if (w < 1e-9 || h < 1e-9) continue;
    double dmin = box_dist(b.x0, b.x1, b.z0, b.z1, set.slot_x0, set.slot_x1,
                           set.slot_z0, set.slot_z1);
    double dmax = box_dist_corner_max(b.x0, b.x1, b.z0, b.z1, set.slot_x0,
                                      set.slot_x1, set.slot_z0, set.slot_z1);
    double dion = box_dist(b.x0, b.x1, b.z0, b.z1, 0, 0, 0, 0);
    double dion_max = box_dist_corner_max(b.x0, b.x1, b.z0, b.z1, 0, 0, 0, 0);
    double side = std::max(w, h);
    // split boxes straddling a band boundary; thresholds are fixed so the
    // region tree (and therefore panel nesting) is independent of the edge
    bool split = (dmin < g.near_r && g.near_r < dmax && side > 0.8) ||
                 (dmin < g.inner_r && g.inner_r < dmax && side > 0.4) ||
                 (dion < g.ion_r && g.ion_r < dion_max && side > 0.3);
    if (split) {
      if (w >= h) {
        double xm = 0.5 * (b.x0 + b.x1);
        stack.push_back({b.x0, xm, b.z0, b.z1});
        stack.push_back({xm, b.x1, b.z0, b.z1});
      } else {
        double zm = 0.5 * (b.z0 + b.z1);
        stack.push_back({b.x0, b.x1, b.z0, zm});
        stack.push_back({b.x0, b.x1, zm, b.z1});
      }
      continue;
    }
    double edge = dion < g.ion_r    ? g.e_ion
                  : dmin < g.inner_r ? g.e_inner
                  : dmin < g.near_r  ? g.e_near
                                     : g.e_far;
    double rim = edge * (dmin < 1.0 ? std::min(g.rim_k * edge, g.rim_fac) : 1.0);
    std::vector<double> xs{b.x0}, zs{b.z0};
    ticks1d(b.x0, b.x1, r.x0, r.x1, edge, rim, xs);
    xs.push_back(b.x1);
    ticks1d(b.z0, b.z1, r.z0, r.z1, edge, rim, zs);
    zs.push_back(b.z1);
    for (size_t i = 0; i + 1 < xs.size(); ++i)
      for (size_t j = 0; j + 1 < zs.size(); ++j)
        emit_quad(mesh, xs[i], xs[i + 1], zs[j], zs[j + 1], r.y, up, r.label);
  }
}

void mesh_rect_uniform(PanelMesh& mesh, const ElectrodeRect& r, double edge) {
  const bool up = r.y >= -1e-12;
  int nx = std::max(1, int(std::ceil((r.x1 - r.x0) / edge - 1e-9)));
  int nz = std::max(1, int(std::ceil((r.z1 - r.z0) / edge - 1e-9)));
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nz; ++j)
      emit_quad(mesh, r.x0 + (r.x1 - r.x0) * i / nx,
                r.x0 + (r.x1 - r.x0) * (i + 1) / nx,
                r.z0 + (r.z1 - r.z0) * j / nz,
                r.z0 + (r.z1 - r.z0) * (j + 1) / nz, r.y, up, r.label);
}

void finalize_panel(Panel& q) {
  Vec3 c{0, 0, 0};
  for (int i = 0; i < q.nv; ++i) c = c + q.v[i];
  q.centroid = c * (1.0 / q.nv);
  if (q.nv == 3) {
    Vec3 n = cross(q.v[1] - q.v[0], q.v[2] - q.v[0]);
    double nn = n.norm();
    q.area = 0.5 * nn;
    q.normal = nn > 0 ? n * (1.0 / nn) : Vec3{0, 0, 1};
    q.diameter = std::max({(q.v[1] - q.v[0]).norm(), (q.v[2] - q.v[1]).norm(),
                           (q.v[0] - q.v[2]).norm()});
  } else {
    Vec3 n = cross(q.v[1] - q.v[0], q.v[3] - q.v[0]);
    double nn = n.norm();
    q.area = nn;  // axis-aligned rect: |e1 x e2| = full area
    q.normal = nn > 0 ? n * (1.0 / nn) : Vec3{0, 1, 0};
    q.diameter = (q.v[2] - q.v[0]).norm();
  }
}

}  // namespace

void mesh_sphere_into(PanelMesh& mesh, double radius_mm, const Vec3& center_mm,
                      double theta_max_rad, int n_theta, int n_phi,
                      Electrode label) {
  if (radius_mm <= 0 || n_theta < 1 || n_phi < 3 || theta_max_rad <= 0)
    throw io::UsageError("mesh_sphere_into: bad cap parameters");
  auto pt = [&](double t, double p) {
    return center_mm + Vec3{radius_mm * std::sin(t) * std::cos(p),
                            radius_mm * std::cos(t),
                            radius_mm * std::sin(t) * std::sin(p)};
  };
  auto add_tri = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
    Panel q;
    q.nv = 3;
    q.label = label;
    q.v = {a, b, c, c};
    mesh.panels.push_back(q);
  };
  for (int i = 0; i < n_theta; ++i) {
    double t0 = theta_max_rad * i / n_theta;
    double t1 = theta_max_rad * (i + 1) / n_theta;
    for (int j = 0; j < n_phi; ++j) {
      double p0 = 2.0 * constants::pi * j / n_phi;
      double p1 = 2.0 * constants::pi * (j + 1) / n_phi;
      Vec3 a = pt(t0, p0), b = pt(t1, p0), c = pt(t1, p1), d = pt(t0, p1);
      if (i == 0) {
        add_tri(a, b, c);  // pole fan
      } else if (t1 > constants::pi - 1e-12) {
        add_tri(a, b, d);  // south pole fan
      } else {
        add_tri(a, b, c);
        add_tri(a, c, d);
      }
    }
  }
}

PanelMesh mesh_electrodes(const ElectrodeSet& set, double target_edge_m) {
  if (!(target_edge_m > 0))
    throw io::UsageError("mesh_electrodes: target edge must be positive");
  const double e = target_edge_m * 1e3;  // mm
  PanelMesh mesh;
  Bands g;
  g.e_ion = 0.25 * e;
  g.e_inner = 0.5 * e;
  g.e_near = e;
  g.e_far = 3.2 * e;
  g.inner_r = set.grade.inner_r;
  g.ion_r = set.grade.ion_r;
  g.near_r = set.grade.near_r;
  g.rim_fac = set.grade.rim_fac;
  g.rim_k = set.grade.rim_k;
  for (const auto& r : set.rects) {
    ElectrodeRect rr = r;
    if (rr.x1 < rr.x0) std::swap(rr.x0, rr.x1);
    if (rr.z1 < rr.z0) std::swap(rr.z0, rr.z1);
    if (rr.x1 - rr.x0 < 1e-9 || rr.z1 - rr.z0 < 1e-9) continue;
    if (rr.graded && set.has_context)
      mesh_rect_graded(mesh, rr, set, g);
    else
      mesh_rect_uniform(mesh, rr, e);
  }
  if (set.has_mirror)
    mesh_sphere_into(mesh, set.mirror_radius, {0, set.mirror_height, 0},
                     set.mirror_aperture_deg * constants::pi / 180.0, 8, 20,
                     Electrode::MIRROR);
  for (auto& q : mesh.panels) finalize_panel(q);
  if (set.has_context) {
    mesh.has_domain = true;
    mesh.y_front = 0;
    mesh.y_back = 0;
    for (const auto& r : set.rects) {
      mesh.y_front = std::max(mesh.y_front, r.y);
      mesh.y_back = std::min(mesh.y_back, r.y);
    }
    mesh.slot_x0 = set.slot_x0;
    mesh.slot_x1 = set.slot_x1;
    mesh.slot_z0 = set.slot_z0;
    mesh.slot_z1 = set.slot_z1;
  }
  return mesh;
}

double PanelMesh::total_area() const {
  double a = 0;
  for (const auto& q : panels) a += q.area;
  return a;
}

std::string PanelMesh::dump_csv() const {
  io::Csv csv("x1,y1,z1,x2,y2,z2,x3,y3,z3,x4,y4,z4,label");
  for (const auto& q : panels) {
    std::string line;
    for (int i = 0; i < 4; ++i) {
      const Vec3& v = q.v[i < q.nv ? i : q.nv - 1];
      line += io::format_g(v.x * 1e-3) + "," + io::format_g(v.y * 1e-3) + "," +
              io::format_g(v.z * 1e-3) + ",";
    }
    line += electrode_name(q.label);
    csv.row_raw(line);
  }
  return csv.str();
}

}  // namespace panoptic
