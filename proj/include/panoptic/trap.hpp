#pragma once
// Slotted pseudo-planar Paul trap: parametric electrode geometry, graded
// panel meshing, boundary-element basis solve (exterior Dirichlet,
// constant-charge collocation), pseudopotential characterization,
// micromotion compensation, and slot-shape optimization.
//
// Frame: the front electrode plane is y = 0 with the trap above it (+y); the
// back plane sits at y = -t_sub. The slot axis runs along z, x crosses it.
// All geometry is carried in mm internally; public field evaluations use m.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "panoptic/math.hpp"

namespace panoptic {

// ---------------------------------------------------------------------------
// geometry

struct TrapParams {
  // front plane (all mm)
  double slot_hw = 0.357;    // slot half width (x)
  double d1 = 3.0;           // straight slot length (Fig. 7 d1)
  double d2 = 0.0;           // cross-arm length (0 = plain rectangle)
  double arm_w = 0.85;       // cross-arm width when d2 > 0
  double rail_w = 0.77;      // RF rail width around the slot
  double ring_end = 0.35;    // RF ring width past the slot ends
  double plane_ext = 5.0;    // grounded front plane extent from center
  double trench = 0.1;       // trench gap between electrodes
  // endcaps (front plane, along z past the RF ring)
  double dc_len = 2.0;       // DC1/DC2 length
  // back plane
  double t_sub = 0.35;       // substrate thickness
  double back_inflate = 0.06;  // back slot aperture oversize per side
  double quad_z0 = 0.70;     // DC3..DC6 start along z from center
  double cu_w = 0.4;         // center strip (CU/CD) width
  // mirror
  bool mirror = true;
  double mirror_radius = 12.5;    // mm
  double mirror_height = 0.157;   // center of curvature above the front plane
  double mirror_aperture_deg = 85.0;

  // meshing profile (mm); target_edge is the mesh_electrodes argument
  double band_inner_r = 0.8;   // half-edge band around the slot
  double band_ion_r = 0.7;     // quarter-edge band around the trap center
  double band_near_r = 2.0;    // unit-edge band; 3.2x edge beyond
  double rim_fac = 0.33;       // rim cell cap, fraction of band edge
  double rim_k = 2.13;         // rim = edge*min(rim_k*edge, rim_fac)
};

// electrode labels; GR/GRB are the grounded front/back planes (trench
// bottoms are tied to the back ground)
enum class Electrode : int {
  RF = 0, DC1, DC2, DC3, DC4, DC5, DC6, CU, CD, GR, GRB, MIRROR, COUNT
};
const char* electrode_name(Electrode e);

struct ElectrodeRect {
  // axis-aligned rect in a y = const plane
  double x0, x1, z0, z1, y;
  Electrode label;
  bool graded = true;  // false: uniform ceil division (fixture plates)
};

struct ElectrodeSet {
  std::vector<ElectrodeRect> rects;
  bool has_mirror = false;
  double mirror_radius = 0, mirror_height = 0, mirror_aperture_deg = 0;
  // grading context (mm): slot box on the front plane and the ion point
  double slot_x0 = 0, slot_x1 = 0, slot_z0 = 0, slot_z1 = 0;
  bool has_context = false;
  struct GradeProfile {
    double inner_r = 0.8, ion_r = 0.7, near_r = 2.0;
    double rim_fac = 0.33, rim_k = 2.13;
  } grade;
};

ElectrodeSet build_geometry(const TrapParams& p);

// ---------------------------------------------------------------------------
// mesh

struct Panel {
  // nv = 4: axis-aligned rect in a y = const plane, vertices CCW
  // nv = 3: triangle (mirror)
  std::array<Vec3, 4> v;  // mm
  int nv = 4;
  Electrode label = Electrode::GR;
  Vec3 centroid;          // mm
  Vec3 normal;            // unit, from vertex winding
  double area = 0;        // mm^2
  double diameter = 0;    // mm, circumscribed estimate
};

struct PanelMesh {
  std::vector<Panel> panels;
  size_t size() const { return panels.size(); }
  double total_area() const;
  // CSV panel dump x1,y1,z1,...,x4,y4,z4,label (m); triangles repeat v3
  std::string dump_csv() const;
  // substrate slab and slot aperture (mm) for point-in-solid domain checks;
  // carried over from the electrode set context when present
  bool has_domain = false;
  double y_front = 0, y_back = 0;
  double slot_x0 = 0, slot_x1 = 0, slot_z0 = 0, slot_z1 = 0;
};

// Graded mesh (target_edge in m): finer near the slot and around the trap
// center, rim-graded toward electrode edges. Power-of-two subdivision, so
// halving target_edge yields a strict refinement of the coarser mesh.
PanelMesh mesh_electrodes(const ElectrodeSet& set, double target_edge_m);

// triangulated sphere cap fixture (also used for the trap mirror internally)
void mesh_sphere_into(PanelMesh& mesh, double radius_mm, const Vec3& center_mm,
                      double theta_max_rad, int n_theta, int n_phi,
                      Electrode label);

// ---------------------------------------------------------------------------
// basis solve

class BasisField {
 public:
  // charge densities: per panel, per electrode basis vector
  // evaluator: potential (V) and field (V/m) at exterior points (m)
  struct Eval {
    double phi = 0;
    Vec3 E;  // -grad phi
  };

  static BasisField solve(const PanelMesh& mesh);

  int n_electrodes() const { return int(active_.size()); }
  Electrode electrode(int i) const { return active_[i]; }
  int index_of(Electrode e) const;  // -1 when absent
  const PanelMesh& mesh() const { return *mesh_; }

  // sigma column for one electrode (C/m^2 per volt), panel order
  const std::vector<double>& sigma(int i) const { return sigma_[i]; }

  // evaluate the basis potential/field of electrode i at point x (m)
  Eval eval_basis(int i, const Vec3& x_m) const;
  // combined evaluation under per-electrode voltages (indexed as electrode(i))
  Eval eval(const std::vector<double>& volts, const Vec3& x_m) const;

  // capacitance matrix (F): C[i][j] = charge on electrode i under basis j
  std::vector<std::vector<double>> capacitance() const;

  // effective per-panel charges for a voltage set; fast repeated evals.
  // Holds a bare pointer: must not outlive the BasisField it came from.
  struct Combined {
    const BasisField* owner = nullptr;
    std::vector<double> q;  // reduced charge (V mm), exact/point switch inside
    Eval eval(const Vec3& x_m) const;
  };
  Combined combine(const std::vector<double>& volts) const;

 private:
  std::shared_ptr<const PanelMesh> mesh_;
  std::vector<Electrode> active_;
  std::vector<std::vector<double>> sigma_;  // SI, C/m^2 per volt
  std::vector<std::vector<double>> red_;    // reduced, V/mm
  // flattened panel data for the far-field point-charge sums
  std::vector<double> cx_, cy_, cz_, area_, cut2_;
};

// ---------------------------------------------------------------------------
// drive and characterization

struct TrapDrive {
  double U_rf = 1000.0;        // V amplitude
  double omega_rf = 2.0 * constants::pi * 16.0e6;  // rad/s
  std::vector<double> dc;      // per electrode index of the basis
  double charge = constants::e_charge;
  double mass = constants::m_ba138;
};

class Pseudopotential {
 public:
  using FieldFn = std::function<BasisField::Eval(const Vec3&)>;

  // basis must outlive this object (field closures keep bare pointers)
  Pseudopotential(const BasisField& basis, const TrapDrive& drive);
  // analytic or synthetic fields (unit-drive RF basis, combined DC)
  Pseudopotential(FieldFn rf_basis, FieldFn dc_combined,
                  const TrapDrive& drive);

  // total potential energy (pseudopotential + DC), eV, at x (m)
  double total_eV(const Vec3& x_m) const;
  // pseudopotential part only, eV
  double pseudo_eV(const Vec3& x_m) const;
  // RF basis field (per volt) and combined DC at x
  BasisField::Eval rf_basis(const Vec3& x_m) const;
  BasisField::Eval dc_combined(const Vec3& x_m) const;

  const TrapDrive& drive() const { return drive_; }
  const PanelMesh* mesh() const { return mesh_; }  // null for synthetic fields

 private:
  void check_domain(const Vec3& x_m) const;
  FieldFn rf_fn_, dc_fn_;
  TrapDrive drive_;
  double prefac_ = 0;  // q^2 U^2 / (4 m Omega^2), J per (V/m)^2
  const PanelMesh* mesh_ = nullptr;
};

struct TrapReport {
  Vec3 minimum_m;
  double height_m = 0;              // above the front plane
  double min_electrode_dist_m = 0;
  std::array<double, 3> freq_hz{};  // ascending omega/2pi
  std::array<Vec3, 3> axes{};
  std::array<double, 3> mathieu_q{};
  std::array<double, 3> mathieu_a{};
  double depth_eV = 0;
  Vec3 escape_m;                    // saddle location
  double axial_rf_residual = 0;     // |E_rf . z| per volt at the minimum, V/m/V
  bool q_warning = false;           // any |q| >= 0.4
};

// Newton/eigen characterization; depth by escape-direction ray fan with a
// saddle refinement. depth=false skips the (expensive) depth search.
TrapReport characterize(const Pseudopotential& pp, bool depth = true);
TrapReport characterize(const BasisField& basis, const TrapDrive& drive,
                        bool depth = true);

// Depth cross-check: grid flood fill of the escape region with a threshold
// bisection (path-independence check against the saddle-search depth).
double depth_dense_scan(const BasisField& basis, const TrapDrive& drive,
                        const TrapReport& report);

// DC deltas on {DC3..DC6} nulling the RF field at the DC minimum under an
// extra uniform stray field (V/m). Minimum-norm least squares; throws when a
// direction is uncontrollable.
std::vector<double> compensate_micromotion(const BasisField& basis,
                                           const TrapDrive& drive,
                                           const Vec3& stray_V_per_m = {});

// ---------------------------------------------------------------------------
// slot optimization

struct OptimizeWeights {
  double w_freq = 0;      // -omega_x*omega_y (Hz^2) term
  double w_depth = 0;     // -depth (eV) term
  double w_residual = 1;  // axial RF residual (V/m/V) term
};

struct OptimizeResult {
  TrapParams best;
  double objective = 0;
  std::string trace_csv;  // d1_mm,d2_mm,wx_Hz,wy_Hz,wz_Hz,depth_eV,axial_rf_residual,objective
};

OptimizeResult optimize_slot(const TrapParams& base, const TrapDrive& drive,
                             double d1_lo, double d1_hi, double d2_lo,
                             double d2_hi, const OptimizeWeights& w,
                             double mesh_edge_m, int max_evals = 40);

// ---------------------------------------------------------------------------
// exact panel kernels (exposed for tests)

// potential (factor 1/(4 pi eps0) excluded) of a unit-density axis-aligned
// rect [x0,x1]x[y0,y1] in the z=0 plane, at field point p (same units)
double rect_potential(double x0, double x1, double y0, double y1,
                      const Vec3& p);
Vec3 rect_field(double x0, double x1, double y0, double y1, const Vec3& p);
double tri_potential(const Vec3& a, const Vec3& b, const Vec3& c,
                     const Vec3& p);
Vec3 tri_field(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& p);

}  // namespace panoptic
