// Slot-shape optimization over (d1, d2): coarse grid pre-scan feeding a
// bounded Nelder-Mead. Every distinct geometry evaluation (mesh + solve +
// characterize) lands in the trace CSV, in evaluation order.

#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include "panoptic/io.hpp"
#include "panoptic/trap.hpp"

namespace panoptic {

namespace {

const double kNan = std::numeric_limits<double>::quiet_NaN();
const double kInf = std::numeric_limits<double>::infinity();

struct EvalRow {
  double d1 = 0, d2 = 0;
  double wx = kNan, wy = kNan, wz = kNan;
  double depth = kNan, resid = kNan, obj = kInf;
  bool trapped = false;
};

// frequency along a coordinate: the mode whose principal axis leans most
// into that coordinate
double freq_along(const TrapReport& rep, int coord) {
  int best = 0;
  double amax = -1;
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = rep.axes[size_t(i)];
    const double c = std::abs(coord == 0 ? a.x : (coord == 1 ? a.y : a.z));
    if (c > amax) {
      amax = c;
      best = i;
    }
  }
  return rep.freq_hz[size_t(best)];
}

// RMS of the axial RF basis field over a chain along z through the minimum;
// the point value at the minimum vanishes by symmetry, the chain does not
double axial_chain_rms(const Pseudopotential& pp, const Vec3& min_m) {
  double s2 = 0;
  int n = 0;
  for (int i = -10; i <= 10; ++i) {
    const Vec3 p{min_m.x, min_m.y, min_m.z + i * 0.025e-3};
    const double ez = pp.rf_basis(p).E.z;
    s2 += ez * ez;
    ++n;
  }
  return std::sqrt(s2 / n);
}

EvalRow eval_geometry(const TrapParams& base, const TrapDrive& drive,
                      double d1, double d2, const OptimizeWeights& w,
                      double mesh_edge_m) {
  EvalRow row;
  row.d1 = d1;
  row.d2 = d2;
  const bool need_depth = w.w_depth != 0;
  try {
    TrapParams p = base;
    p.d1 = d1;
    p.d2 = d2;
    const PanelMesh mesh = mesh_electrodes(build_geometry(p), mesh_edge_m);
    const BasisField basis = BasisField::solve(mesh);
    const Pseudopotential pp(basis, drive);
    const TrapReport rep = characterize(pp, need_depth);
    row.wx = freq_along(rep, 0);
    row.wy = freq_along(rep, 1);
    row.wz = freq_along(rep, 2);
    row.depth = need_depth ? rep.depth_eV : kNan;
    row.resid = axial_chain_rms(pp, rep.minimum_m);
    row.obj = w.w_freq * (-row.wx * row.wy) +
              (need_depth ? w.w_depth * (-row.depth) : 0.0) +
              w.w_residual * row.resid;
    row.trapped = true;
  } catch (const NumericError&) {
    // untrapped or unsolvable geometry: keep the row, poison the objective
  } catch (const io::UsageError&) {
    // search range wandered into an inconsistent geometry: same treatment
  }
  return row;
}

}  // namespace

OptimizeResult optimize_slot(const TrapParams& base, const TrapDrive& drive,
                             double d1_lo, double d1_hi, double d2_lo,
                             double d2_hi, const OptimizeWeights& w,
                             double mesh_edge_m, int max_evals) {
  if (!(d1_hi >= d1_lo) || !(d2_hi >= d2_lo))
    throw io::UsageError("optimize_slot: search ranges must satisfy lo <= hi");
  if (w.w_freq < 0 || w.w_depth < 0 || w.w_residual < 0)
    throw io::UsageError("optimize_slot: objective weights must be >= 0");
  if (max_evals < 1)
    throw io::UsageError("optimize_slot: eval budget must be positive");

  std::vector<EvalRow> rows;
  std::map<std::pair<double, double>, double> seen;  // -> objective
  auto eval_cached = [&](double d1, double d2) {
    d1 += 0.0;  // normalize -0.0
    d2 += 0.0;
    auto it = seen.find({d1, d2});
    if (it != seen.end()) return it->second;
    rows.push_back(eval_geometry(base, drive, d1, d2, w, mesh_edge_m));
    seen.insert({{d1, d2}, rows.back().obj});
    return rows.back().obj;
  };

  const bool free1 = d1_hi > d1_lo, free2 = d2_hi > d2_lo;
  std::vector<double> d1s = free1
      ? std::vector<double>{d1_lo, 0.5 * (d1_lo + d1_hi), d1_hi}
      : std::vector<double>{d1_lo};
  std::vector<double> d2s = free2
      ? std::vector<double>{d2_lo, 0.5 * (d2_lo + d2_hi), d2_hi}
      : std::vector<double>{d2_lo};
  for (double a : d1s)
    for (double b : d2s) eval_cached(a, b);

  size_t ibest = 0;
  for (size_t i = 1; i < rows.size(); ++i)
    if (rows[i].obj < rows[ibest].obj) ibest = i;

  if ((free1 || free2) && int(rows.size()) < max_evals) {
    std::vector<double> x0, step, lo, hi;
    if (free1) {
      x0.push_back(rows[ibest].d1);
      step.push_back(0.25 * (d1_hi - d1_lo));
      lo.push_back(d1_lo);
      hi.push_back(d1_hi);
    }
    if (free2) {
      x0.push_back(rows[ibest].d2);
      step.push_back(0.25 * (d2_hi - d2_lo));
      lo.push_back(d2_lo);
      hi.push_back(d2_hi);
    }
    auto f = [&](const std::vector<double>& v) {
      size_t k = 0;
      const double a = free1 ? v[k++] : d1_lo;
      const double b = free2 ? v[k] : d2_lo;
      return eval_cached(a, b);
    };
    nelder_mead(f, x0, step, lo, hi, max_evals - int(rows.size()), 1e-10);
    for (size_t i = 0; i < rows.size(); ++i)
      if (rows[i].obj < rows[ibest].obj) ibest = i;
  }

  if (!rows[ibest].trapped) {
    std::ostringstream os;
    os << "optimize_slot: none of the " << rows.size()
       << " evaluated geometries produced a confining trap";
    throw NumericError(os.str());
  }

  io::Csv csv("d1_mm,d2_mm,wx_Hz,wy_Hz,wz_Hz,depth_eV,axial_rf_residual,objective");
  for (const EvalRow& r : rows)
    csv.row({r.d1, r.d2, r.wx, r.wy, r.wz, r.depth, r.resid, r.obj});

  OptimizeResult out;
  out.best = base;
  out.best.d1 = rows[ibest].d1;
  out.best.d2 = rows[ibest].d2;
  out.objective = rows[ibest].obj;
  out.trace_csv = csv.str();
  return out;
}

}  // namespace panoptic
