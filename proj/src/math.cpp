#include "panoptic/math.hpp"

#include <algorithm>
#include <thread>

namespace panoptic {

GaussRule gauss_legendre(int n) {
  if (n < 1) throw NumericError("gauss_legendre: n must be >= 1");
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  // roots come in +/- pairs; solve the upper half by Newton from the
  // Chebyshev-like initial guess
  int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(constants::pi * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  return r;
}

ScalarOpt golden_section_max(const std::function<double(double)>& f, double a,
                             double b, double tol_rel) {
  const double gr = 0.6180339887498949;
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  while (std::abs(b - a) > tol_rel * scale) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    }
  }
  return f1 > f2 ? ScalarOpt{x1, f1} : ScalarOpt{x2, f2};
}

namespace {

std::vector<double> clamp_box(std::vector<double> x, const std::vector<double>& lo,
                              const std::vector<double>& hi) {
  // reflect into the box, then clamp (handles overshoot > one box width)
  for (size_t i = 0; i < x.size(); ++i) {
    double w = hi[i] - lo[i];
    if (w <= 0) {
      x[i] = lo[i];
      continue;
    }
    if (x[i] < lo[i]) x[i] = lo[i] + std::min(lo[i] - x[i], w);
    if (x[i] > hi[i]) x[i] = hi[i] - std::min(x[i] - hi[i], w);
    x[i] = std::clamp(x[i], lo[i], hi[i]);
  }
  return x;
}

}  // namespace

NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x0, std::vector<double> step,
    const std::vector<double>& lo, const std::vector<double>& hi,
    int max_evals, double ftol,
    const std::function<void(const std::vector<double>&, double)>& on_eval) {
  const size_t n = x0.size();
  NelderMeadResult res;
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    double v = f(x);
    ++evals;
    if (on_eval) on_eval(x, v);
    return v;
  };

  std::vector<std::vector<double>> vx(n + 1, x0);
  std::vector<double> vf(n + 1);
  for (size_t i = 0; i < n; ++i) {
    vx[i + 1][i] += step[i];
    vx[i + 1] = clamp_box(vx[i + 1], lo, hi);
  }
  for (size_t i = 0; i <= n; ++i) vf[i] = eval(vx[i]);

  auto order = [&] {
    std::vector<size_t> idx(n + 1);
    for (size_t i = 0; i <= n; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return vf[a] < vf[b]; });
    std::vector<std::vector<double>> nx(n + 1);
    std::vector<double> nf(n + 1);
    for (size_t i = 0; i <= n; ++i) {
      nx[i] = vx[idx[i]];
      nf[i] = vf[idx[i]];
    }
    vx = nx;
    vf = nf;
  };

  order();
  while (evals < max_evals) {
    if (std::abs(vf[n] - vf[0]) <= ftol * (std::abs(vf[0]) + ftol)) break;
    std::vector<double> cen(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) cen[j] += vx[i][j] / double(n);
    }
    auto point = [&](double t) {
      std::vector<double> p(n);
      for (size_t j = 0; j < n; ++j) p[j] = cen[j] + t * (vx[n][j] - cen[j]);
      return clamp_box(p, lo, hi);
    };
    auto xr = point(-1.0);
    double fr = eval(xr);
    if (fr < vf[0]) {
      auto xe = point(-2.0);
      double fe = eval(xe);
      if (fe < fr) {
        vx[n] = xe;
        vf[n] = fe;
      } else {
        vx[n] = xr;
        vf[n] = fr;
      }
    } else if (fr < vf[n - 1]) {
      vx[n] = xr;
      vf[n] = fr;
    } else {
      auto xc = point(fr < vf[n] ? -0.5 : 0.5);
      double fc = eval(xc);
      if (fc < std::min(fr, vf[n])) {
        vx[n] = xc;
        vf[n] = fc;
      } else {
        // shrink toward the best vertex
        for (size_t i = 1; i <= n; ++i) {
          for (size_t j = 0; j < n; ++j) vx[i][j] = vx[0][j] + 0.5 * (vx[i][j] - vx[0][j]);
          vf[i] = eval(vx[i]);
        }
      }
    }
    order();
  }
  res.x = vx[0];
  res.fx = vf[0];
  res.evals = evals;
  return res;
}

namespace {
int g_max_threads = 0;
}

void set_max_threads(int n) { g_max_threads = n > 0 ? n : 0; }

int max_threads() {
  if (g_max_threads > 0) return g_max_threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? int(hw) : 1;
}

double richardson_d2(const std::function<double(double)>& f, double x, double h) {
  auto d2 = [&](double hh) {
    return (f(x + hh) - 2.0 * f(x) + f(x - hh)) / (hh * hh);
  };
  double c = d2(h), c2 = d2(2.0 * h);
  return (4.0 * c - c2) / 3.0;
}

}  // namespace panoptic
