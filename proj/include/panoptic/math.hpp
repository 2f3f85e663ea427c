#pragma once
// Small numerical toolbox shared by all modules: constants, 3-vectors,
// Gauss-Legendre nodes, bracketed 1-D maximization, bounded Nelder-Mead,
// and a deterministic normal RNG (mt19937_64 + Box-Muller, spec'd sequences).

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace panoptic {

namespace constants {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double c0 = 299792458.0;              // m/s
inline constexpr double eps0 = 8.8541878128e-12;       // F/m
inline constexpr double e_charge = 1.602176634e-19;    // C
inline constexpr double amu = 1.66053906660e-27;       // kg
inline constexpr double m_ba138 = 137.905 * amu;       // kg
}  // namespace constants

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3 operator-() const { return {-x, -y, -z}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const { return *this / norm(); }
};
inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.dot(b); }
inline Vec3 cross(const Vec3& a, const Vec3& b) { return a.cross(b); }

// Worker-parallelism cap (CLI --threads). 0 resets to the hardware count.
void set_max_threads(int n);
int max_threads();

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Gauss-Legendre nodes/weights on [-1, 1]; Newton on the recurrence.
struct GaussRule {
  std::vector<double> x, w;
};
GaussRule gauss_legendre(int n);

// Maximize a unimodal f on [a, b]; tol is relative on the argument.
struct ScalarOpt {
  double x, fx;
};
ScalarOpt golden_section_max(const std::function<double(double)>& f, double a,
                             double b, double tol_rel = 1e-4);

// Bounded Nelder-Mead (reflect out-of-range vertices back into the box).
// Deterministic: no randomized restarts. `on_eval` sees every objective call.
struct NelderMeadResult {
  std::vector<double> x;
  double fx = 0;
  int evals = 0;
};
NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x0, std::vector<double> step,
    const std::vector<double>& lo, const std::vector<double>& hi,
    int max_evals, double ftol,
    const std::function<void(const std::vector<double>&, double)>& on_eval = {});

// Deterministic RNG. mt19937_64 output is fixed by the standard; the
// Box-Muller transform below keeps the normal stream implementation-defined
// bits out of the picture.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() {  // [0, 1)
    return (gen_() >> 11) * 0x1.0p-53;
  }
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0, u2 = 0;
    do {
      u1 = uniform();
    } while (u1 <= 0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * constants::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0;
  bool have_spare_ = false;
};

// Central second derivative with one Richardson step: error O(h^4).
double richardson_d2(const std::function<double(double)>& f, double x, double h);

}  // namespace panoptic
