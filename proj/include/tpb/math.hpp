#ifndef TPB_MATH_HPP
#define TPB_MATH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace tpb {

/// Speed of light in vacuum [m/s].
inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInvFourPi = 1.0 / (4.0 * std::numbers::pi);
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Scene files and the CLI express time in nanoseconds.
inline constexpr double nanoseconds_to_seconds(double ns) { return ns * 1e-9; }
inline constexpr double seconds_to_nanoseconds(double s) { return s * 1e9; }

struct Vec3 {
  double x = 0, y = 0, z = 0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  constexpr bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }
constexpr double length_squared(const Vec3& v) { return dot(v, v); }
inline Vec3 normalize(const Vec3& v) { return v / length(v); }
constexpr Vec3 min(const Vec3& a, const Vec3& b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
constexpr Vec3 max(const Vec3& a, const Vec3& b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}
inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// Orthonormal basis around a unit vector (Duff et al. branchless construction).
struct Frame {
  Vec3 s, t, n;

  explicit Frame(const Vec3& normal) : n(normal) {
    const double sign = std::copysign(1.0, n.z);
    const double a = -1.0 / (sign + n.z);
    const double b = n.x * n.y * a;
    s = {1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x};
    t = {b, sign + n.y * n.y * a, -n.y};
  }

  Vec3 to_world(const Vec3& v) const { return s * v.x + t * v.y + n * v.z; }
};

/// RGB radiometric quantity (radiance, flux, ...). Units depend on context.
struct Spectrum {
  std::array<double, 3> c{0.0, 0.0, 0.0};

  constexpr Spectrum() = default;
  constexpr explicit Spectrum(double v) : c{v, v, v} {}
  constexpr Spectrum(double r, double g, double b) : c{r, g, b} {}

  constexpr double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  constexpr double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

  constexpr Spectrum operator+(const Spectrum& o) const { return {c[0] + o.c[0], c[1] + o.c[1], c[2] + o.c[2]}; }
  constexpr Spectrum operator-(const Spectrum& o) const { return {c[0] - o.c[0], c[1] - o.c[1], c[2] - o.c[2]}; }
  constexpr Spectrum operator*(const Spectrum& o) const { return {c[0] * o.c[0], c[1] * o.c[1], c[2] * o.c[2]}; }
  constexpr Spectrum operator*(double s) const { return {c[0] * s, c[1] * s, c[2] * s}; }
  constexpr Spectrum operator/(double s) const { return {c[0] / s, c[1] / s, c[2] / s}; }
  constexpr Spectrum& operator+=(const Spectrum& o) { c[0] += o.c[0]; c[1] += o.c[1]; c[2] += o.c[2]; return *this; }
  constexpr Spectrum& operator*=(const Spectrum& o) { c[0] *= o.c[0]; c[1] *= o.c[1]; c[2] *= o.c[2]; return *this; }
  constexpr Spectrum& operator*=(double s) { c[0] *= s; c[1] *= s; c[2] *= s; return *this; }
  constexpr bool operator==(const Spectrum&) const = default;

  constexpr double luminance() const { return 0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]; }
  constexpr double max_component() const { return std::max({c[0], c[1], c[2]}); }
  constexpr bool is_black() const { return c[0] == 0.0 && c[1] == 0.0 && c[2] == 0.0; }
  bool is_finite() const { return std::isfinite(c[0]) && std::isfinite(c[1]) && std::isfinite(c[2]); }
  bool is_nonnegative() const { return c[0] >= 0.0 && c[1] >= 0.0 && c[2] >= 0.0; }
};

constexpr Spectrum operator*(double s, const Spectrum& v) { return v * s; }

/// A ray with a clock: `start_time` is the path time [s] at `origin`.
struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
  double start_time = 0.0;

  Vec3 at(double s) const { return origin + direction * s; }
};

struct Aabb {
  Vec3 lo{kInfinity, kInfinity, kInfinity};
  Vec3 hi{-kInfinity, -kInfinity, -kInfinity};

  bool empty() const { return lo.x > hi.x || lo.y > hi.y || lo.z > hi.z; }
  void expand(const Vec3& p) { lo = min(lo, p); hi = max(hi, p); }
  void expand(const Aabb& b) { lo = min(lo, b.lo); hi = max(hi, b.hi); }
  Vec3 center() const { return (lo + hi) * 0.5; }
  Vec3 extent() const { return hi - lo; }
  double diagonal() const { return empty() ? 0.0 : length(hi - lo); }
  double surface_area() const {
    if (empty()) return 0.0;
    const Vec3 d = hi - lo;
    return 2.0 * (d.x * d.y + d.y * d.z + d.z * d.x);
  }
  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
  }

  /// Slab test. Returns the parametric overlap with [t0, t1], if any.
  bool intersect(const Vec3& origin, const Vec3& inv_dir, double t0, double t1, double* t_enter = nullptr,
                 double* t_exit = nullptr) const {
    for (int a = 0; a < 3; ++a) {
      double tn = (lo[a] - origin[a]) * inv_dir[a];
      double tf = (hi[a] - origin[a]) * inv_dir[a];
      if (tn > tf) std::swap(tn, tf);
      // NaN from 0 * inf (origin on a slab plane, axis-parallel ray) keeps the old bound.
      t0 = tn > t0 ? tn : t0;
      t1 = tf < t1 ? tf : t1;
      if (t0 > t1) return false;
    }
    if (t_enter) *t_enter = t0;
    if (t_exit) *t_exit = t1;
    return true;
  }
};

inline Vec3 reflect(const Vec3& d, const Vec3& n) { return d - n * (2.0 * dot(d, n)); }

/// Snell refraction of `d` through a surface with normal `n` facing the incident side.
/// Returns false on total internal reflection.
inline bool refract(const Vec3& d, const Vec3& n, double eta_ratio, Vec3* out) {
  const double cos_i = -dot(d, n);
  const double sin2_t = eta_ratio * eta_ratio * std::max(0.0, 1.0 - cos_i * cos_i);
  if (sin2_t >= 1.0) return false;
  const double cos_t = std::sqrt(1.0 - sin2_t);
  *out = normalize(d * eta_ratio + n * (eta_ratio * cos_i - cos_t));
  return true;
}

/// Unpolarized Fresnel reflectance for a dielectric interface.
inline double fresnel_dielectric(double cos_i, double eta_i, double eta_t) {
  cos_i = std::clamp(cos_i, 0.0, 1.0);
  const double sin_t = eta_i / eta_t * std::sqrt(std::max(0.0, 1.0 - cos_i * cos_i));
  if (sin_t >= 1.0) return 1.0;
  const double cos_t = std::sqrt(std::max(0.0, 1.0 - sin_t * sin_t));
  const double rs = (eta_i * cos_i - eta_t * cos_t) / (eta_i * cos_i + eta_t * cos_t);
  const double rp = (eta_t * cos_i - eta_i * cos_t) / (eta_t * cos_i + eta_i * cos_t);
  return 0.5 * (rs * rs + rp * rp);
}

}  // namespace tpb

#endif  // TPB_MATH_HPP
