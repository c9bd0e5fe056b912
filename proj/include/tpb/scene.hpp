#ifndef TPB_SCENE_HPP
#define TPB_SCENE_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tpb/bvh.hpp"
#include "tpb/math.hpp"
#include "tpb/media.hpp"
#include "tpb/rng.hpp"

namespace tpb {

// ---------------------------------------------------------------------------
// Shapes

struct GlobalShape {
  bool operator==(const GlobalShape&) const = default;
};
struct SphereShape {
  Vec3 center;
  double radius = 1.0;
  bool operator==(const SphereShape&) const = default;
};
struct BoxShape {
  Vec3 lo, hi;
  bool operator==(const BoxShape&) const = default;
};
struct PlaneShape {
  Vec3 point;
  Vec3 normal{0, 1, 0};
  bool operator==(const PlaneShape&) const = default;
};

struct Triangle {
  Vec3 a, b, c;
};

/// Triangle soup with its own BVH. Meshes are opaque and have no inside.
class TriangleMesh {
 public:
  TriangleMesh() = default;
  explicit TriangleMesh(std::vector<Triangle> tris) : tris_(std::move(tris)) {
    std::vector<Aabb> boxes(tris_.size());
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      boxes[i].expand(tris_[i].a);
      boxes[i].expand(tris_[i].b);
      boxes[i].expand(tris_[i].c);
      bounds_.expand(boxes[i]);
    }
    bvh_.build(boxes);
  }

  const std::vector<Triangle>& triangles() const { return tris_; }
  const Aabb& bounds() const { return bounds_; }
  const Bvh& bvh() const { return bvh_; }

 private:
  std::vector<Triangle> tris_;
  Aabb bounds_;
  Bvh bvh_;
};

/// Möller-Trumbore. Returns the ray parameter in (t_min, t_max) or nothing.
inline std::optional<double> intersect_triangle(const Triangle& tri, const Vec3& o, const Vec3& d, double t_min,
                                                double t_max) {
  const Vec3 e1 = tri.b - tri.a;
  const Vec3 e2 = tri.c - tri.a;
  const Vec3 p = cross(d, e2);
  const double det = dot(e1, p);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = o - tri.a;
  const double u = dot(s, p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = cross(s, e1);
  const double v = dot(d, q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = dot(e2, q) * inv;
  if (t <= t_min || t >= t_max) return std::nullopt;
  return t;
}

struct ShapeHit {
  double t = kInfinity;
  Vec3 normal;  // geometric, unit; orientation unspecified
};

inline std::optional<ShapeHit> intersect_shape(const SphereShape& s, const Ray& r, double t_min, double t_max) {
  const Vec3 oc = r.origin - s.center;
  const double b = dot(oc, r.direction);
  const double c = dot(oc, oc) - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  // Stable root pair.
  const double q = -b - std::copysign(sq, b);
  double t0 = q;
  double t1 = q != 0.0 ? c / q : -b;
  if (t0 > t1) std::swap(t0, t1);
  const double t = (t0 > t_min) ? t0 : t1;
  if (t <= t_min || t >= t_max) return std::nullopt;
  return ShapeHit{t, normalize(r.at(t) - s.center)};
}

inline std::optional<ShapeHit> intersect_shape(const BoxShape& b, const Ray& r, double t_min, double t_max) {
  double t_near = -kInfinity, t_far = kInfinity;
  int axis_near = 0, axis_far = 0;
  for (int a = 0; a < 3; ++a) {
    const double inv = 1.0 / r.direction[a];
    double tn = (b.lo[a] - r.origin[a]) * inv;
    double tf = (b.hi[a] - r.origin[a]) * inv;
    if (std::isnan(tn) || std::isnan(tf)) continue;  // origin on a face plane, parallel to it
    if (tn > tf) std::swap(tn, tf);
    if (tn > t_near) { t_near = tn; axis_near = a; }
    if (tf < t_far) { t_far = tf; axis_far = a; }
  }
  if (t_near > t_far) return std::nullopt;
  double t;
  int axis;
  if (t_near > t_min) { t = t_near; axis = axis_near; }
  else { t = t_far; axis = axis_far; }
  if (t <= t_min || t >= t_max) return std::nullopt;
  Vec3 n;
  n[axis] = 1.0;
  return ShapeHit{t, n};
}

inline std::optional<ShapeHit> intersect_shape(const PlaneShape& p, const Ray& r, double t_min, double t_max) {
  const double denom = dot(p.normal, r.direction);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = dot(p.point - r.origin, p.normal) / denom;
  if (t <= t_min || t >= t_max) return std::nullopt;
  return ShapeHit{t, p.normal};
}

inline std::optional<ShapeHit> intersect_shape(const TriangleMesh& m, const Ray& r, double t_min, double t_max) {
  std::optional<ShapeHit> best;
  m.bvh().traverse(r.origin, r.direction, t_min, t_max, [&](std::uint32_t i, double& tmax) {
    const Triangle& tri = m.triangles()[i];
    if (auto t = intersect_triangle(tri, r.origin, r.direction, t_min, tmax)) {
      tmax = *t;
      best = ShapeHit{*t, normalize(cross(tri.b - tri.a, tri.c - tri.a))};
    }
  });
  return best;
}

inline bool shape_contains(const GlobalShape&, const Vec3&) { return true; }
inline bool shape_contains(const SphereShape& s, const Vec3& p) {
  return length_squared(p - s.center) < s.radius * s.radius;
}
inline bool shape_contains(const BoxShape& b, const Vec3& p) {
  return p.x > b.lo.x && p.x < b.hi.x && p.y > b.lo.y && p.y < b.hi.y && p.z > b.lo.z && p.z < b.hi.z;
}

// ---------------------------------------------------------------------------
// Scene elements

/// A volume of homogeneous medium. Where regions overlap, the one declared last wins.
/// A dielectric boundary refracts (Snell + Fresnel); otherwise it is index-matched.
struct Region {
  std::variant<GlobalShape, BoxShape, SphereShape> shape;
  Medium medium;
  bool dielectric_boundary = false;
};

struct Material {
  enum class Kind { Diffuse, Mirror };
  Kind kind = Kind::Diffuse;
  Spectrum reflectance{1.0};
};

/// Opaque surface. Diffuse surfaces absorb (only medium transport is simulated).
struct Surface {
  std::variant<SphereShape, BoxShape, PlaneShape, TriangleMesh> shape;
  Material material;
};

enum class Emission { DiracDelta, Heaviside };

struct PointLight {
  Vec3 position;
  Spectrum power{1.0};  // radiant intensity, W/sr (a photon carries power / (M pdf))
  Emission emission = Emission::DiracDelta;
};

class PinholeCamera {
 public:
  PinholeCamera() : PinholeCamera({0, 0, 0}, {0, 0, 1}, {0, 1, 0}, 40.0, 64, 64) {}
  PinholeCamera(const Vec3& position, const Vec3& look_at, const Vec3& up, double vfov_degrees, int width, int height)
      : position_(position), width_(width), height_(height) {
    if (width < 1 || height < 1) throw std::invalid_argument("camera resolution must be positive");
    forward_ = normalize(look_at - position);
    right_ = normalize(cross(forward_, up));
    up_ = cross(right_, forward_);
    tan_half_ = std::tan(0.5 * vfov_degrees * kPi / 180.0);
    aspect_ = static_cast<double>(width) / height;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const Vec3& position() const { return position_; }

  /// Ray through film position (x + jx, y + jy) with pixel (0,0) at the top left.
  Ray generate_ray(int x, int y, double jx = 0.5, double jy = 0.5) const {
    const double ndc_x = (2.0 * (x + jx) / width_ - 1.0) * tan_half_ * aspect_;
    const double ndc_y = (1.0 - 2.0 * (y + jy) / height_) * tan_half_;
    return Ray{position_, normalize(forward_ + right_ * ndc_x + up_ * ndc_y), 0.0};
  }

 private:
  Vec3 position_, forward_, right_, up_;
  double tan_half_ = 0.0, aspect_ = 1.0;
  int width_, height_;
};

struct SceneHit {
  enum class Kind { Surface, RegionBoundary };
  double t = kInfinity;
  Vec3 point;
  Vec3 normal;
  Kind kind = Kind::Surface;
  std::size_t index = 0;
};

/// What happens to a path at a surface or region boundary.
struct InterfaceResult {
  bool alive = false;
  Vec3 direction;
  Spectrum weight{1.0};
  int region = -1;
  bool refracted = false;
};

class Scene {
 public:
  PinholeCamera camera;
  std::vector<Region> regions;
  std::vector<Surface> surfaces;
  std::vector<PointLight> lights;

  /// Finalize derived data; call after populating the element lists.
  void prepare() {
    bounds_ = Aabb{};
    for (const auto& r : regions) {
      if (auto* b = std::get_if<BoxShape>(&r.shape)) { bounds_.expand(b->lo); bounds_.expand(b->hi); }
      if (auto* s = std::get_if<SphereShape>(&r.shape)) {
        bounds_.expand(s->center - Vec3(s->radius, s->radius, s->radius));
        bounds_.expand(s->center + Vec3(s->radius, s->radius, s->radius));
      }
    }
    for (const auto& s : surfaces) {
      if (auto* b = std::get_if<BoxShape>(&s.shape)) { bounds_.expand(b->lo); bounds_.expand(b->hi); }
      if (auto* sp = std::get_if<SphereShape>(&s.shape)) {
        bounds_.expand(sp->center - Vec3(sp->radius, sp->radius, sp->radius));
        bounds_.expand(sp->center + Vec3(sp->radius, sp->radius, sp->radius));
      }
      if (auto* m = std::get_if<TriangleMesh>(&s.shape)) bounds_.expand(m->bounds());
    }
    for (const auto& l : lights) bounds_.expand(l.position);
    bounds_.expand(camera.position());
    epsilon_ = 1e-9 * std::max(1.0, bounds_.diagonal());
  }

  /// Bounding box of all finite geometry, lights and the camera.
  const Aabb& bounds() const { return bounds_; }
  double epsilon() const { return epsilon_; }

  /// Index of the region containing `p`, or -1 for vacuum.
  int region_at(const Vec3& p) const {
    for (int i = static_cast<int>(regions.size()) - 1; i >= 0; --i) {
      const bool inside = std::visit([&](const auto& s) { return shape_contains(s, p); }, regions[i].shape);
      if (inside) return i;
    }
    return -1;
  }

  const Medium& medium(int region) const { return region < 0 ? vacuum_ : regions[region].medium; }

  /// Path length beyond which a medium's transmittance is negligible (< 1e-12).
  static double max_flight(const Medium& m) { return m.sigma_t() > 0.0 ? 27.7 / m.sigma_t() : kInfinity; }

  std::optional<SceneHit> intersect(const Ray& ray, double t_max = kInfinity) const {
    std::optional<SceneHit> best;
    const double t_min = epsilon_;
    auto consider = [&](const std::optional<ShapeHit>& h, SceneHit::Kind kind, std::size_t index) {
      if (h && h->t < t_max) {
        t_max = h->t;
        best = SceneHit{h->t, ray.at(h->t), h->normal, kind, index};
      }
    };
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
      std::visit([&](const auto& s) { consider(intersect_shape(s, ray, t_min, t_max), SceneHit::Kind::Surface, i); },
                 surfaces[i].shape);
    }
    for (std::size_t i = 0; i < regions.size(); ++i) {
      std::visit(
          [&](const auto& s) {
            if constexpr (!std::is_same_v<std::decay_t<decltype(s)>, GlobalShape>)
              consider(intersect_shape(s, ray, t_min, t_max), SceneHit::Kind::RegionBoundary, i);
          },
          regions[i].shape);
    }
    return best;
  }

  /// Handles a surface or boundary hit. With `rng == nullptr` dielectric boundaries always
  /// transmit (unless totally internally reflecting), which gives deterministic paths.
  InterfaceResult interact(const SceneHit& hit, const Vec3& dir, int current_region, RngStream* rng) const {
    InterfaceResult res;
    const Vec3 n = dot(dir, hit.normal) < 0.0 ? hit.normal : -hit.normal;  // faces the incident side
    if (hit.kind == SceneHit::Kind::Surface) {
      const Material& mat = surfaces[hit.index].material;
      if (mat.kind == Material::Kind::Diffuse) return res;
      res.alive = true;
      res.direction = reflect(dir, n);
      res.weight = mat.reflectance;
      res.region = region_at(hit.point + res.direction * (4 * epsilon_));
      return res;
    }
    const int other = region_at(hit.point + dir * (4 * epsilon_));
    const double eta_i = medium(current_region).ior();
    const double eta_t = medium(other).ior();
    const bool refracting = (regions[hit.index].dielectric_boundary ||
                             (other >= 0 && regions[other].dielectric_boundary) ||
                             (current_region >= 0 && regions[current_region].dielectric_boundary)) &&
                            eta_i != eta_t;
    res.alive = true;
    if (!refracting) {
      res.direction = dir;
      res.region = other;
      return res;
    }
    const double cos_i = -dot(dir, n);
    const double f = fresnel_dielectric(cos_i, eta_i, eta_t);
    Vec3 refr;
    const bool can_refract = refract(dir, n, eta_i / eta_t, &refr);
    const bool do_reflect = !can_refract || (rng != nullptr && rng->uniform() < f);
    if (do_reflect) {
      res.direction = reflect(dir, n);
      res.region = current_region;
    } else {
      res.direction = refr;
      res.region = other;
      res.refracted = true;
    }
    return res;
  }

 private:
  Medium vacuum_ = Medium::vacuum();
  Aabb bounds_;
  double epsilon_ = 1e-9;
};

}  // namespace tpb

#endif  // TPB_SCENE_HPP
