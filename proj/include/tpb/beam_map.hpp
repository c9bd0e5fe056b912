#ifndef TPB_BEAM_MAP_HPP
#define TPB_BEAM_MAP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tpb/bvh.hpp"
#include "tpb/math.hpp"
#include "tpb/photon_tracer.hpp"

namespace tpb {

/// Geometry and timing of one camera-ray segment against one beam.
///
/// The blur region is the flat-ended cylinder of radius R_b around the beam segment.
/// [s_r_minus, s_r_plus] is the part of the ray inside it. `s_b_entry`/`s_b_exit` are the
/// beam parameters of the projections of those two ray points; `s_b_minus`/`s_b_plus`
/// are the same pair sorted. (s_r, s_b) is the closest approach of the two lines, clamped
/// into the interval when it falls outside.
struct RayBeamIntersection {
  std::uint32_t beam = 0;
  double s_r_minus = 0, s_r_plus = 0;
  double s_b_minus = 0, s_b_plus = 0;
  double s_b_entry = 0, s_b_exit = 0;
  double s_r = 0, s_b = 0;
  double distance = 0;     // line-line distance at closest approach
  double theta_b = 0;      // angle between beam direction and the direction back to the camera
  double cos_theta_b = 0;
  double sin_theta_b = 0;
  double t_minus = 0, t_plus = 0, t_center = 0;
  bool degenerate = false;       // sin(theta_b) < 1e-6
  bool closest_in_blur = false;  // closest approach lies within R_b and inside both segments
};

struct BeamQuery {
  /// Exclude the camera-side travel time (time at the scattering point instead of at the sensor).
  bool unwarp = false;
};

inline constexpr double kDegenerateSin = 1e-6;

/// Exact ray-segment / beam test shared by the BVH and brute-force paths.
inline std::optional<RayBeamIntersection> intersect_beam(const PhotonBeam& beam, std::uint32_t beam_index,
                                                         const Ray& ray, double ray_length, BeamQuery query = {}) {
  const double radius = beam.radius;
  const Vec3 w0 = ray.origin - beam.origin;
  const double b = dot(ray.direction, beam.direction);
  const double e = dot(beam.direction, w0);
  const Vec3 A = w0 - beam.direction * e;
  const Vec3 B = ray.direction - beam.direction * b;
  const double qa = dot(B, B);
  const double qb = dot(A, B);
  const double qc = dot(A, A) - radius * radius;
  const bool degenerate = qa < kDegenerateSin * kDegenerateSin;

  double lo = 0.0, hi = ray_length;
  if (degenerate) {
    if (qc > 0.0) return std::nullopt;
  } else {
    const double disc = qb * qb - qa * qc;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    lo = std::max(lo, (-qb - sq) / qa);
    hi = std::min(hi, (-qb + sq) / qa);
  }
  // Keep the projection onto the beam axis inside [0, length].
  if (std::abs(b) > 0.0) {
    const double sa = -e / b;
    const double sb = (beam.length - e) / b;
    lo = std::max(lo, std::min(sa, sb));
    hi = std::min(hi, std::max(sa, sb));
  } else if (e < 0.0 || e > beam.length) {
    return std::nullopt;
  }
  if (!(lo < hi)) return std::nullopt;

  RayBeamIntersection isect;
  isect.beam = beam_index;
  isect.degenerate = degenerate;
  isect.s_r_minus = lo;
  isect.s_r_plus = hi;
  auto beam_param = [&](double s) { return std::clamp(e + s * b, 0.0, beam.length); };
  isect.s_b_entry = beam_param(lo);
  isect.s_b_exit = beam_param(hi);
  isect.s_b_minus = std::min(isect.s_b_entry, isect.s_b_exit);
  isect.s_b_plus = std::max(isect.s_b_entry, isect.s_b_exit);
  isect.cos_theta_b = std::clamp(-b, -1.0, 1.0);
  isect.sin_theta_b = std::sqrt(qa);
  isect.theta_b = std::atan2(isect.sin_theta_b, isect.cos_theta_b);

  double s_star = 0.5 * (lo + hi);
  if (!degenerate) {
    const double s_line = -qb / qa;
    const double u_line = e + s_line * b;
    isect.distance = length(A + B * s_line);
    isect.closest_in_blur = isect.distance < radius && s_line >= 0.0 && s_line <= ray_length && u_line >= 0.0 &&
                            u_line <= beam.length;
    s_star = std::clamp(s_line, lo, hi);
  } else {
    isect.distance = std::sqrt(std::max(0.0, qc + radius * radius));
  }
  isect.s_r = s_star;
  isect.s_b = beam_param(s_star);

  const double scale = beam.medium ? beam.medium->ior() / kSpeedOfLight : 1.0 / kSpeedOfLight;
  if (query.unwarp) {
    isect.t_minus = beam.start_time + scale * isect.s_b_minus;
    isect.t_plus = beam.start_time + scale * isect.s_b_plus;
    isect.t_center = std::clamp(beam.start_time + scale * isect.s_b, isect.t_minus, isect.t_plus);
  } else {
    // s + u(s) = e + s (1 + b) is nondecreasing in s, so the interval ends bound the times.
    const double rate = 1.0 + b;
    const double base = beam.start_time + ray.start_time;
    auto path = [&](double s) { return std::max(0.0, e + s * rate); };
    isect.t_minus = base + scale * path(lo);
    isect.t_plus = base + scale * path(hi);
    isect.t_center = std::clamp(base + scale * (isect.s_r + isect.s_b), isect.t_minus, isect.t_plus);
  }
  return isect;
}

struct BeamMapOptions {
  /// Long beams are indexed as several boxes of at most this length.
  double chunk_length = kInfinity;
};

/// Beams plus a BVH over their radius-inflated boxes. Immutable once built.
class BeamMap {
 public:
  using Options = BeamMapOptions;

  BeamMap() = default;
  explicit BeamMap(std::vector<PhotonBeam> beams, Options options = {}) : beams_(std::move(beams)) {
    std::vector<Aabb> boxes;
    boxes.reserve(beams_.size());
    owner_.reserve(beams_.size());
    for (std::uint32_t i = 0; i < beams_.size(); ++i) {
      const PhotonBeam& bm = beams_[i];
      const Vec3 pad(bm.radius, bm.radius, bm.radius);
      const int pieces = options.chunk_length < kInfinity
                             ? std::clamp(static_cast<int>(std::ceil(bm.length / options.chunk_length)), 1, 4096)
                             : 1;
      for (int k = 0; k < pieces; ++k) {
        const double u0 = bm.length * k / pieces;
        const double u1 = bm.length * (k + 1) / pieces;
        Aabb box;
        box.expand(bm.origin + bm.direction * u0);
        box.expand(bm.origin + bm.direction * u1);
        box.lo -= pad;
        box.hi += pad;
        boxes.push_back(box);
        owner_.push_back(i);
      }
    }
    bvh_.build(boxes);
  }

  std::span<const PhotonBeam> beams() const { return beams_; }
  std::size_t size() const { return beams_.size(); }

  /// All beams whose blur region overlaps the ray segment [0, ray_length], sorted by beam index.
  /// `region` >= 0 restricts the query to beams in that medium region.
  std::vector<RayBeamIntersection> intersect_ray(const Ray& ray, double ray_length, BeamQuery query = {},
                                                 int region = -1) const {
    std::vector<RayBeamIntersection> out;
    std::vector<std::uint32_t> candidates;
    bvh_.traverse(ray.origin, ray.direction, 0.0, ray_length,
                  [&](std::uint32_t prim, double&) { candidates.push_back(owner_[prim]); });
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (std::uint32_t id : candidates) {
      if (region >= 0 && beams_[id].region != region) continue;
      if (auto isect = intersect_beam(beams_[id], id, ray, ray_length, query)) out.push_back(*isect);
    }
    return out;
  }

  /// Oracle for `intersect_ray`: tests every beam.
  std::vector<RayBeamIntersection> intersect_ray_brute_force(const Ray& ray, double ray_length, BeamQuery query = {},
                                                             int region = -1) const {
    std::vector<RayBeamIntersection> out;
    for (std::uint32_t id = 0; id < beams_.size(); ++id) {
      if (region >= 0 && beams_[id].region != region) continue;
      if (auto isect = intersect_beam(beams_[id], id, ray, ray_length, query)) out.push_back(*isect);
    }
    return out;
  }

 private:
  std::vector<PhotonBeam> beams_;
  std::vector<std::uint32_t> owner_;
  Bvh bvh_;
};

inline BeamMap build_map(std::vector<PhotonBeam> beams, BeamMap::Options options = {}) {
  return BeamMap(std::move(beams), options);
}

}  // namespace tpb

#endif  // TPB_BEAM_MAP_HPP
