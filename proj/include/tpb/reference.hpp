#ifndef TPB_REFERENCE_HPP
#define TPB_REFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <variant>
#include <vector>

#include "tpb/film.hpp"
#include "tpb/media.hpp"
#include "tpb/parallel.hpp"
#include "tpb/progressive.hpp"
#include "tpb/rng.hpp"
#include "tpb/scene.hpp"

namespace tpb {

/// Transient volumetric path tracer with next-event estimation to point lights.
/// There is no spatial density estimation; time is resolved by histogram binning only.
/// Point lights are delta lights, so next-event estimation is the only way paths reach them.
struct PTConfig {
  int spp = 16;
  int max_bounces = 64;  // medium scattering vertices along the camera path
  int max_specular = 16;
  int roulette_start = 8;
  std::uint64_t seed = 1;
  bool unwarp = false;
  bool jitter = true;  // false: every sample goes through the pixel centre
  unsigned workers = 1;
  std::vector<std::size_t> pixels;  // empty: every pixel

  void validate() const {
    if (spp < 1) throw std::invalid_argument("spp must be >= 1");
    if (max_bounces < 1) throw std::invalid_argument("max_bounces must be >= 1");
  }
};

struct LightConnection {
  double transmittance = 1.0;
  double time = 0.0;  // s, light to the connected point
};

/// Shadow connection from `from` (inside `region`) to a point light. Index-matched region
/// boundaries pass; opaque surfaces and refracting boundaries block.
inline std::optional<LightConnection> connect_to_light(const Scene& scene, Vec3 from, int region, const Vec3& light) {
  LightConnection c;
  for (int guard = 0; guard < 256; ++guard) {
    const Vec3 delta = light - from;
    const double dist = length(delta);
    if (dist <= scene.epsilon()) return c;
    const Ray ray{from, delta / dist, 0.0};
    const auto hit = scene.intersect(ray, dist);
    const Medium& medium = scene.medium(region);
    const double seg = hit ? hit->t : dist;
    c.transmittance *= transmittance(medium, seg);
    c.time += time_of_flight(medium.ior(), seg);
    if (!hit) return c;
    if (hit->kind == SceneHit::Kind::Surface) return std::nullopt;
    const InterfaceResult ir = scene.interact(*hit, ray.direction, region, nullptr);
    if (!ir.alive || ir.direction != ray.direction) return std::nullopt;
    region = ir.region;
    from = hit->point;
  }
  return std::nullopt;
}

/// One camera path. `deposit(time, value)` receives every next-event contribution with the
/// time it reaches the sensor (or, when unwarped, the time it reaches the first medium vertex).
template <class Deposit>
void trace_reference_path(const Scene& scene, const PTConfig& config, Ray ray, RngStream& rng, Deposit&& deposit) {
  int region = scene.region_at(ray.origin);
  Spectrum throughput(1.0);
  double t_cam = 0.0;          // camera-side travel time up to the current vertex
  double t_excluded = -1.0;    // camera time at the first medium vertex (unwarp)
  int bounces = 0;
  int specular = 0;
  for (int guard = 0; guard < 100000; ++guard) {
    const Medium& medium = scene.medium(region);
    const auto hit = scene.intersect(ray);
    const double segment = hit ? hit->t : Scene::max_flight(medium);
    if (!std::isfinite(segment)) return;
    if (const auto flight = sample_free_flight(medium, rng); flight && flight->distance < segment) {
      const Vec3 x = ray.at(flight->distance);
      t_cam += time_of_flight(medium.ior(), flight->distance);
      if (t_excluded < 0.0) t_excluded = t_cam;
      ++bounces;
      // Analog distance sampling: transmittance / pdf leaves sigma_s / sigma_t.
      throughput *= medium.albedo();
      if (throughput.is_black()) return;
      for (const PointLight& light : scene.lights) {
        const auto conn = connect_to_light(scene, x, region, light.position);
        if (!conn) continue;
        const Vec3 to_x = x - light.position;
        const double d2 = length_squared(to_x);
        if (d2 <= 0.0) continue;
        const double cos_theta = std::clamp(dot(to_x / std::sqrt(d2), -ray.direction), -1.0, 1.0);
        const Spectrum value = throughput * light.power *
                               (eval_phase(medium.phase(), cos_theta) * conn->transmittance / d2);
        const double t = (config.unwarp ? t_cam - t_excluded : t_cam) + conn->time;
        deposit(t, value);
      }
      if (bounces >= config.max_bounces) return;
      if (bounces >= config.roulette_start) {
        const double survive = std::min(1.0, throughput.max_component());
        if (rng.uniform() >= survive) return;
        throughput *= 1.0 / survive;
      }
      ray = Ray{x, sample_phase(medium.phase(), ray.direction, rng).direction, 0.0};
      continue;
    }
    if (!hit) return;
    t_cam += time_of_flight(medium.ior(), segment);
    const InterfaceResult ir = scene.interact(*hit, ray.direction, region, &rng);
    if (!ir.alive) return;
    if (ir.direction != ray.direction && ++specular > config.max_specular) return;
    throughput *= ir.weight;
    ray = Ray{hit->point, ir.direction, 0.0};
    region = ir.region;
  }
}

inline std::uint64_t reference_stream(std::uint64_t seed, std::size_t pixel) {
  return stream_seed(seed, pixel, 0, 0x7265666572656eULL);
}

inline std::vector<std::size_t> reference_pixels(const Scene& scene, const PTConfig& config) {
  std::vector<std::size_t> pixels = config.pixels;
  const std::size_t total = static_cast<std::size_t>(scene.camera.width()) * scene.camera.height();
  if (pixels.empty()) {
    pixels.resize(total);
    for (std::size_t i = 0; i < total; ++i) pixels[i] = i;
  }
  for (std::size_t p : pixels)
    if (p >= total) throw std::out_of_range("reference pixel outside the film");
  return pixels;
}

struct ReferenceStats {
  std::uint64_t samples = 0;
  std::uint64_t dropped_nonfinite = 0;
};

/// Time-binned reference render. Bins hold radiance integrated over each bin, like the
/// beam renderer's film. Non-finite samples are dropped and counted.
inline TransientFilm render_reference(const Scene& scene, const PTConfig& config, const FilmSpec& spec,
                                      ReferenceStats* stats_out = nullptr) {
  config.validate();
  TransientFilm film(scene.camera.width(), scene.camera.height(), spec.bins, spec.t_min, spec.t_max,
                     config.unwarp ? WarpMode::Unwarped : WarpMode::Warped);
  const auto pixels = reference_pixels(scene, config);
  std::vector<ReferenceStats> stats(pixels.size());
  const double inv_spp = 1.0 / config.spp;
  const double w = film.bin_width();
  parallel_for(pixels.size(), config.workers, [&](std::size_t i) {
    const std::size_t pixel = pixels[i];
    RngStream rng(reference_stream(config.seed, pixel));
    for (int s = 0; s < config.spp; ++s) {
      const Ray ray = pixel_ray(scene, pixel, config.jitter, rng);
      trace_reference_path(scene, config, ray, rng, [&](double t, const Spectrum& v) {
        if (!v.is_finite() || !std::isfinite(t)) {
          ++stats[i].dropped_nonfinite;
          return;
        }
        const double f = std::floor((t - film.t_min()) / w);
        if (f < 0.0 || f >= film.bins())
          film.add_overflow(pixel, v * inv_spp);
        else
          film.add(pixel, static_cast<int>(f), v * inv_spp);
      });
    }
    stats[i].samples = static_cast<std::uint64_t>(config.spp);
  });
  if (stats_out) {
    *stats_out = {};
    for (const auto& s : stats) {
      stats_out->samples += s.samples;
      stats_out->dropped_nonfinite += s.dropped_nonfinite;
    }
  }
  return film;
}

struct SteadyImage {
  std::vector<Spectrum> mean;
  std::vector<Spectrum> standard_error;
};

/// The same estimator with binning disabled: per-pixel time-integrated radiance and its
/// standard error over samples.
inline SteadyImage render_reference_steady(const Scene& scene, const PTConfig& config) {
  config.validate();
  const std::size_t total = static_cast<std::size_t>(scene.camera.width()) * scene.camera.height();
  SteadyImage img{std::vector<Spectrum>(total), std::vector<Spectrum>(total)};
  const auto pixels = reference_pixels(scene, config);
  parallel_for(pixels.size(), config.workers, [&](std::size_t i) {
    const std::size_t pixel = pixels[i];
    RngStream rng(reference_stream(config.seed, pixel));
    Spectrum sum, sum_sq;
    for (int s = 0; s < config.spp; ++s) {
      const Ray ray = pixel_ray(scene, pixel, config.jitter, rng);
      Spectrum sample;
      trace_reference_path(scene, config, ray, rng, [&](double, const Spectrum& v) {
        if (v.is_finite()) sample += v;
      });
      sum += sample;
      sum_sq += sample * sample;
    }
    const double n = config.spp;
    const Spectrum mean = sum / n;
    Spectrum se;
    for (int c = 0; c < 3; ++c)
      se[c] = n > 1 ? std::sqrt(std::max(0.0, (sum_sq[c] / n - mean[c] * mean[c]) / (n - 1))) : 0.0;
    img.mean[pixel] = mean;
    img.standard_error[pixel] = se;
  });
  return img;
}

// ---------------------------------------------------------------------------
// Analytic timing aids

/// Earliest single-scatter arrival for the pixel's centre ray in a scene made of a single
/// homogeneous medium region containing a point light (vacuum outside, no surfaces).
/// Warped: min over s of (camera to x(s)) + (x(s) to light), which is attained at the medium
/// entry point since the sum is nondecreasing in s. Unwarped: eta/c times the distance
/// from the light to the in-medium part of the ray.
inline std::optional<double> first_arrival_time(const Scene& scene, int x, int y, bool unwarp = false) {
  if (scene.regions.size() != 1 || !scene.surfaces.empty() || scene.lights.size() != 1)
    throw std::invalid_argument("first_arrival_time: needs one medium region, one point light, no surfaces");
  const Region& region = scene.regions.front();
  const Vec3 light = scene.lights.front().position;
  if (scene.region_at(light) != 0) throw std::invalid_argument("first_arrival_time: light must be inside the medium");
  const Ray ray = scene.camera.generate_ray(x, y);
  double s_in = 0.0, s_out = kInfinity;
  if (scene.region_at(ray.origin) != 0) {
    const auto enter = std::visit(
        [&](const auto& s) -> std::optional<ShapeHit> {
          if constexpr (std::is_same_v<std::decay_t<decltype(s)>, GlobalShape>) return std::nullopt;
          else return intersect_shape(s, ray, 0.0, kInfinity);
        },
        region.shape);
    if (!enter) return std::nullopt;
    s_in = enter->t;
  }
  const Ray inside{ray.at(s_in), ray.direction, 0.0};
  const auto exit = std::visit(
      [&](const auto& s) -> std::optional<ShapeHit> {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, GlobalShape>) return std::nullopt;
        else return intersect_shape(s, inside, scene.epsilon(), kInfinity);
      },
      region.shape);
  if (exit) s_out = s_in + exit->t;
  const double eta = region.medium.ior();
  if (!unwarp) return time_of_flight(1.0, s_in) + time_of_flight(eta, length(ray.at(s_in) - light));
  const double s_proj = std::clamp(dot(light - ray.origin, ray.direction), s_in, s_out);
  return time_of_flight(eta, length(ray.at(s_proj) - light));
}

struct PathTime {
  double time = 0.0;       // s
  double length = 0.0;     // m, geometric
  int refractions = 0;
};

/// Follows `ray` deterministically for `distance` metres of geometric path, transmitting
/// through refracting boundaries, and accumulates the propagation time per segment.
inline PathTime propagate_path_time(const Scene& scene, Ray ray, double distance) {
  PathTime pt;
  int region = scene.region_at(ray.origin);
  for (int guard = 0; guard < 10000 && pt.length < distance; ++guard) {
    const double remaining = distance - pt.length;
    const auto hit = scene.intersect(ray, remaining);
    const double seg = hit ? hit->t : remaining;
    pt.time += time_of_flight(scene.medium(region).ior(), seg);
    pt.length += seg;
    if (!hit) break;
    const InterfaceResult ir = scene.interact(*hit, ray.direction, region, nullptr);
    if (!ir.alive) break;
    if (ir.refracted) ++pt.refractions;
    ray = Ray{hit->point, ir.direction, 0.0};
    region = ir.region;
  }
  return pt;
}

}  // namespace tpb

#endif  // TPB_REFERENCE_HPP
