#ifndef TPB_PHOTON_TRACER_HPP
#define TPB_PHOTON_TRACER_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tpb/math.hpp"
#include "tpb/media.hpp"
#include "tpb/parallel.hpp"
#include "tpb/rng.hpp"
#include "tpb/scene.hpp"

namespace tpb {

/// A stored light sub-path segment inside a medium.
///
/// The beam runs from `origin` along `direction` until the medium ends (or a surface
/// blocks it), not just to the next sampled scattering vertex: the estimators apply the
/// beam transmittance exp(-sigma_t s) themselves.
struct PhotonBeam {
  Vec3 origin;
  Vec3 direction;
  double length = 0.0;      // m
  Spectrum flux;            // W, at the origin
  double start_time = 0.0;  // s, path time at the origin
  double radius = 0.0;      // m
  int region = -1;          // scene region the beam travels through
  const Medium* medium = nullptr;
};

struct WalkConfig {
  int max_vertices = 64;          // light vertex included; 2 means single scattering only
  bool russian_roulette = true;
  int roulette_start_vertex = 4;  // vertex index from which roulette replaces albedo weighting
  std::size_t photons = 10000;    // M, walks per iteration

  void validate() const {
    if (max_vertices < 2) throw std::invalid_argument("max_vertices must be >= 2");
    if (photons < 1) throw std::invalid_argument("photon count must be >= 1");
    if (roulette_start_vertex < 1) throw std::invalid_argument("roulette start vertex must be >= 1");
  }
};

struct WalkStats {
  std::uint64_t walks = 0;
  std::uint64_t beams = 0;
  std::uint64_t scattering_events = 0;
  std::uint64_t aborted_nonfinite = 0;

  WalkStats& operator+=(const WalkStats& o) {
    walks += o.walks;
    beams += o.beams;
    scattering_events += o.scattering_events;
    aborted_nonfinite += o.aborted_nonfinite;
    return *this;
  }
};

/// Point-light emission: uniform direction, flux = power / (M * pdf).
inline Ray emit_photon(const PointLight& light, std::size_t photons, RngStream& rng, Spectrum* flux) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const Vec3 dir = sample_uniform_sphere(u1, u2);
  constexpr double pdf = kInvFourPi;
  *flux = light.power / (static_cast<double>(photons) * pdf);
  return Ray{light.position, dir, 0.0};
}

/// One photon random walk. Appends one beam per medium-traversing segment to `out`.
inline WalkStats trace_photon_walk(const Scene& scene, const WalkConfig& config, RngStream& rng, double beam_radius,
                                   std::vector<PhotonBeam>& out) {
  WalkStats stats;
  stats.walks = 1;
  if (scene.lights.empty()) return stats;
  const std::size_t light_index =
      std::min(scene.lights.size() - 1, static_cast<std::size_t>(rng.uniform() * scene.lights.size()));
  Spectrum flux;
  Ray ray = emit_photon(scene.lights[light_index], config.photons, rng, &flux);
  flux *= static_cast<double>(scene.lights.size());
  int region = scene.region_at(ray.origin);
  int vertex = 0;  // index of the vertex at ray.origin that started this walk segment chain
  const std::size_t first_beam = out.size();

  auto abort_walk = [&] {
    out.resize(first_beam);
    stats.beams = 0;
    stats.aborted_nonfinite = 1;
    return stats;
  };

  for (int guard = 0; guard < 100000; ++guard) {
    if (!flux.is_finite() || !is_finite(ray.origin) || !is_finite(ray.direction)) return abort_walk();
    const Medium& medium = scene.medium(region);
    const auto hit = scene.intersect(ray);
    double segment = hit ? hit->t : Scene::max_flight(medium);
    if (!std::isfinite(segment)) return stats;  // escaped through vacuum

    if (medium.sigma_t() > 0.0) {
      out.push_back({ray.origin, ray.direction, segment, flux, ray.start_time, beam_radius, region, &medium});
      ++stats.beams;
      const auto flight = sample_free_flight(medium, rng);
      if (flight && flight->distance < segment) {
        ray.start_time += time_of_flight(medium.ior(), flight->distance);
        ray.origin = ray.at(flight->distance);
        ++vertex;
        ++stats.scattering_events;
        if (vertex >= config.max_vertices - 1) return stats;
        if (medium.sigma_s() <= 0.0) return stats;
        const double albedo = medium.albedo();
        if (config.russian_roulette && vertex >= config.roulette_start_vertex) {
          const double survive = std::min(1.0, albedo);
          if (rng.uniform() >= survive) return stats;
          flux *= albedo / survive;
        } else {
          flux *= albedo;
        }
        // Phase value and sampling pdf cancel.
        ray.direction = sample_phase(medium.phase(), ray.direction, rng).direction;
        continue;
      }
      if (!hit) return stats;  // transmittance beyond max_flight is negligible
    }

    ray.start_time += time_of_flight(medium.ior(), segment);
    ray.origin = hit->point;
    const InterfaceResult ir = scene.interact(*hit, ray.direction, region, &rng);
    if (!ir.alive) return stats;
    if (hit->kind == SceneHit::Kind::Surface || ir.direction != ray.direction) {
      ++vertex;
      if (vertex >= config.max_vertices - 1) return stats;
    }
    flux *= ir.weight;
    ray.direction = ir.direction;
    region = ir.region;
  }
  return stats;
}

/// Traces `config.photons` walks for one iteration. Walk i uses the stream
/// stream_seed(seed, iteration, i), so the result does not depend on `workers`.
inline std::vector<PhotonBeam> trace_photons(const Scene& scene, const WalkConfig& config, std::uint64_t seed,
                                             std::uint64_t iteration, double beam_radius, unsigned workers,
                                             WalkStats* stats_out = nullptr) {
  config.validate();
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (config.photons + kChunk - 1) / kChunk;
  std::vector<std::vector<PhotonBeam>> parts(chunks);
  std::vector<WalkStats> part_stats(chunks);
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(config.photons, begin + kChunk);
    for (std::size_t i = begin; i < end; ++i) {
      RngStream rng(stream_seed(seed, iteration, i, 0x70686f746f6eULL));
      part_stats[c] += trace_photon_walk(scene, config, rng, beam_radius, parts[c]);
    }
  });
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  std::vector<PhotonBeam> beams;
  beams.reserve(total);
  WalkStats stats;
  for (std::size_t c = 0; c < chunks; ++c) {
    beams.insert(beams.end(), parts[c].begin(), parts[c].end());
    stats += part_stats[c];
  }
  if (stats_out) *stats_out = stats;
  return beams;
}

}  // namespace tpb

#endif  // TPB_PHOTON_TRACER_HPP
