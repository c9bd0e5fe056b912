#ifndef TPB_PROGRESSIVE_HPP
#define TPB_PROGRESSIVE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tpb/beam_map.hpp"
#include "tpb/estimators.hpp"
#include "tpb/film.hpp"
#include "tpb/parallel.hpp"
#include "tpb/photon_tracer.hpp"
#include "tpb/scene.hpp"

namespace tpb {

enum class BeamMode {
  Beams1D,  // 1D spatial blur + temporal KDE, progressive bandwidths
  Beams2D,  // 2D spatial blur + time histogram, fixed radius
};

struct FilmSpec {
  int bins = 128;
  double t_min = 0.0;  // s
  double t_max = 1e-8; // s

  double bin_width() const { return (t_max - t_min) / bins; }
};

struct ProgressiveConfig {
  BeamMode mode = BeamMode::Beams1D;
  double alpha = 2.0 / 3.0;
  double beta_t = 0.5;                        // beta_R = 1 - beta_t
  std::optional<double> initial_radius;       // R_1 [m]; default 1% of the scene diagonal
  std::optional<double> initial_bandwidth;    // T_1 [s]; default 4 bin widths
  TemporalKernel temporal_kernel = TemporalKernel::Epanechnikov;
  WalkConfig walk;
  int iterations = 16;
  std::uint64_t seed = 1;
  bool unwarp = false;
  bool jitter = true;                         // one jittered camera ray per pixel and iteration
  int max_camera_depth = 16;                  // specular bounces along camera paths
  unsigned workers = 1;
  std::vector<std::size_t> pixels;            // render only these pixels; empty renders all

  double beta_r() const { return 1.0 - beta_t; }

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
    if (!(beta_t >= 0.0 && beta_t <= 1.0)) throw std::invalid_argument("beta_t must lie in [0, 1]");
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (initial_radius && !(*initial_radius > 0.0)) throw std::invalid_argument("initial radius must be > 0");
    if (initial_bandwidth && !(*initial_bandwidth > 0.0)) throw std::invalid_argument("initial time bandwidth must be > 0");
    walk.validate();
    std::vector<std::size_t> p = pixels;
    std::sort(p.begin(), p.end());
    if (std::adjacent_find(p.begin(), p.end()) != p.end()) throw std::invalid_argument("pixel list has duplicates");
  }
};

// ---------------------------------------------------------------------------
// Bandwidth schedule

/// Per-iteration shrink ratios (R_{j+1}/R_j, T_{j+1}/T_j) = ((j + alpha)/(j + 1))^(beta_R, beta_T).
inline std::pair<double, double> bandwidths_recurrence(int j, double alpha, double beta_t) {
  if (j < 1) throw std::invalid_argument("bandwidths_recurrence: j must be >= 1");
  const double ratio = (j + alpha) / (j + 1.0);
  return {std::pow(ratio, 1.0 - beta_t), std::pow(ratio, beta_t)};
}

/// j * alpha * B(alpha, j), evaluated through log-gamma so it stays accurate for large j.
inline double shrink_product_base(int j, double alpha) {
  return std::exp(std::log(static_cast<double>(j)) + std::log(alpha) + std::lgamma(alpha) +
                  std::lgamma(static_cast<double>(j)) - std::lgamma(alpha + j));
}

/// (R_j, T_j) in closed form: X_j = X_1 (j alpha B(alpha, j))^(-beta_X).
inline std::pair<double, double> bandwidths_closed_form(int j, double alpha, double beta_t, double r1, double t1) {
  if (j < 1) throw std::invalid_argument("bandwidths_closed_form: j must be >= 1");
  const double base = shrink_product_base(j, alpha);
  return {r1 * std::pow(base, -(1.0 - beta_t)), t1 * std::pow(base, -beta_t)};
}

// ---------------------------------------------------------------------------
// Camera-side estimation

struct RenderStats {
  std::uint64_t intersections = 0;
  std::uint64_t skipped_degenerate = 0;
};

/// Walks a camera ray through the scene and hands every beam splat (already weighted by
/// camera throughput) to `sink`. Specular surfaces are followed using `rng`.
template <class Sink>
void gather_camera_ray(const Scene& scene, const BeamMap& map, Ray ray, BeamMode mode, const KernelSpec& kernel,
                       bool unwarp, int max_depth, RngStream& rng, std::size_t pixel, Sink&& sink,
                       RenderStats* stats = nullptr) {
  int region = scene.region_at(ray.origin);
  Spectrum throughput(1.0);
  const BeamQuery query{unwarp};
  for (int depth = 0; depth <= max_depth; ++depth) {
    const Medium& medium = scene.medium(region);
    const auto hit = scene.intersect(ray);
    const double segment = hit ? hit->t : Scene::max_flight(medium);
    if (!std::isfinite(segment)) return;
    if (medium.sigma_s() > 0.0 && map.size() > 0) {
      for (const RayBeamIntersection& isect : map.intersect_ray(ray, segment, query, region)) {
        const PhotonBeam& beam = map.beams()[isect.beam];
        if (stats) ++stats->intersections;
        std::optional<RadianceSplat> sp;
        if (mode == BeamMode::Beams2D) {
          sp = estimate_beam_2d(isect, beam, medium);
        } else {
          sp = estimate_beam_1d(isect, beam, medium, kernel);
          if (!sp && isect.degenerate && stats) ++stats->skipped_degenerate;
        }
        if (!sp) continue;
        sp->pixel = pixel;
        sp->value *= throughput;
        sink(*sp);
      }
    }
    if (!hit) return;
    ray.start_time += time_of_flight(medium.ior(), segment);
    throughput *= transmittance(medium, segment);
    const InterfaceResult ir = scene.interact(*hit, ray.direction, region, &rng);
    if (!ir.alive) return;
    throughput *= ir.weight;
    if (throughput.max_component() < 1e-14) return;
    ray.origin = hit->point;
    ray.direction = ir.direction;
    region = ir.region;
  }
}

inline Ray pixel_ray(const Scene& scene, std::size_t pixel, bool jitter, RngStream& rng) {
  const int w = scene.camera.width();
  const int x = static_cast<int>(pixel % w);
  const int y = static_cast<int>(pixel / w);
  const double jx = jitter ? rng.uniform() : 0.5;
  const double jy = jitter ? rng.uniform() : 0.5;
  return scene.camera.generate_ray(x, y, jx, jy);
}

inline std::uint64_t camera_stream(std::uint64_t seed, std::uint64_t iteration, std::size_t pixel) {
  return stream_seed(seed, iteration, pixel, 0x63616d657261ULL);
}

/// Renders one pass of the camera rays against `map` into `film` (which is cleared first).
inline RenderStats render_beams(const Scene& scene, const BeamMap& map, const ProgressiveConfig& config,
                                const KernelSpec& kernel, std::uint64_t iteration, TransientFilm& film) {
  film.clear();
  auto shade = [&](std::size_t pixel, RenderStats& stats) {
    if (pixel >= film.pixel_count()) throw std::out_of_range("render_beams: pixel outside the film");
    RngStream rng(camera_stream(config.seed, iteration, pixel));
    const Ray ray = pixel_ray(scene, pixel, config.jitter, rng);
    gather_camera_ray(scene, map, ray, config.mode, kernel, config.unwarp, config.max_camera_depth, rng, pixel,
                      [&](const RadianceSplat& sp) { splat(film, sp); }, &stats);
  };
  std::vector<RenderStats> task_stats;
  if (config.pixels.empty()) {
    task_stats.resize(static_cast<std::size_t>(film.height()));
    parallel_for(task_stats.size(), config.workers, [&](std::size_t row) {
      for (int x = 0; x < film.width(); ++x) shade(row * film.width() + x, task_stats[row]);
    });
  } else {
    task_stats.resize(config.pixels.size());
    parallel_for(task_stats.size(), config.workers, [&](std::size_t i) { shade(config.pixels[i], task_stats[i]); });
  }
  RenderStats total;
  for (const auto& s : task_stats) {
    total.intersections += s.intersections;
    total.skipped_degenerate += s.skipped_degenerate;
  }
  return total;
}

/// Time-integrated counterpart of `render_beams`: the plain sum of splat values per pixel.
inline std::vector<Spectrum> render_beams_steady(const Scene& scene, const BeamMap& map,
                                                 const ProgressiveConfig& config, const KernelSpec& kernel,
                                                 std::uint64_t iteration) {
  const std::size_t pixels = static_cast<std::size_t>(scene.camera.width()) * scene.camera.height();
  std::vector<Spectrum> image(pixels);
  parallel_for(static_cast<std::size_t>(scene.camera.height()), config.workers, [&](std::size_t row) {
    for (int x = 0; x < scene.camera.width(); ++x) {
      const std::size_t pixel = row * scene.camera.width() + x;
      RngStream rng(camera_stream(config.seed, iteration, pixel));
      const Ray ray = pixel_ray(scene, pixel, config.jitter, rng);
      gather_camera_ray(scene, map, ray, config.mode, kernel, config.unwarp, config.max_camera_depth, rng, pixel,
                        [&](const RadianceSplat& sp) { image[pixel] += sp.value; });
    }
  });
  return image;
}

// ---------------------------------------------------------------------------
// Progressive state

struct ConvergenceRecord {
  int n = 0;
  double radius = 0.0;     // R_n [m]
  double bandwidth = 0.0;  // T_n [s]
  double mse = std::numeric_limits<double>::quiet_NaN();
};

struct ProgressiveState {
  int iteration = 0;  // completed iterations
  double radius = 0.0;
  double bandwidth = 0.0;
  TransientFilm film;  // running mean over completed iterations
  std::vector<ConvergenceRecord> log;
};

/// film_n = film_{n-1} (n-1)/n + iteration_film / n, with n = state.iteration + 1.
inline void accumulate(ProgressiveState& state, const TransientFilm& iteration_film) {
  const int n = state.iteration + 1;
  if (state.iteration == 0 && state.film.pixel_count() == 0) state.film = TransientFilm(
      iteration_film.width(), iteration_film.height(), iteration_film.bins(), iteration_film.t_min(),
      iteration_film.t_max(), iteration_film.warp_mode());
  if (!state.film.same_shape(iteration_film)) throw std::invalid_argument("accumulate: film dimensions differ");
  const double keep = static_cast<double>(n - 1) / n;
  const double inv = 1.0 / n;
  auto& acc = state.film.data();
  const auto& it = iteration_film.data();
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = acc[i] * keep + it[i] * inv;
  auto& ov = state.film.overflow_data();
  const auto& iov = iteration_film.overflow_data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = ov[i] * keep + iov[i] * inv;
  state.iteration = n;
}

/// Mean squared error over `pixels` (all bins, all channels). Both films are compared at
/// float32 precision, the precision of the film file format.
inline double film_mse(const TransientFilm& estimate, const TransientFilm& reference, std::span<const std::size_t> pixels) {
  if (estimate.width() != reference.width() || estimate.height() != reference.height() ||
      estimate.bins() != reference.bins())
    throw std::invalid_argument("film_mse: film dimensions differ");
  if (pixels.empty()) throw std::invalid_argument("film_mse: empty pixel set");
  double sum = 0.0;
  for (std::size_t p : pixels) {
    if (p >= estimate.pixel_count()) throw std::out_of_range("film_mse: pixel outside the film");
    for (int k = 0; k < estimate.bins(); ++k) {
      const Spectrum a = estimate.at(p, k);
      const Spectrum b = reference.at(p, k);
      for (int c = 0; c < 3; ++c) {
        const double d = static_cast<double>(static_cast<float>(a[c])) - static_cast<double>(static_cast<float>(b[c]));
        sum += d * d;
      }
    }
  }
  return sum / (static_cast<double>(pixels.size()) * estimate.bins() * 3);
}

/// Least-squares slope of log(MSE) against log(n).
inline double fit_amse_slope(std::span<const std::pair<double, double>> series) {
  if (series.size() < 2) throw std::invalid_argument("fit_amse_slope: need at least 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double prev_n = -kInfinity;
  for (const auto& [n, mse] : series) {
    if (!(mse > 0.0)) throw std::invalid_argument("fit_amse_slope: MSE must be positive");
    if (!(n > prev_n) || !(n > 0.0)) throw std::invalid_argument("fit_amse_slope: n must be positive and increasing");
    prev_n = n;
    const double x = std::log(n), y = std::log(mse);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(series.size());
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

/// Runs the progressive loop: per iteration trace photons, build the beam map at the
/// current radius, render, and fold the pass into the running mean.
class ProgressiveRenderer {
 public:
  ProgressiveRenderer(const Scene& scene, ProgressiveConfig config, FilmSpec film)
      : scene_(scene), config_(std::move(config)), film_spec_(film) {
    config_.validate();
    radius1_ = config_.initial_radius.value_or(0.01 * scene_.bounds().diagonal());
    if (!(radius1_ > 0.0)) throw std::invalid_argument("scene bounds are empty; set the initial radius explicitly");
    bandwidth1_ = config_.initial_bandwidth.value_or(4.0 * film_spec_.bin_width());
    state_.radius = radius1_;
    state_.bandwidth = bandwidth1_;
    state_.film = make_film();
    pass_ = make_film();
  }

  const ProgressiveState& state() const { return state_; }
  const ProgressiveConfig& config() const { return config_; }
  double initial_radius() const { return radius1_; }
  double initial_bandwidth() const { return bandwidth1_; }
  const WalkStats& walk_stats() const { return walk_stats_; }
  const RenderStats& render_stats() const { return render_stats_; }

  /// Bandwidths used by iteration j (1-based). Beams2D keeps the initial radius.
  std::pair<double, double> bandwidths(int j) const {
    if (config_.mode == BeamMode::Beams2D) return {radius1_, bandwidth1_};
    return bandwidths_closed_form(j, config_.alpha, config_.beta_t, radius1_, bandwidth1_);
  }

  /// Renders iteration j into a fresh film without touching the running mean.
  const TransientFilm& run_iteration(int j) {
    const auto [map, kernel] = prepare_iteration(j);
    const RenderStats rs = render_beams(scene_, map, config_, kernel, static_cast<std::uint64_t>(j), pass_);
    render_stats_.intersections += rs.intersections;
    render_stats_.skipped_degenerate += rs.skipped_degenerate;
    if (!pass_.all_finite()) throw std::runtime_error("iteration produced non-finite radiance");
    return pass_;
  }

  /// Iteration j with time binning disabled: per-pixel time-integrated radiance.
  std::vector<Spectrum> run_steady_iteration(int j) {
    const auto [map, kernel] = prepare_iteration(j);
    return render_beams_steady(scene_, map, config_, kernel, static_cast<std::uint64_t>(j));
  }

  /// One full iteration. With a reference, logs the MSE over `mse_pixels`.
  void step(const TransientFilm* reference = nullptr, std::span<const std::size_t> mse_pixels = {}) {
    const int j = state_.iteration + 1;
    const auto [radius, bandwidth] = bandwidths(j);
    run_iteration(j);
    accumulate(state_, pass_);
    state_.radius = radius;
    state_.bandwidth = bandwidth;
    ConvergenceRecord rec{j, radius, bandwidth, std::numeric_limits<double>::quiet_NaN()};
    if (reference && !mse_pixels.empty()) rec.mse = film_mse(state_.film, *reference, mse_pixels);
    state_.log.push_back(rec);
  }

  void run(const TransientFilm* reference = nullptr, std::span<const std::size_t> mse_pixels = {}) {
    while (state_.iteration < config_.iterations) step(reference, mse_pixels);
  }

 private:
  std::pair<BeamMap, KernelSpec> prepare_iteration(int j) {
    const auto [radius, bandwidth] = bandwidths(j);
    WalkStats ws;
    auto beams = trace_photons(scene_, config_.walk, config_.seed, static_cast<std::uint64_t>(j), radius,
                               config_.workers, &ws);
    walk_stats_ += ws;
    BeamMap::Options opts;
    opts.chunk_length = std::max(8.0 * radius, 0.05 * scene_.bounds().diagonal());
    KernelSpec kernel;
    kernel.spatial = config_.mode == BeamMode::Beams2D ? SpatialBlur::Blur2D : SpatialBlur::Blur1D;
    kernel.temporal = config_.temporal_kernel;
    kernel.radius = radius;
    kernel.time_bandwidth = bandwidth;
    return {BeamMap(std::move(beams), opts), kernel};
  }

  TransientFilm make_film() const {
    return TransientFilm(scene_.camera.width(), scene_.camera.height(), film_spec_.bins, film_spec_.t_min,
                         film_spec_.t_max, config_.unwarp ? WarpMode::Unwarped : WarpMode::Warped);
  }

  const Scene& scene_;
  ProgressiveConfig config_;
  FilmSpec film_spec_;
  double radius1_ = 0.0;
  double bandwidth1_ = 0.0;
  ProgressiveState state_;
  TransientFilm pass_;
  WalkStats walk_stats_;
  RenderStats render_stats_;
};

}  // namespace tpb

#endif  // TPB_PROGRESSIVE_HPP
