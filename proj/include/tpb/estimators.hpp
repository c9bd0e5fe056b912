#ifndef TPB_ESTIMATORS_HPP
#define TPB_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "tpb/beam_map.hpp"
#include "tpb/film.hpp"
#include "tpb/math.hpp"
#include "tpb/media.hpp"

namespace tpb {

enum class SpatialBlur { Blur1D, Blur2D };
enum class TemporalKernel { Box, Epanechnikov };

/// Canonical kernels on [-1, 1] with unit integral.
inline double canonical_kernel(TemporalKernel k, double xi) {
  if (xi < -1.0 || xi > 1.0) return 0.0;
  return k == TemporalKernel::Box ? 0.5 : 0.75 * (1.0 - xi * xi);
}

inline double canonical_kernel_cdf(TemporalKernel k, double xi) {
  if (xi <= -1.0) return 0.0;
  if (xi >= 1.0) return 1.0;
  return k == TemporalKernel::Box ? 0.5 * (xi + 1.0) : 0.5 + 0.75 * xi - 0.25 * xi * xi * xi;
}

/// Box spatial kernels. The beams carry the radius they were built with.
inline double box_kernel_1d(double radius) { return 1.0 / (2.0 * radius); }
inline double box_kernel_2d(double radius) { return 1.0 / (kPi * radius * radius); }

/// Kernel configuration for one iteration; K_T(t) = k_T(t / T) / T.
struct KernelSpec {
  SpatialBlur spatial = SpatialBlur::Blur1D;
  TemporalKernel temporal = TemporalKernel::Epanechnikov;
  double radius = 0.01;           // R_b [m]
  double time_bandwidth = 1e-10;  // T [s], half-width of the temporal support

  double temporal_weight(double dt) const { return canonical_kernel(temporal, dt / time_bandwidth) / time_bandwidth; }
};

/// A radiance contribution for one pixel with a unit-mass distribution over time.
struct RadianceSplat {
  enum class Support { Interval, Kernel, Instant };

  std::size_t pixel = 0;
  Spectrum value;
  Support support = Support::Instant;
  double t0 = 0.0;  // Interval: start; Kernel/Instant: center
  double t1 = 0.0;  // Interval: end; Kernel: bandwidth T
  TemporalKernel kernel = TemporalKernel::Epanechnikov;

  double lower() const { return support == Support::Kernel ? t0 - t1 : t0; }
  double upper() const {
    if (support == Support::Interval) return t1;
    return support == Support::Kernel ? t0 + t1 : t0;
  }

  /// Temporal CDF of the support.
  double cdf(double t) const {
    switch (support) {
      case Support::Interval:
        if (t <= t0) return 0.0;
        if (t >= t1) return 1.0;
        return (t - t0) / (t1 - t0);
      case Support::Kernel:
        return canonical_kernel_cdf(kernel, (t - t0) / t1);
      case Support::Instant:
        break;
    }
    return t >= t0 ? 1.0 : 0.0;
  }

  /// Temporal density (W_2D or K_T); zero for an instant.
  double density(double t) const {
    if (support == Support::Interval) return (t > t0 && t < t1) ? 1.0 / (t1 - t0) : 0.0;
    if (support == Support::Kernel) return canonical_kernel(kernel, (t - t0) / t1) / t1;
    return 0.0;
  }
};

/// (1 - exp(-a w)) / a: the ray-integrated transmittance factor of the 2D estimate.
/// For |a| < 1e-7 a second-order expansion replaces the 0/0-prone closed form.
inline double blur_integral_factor(double a, double w) {
  if (std::abs(a) < 1e-7) {
    const double x = a * w;
    return w * (1.0 - 0.5 * x + x * x / 6.0);
  }
  return -std::expm1(-a * w) / a;
}

/// Transient 2D-blur beam estimate: radiance spread uniformly over [t_minus, t_plus].
///
/// Along the blur interval the beam parameter is u(s) = s_b_entry + (s - s_r_minus) cos(phi),
/// with cos(phi) = -cos(theta_b) the cosine between ray and beam directions, so the
/// integrand exp(-sigma_t (s + u(s))) integrates in closed form with a = sigma_t (1 - cos(theta_b)).
inline RadianceSplat estimate_beam_2d(const RayBeamIntersection& isect, const PhotonBeam& beam, const Medium& medium) {
  RadianceSplat sp;
  const double st = medium.sigma_t();
  const double a = st * (1.0 - isect.cos_theta_b);
  const double width = isect.s_r_plus - isect.s_r_minus;
  const double entry = std::exp(-st * (isect.s_r_minus + isect.s_b_entry));
  const double scale = box_kernel_2d(beam.radius) * eval_phase(medium.phase(), isect.cos_theta_b) * medium.sigma_s() * entry *
                       blur_integral_factor(a, width);
  sp.value = beam.flux * scale;
  if (!(scale >= 0.0) || !sp.value.is_nonnegative())
    throw std::logic_error("estimate_beam_2d: negative or NaN radiance (inconsistent intersection geometry)");
  if (isect.t_plus > isect.t_minus) {
    sp.support = RadianceSplat::Support::Interval;
    sp.t0 = isect.t_minus;
    sp.t1 = isect.t_plus;
  } else {
    sp.support = RadianceSplat::Support::Instant;
    sp.t0 = isect.t_minus;
  }
  return sp;
}

/// Transient 1D-blur beam estimate convolved with the temporal kernel K_T around t_center.
/// Returns nothing when the closest approach is outside the blur or the configuration is
/// near-parallel (sin(theta_b) < 1e-6), where the 1D estimate diverges.
inline std::optional<RadianceSplat> estimate_beam_1d(const RayBeamIntersection& isect, const PhotonBeam& beam,
                                                     const Medium& medium, const KernelSpec& kernel) {
  if (isect.degenerate || isect.sin_theta_b < kDegenerateSin || !isect.closest_in_blur) return std::nullopt;
  const double st = medium.sigma_t();
  const double scale = box_kernel_1d(beam.radius) * eval_phase(medium.phase(), isect.cos_theta_b) * medium.sigma_s() *
                       std::exp(-st * isect.s_b) * std::exp(-st * isect.s_r) / isect.sin_theta_b;
  RadianceSplat sp;
  sp.value = beam.flux * scale;
  sp.support = RadianceSplat::Support::Kernel;
  sp.t0 = isect.t_center;
  sp.t1 = kernel.time_bandwidth;
  sp.kernel = kernel.temporal;
  return sp;
}

/// Distributes a splat over the film's time bins by its temporal CDF. Mass outside the
/// film's time range is added to the pixel's overflow tally.
inline void splat(TransientFilm& film, const RadianceSplat& sp) {
  if (sp.value.is_black()) return;
  const double lo = sp.lower();
  const double hi = sp.upper();
  const double w = film.bin_width();
  auto bin_of = [&](double t) {
    return static_cast<int>(std::clamp(std::floor((t - film.t_min()) / w), 0.0, film.bins() - 1.0));
  };
  const int first = bin_of(lo);
  const int last = bin_of(hi);
  double inside = 0.0;
  if (hi >= film.t_min() && lo < film.t_max()) {
    double prev = sp.cdf(film.bin_edge(first));
    const double start = prev;
    for (int k = first; k <= last; ++k) {
      const double next = sp.cdf(film.bin_edge(k + 1));
      const double mass = next - prev;
      if (mass > 0.0) film.add(sp.pixel, k, sp.value * mass);
      prev = next;
    }
    inside = prev - start;
  }
  const double outside = 1.0 - inside;
  if (outside > 0.0) film.add_overflow(sp.pixel, sp.value * outside);
}

}  // namespace tpb

#endif  // TPB_ESTIMATORS_HPP
