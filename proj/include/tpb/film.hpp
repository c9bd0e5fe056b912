#ifndef TPB_FILM_HPP
#define TPB_FILM_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tpb/math.hpp"

namespace tpb {

enum class WarpMode { Warped, Unwarped };

/// Pixel x time-bin radiance accumulator.
///
/// Bin k covers [t_min + k w, t_min + (k+1) w) with w = (t_max - t_min) / bins and holds the
/// radiance integrated over that interval, so summing bins gives the time-integrated
/// (steady-state) radiance. Energy that lands outside [t_min, t_max] goes to a per-pixel
/// overflow tally.
class TransientFilm {
 public:
  TransientFilm() = default;
  TransientFilm(int width, int height, int bins, double t_min, double t_max, WarpMode mode = WarpMode::Warped)
      : width_(width), height_(height), bins_(bins), t_min_(t_min), t_max_(t_max), mode_(mode) {
    if (width < 1 || height < 1) throw std::invalid_argument("film resolution must be positive");
    if (bins < 1) throw std::invalid_argument("film needs at least one time bin");
    if (!(t_max > t_min) || !std::isfinite(t_min) || !std::isfinite(t_max))
      throw std::invalid_argument("film time range requires finite t_max > t_min");
    data_.assign(static_cast<std::size_t>(width) * height * bins * 3, 0.0);
    overflow_.assign(static_cast<std::size_t>(width) * height, Spectrum{});
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int bins() const { return bins_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  double bin_width() const { return (t_max_ - t_min_) / bins_; }
  /// Start time of bin k; bin_edge(bins()) is exactly t_max.
  double bin_edge(int k) const { return k >= bins_ ? t_max_ : t_min_ + k * bin_width(); }
  WarpMode warp_mode() const { return mode_; }
  void set_warp_mode(WarpMode m) { mode_ = m; }

  std::size_t pixel_index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  Spectrum at(std::size_t pixel, int bin) const {
    const double* p = &data_[offset(pixel, bin)];
    return {p[0], p[1], p[2]};
  }
  Spectrum at(int x, int y, int bin) const { return at(pixel_index(x, y), bin); }

  void add(std::size_t pixel, int bin, const Spectrum& v) {
    double* p = &data_[offset(pixel, bin)];
    p[0] += v[0];
    p[1] += v[1];
    p[2] += v[2];
  }
  void set(std::size_t pixel, int bin, const Spectrum& v) {
    double* p = &data_[offset(pixel, bin)];
    p[0] = v[0];
    p[1] = v[1];
    p[2] = v[2];
  }

  const Spectrum& overflow(std::size_t pixel) const { return overflow_[pixel]; }
  void add_overflow(std::size_t pixel, const Spectrum& v) { overflow_[pixel] += v; }
  void set_overflow(std::size_t pixel, const Spectrum& v) { overflow_[pixel] = v; }

  /// Sum over bins, optionally including out-of-range energy.
  Spectrum time_integral(std::size_t pixel, bool include_overflow = false) const {
    Spectrum s;
    for (int k = 0; k < bins_; ++k) s += at(pixel, k);
    if (include_overflow) s += overflow_[pixel];
    return s;
  }

  bool same_shape(const TransientFilm& o) const {
    return width_ == o.width_ && height_ == o.height_ && bins_ == o.bins_ && t_min_ == o.t_min_ && t_max_ == o.t_max_;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    for (const auto& o : overflow_)
      if (!o.is_finite()) return false;
    return true;
  }

  /// Raw storage, pixel-major: [pixel][bin][channel].
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<Spectrum>& overflow_data() { return overflow_; }
  const std::vector<Spectrum>& overflow_data() const { return overflow_; }

  void clear() {
    std::fill(data_.begin(), data_.end(), 0.0);
    std::fill(overflow_.begin(), overflow_.end(), Spectrum{});
  }

 private:
  std::size_t offset(std::size_t pixel, int bin) const {
    return (pixel * static_cast<std::size_t>(bins_) + static_cast<std::size_t>(bin)) * 3;
  }

  int width_ = 0, height_ = 0, bins_ = 0;
  double t_min_ = 0.0, t_max_ = 1.0;
  WarpMode mode_ = WarpMode::Warped;
  std::vector<double> data_;
  std::vector<Spectrum> overflow_;
};

/// Step-emission response from an impulse response: running sum over bins, per pixel.
inline TransientFilm heaviside_transform(const TransientFilm& impulse) {
  TransientFilm out = impulse;
  for (std::size_t p = 0; p < impulse.pixel_count(); ++p) {
    Spectrum acc;
    for (int k = 0; k < impulse.bins(); ++k) {
      acc += impulse.at(p, k);
      out.set(p, k, acc);
    }
  }
  return out;
}

}  // namespace tpb

#endif  // TPB_FILM_HPP
