#ifndef TPB_IO_HPP
#define TPB_IO_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpb/film.hpp"
#include "tpb/progressive.hpp"
#include "tpb/scene_io.hpp"

namespace tpb {

// ---------------------------------------------------------------------------
// Film file
//
//   "TPBF1" | u32 width | u32 height | u32 bins | f64 t_min | f64 t_max | u32 channels (3)
//   float32 payload, bin-major: bin 0 first, within a bin row-major RGB.
// All little-endian. Times are seconds.

inline constexpr char kFilmMagic[5] = {'T', 'P', 'B', 'F', '1'};
inline constexpr std::size_t kFilmHeaderSize = 5 + 3 * 4 + 2 * 8 + 4;

class FilmFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <class T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

inline std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_all(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace detail

inline std::vector<unsigned char> encode_film(const TransientFilm& film) {
  if (!film.all_finite()) throw std::invalid_argument("refusing to write a film with non-finite values");
  std::vector<unsigned char> out;
  const std::size_t n = film.pixel_count() * static_cast<std::size_t>(film.bins()) * 3;
  out.reserve(kFilmHeaderSize + 4 * n);
  out.insert(out.end(), kFilmMagic, kFilmMagic + 5);
  detail::put_le(out, static_cast<std::uint32_t>(film.width()));
  detail::put_le(out, static_cast<std::uint32_t>(film.height()));
  detail::put_le(out, static_cast<std::uint32_t>(film.bins()));
  detail::put_le(out, film.t_min());
  detail::put_le(out, film.t_max());
  detail::put_le(out, std::uint32_t{3});
  for (int k = 0; k < film.bins(); ++k)
    for (std::size_t p = 0; p < film.pixel_count(); ++p) {
      const Spectrum v = film.at(p, k);
      for (int c = 0; c < 3; ++c) detail::put_le(out, static_cast<float>(v[c]));
    }
  return out;
}

inline TransientFilm decode_film(std::span<const unsigned char> bytes) {
  if (bytes.size() < kFilmHeaderSize) throw FilmFormatError("film file truncated: header incomplete");
  if (std::memcmp(bytes.data(), kFilmMagic, 5) != 0) throw FilmFormatError("not a film file: bad magic");
  const unsigned char* p = bytes.data() + 5;
  const auto w = detail::get_le<std::uint32_t>(p);
  const auto h = detail::get_le<std::uint32_t>(p + 4);
  const auto bins = detail::get_le<std::uint32_t>(p + 8);
  const auto t_min = detail::get_le<double>(p + 12);
  const auto t_max = detail::get_le<double>(p + 20);
  const auto channels = detail::get_le<std::uint32_t>(p + 28);
  if (channels != 3) throw FilmFormatError("film file: unsupported channel count " + std::to_string(channels));
  constexpr auto kIntMax = static_cast<std::uint64_t>(std::numeric_limits<int>::max());
  if (w == 0 || h == 0 || bins == 0 || w > kIntMax || h > kIntMax || bins > kIntMax)
    throw FilmFormatError("film file: invalid dimensions");
  // Overflow-safe element count: each factor is < 2^32, so check before every product.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / 12;
  std::uint64_t count = w;
  if (count > limit / h) throw FilmFormatError("film file: dimension overflow");
  count *= h;
  if (count > limit / bins) throw FilmFormatError("film file: dimension overflow");
  count *= bins;
  const std::uint64_t payload = count * 12;
  const std::uint64_t available = bytes.size() - kFilmHeaderSize;
  if (available < payload) throw FilmFormatError("film file truncated: payload incomplete");
  if (available > payload) throw FilmFormatError("film file: trailing bytes after payload");
  TransientFilm film(static_cast<int>(w), static_cast<int>(h), static_cast<int>(bins), t_min, t_max);
  const unsigned char* q = bytes.data() + kFilmHeaderSize;
  for (int k = 0; k < film.bins(); ++k)
    for (std::size_t px = 0; px < film.pixel_count(); ++px) {
      Spectrum v;
      for (int c = 0; c < 3; ++c, q += 4) v[c] = detail::get_le<float>(q);
      film.set(px, k, v);
    }
  return film;
}

inline void write_film(const TransientFilm& film, const std::filesystem::path& path) {
  detail::write_all(path, encode_film(film));
}

inline TransientFilm read_film(const std::filesystem::path& path) { return decode_film(detail::read_all(path)); }

// ---------------------------------------------------------------------------
// Frame images

enum class FrameFormat { Pfm, Ppm };

/// Exposure-scaled radiance of bin k. PPM additionally clamps to [0, 1] and quantizes.
inline float frame_value(double v, double exposure) { return static_cast<float>(v * exposure); }
inline unsigned char frame_byte(double v, double exposure) {
  const double x = std::clamp(v * exposure, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(x * 255.0));
}

inline std::vector<unsigned char> encode_frame(const TransientFilm& film, int bin, double exposure, FrameFormat fmt) {
  std::vector<unsigned char> out;
  const int w = film.width(), h = film.height();
  if (fmt == FrameFormat::Ppm) {
    const std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.assign(header.begin(), header.end());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Spectrum v = film.at(x, y, bin);
        for (int c = 0; c < 3; ++c) out.push_back(frame_byte(v[c], exposure));
      }
    return out;
  }
  // PFM: negative scale marks little-endian; scanlines run bottom to top.
  const std::string header = "PF\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1.0\n";
  out.assign(header.begin(), header.end());
  for (int y = h - 1; y >= 0; --y)
    for (int x = 0; x < w; ++x) {
      const Spectrum v = film.at(x, y, bin);
      for (int c = 0; c < 3; ++c) detail::put_le(out, frame_value(v[c], exposure));
    }
  return out;
}

/// One image per time bin: frame_0000.pfm, frame_0001.pfm, ...
inline void write_frames(const TransientFilm& film, const std::filesystem::path& dir, double exposure,
                         FrameFormat fmt) {
  std::filesystem::create_directories(dir);
  for (int k = 0; k < film.bins(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.%s", k, fmt == FrameFormat::Pfm ? "pfm" : "ppm");
    detail::write_all(dir / name, encode_frame(film, k, exposure, fmt));
  }
}

// ---------------------------------------------------------------------------
// Convergence log: n,R,T,mse with R in metres and T in nanoseconds.

inline std::string convergence_csv(std::span<const ConvergenceRecord> log) {
  using detail::fmt;
  std::string s = "n,R,T,mse\n";
  for (const auto& r : log)
    s += std::to_string(r.n) + ',' + fmt(r.radius) + ',' + fmt(seconds_to_nanoseconds(r.bandwidth)) + ',' +
         (std::isnan(r.mse) ? std::string("nan") : fmt(r.mse)) + '\n';
  return s;
}

inline void write_convergence_csv(std::span<const ConvergenceRecord> log, const std::filesystem::path& path) {
  const std::string s = convergence_csv(log);
  detail::write_all(path, std::span(reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

}  // namespace tpb

#endif  // TPB_IO_HPP
