#ifndef TPB_SCENE_IO_HPP
#define TPB_SCENE_IO_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tpb/progressive.hpp"
#include "tpb/reference.hpp"
#include "tpb/scene.hpp"

namespace tpb {

// ---------------------------------------------------------------------------
// Scene description (plain data, the parsed form of a scene file)

struct CameraDesc {
  Vec3 position{0, 0, -4};
  Vec3 look_at{0, 0, 0};
  Vec3 up{0, 1, 0};
  double fov = 40.0;  // vertical, degrees
  int width = 64;
  int height = 64;
  bool operator==(const CameraDesc&) const = default;
};

struct FilmDesc {
  double t_min_ns = 0.0;
  double t_max_ns = 10.0;
  int bins = 128;
  bool operator==(const FilmDesc&) const = default;
};

struct MediumDesc {
  std::variant<GlobalShape, BoxShape, SphereShape> shape;
  double sigma_a = 0.0;
  double sigma_s = 0.0;
  double g = 0.0;
  double ior = 1.0;
  bool dielectric_boundary = false;
  bool operator==(const MediumDesc&) const = default;
};

struct MeshRef {
  std::string path;
  bool operator==(const MeshRef&) const = default;
};

struct SurfaceDesc {
  enum class Material { Diffuse, Mirror, Dielectric };
  std::variant<SphereShape, BoxShape, PlaneShape, MeshRef> shape;
  Material material = Material::Diffuse;
  Spectrum reflectance{1.0};
  double ior = 1.5;
  bool operator==(const SurfaceDesc&) const = default;
};

struct LightDesc {
  Vec3 position;
  Spectrum power{1.0};
  Emission emission = Emission::DiracDelta;
  bool operator==(const LightDesc&) const = default;
};

enum class RenderMode { Beams1D, Beams2D, Reference };

struct IntegratorDesc {
  RenderMode mode = RenderMode::Beams1D;
  double alpha = 2.0 / 3.0;
  double beta_t = 0.5;
  std::optional<double> radius;        // m
  std::optional<double> bandwidth_ns;  // ns
  int photons = 10000;
  int iterations = 16;
  std::uint64_t seed = 1;
  bool unwarp = false;
  int max_vertices = 64;
  bool russian_roulette = true;
  TemporalKernel kernel = TemporalKernel::Epanechnikov;
  int spp = 16;
  int max_bounces = 64;
  bool operator==(const IntegratorDesc&) const = default;
};

struct SceneDescription {
  CameraDesc camera;
  FilmDesc film;
  std::vector<MediumDesc> media;
  std::vector<SurfaceDesc> surfaces;
  std::vector<LightDesc> lights;
  IntegratorDesc integrator;
  std::filesystem::path base_dir;  // mesh paths resolve against this; not serialized

  bool operator==(const SceneDescription& o) const {
    return camera == o.camera && film == o.film && media == o.media && surfaces == o.surfaces &&
           lights == o.lights && integrator == o.integrator;
  }
};

struct ParseIssue {
  int line = 0;  // 1-based; 0 for whole-file problems
  std::string message;
};

class SceneParseError : public std::runtime_error {
 public:
  explicit SceneParseError(std::vector<ParseIssue> issues)
      : std::runtime_error(format(issues)), issues_(std::move(issues)) {}
  const std::vector<ParseIssue>& issues() const { return issues_; }

 private:
  static std::string format(const std::vector<ParseIssue>& issues) {
    std::string s;
    for (const auto& i : issues) {
      if (!s.empty()) s += '\n';
      s += i.line > 0 ? "line " + std::to_string(i.line) + ": " + i.message : i.message;
    }
    return s;
  }
  std::vector<ParseIssue> issues_;
};

// ---------------------------------------------------------------------------
// Parser

namespace detail {

inline std::vector<std::string> tokenize(std::string_view line, std::string* error) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == '#') break;
    if (c == ' ' || c == '\t' || c == '\r') { ++i; continue; }
    if (c == '"') {
      const std::size_t end = line.find('"', i + 1);
      if (end == std::string_view::npos) {
        *error = "unterminated string";
        return {};
      }
      out.emplace_back(line.substr(i + 1, end - i - 1));
      i = end + 1;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' && line[j] != '#') ++j;
    out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> to_int(const std::string& s) {
  Int v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string fmt(const Vec3& v) { return fmt(v.x) + ' ' + fmt(v.y) + ' ' + fmt(v.z); }
inline std::string fmt(const Spectrum& s) { return fmt(s[0]) + ' ' + fmt(s[1]) + ' ' + fmt(s[2]); }

/// Argument cursor for one key line; records problems instead of throwing.
class Args {
 public:
  Args(const std::vector<std::string>& tokens, int line, const std::string& key, std::vector<ParseIssue>& issues)
      : t_(tokens), line_(line), key_(key), issues_(issues) {}

  std::size_t remaining() const { return t_.size() - pos_; }

  std::optional<std::string> word() {
    if (pos_ >= t_.size()) {
      fail("missing value");
      return std::nullopt;
    }
    return t_[pos_++];
  }
  std::optional<double> number() {
    auto w = word();
    if (!w) return std::nullopt;
    auto v = to_double(*w);
    if (!v) fail("expected a number, got '" + *w + "'");
    return v;
  }
  template <class Int>
  std::optional<Int> integer() {
    auto w = word();
    if (!w) return std::nullopt;
    auto v = to_int<Int>(*w);
    if (!v) fail("expected an integer, got '" + *w + "'");
    return v;
  }
  std::optional<Vec3> vec3() {
    auto a = number(), b = number(), c = number();
    if (!a || !b || !c) return std::nullopt;
    return Vec3{*a, *b, *c};
  }
  /// One value (grey) or three.
  std::optional<Spectrum> spectrum() {
    if (remaining() == 1) {
      auto v = number();
      if (!v) return std::nullopt;
      return Spectrum(*v);
    }
    auto a = number(), b = number(), c = number();
    if (!a || !b || !c) return std::nullopt;
    return Spectrum(*a, *b, *c);
  }
  std::optional<bool> boolean() {
    auto w = word();
    if (!w) return std::nullopt;
    if (*w == "true" || *w == "1" || *w == "on") return true;
    if (*w == "false" || *w == "0" || *w == "off") return false;
    fail("expected true or false, got '" + *w + "'");
    return std::nullopt;
  }
  bool done() {
    if (pos_ < t_.size()) {
      fail("unexpected extra value '" + t_[pos_] + "'");
      return false;
    }
    return true;
  }
  void fail(const std::string& msg) { issues_.push_back({line_, key_ + ": " + msg}); }

 private:
  const std::vector<std::string>& t_;
  std::size_t pos_ = 1;
  int line_;
  std::string key_;
  std::vector<ParseIssue>& issues_;
};

using Handler = std::function<void(Args&)>;

template <class T, class F>
Handler set_with(T& field, F&& read) {
  return [&field, read](Args& a) {
    if (auto v = read(a)) field = *v;
  };
}

inline Handler num(double& f) { return set_with(f, [](Args& a) { return a.number(); }); }
inline Handler opt_num(std::optional<double>& f) { return set_with(f, [](Args& a) { return a.number(); }); }
inline Handler vec(Vec3& f) { return set_with(f, [](Args& a) { return a.vec3(); }); }
inline Handler spec(Spectrum& f) { return set_with(f, [](Args& a) { return a.spectrum(); }); }
inline Handler flag(bool& f) { return set_with(f, [](Args& a) { return a.boolean(); }); }
template <class Int>
Handler integer(Int& f) {
  return set_with(f, [](Args& a) { return a.template integer<Int>(); });
}
template <class E>
Handler choice(E& f, std::vector<std::pair<std::string, E>> options) {
  return [&f, options](Args& a) {
    auto w = a.word();
    if (!w) return;
    for (const auto& [name, value] : options)
      if (*w == name) {
        f = value;
        return;
      }
    std::string names;
    for (const auto& o : options) names += (names.empty() ? "" : "|") + o.first;
    a.fail("expected one of " + names + ", got '" + *w + "'");
  };
}

template <class Variant>
void read_shape(Args& a, Variant& out, bool allow_global, bool allow_plane, bool allow_mesh) {
  auto kind = a.word();
  if (!kind) return;
  if (*kind == "global" && allow_global) {
    if constexpr (std::is_constructible_v<Variant, GlobalShape>) out = GlobalShape{};
  } else if (*kind == "sphere") {
    auto c = a.vec3();
    auto r = a.number();
    if (c && r) out = SphereShape{*c, *r};
  } else if (*kind == "box") {
    auto lo = a.vec3();
    auto hi = a.vec3();
    if (lo && hi) out = BoxShape{*lo, *hi};
  } else if (*kind == "plane" && allow_plane) {
    auto p = a.vec3();
    auto n = a.vec3();
    if constexpr (std::is_constructible_v<Variant, PlaneShape>)
      if (p && n) out = PlaneShape{*p, *n};
  } else if (*kind == "mesh" && allow_mesh) {
    auto path = a.word();
    if constexpr (std::is_constructible_v<Variant, MeshRef>)
      if (path) out = MeshRef{*path};
  } else {
    a.fail("unsupported shape '" + *kind + "'");
  }
}

}  // namespace detail

/// Parses the block format:
///
///   camera { position x y z  look_at x y z  up x y z  fov deg  resolution w h }
///   film { t_min ns  t_max ns  bins n }
///   medium { shape global | box x0 y0 z0 x1 y1 z1 | sphere cx cy cz r
///            sigma_a v  sigma_s v  g v  ior v  boundary matched|dielectric }
///   surface { shape sphere .. | box .. | plane px py pz nx ny nz | mesh "file.obj"
///             material diffuse|mirror|dielectric  reflectance r g b  ior v }
///   light { position x y z  power r g b  emission dirac|heaviside }
///   integrator { mode beams1d|beams2d|reference  alpha  beta_t  radius m  bandwidth ns
///                photons  iterations  seed  unwarp  max_vertices  roulette
///                kernel box|epanechnikov  spp  max_bounces }
///
/// One key per line; `#` starts a comment. Every problem is collected and reported with
/// its line number.
inline SceneDescription parse_scene(std::string_view text, const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  SceneDescription desc;
  desc.base_dir = base_dir;
  std::vector<ParseIssue> issues;

  int cameras = 0, films = 0, integrators = 0;
  std::string block;
  int block_line = 0;
  std::map<std::string, Handler> handlers;
  std::map<std::string, int> seen;
  // Element currently being filled, appended on close.
  MediumDesc medium;
  SurfaceDesc surface;
  LightDesc light;
  bool has_shape = false, has_position = false;

  auto open_block = [&](const std::string& name, int line) {
    block = name;
    block_line = line;
    seen.clear();
    handlers.clear();
    has_shape = has_position = false;
    auto mark = [&](bool& f, Handler h) {
      return [&f, h](Args& a) {
        f = true;
        h(a);
      };
    };
    if (name == "camera") {
      ++cameras;
      auto& c = desc.camera;
      handlers = {{"position", vec(c.position)},
                  {"look_at", vec(c.look_at)},
                  {"up", vec(c.up)},
                  {"fov", num(c.fov)},
                  {"resolution", [&c](Args& a) {
                     auto w = a.integer<int>(), h = a.integer<int>();
                     if (w && h) {
                       c.width = *w;
                       c.height = *h;
                     }
                   }}};
    } else if (name == "film") {
      ++films;
      auto& f = desc.film;
      handlers = {{"t_min", num(f.t_min_ns)}, {"t_max", num(f.t_max_ns)}, {"bins", integer(f.bins)}};
    } else if (name == "medium") {
      medium = MediumDesc{};
      handlers = {{"shape",
                   [&](Args& a) {
                     has_shape = true;
                     read_shape(a, medium.shape, true, false, false);
                   }},
                  {"sigma_a", num(medium.sigma_a)},
                  {"sigma_s", num(medium.sigma_s)},
                  {"g", num(medium.g)},
                  {"ior", num(medium.ior)},
                  {"boundary", choice(medium.dielectric_boundary, {{"matched", false}, {"dielectric", true}})}};
    } else if (name == "surface") {
      surface = SurfaceDesc{};
      handlers = {{"shape",
                   [&](Args& a) {
                     has_shape = true;
                     read_shape(a, surface.shape, false, true, true);
                   }},
                  {"material", choice(surface.material, {{"diffuse", SurfaceDesc::Material::Diffuse},
                                                         {"mirror", SurfaceDesc::Material::Mirror},
                                                         {"dielectric", SurfaceDesc::Material::Dielectric}})},
                  {"reflectance", spec(surface.reflectance)},
                  {"ior", num(surface.ior)}};
    } else if (name == "light") {
      light = LightDesc{};
      handlers = {{"position", mark(has_position, vec(light.position))},
                  {"power", spec(light.power)},
                  {"emission", choice(light.emission, {{"dirac", Emission::DiracDelta},
                                                       {"heaviside", Emission::Heaviside}})}};
    } else if (name == "integrator") {
      ++integrators;
      auto& g = desc.integrator;
      handlers = {{"mode", choice(g.mode, {{"beams1d", RenderMode::Beams1D},
                                           {"beams2d", RenderMode::Beams2D},
                                           {"reference", RenderMode::Reference}})},
                  {"alpha", num(g.alpha)},
                  {"beta_t", num(g.beta_t)},
                  {"radius", opt_num(g.radius)},
                  {"bandwidth", opt_num(g.bandwidth_ns)},
                  {"photons", integer(g.photons)},
                  {"iterations", integer(g.iterations)},
                  {"seed", integer(g.seed)},
                  {"unwarp", flag(g.unwarp)},
                  {"max_vertices", integer(g.max_vertices)},
                  {"roulette", flag(g.russian_roulette)},
                  {"kernel", choice(g.kernel, {{"box", TemporalKernel::Box},
                                               {"epanechnikov", TemporalKernel::Epanechnikov}})},
                  {"spp", integer(g.spp)},
                  {"max_bounces", integer(g.max_bounces)}};
    } else {
      issues.push_back({line, "unknown block '" + name + "'"});
      block = "?";
    }
  };

  auto close_block = [&](int line) {
    if (block == "medium") {
      if (!has_shape) issues.push_back({block_line, "medium: missing 'shape'"});
      desc.media.push_back(medium);
    } else if (block == "surface") {
      if (!has_shape) issues.push_back({block_line, "surface: missing 'shape'"});
      desc.surfaces.push_back(surface);
    } else if (block == "light") {
      if (!has_position) issues.push_back({block_line, "light: missing 'position'"});
      desc.lights.push_back(light);
    }
    (void)line;
    block.clear();
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string tok_error;
    auto tokens = tokenize(raw, &tok_error);
    if (!tok_error.empty()) {
      issues.push_back({line_no, tok_error});
      continue;
    }
    if (tokens.empty()) continue;
    if (block.empty()) {
      if (tokens.size() == 2 && tokens[1] == "{") {
        open_block(tokens[0], line_no);
      } else if (tokens.size() == 3 && tokens[1] == "{" && tokens[2] == "}") {
        open_block(tokens[0], line_no);
        close_block(line_no);
      } else {
        issues.push_back({line_no, "expected '<block> {', got '" + tokens[0] + "'"});
      }
      continue;
    }
    if (tokens.size() == 1 && tokens[0] == "}") {
      close_block(line_no);
      continue;
    }
    if (block == "?") continue;
    const std::string& key = tokens[0];
    const auto it = handlers.find(key);
    if (it == handlers.end()) {
      issues.push_back({line_no, block + ": unknown key '" + key + "'"});
      continue;
    }
    if (auto [s, fresh] = seen.emplace(key, line_no); !fresh) {
      issues.push_back({line_no, block + ": duplicate key '" + key + "' (first on line " + std::to_string(s->second) + ")"});
      continue;
    }
    Args args(tokens, line_no, block + "." + key, issues);
    const std::size_t before = issues.size();
    it->second(args);
    if (issues.size() == before) args.done();
  }
  if (!block.empty()) issues.push_back({block_line, "block '" + block + "' is not closed"});

  // Structural and semantic validation.
  auto bad = [&](const std::string& m) { issues.push_back({0, m}); };
  if (cameras != 1) bad("scene needs exactly one camera block, found " + std::to_string(cameras));
  if (films > 1) bad("at most one film block allowed");
  if (integrators > 1) bad("at most one integrator block allowed");
  if (desc.lights.empty()) bad("scene needs at least one light block");

  const auto& c = desc.camera;
  if (!(c.fov > 0.0 && c.fov < 180.0)) bad("camera.fov must lie in (0, 180)");
  if (c.width < 1 || c.height < 1) bad("camera.resolution must be positive");
  if (length(c.look_at - c.position) == 0.0) bad("camera.look_at must differ from camera.position");
  else if (length(cross(normalize(c.look_at - c.position), c.up)) < 1e-9) bad("camera.up must not be parallel to the view direction");

  const auto& f = desc.film;
  if (f.bins < 1) bad("film.bins must be >= 1");
  if (!(f.t_max_ns > f.t_min_ns)) bad("film.t_max must be greater than film.t_min");

  auto check_shape = [&](const auto& shape, const std::string& where) {
    using S = std::decay_t<decltype(shape)>;
    if constexpr (std::is_same_v<S, SphereShape>) {
      if (!(shape.radius > 0.0)) bad(where + ".shape: sphere radius must be > 0");
    } else if constexpr (std::is_same_v<S, BoxShape>) {
      if (!(shape.lo.x < shape.hi.x && shape.lo.y < shape.hi.y && shape.lo.z < shape.hi.z))
        bad(where + ".shape: box needs lo < hi on every axis");
    } else if constexpr (std::is_same_v<S, PlaneShape>) {
      if (length(shape.normal) == 0.0) bad(where + ".shape: plane normal must be nonzero");
    } else if constexpr (std::is_same_v<S, MeshRef>) {
      const auto p = desc.base_dir / shape.path;
      if (!std::filesystem::is_regular_file(p)) bad(where + ".shape: mesh file not found: " + p.string());
    }
  };

  for (std::size_t i = 0; i < desc.media.size(); ++i) {
    const auto& m = desc.media[i];
    const std::string w = "medium[" + std::to_string(i) + "]";
    if (m.sigma_a < 0.0) bad(w + ".sigma_a must be >= 0");
    if (m.sigma_s < 0.0) bad(w + ".sigma_s must be >= 0");
    if (!(m.g > -1.0 && m.g < 1.0)) bad(w + ".g must lie in (-1, 1)");
    if (!(m.ior >= 1.0)) bad(w + ".ior must be >= 1");
    std::visit([&](const auto& s) { check_shape(s, w); }, m.shape);
  }
  for (std::size_t i = 0; i < desc.surfaces.size(); ++i) {
    const auto& s = desc.surfaces[i];
    const std::string w = "surface[" + std::to_string(i) + "]";
    std::visit([&](const auto& sh) { check_shape(sh, w); }, s.shape);
    if (!s.reflectance.is_nonnegative()) bad(w + ".reflectance must be >= 0");
    if (s.material == SurfaceDesc::Material::Dielectric) {
      if (!(s.ior >= 1.0)) bad(w + ".ior must be >= 1");
      if (std::holds_alternative<PlaneShape>(s.shape) || std::holds_alternative<MeshRef>(s.shape))
        bad(w + ": dielectric surfaces must be a sphere or a box");
    }
  }
  for (std::size_t i = 0; i < desc.lights.size(); ++i)
    if (!desc.lights[i].power.is_nonnegative()) bad("light[" + std::to_string(i) + "].power must be >= 0");

  const auto& g = desc.integrator;
  if (!(g.alpha > 0.0 && g.alpha <= 1.0)) bad("integrator.alpha must lie in (0, 1]");
  if (!(g.beta_t >= 0.0 && g.beta_t <= 1.0)) bad("integrator.beta_t must lie in [0, 1]");
  if (g.radius && !(*g.radius > 0.0)) bad("integrator.radius must be > 0");
  if (g.bandwidth_ns && !(*g.bandwidth_ns > 0.0)) bad("integrator.bandwidth must be > 0");
  if (g.photons < 1) bad("integrator.photons must be >= 1");
  if (g.iterations < 1) bad("integrator.iterations must be >= 1");
  if (g.max_vertices < 2) bad("integrator.max_vertices must be >= 2");
  if (g.spp < 1) bad("integrator.spp must be >= 1");
  if (g.max_bounces < 1) bad("integrator.max_bounces must be >= 1");

  if (!issues.empty()) throw SceneParseError(std::move(issues));
  return desc;
}

inline SceneDescription load_scene_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scene file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Serializer (shortest round-trip number formatting)

inline std::string serialize_scene(const SceneDescription& d) {
  using detail::fmt;
  std::ostringstream o;
  auto shape_str = [](const auto& s) -> std::string {
    using S = std::decay_t<decltype(s)>;
    if constexpr (std::is_same_v<S, GlobalShape>) return "global";
    else if constexpr (std::is_same_v<S, SphereShape>) return "sphere " + fmt(s.center) + ' ' + fmt(s.radius);
    else if constexpr (std::is_same_v<S, BoxShape>) return "box " + fmt(s.lo) + ' ' + fmt(s.hi);
    else if constexpr (std::is_same_v<S, PlaneShape>) return "plane " + fmt(s.point) + ' ' + fmt(s.normal);
    else return "mesh \"" + s.path + '"';
  };
  o << "camera {\n  position " << fmt(d.camera.position) << "\n  look_at " << fmt(d.camera.look_at) << "\n  up "
    << fmt(d.camera.up) << "\n  fov " << fmt(d.camera.fov) << "\n  resolution " << d.camera.width << ' '
    << d.camera.height << "\n}\n";
  o << "film {\n  t_min " << fmt(d.film.t_min_ns) << "\n  t_max " << fmt(d.film.t_max_ns) << "\n  bins "
    << d.film.bins << "\n}\n";
  for (const auto& m : d.media) {
    o << "medium {\n  shape " << std::visit(shape_str, m.shape) << "\n  sigma_a " << fmt(m.sigma_a) << "\n  sigma_s "
      << fmt(m.sigma_s) << "\n  g " << fmt(m.g) << "\n  ior " << fmt(m.ior) << "\n  boundary "
      << (m.dielectric_boundary ? "dielectric" : "matched") << "\n}\n";
  }
  for (const auto& s : d.surfaces) {
    const char* mat = s.material == SurfaceDesc::Material::Diffuse  ? "diffuse"
                      : s.material == SurfaceDesc::Material::Mirror ? "mirror"
                                                                    : "dielectric";
    o << "surface {\n  shape " << std::visit(shape_str, s.shape) << "\n  material " << mat << "\n  reflectance "
      << fmt(s.reflectance) << "\n  ior " << fmt(s.ior) << "\n}\n";
  }
  for (const auto& l : d.lights) {
    o << "light {\n  position " << fmt(l.position) << "\n  power " << fmt(l.power) << "\n  emission "
      << (l.emission == Emission::DiracDelta ? "dirac" : "heaviside") << "\n}\n";
  }
  const auto& g = d.integrator;
  const char* mode = g.mode == RenderMode::Beams1D ? "beams1d" : g.mode == RenderMode::Beams2D ? "beams2d" : "reference";
  o << "integrator {\n  mode " << mode << "\n  alpha " << fmt(g.alpha) << "\n  beta_t " << fmt(g.beta_t) << '\n';
  if (g.radius) o << "  radius " << fmt(*g.radius) << '\n';
  if (g.bandwidth_ns) o << "  bandwidth " << fmt(*g.bandwidth_ns) << '\n';
  o << "  photons " << g.photons << "\n  iterations " << g.iterations << "\n  seed " << g.seed << "\n  unwarp "
    << (g.unwarp ? "true" : "false") << "\n  max_vertices " << g.max_vertices << "\n  roulette "
    << (g.russian_roulette ? "true" : "false") << "\n  kernel "
    << (g.kernel == TemporalKernel::Box ? "box" : "epanechnikov") << "\n  spp " << g.spp << "\n  max_bounces "
    << g.max_bounces << "\n}\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Scene construction

/// Minimal Wavefront OBJ reader: `v` and `f` records, polygons fan-triangulated,
/// `f` indices may be negative or carry /vt/vn suffixes.
inline TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh: " + path.string());
  std::vector<Vec3> verts;
  std::vector<Triangle> tris;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x >> v.y >> v.z)) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad vertex");
      verts.push_back(v);
    } else if (tag == "f") {
      std::vector<Vec3> poly;
      std::string ref;
      while (ls >> ref) {
        const auto idx = detail::to_int<long>(ref.substr(0, ref.find('/')));
        const long n = static_cast<long>(verts.size());
        const long i = idx ? (*idx < 0 ? n + *idx : *idx - 1) : -1;
        if (i < 0 || i >= n) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad face index");
        poly.push_back(verts[static_cast<std::size_t>(i)]);
      }
      if (poly.size() < 3) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": face needs 3 vertices");
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) tris.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  if (tris.empty()) throw std::runtime_error("mesh has no faces: " + path.string());
  return TriangleMesh(std::move(tris));
}

/// Media regions come first in declaration order, then dielectric surfaces as clear
/// regions, so a glass object overrides the medium around it.
inline Scene build_scene(const SceneDescription& d) {
  Scene scene;
  scene.camera = PinholeCamera(d.camera.position, d.camera.look_at, d.camera.up, d.camera.fov, d.camera.width,
                               d.camera.height);
  for (const auto& m : d.media) {
    const PhaseFunction phase = m.g == 0.0 ? PhaseFunction::isotropic() : PhaseFunction::henyey_greenstein(m.g);
    scene.regions.push_back(Region{m.shape, Medium(m.sigma_a, m.sigma_s, phase, m.ior), m.dielectric_boundary});
  }
  for (const auto& s : d.surfaces) {
    if (s.material == SurfaceDesc::Material::Dielectric) {
      Region r;
      if (const auto* sp = std::get_if<SphereShape>(&s.shape)) r.shape = *sp;
      else if (const auto* bx = std::get_if<BoxShape>(&s.shape)) r.shape = *bx;
      else throw std::invalid_argument("dielectric surfaces must be a sphere or a box");
      r.medium = Medium::vacuum(s.ior);
      r.dielectric_boundary = true;
      scene.regions.push_back(r);
      continue;
    }
    Surface surf;
    surf.material.kind = s.material == SurfaceDesc::Material::Mirror ? Material::Kind::Mirror : Material::Kind::Diffuse;
    surf.material.reflectance = s.reflectance;
    std::visit(
        [&](const auto& sh) {
          using S = std::decay_t<decltype(sh)>;
          if constexpr (std::is_same_v<S, MeshRef>) surf.shape = load_obj(d.base_dir / sh.path);
          else surf.shape = sh;
        },
        s.shape);
    scene.surfaces.push_back(std::move(surf));
  }
  for (const auto& l : d.lights) scene.lights.push_back(PointLight{l.position, l.power, l.emission});
  scene.prepare();
  return scene;
}

inline FilmSpec film_spec(const SceneDescription& d) {
  return FilmSpec{d.film.bins, nanoseconds_to_seconds(d.film.t_min_ns), nanoseconds_to_seconds(d.film.t_max_ns)};
}

inline ProgressiveConfig progressive_config(const SceneDescription& d) {
  const auto& g = d.integrator;
  ProgressiveConfig c;
  c.mode = g.mode == RenderMode::Beams2D ? BeamMode::Beams2D : BeamMode::Beams1D;
  c.alpha = g.alpha;
  c.beta_t = g.beta_t;
  c.initial_radius = g.radius;
  if (g.bandwidth_ns) c.initial_bandwidth = nanoseconds_to_seconds(*g.bandwidth_ns);
  c.temporal_kernel = g.kernel;
  c.walk.photons = g.photons;
  c.walk.max_vertices = g.max_vertices;
  c.walk.russian_roulette = g.russian_roulette;
  c.iterations = g.iterations;
  c.seed = g.seed;
  c.unwarp = g.unwarp;
  return c;
}

inline PTConfig reference_config(const SceneDescription& d) {
  const auto& g = d.integrator;
  PTConfig c;
  c.spp = g.spp;
  c.max_bounces = g.max_bounces;
  c.seed = g.seed;
  c.unwarp = g.unwarp;
  return c;
}

}  // namespace tpb

#endif  // TPB_SCENE_IO_HPP
