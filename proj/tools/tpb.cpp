// Command-line front end: renders a scene file to a transient film.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tpb/io.hpp"
#include "tpb/progressive.hpp"
#include "tpb/reference.hpp"
#include "tpb/scene_io.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// "x1,y1;x2,y2" -> pixel indices
std::vector<std::size_t> parse_pixels(const std::string& spec, int width, int height) {
  std::vector<std::size_t> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto comma = item.find(',');
    if (comma == std::string::npos) throw UsageError("--mse-pixels: expected x,y but got '" + item + "'");
    const auto x = tpb::detail::to_int<int>(item.substr(0, comma));
    const auto y = tpb::detail::to_int<int>(item.substr(comma + 1));
    if (!x || !y) throw UsageError("--mse-pixels: bad coordinate '" + item + "'");
    if (*x < 0 || *x >= width || *y < 0 || *y >= height)
      throw UsageError("--mse-pixels: pixel " + item + " outside the " + std::to_string(width) + "x" +
                       std::to_string(height) + " film");
    out.push_back(static_cast<std::size_t>(*y) * width + *x);
  }
  if (out.empty()) throw UsageError("--mse-pixels: no pixels given");
  return out;
}

struct Options {
  std::string scene, out, mode, reference, mse_pixels, csv, frames_dir, frame_format = "pfm", iterations_dir;
  std::optional<int> iterations, spp;
  std::optional<std::size_t> photons;
  std::optional<std::uint64_t> seed;
  bool unwarp = false, heaviside = false, quiet = false;
  double exposure = 1.0;
  unsigned threads = tpb::default_worker_count();
};

int run(const Options& o) {
  tpb::SceneDescription desc = tpb::load_scene_file(o.scene);
  tpb::RenderMode mode = desc.integrator.mode;
  if (o.mode == "beams1d") mode = tpb::RenderMode::Beams1D;
  else if (o.mode == "beams2d") mode = tpb::RenderMode::Beams2D;
  else if (o.mode == "reference") mode = tpb::RenderMode::Reference;

  const bool reference_mode = mode == tpb::RenderMode::Reference;
  if (!reference_mode && o.spp) throw UsageError("--spp only applies to --mode reference");
  if (reference_mode && (o.iterations || o.photons))
    throw UsageError("--iterations and --photons only apply to the beam modes");
  if (reference_mode && (!o.csv.empty() || !o.iterations_dir.empty()))
    throw UsageError("--convergence-csv and --save-iterations only apply to the beam modes");
  if (!o.mse_pixels.empty() && o.reference.empty()) throw UsageError("--mse-pixels requires --reference");
  if (!o.reference.empty() && o.mse_pixels.empty()) throw UsageError("--reference requires --mse-pixels");

  if (o.seed) desc.integrator.seed = *o.seed;
  if (o.unwarp) desc.integrator.unwarp = true;
  if (o.iterations) desc.integrator.iterations = *o.iterations;
  if (o.photons) desc.integrator.photons = static_cast<int>(*o.photons);
  if (o.spp) desc.integrator.spp = *o.spp;

  bool any_step = false, all_step = true;
  for (const auto& l : desc.lights) {
    any_step |= l.emission == tpb::Emission::Heaviside;
    all_step &= l.emission == tpb::Emission::Heaviside;
  }
  if (any_step && !all_step) throw std::runtime_error("lights mix dirac and heaviside emission");
  const bool heaviside = o.heaviside || all_step;

  const tpb::Scene scene = tpb::build_scene(desc);
  const tpb::FilmSpec spec = tpb::film_spec(desc);
  std::optional<tpb::TransientFilm> reference;
  std::vector<std::size_t> pixels;
  if (!o.reference.empty()) {
    reference = tpb::read_film(o.reference);
    if (reference->width() != scene.camera.width() || reference->height() != scene.camera.height() ||
        reference->bins() != spec.bins)
      throw std::runtime_error("reference film dimensions do not match the scene");
    pixels = parse_pixels(o.mse_pixels, scene.camera.width(), scene.camera.height());
  }

  tpb::TransientFilm film;
  if (reference_mode) {
    tpb::PTConfig pt = tpb::reference_config(desc);
    pt.workers = o.threads;
    tpb::ReferenceStats stats;
    film = tpb::render_reference(scene, pt, spec, &stats);
    if (!o.quiet)
      std::fprintf(stderr, "reference: %llu samples, %llu dropped non-finite\n",
                   static_cast<unsigned long long>(stats.samples),
                   static_cast<unsigned long long>(stats.dropped_nonfinite));
    if (reference && !o.quiet) std::fprintf(stderr, "mse %.9g\n", tpb::film_mse(film, *reference, pixels));
  } else {
    tpb::ProgressiveConfig cfg = tpb::progressive_config(desc);
    cfg.mode = mode == tpb::RenderMode::Beams2D ? tpb::BeamMode::Beams2D : tpb::BeamMode::Beams1D;
    cfg.workers = o.threads;
    tpb::ProgressiveRenderer renderer(scene, cfg, spec);
    if (!o.iterations_dir.empty()) std::filesystem::create_directories(o.iterations_dir);
    while (renderer.state().iteration < cfg.iterations) {
      renderer.step(reference ? &*reference : nullptr, pixels);
      const auto& rec = renderer.state().log.back();
      if (!o.quiet)
        std::fprintf(stderr, "iteration %d  R %.6g m  T %.6g ns  mse %.6g\n", rec.n, rec.radius,
                     tpb::seconds_to_nanoseconds(rec.bandwidth), rec.mse);
      if (!o.iterations_dir.empty()) {
        char name[32];
        std::snprintf(name, sizeof name, "iter_%04d.tpbf", rec.n);
        tpb::write_film(renderer.state().film, std::filesystem::path(o.iterations_dir) / name);
      }
    }
    film = renderer.state().film;
    if (!o.csv.empty()) tpb::write_convergence_csv(renderer.state().log, o.csv);
  }

  if (heaviside) film = tpb::heaviside_transform(film);
  tpb::write_film(film, o.out);
  if (!o.frames_dir.empty())
    tpb::write_frames(film, o.frames_dir, o.exposure,
                      o.frame_format == "ppm" ? tpb::FrameFormat::Ppm : tpb::FrameFormat::Pfm);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transient photon beams renderer"};
  app.require_subcommand(1);
  CLI::App* render = app.add_subcommand("render", "render a scene to a transient film file");
  Options o;
  render->add_option("--scene", o.scene, "scene file")->required()->check(CLI::ExistingFile);
  render->add_option("--out", o.out, "output film file")->required();
  render->add_option("--mode", o.mode, "beams1d | beams2d | reference (default: scene integrator mode)")
      ->check(CLI::IsMember({"beams1d", "beams2d", "reference"}));
  render->add_option("--iterations", o.iterations, "progressive iterations")->check(CLI::PositiveNumber);
  render->add_option("--photons", o.photons, "photon walks per iteration")->check(CLI::PositiveNumber);
  render->add_option("--spp", o.spp, "reference samples per pixel")->check(CLI::PositiveNumber);
  render->add_option("--seed", o.seed, "random seed");
  render->add_flag("--unwarp", o.unwarp, "drop the camera-side travel time");
  render->add_flag("--heaviside", o.heaviside, "write the step-emission response");
  render->add_option("--reference", o.reference, "reference film for MSE")->check(CLI::ExistingFile);
  render->add_option("--mse-pixels", o.mse_pixels, "MSE pixels as \"x1,y1;x2,y2\"");
  render->add_option("--convergence-csv", o.csv, "write n,R,T,mse per iteration");
  render->add_option("--save-iterations", o.iterations_dir, "write the running mean after every iteration");
  render->add_option("--frames-dir", o.frames_dir, "write one image per time bin");
  render->add_option("--exposure", o.exposure, "frame exposure scale");
  render->add_option("--frame-format", o.frame_format, "pfm | ppm")->check(CLI::IsMember({"pfm", "ppm"}));
  render->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  render->add_flag("--quiet", o.quiet, "no progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  try {
    return run(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
