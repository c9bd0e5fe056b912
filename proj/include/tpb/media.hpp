#ifndef TPB_MEDIA_HPP
#define TPB_MEDIA_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "tpb/math.hpp"
#include "tpb/rng.hpp"

namespace tpb {

/// Isotropic when `g == 0` and `kind == Isotropic`; Henyey-Greenstein otherwise.
/// Scattering is instantaneous: there is no delay between arrival and re-emission.
struct PhaseFunction {
  enum class Kind { Isotropic, HenyeyGreenstein };

  Kind kind = Kind::Isotropic;
  double g = 0.0;

  static PhaseFunction isotropic() { return {}; }
  static PhaseFunction henyey_greenstein(double g) {
    if (!(g > -1.0 && g < 1.0)) throw std::domain_error("Henyey-Greenstein g must lie in (-1, 1)");
    return {Kind::HenyeyGreenstein, g};
  }

  bool operator==(const PhaseFunction&) const = default;
};

/// Homogeneous participating medium. Coefficients in 1/m.
class Medium {
 public:
  Medium() = default;
  Medium(double sigma_a, double sigma_s, PhaseFunction phase = {}, double ior = 1.0)
      : sigma_a_(sigma_a), sigma_s_(sigma_s), sigma_t_(sigma_a + sigma_s), phase_(phase), ior_(ior) {
    if (!(sigma_a >= 0.0) || !std::isfinite(sigma_a)) throw std::domain_error("sigma_a must be finite and >= 0");
    if (!(sigma_s >= 0.0) || !std::isfinite(sigma_s)) throw std::domain_error("sigma_s must be finite and >= 0");
    if (!(ior >= 1.0) || !std::isfinite(ior)) throw std::domain_error("index of refraction must be >= 1");
  }

  static Medium vacuum(double ior = 1.0) { return Medium(0.0, 0.0, {}, ior); }

  double sigma_a() const { return sigma_a_; }
  double sigma_s() const { return sigma_s_; }
  double sigma_t() const { return sigma_t_; }
  double albedo() const { return sigma_t_ > 0.0 ? sigma_s_ / sigma_t_ : 0.0; }
  const PhaseFunction& phase() const { return phase_; }
  double ior() const { return ior_; }

  bool operator==(const Medium&) const = default;

 private:
  double sigma_a_ = 0.0;
  double sigma_s_ = 0.0;
  double sigma_t_ = 0.0;
  PhaseFunction phase_{};
  double ior_ = 1.0;
};

inline double transmittance(const Medium& medium, double distance) {
  if (!(distance >= 0.0) || !std::isfinite(distance))
    throw std::domain_error("transmittance: distance must be finite and >= 0");
  return std::exp(-medium.sigma_t() * distance);
}

/// Propagation delay [s] over `distance` metres at constant index of refraction `eta`.
inline double time_of_flight(double eta, double distance) {
  if (!(eta >= 1.0)) throw std::domain_error("time_of_flight: eta must be >= 1");
  if (!(distance >= 0.0)) throw std::domain_error("time_of_flight: distance must be >= 0");
  return eta / kSpeedOfLight * distance;
}

/// `cos_theta` is the cosine between the propagation directions before and after scattering.
inline double eval_phase(const PhaseFunction& phase, double cos_theta) {
  if (!(std::abs(cos_theta) <= 1.0)) throw std::domain_error("eval_phase: |cos_theta| > 1");
  if (phase.kind == PhaseFunction::Kind::Isotropic) return kInvFourPi;
  const double g = phase.g;
  const double denom = 1.0 + g * g - 2.0 * g * cos_theta;
  return kInvFourPi * (1.0 - g * g) / (denom * std::sqrt(denom));
}

struct PhaseSample {
  Vec3 direction;  // world space, unit
  double cos_theta = 1.0;
  double pdf = 0.0;  // solid-angle density
};

/// Samples cos(theta) around the propagation axis by inverting the HG CDF.
inline double sample_phase_cos(const PhaseFunction& phase, double u) {
  const double g = phase.g;
  if (phase.kind == PhaseFunction::Kind::Isotropic || std::abs(g) < 1e-6) return 1.0 - 2.0 * u;
  const double sqr = (1.0 - g * g) / (1.0 - g + 2.0 * g * u);
  return std::clamp((1.0 + g * g - sqr * sqr) / (2.0 * g), -1.0, 1.0);
}

inline PhaseSample sample_phase(const PhaseFunction& phase, const Vec3& axis, RngStream& rng) {
  PhaseSample ps;
  ps.cos_theta = sample_phase_cos(phase, rng.uniform());
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - ps.cos_theta * ps.cos_theta));
  const double phi = 2.0 * kPi * rng.uniform();
  const Frame frame(axis);
  ps.direction = normalize(frame.to_world({sin_theta * std::cos(phi), sin_theta * std::sin(phi), ps.cos_theta}));
  ps.pdf = eval_phase(phase, ps.cos_theta);
  return ps;
}

struct FreeFlightSample {
  double distance = 0.0;
  double pdf = 0.0;
};

/// Exponential distance sampling. `std::nullopt` means the medium never interacts (sigma_t == 0).
inline std::optional<FreeFlightSample> sample_free_flight(const Medium& medium, RngStream& rng) {
  const double st = medium.sigma_t();
  if (st <= 0.0) return std::nullopt;
  const double d = -std::log1p(-rng.uniform()) / st;
  return FreeFlightSample{d, st * std::exp(-st * d)};
}

inline Vec3 sample_uniform_sphere(double u1, double u2) {
  const double z = 1.0 - 2.0 * u1;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * kPi * u2;
  return {r * std::cos(phi), r * std::sin(phi), z};
}

}  // namespace tpb

#endif  // TPB_MEDIA_HPP
