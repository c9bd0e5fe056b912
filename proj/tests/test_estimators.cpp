#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tpb/estimators.hpp"

using namespace tpb;

namespace {

PhotonBeam beam_along_x(double radius, const Medium* m, double t_b = 0.0) {
  PhotonBeam b;
  b.origin = {0, 0, 0};
  b.direction = {1, 0, 0};
  b.length = 10.0;
  b.radius = radius;
  b.flux = Spectrum(1.0);
  b.start_time = t_b;
  b.medium = m;
  return b;
}

// Composite Simpson on [a, b].
template <class F>
double simpson(F f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Composite 5-point Gauss-Legendre; never samples the endpoints.
template <class F>
double gauss(F f, double a, double b, int panels = 8) {
  static const double x[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
  static const double w[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
                              0.2369268850561891};
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int i = 0; i < 5; ++i) s += w[i] * f(mid + 0.5 * h * x[i]);
  }
  return s * 0.5 * h;
}

}  // namespace

TEST(Kernels, CanonicalKernelsIntegrateToOne) {
  for (auto k : {TemporalKernel::Box, TemporalKernel::Epanechnikov}) {
    EXPECT_NEAR(simpson([&](double x) { return canonical_kernel(k, x); }, -1.0, 1.0), 1.0, 1e-9);
    EXPECT_EQ(canonical_kernel_cdf(k, -1.0), 0.0);
    EXPECT_EQ(canonical_kernel_cdf(k, 1.0), 1.0);
    EXPECT_NEAR(canonical_kernel_cdf(k, 0.0), 0.5, 1e-15);
    EXPECT_EQ(canonical_kernel(k, 1.5), 0.0);
  }
}

TEST(Kernels, CdfIsIntegralOfDensity) {
  for (auto k : {TemporalKernel::Box, TemporalKernel::Epanechnikov})
    for (double x : {-0.7, -0.2, 0.4, 0.9})
      EXPECT_NEAR(canonical_kernel_cdf(k, x), simpson([&](double y) { return canonical_kernel(k, y); }, -1.0, x), 1e-10);
}

TEST(Kernels, SpatialBoxNormalization) {
  EXPECT_DOUBLE_EQ(box_kernel_1d(0.5), 1.0);
  EXPECT_DOUBLE_EQ(box_kernel_2d(1.0), 1.0 / kPi);
}

TEST(BlurFactor, SmallArgumentBranchIsContinuous) {
  const double w = 0.37;
  for (double a : {-2e-7, -1.0001e-7, -0.9999e-7, 0.0, 0.9999e-7, 1.0001e-7, 3e-7, 0.5}) {
    const double numeric = simpson([&](double s) { return std::exp(-a * s); }, 0.0, w);
    EXPECT_NEAR(blur_integral_factor(a, w), numeric, 1e-12 * w) << a;
  }
}

TEST(Estimate2D, MatchesQuadratureOverTheBlurSlab) {
  // sigma_t = 0.5, sigma_s = 0.25, perpendicular crossing, s_r^- = s_b = 1, chord 0.1.
  const Medium m(0.25, 0.25);
  const double radius = 0.05;
  const auto beam = beam_along_x(radius, &m);
  const Ray ray{{1.0, -1.05, 0.0}, {0, 1, 0}, 0.0};
  const auto isect = intersect_beam(beam, 0, ray, 5.0);
  ASSERT_TRUE(isect);
  EXPECT_NEAR(isect->s_r_minus, 1.0, 1e-12);
  EXPECT_NEAR(isect->s_r_plus - isect->s_r_minus, 0.1, 1e-12);
  EXPECT_NEAR(isect->s_b_minus, 1.0, 1e-12);
  const RadianceSplat sp = estimate_beam_2d(*isect, beam, m);
  // Oracle: integrate K_2D Phi sigma_s rho exp(-sigma_t (s + u(s))) along the ray inside the slab.
  const double oracle = simpson(
      [&](double s) {
        const Vec3 x = ray.at(s);
        const double u = x.x;
        return (1.0 / (kPi * radius * radius)) * 0.25 * (1.0 / (4.0 * kPi)) * std::exp(-0.5 * (s + u));
      },
      1.0, 1.1);
  EXPECT_NEAR(sp.value[0], oracle, 0.005 * oracle);
}

TEST(Estimate2D, ObliqueCrossingMatchesQuadrature) {
  const Medium m(0.3, 0.9, PhaseFunction::henyey_greenstein(0.5));
  const auto beam = beam_along_x(0.2, &m, 1e-9);
  for (double angle : {0.3, 1.0, 2.0, 2.8}) {
    const Vec3 d{std::cos(angle), std::sin(angle), 0.0};
    const Ray ray{Vec3{2.0, 0.05, 0.0} - d * 1.5, d, 0.0};
    const auto isect = intersect_beam(beam, 0, ray, 5.0);
    ASSERT_TRUE(isect);
    const RadianceSplat sp = estimate_beam_2d(*isect, beam, m);
    const double rho = eval_phase(m.phase(), -std::cos(angle));
    const double oracle = simpson(
        [&](double s) {
          const double u = ray.at(s).x;
          return (1.0 / (kPi * 0.04)) * 0.9 * rho * std::exp(-1.2 * (s + u));
        },
        isect->s_r_minus, isect->s_r_plus);
    EXPECT_NEAR(sp.value[0], oracle, 1e-6 * oracle) << angle;
    EXPECT_EQ(sp.support, RadianceSplat::Support::Interval);
  }
}

TEST(Estimate2D, UniformTimeDensity) {
  const Medium m(0.1, 0.4);
  const auto beam = beam_along_x(0.1, &m, 2e-9);
  const auto isect = intersect_beam(beam, 0, Ray{{1, -1, 0}, normalize(Vec3{0.3, 1, 0}), 0.0}, 5.0);
  ASSERT_TRUE(isect);
  const auto sp = estimate_beam_2d(*isect, beam, m);
  EXPECT_EQ(sp.density(sp.t0 - 1e-12), 0.0);
  EXPECT_EQ(sp.density(sp.t1 + 1e-12), 0.0);
  EXPECT_NEAR(gauss([&](double t) { return sp.density(t); }, sp.t0, sp.t1), 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(sp.cdf(sp.t1), 1.0);
}

TEST(Estimate2D, RejectsInconsistentGeometry) {
  const Medium m(0.1, 0.4);
  const auto beam = beam_along_x(0.1, &m);
  RayBeamIntersection bad;
  bad.s_r_minus = 1.0;
  bad.s_r_plus = 0.5;
  bad.cos_theta_b = 0.0;
  EXPECT_THROW(estimate_beam_2d(bad, beam, m), std::logic_error);
}

TEST(Estimate1D, NoAttenuationPerpendicularValue) {
  const Medium m(0.0, 1.0);
  const auto beam = beam_along_x(0.5, &m);
  const auto isect = intersect_beam(beam, 0, Ray{{0, 0, 0}, {0, 1, 0}, 0.0}, 5.0);
  ASSERT_TRUE(isect);
  KernelSpec k;
  const auto sp = estimate_beam_1d(*isect, beam, m, k);
  ASSERT_TRUE(sp);
  EXPECT_NEAR(sp->value[0], 0.0795775, 1e-7);
}

TEST(Estimate1D, ZeroScatteringGivesZero) {
  const Medium m(1.0, 0.0);
  const auto beam = beam_along_x(0.1, &m);
  const auto isect = intersect_beam(beam, 0, Ray{{1, -1, 0}, {0, 1, 0}, 0.0}, 5.0);
  ASSERT_TRUE(isect);
  const auto sp = estimate_beam_1d(*isect, beam, m, KernelSpec{});
  ASSERT_TRUE(sp);
  EXPECT_TRUE(sp->value.is_black());
}

TEST(Estimate1D, ValueMatchesClosedForm) {
  const Medium m(0.2, 0.6, PhaseFunction::henyey_greenstein(-0.3));
  const auto beam = beam_along_x(0.05, &m, 1e-9);
  const double angle = 1.1;
  const Vec3 d{std::cos(angle), std::sin(angle), 0.0};
  const Ray ray{Vec3{2.0, 0.0, 0.01} - d * 1.5, d, 0.5e-9};
  const auto isect = intersect_beam(beam, 0, ray, 5.0);
  ASSERT_TRUE(isect);
  KernelSpec k;
  k.time_bandwidth = 0.1e-9;
  const auto sp = estimate_beam_1d(*isect, beam, m, k);
  ASSERT_TRUE(sp);
  const double expected =
      (1.0 / 0.1) * eval_phase(m.phase(), -std::cos(angle)) * 0.6 * std::exp(-0.8 * (2.0 + 1.5)) / std::sin(angle);
  EXPECT_NEAR(sp->value[0], expected, 1e-12 * expected);
  EXPECT_NEAR(sp->t0, 1e-9 + 0.5e-9 + 3.5 / kSpeedOfLight, 1e-20);
  EXPECT_EQ(sp->t1, 0.1e-9);
}

TEST(Estimate1D, SkipsNearParallelAndOutsideBlur) {
  const Medium m(0.1, 0.4);
  const auto beam = beam_along_x(0.1, &m);
  const auto par = intersect_beam(beam, 0, Ray{{-1, 0.05, 0}, {1, 0, 0}, 0}, 5.0);
  ASSERT_TRUE(par);
  EXPECT_FALSE(estimate_beam_1d(*par, beam, m, KernelSpec{}));
  // Closest approach beyond the beam origin (u < 0) although the ray clips the end cap.
  // Closest approach to the beam line is at u = -0.05; at u = 0 the ray is 0.094 from the axis.
  const Ray r{{-1.05, -1, 0.08}, normalize(Vec3{1, 1, 0}), 0.0};
  const auto cap = intersect_beam(beam, 0, r, 5.0);
  ASSERT_TRUE(cap);
  EXPECT_FALSE(cap->closest_in_blur);
  EXPECT_FALSE(estimate_beam_1d(*cap, beam, m, KernelSpec{}));
}

TEST(Estimate1D, KernelSupportIntegratesToOne) {
  for (auto kind : {TemporalKernel::Box, TemporalKernel::Epanechnikov}) {
    RadianceSplat sp;
    sp.support = RadianceSplat::Support::Kernel;
    sp.kernel = kind;
    sp.t0 = 5e-9;
    sp.t1 = 0.3e-9;
    EXPECT_NEAR(gauss([&](double t) { return sp.density(t); }, sp.lower(), sp.upper()), 1.0, 1e-9);
    EXPECT_NEAR(sp.cdf(sp.upper()) - sp.cdf(sp.lower()), 1.0, 1e-15);
  }
}

TEST(Splat, IntervalSpanningTwoBinsSplitsEvenly) {
  TransientFilm film(1, 1, 4, 0.0, 4.0);
  RadianceSplat sp;
  sp.value = Spectrum(2.0);
  sp.support = RadianceSplat::Support::Interval;
  sp.t0 = 1.0;
  sp.t1 = 3.0;
  splat(film, sp);
  EXPECT_DOUBLE_EQ(film.at(0, 0)[0], 0.0);
  EXPECT_DOUBLE_EQ(film.at(0, 1)[0], 1.0);
  EXPECT_DOUBLE_EQ(film.at(0, 2)[0], 1.0);
  EXPECT_DOUBLE_EQ(film.at(0, 3)[0], 0.0);
  EXPECT_TRUE(film.overflow(0).is_black());
}

TEST(Splat, OutsideRangeGoesToOverflow) {
  TransientFilm film(1, 1, 4, 0.0, 4.0);
  RadianceSplat sp;
  sp.value = Spectrum(1.5);
  sp.support = RadianceSplat::Support::Interval;
  sp.t0 = 5.0;
  sp.t1 = 6.0;
  splat(film, sp);
  EXPECT_TRUE(film.time_integral(0).is_black());
  EXPECT_DOUBLE_EQ(film.overflow(0)[0], 1.5);
  sp.support = RadianceSplat::Support::Instant;
  sp.t0 = -1e300;
  splat(film, sp);
  EXPECT_DOUBLE_EQ(film.overflow(0)[0], 3.0);
}

TEST(Splat, InstantLandsInItsBin) {
  TransientFilm film(1, 1, 4, 0.0, 4.0);
  RadianceSplat sp;
  sp.value = Spectrum(1.0);
  sp.support = RadianceSplat::Support::Instant;
  sp.t0 = 2.5;
  splat(film, sp);
  EXPECT_DOUBLE_EQ(film.at(0, 2)[0], 1.0);
}

TEST(Splat, RandomSplatsConserveEnergy) {
  std::mt19937 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TransientFilm film(3, 2, 17, 1e-9, 9e-9);
  std::vector<double> total(film.pixel_count(), 0.0);
  for (int i = 0; i < 20000; ++i) {
    RadianceSplat sp;
    sp.pixel = static_cast<std::size_t>(u(gen) * film.pixel_count());
    sp.value = Spectrum(u(gen), u(gen), u(gen));
    const double kind = u(gen);
    sp.t0 = u(gen) * 11e-9 - 1e-9;
    if (kind < 0.4) {
      sp.support = RadianceSplat::Support::Interval;
      sp.t1 = sp.t0 + u(gen) * 3e-9;
    } else if (kind < 0.8) {
      sp.support = RadianceSplat::Support::Kernel;
      sp.kernel = u(gen) < 0.5 ? TemporalKernel::Box : TemporalKernel::Epanechnikov;
      sp.t1 = 1e-12 + u(gen) * 2e-9;
    } else {
      sp.support = RadianceSplat::Support::Instant;
    }
    total[sp.pixel] += sp.value[1];
    splat(film, sp);
  }
  for (std::size_t p = 0; p < film.pixel_count(); ++p)
    EXPECT_NEAR(film.time_integral(p, true)[1], total[p], 1e-9 * total[p]);
}
