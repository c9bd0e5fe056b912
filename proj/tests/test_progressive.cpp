#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tpb/progressive.hpp"

using namespace tpb;

namespace {

Scene fog_box(double sigma_s = 0.5) {
  Scene s;
  s.camera = PinholeCamera({0, 0, -4}, {0, 0, 0}, {0, 1, 0}, 40.0, 16, 16);
  s.regions.push_back({BoxShape{{-1, -1, -1}, {1, 1, 1}}, Medium(0.1, sigma_s), false});
  s.lights.push_back({{0.2, 0.1, 0.0}, Spectrum(10.0), Emission::DiracDelta});
  s.prepare();
  return s;
}

ProgressiveConfig small_config() {
  ProgressiveConfig c;
  c.walk.photons = 2000;
  c.iterations = 4;
  c.initial_radius = 0.05;
  return c;
}

const FilmSpec kFilm{32, 8e-9, 30e-9};

bool identical(const TransientFilm& a, const TransientFilm& b) {
  return a.same_shape(b) && a.data() == b.data() && a.overflow_data() == b.overflow_data();
}

}  // namespace

TEST(Schedule, RecurrenceFirstStep) {
  const auto [r, t] = bandwidths_recurrence(1, 2.0 / 3.0, 0.5);
  EXPECT_NEAR(r, std::sqrt(5.0 / 6.0), 1e-15);
  EXPECT_NEAR(t, 0.912871, 1e-6);
}

TEST(Schedule, AlphaOneMeansNoShrinkage) {
  for (int j : {1, 5, 100}) {
    const auto [r, t] = bandwidths_recurrence(j, 1.0, 0.5);
    EXPECT_DOUBLE_EQ(r, 1.0);
    EXPECT_DOUBLE_EQ(t, 1.0);
  }
}

TEST(Schedule, ZeroSpatialExponentKeepsRadius) {
  const auto [r, t] = bandwidths_recurrence(3, 2.0 / 3.0, 1.0);
  EXPECT_DOUBLE_EQ(r, 1.0);
  EXPECT_LT(t, 1.0);
}

TEST(Schedule, ClosedFormFirstTwoIterations) {
  const auto [r1, t1] = bandwidths_closed_form(1, 2.0 / 3.0, 0.5, 0.3, 2e-9);
  EXPECT_NEAR(r1, 0.3, 1e-15);
  EXPECT_NEAR(t1, 2e-9, 1e-24);
  const auto [r2, t2] = bandwidths_closed_form(2, 2.0 / 3.0, 0.5, 0.3, 2e-9);
  EXPECT_NEAR(r2 / r1, std::pow(1.2, -0.5), 1e-14);
  EXPECT_NEAR(t2 / t1, 0.912871, 1e-6);
}

TEST(Schedule, ClosedFormMatchesCumulativeRecurrence) {
  for (double alpha : {2.0 / 3.0, 0.5, 0.9})
    for (double beta_t : {0.5, 0.25}) {
      double r = 1.0, t = 1.0;
      for (int j = 1; j <= 10000; ++j) {
        const auto [rc, tc] = bandwidths_closed_form(j, alpha, beta_t, 1.0, 1.0);
        ASSERT_NEAR(rc / r, 1.0, 1e-9) << "j=" << j;
        ASSERT_NEAR(tc / t, 1.0, 1e-9) << "j=" << j;
        const auto [qr, qt] = bandwidths_recurrence(j, alpha, beta_t);
        r *= qr;
        t *= qt;
      }
    }
}

TEST(Schedule, RejectsBadIteration) {
  EXPECT_THROW(bandwidths_recurrence(0, 0.5, 0.5), std::invalid_argument);
  EXPECT_THROW(bandwidths_closed_form(0, 0.5, 0.5, 1, 1), std::invalid_argument);
}

TEST(Accumulate, FirstIterationCopies) {
  ProgressiveState st;
  TransientFilm a(2, 2, 3, 0.0, 1.0);
  a.add(1, 2, Spectrum(1, 2, 3));
  accumulate(st, a);
  EXPECT_TRUE(identical(st.film, a));
  EXPECT_EQ(st.iteration, 1);
}

TEST(Accumulate, TwoIterationsAverage) {
  ProgressiveState st;
  TransientFilm a(2, 2, 3, 0.0, 1.0), b(2, 2, 3, 0.0, 1.0);
  a.add(0, 0, Spectrum(1.0));
  b.add(0, 0, Spectrum(3.0));
  b.add_overflow(3, Spectrum(4.0));
  accumulate(st, a);
  accumulate(st, b);
  EXPECT_EQ(st.film.at(0, 0), Spectrum(2.0));
  EXPECT_EQ(st.film.overflow(3), Spectrum(2.0));
}

TEST(Accumulate, RunningMeanEqualsBatchMean) {
  std::mt19937 gen(2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  ProgressiveState st;
  TransientFilm sum(3, 2, 5, 0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    TransientFilm f(3, 2, 5, 0.0, 1.0);
    for (auto& v : f.data()) v = u(gen);
    for (std::size_t k = 0; k < f.data().size(); ++k) sum.data()[k] += f.data()[k];
    accumulate(st, f);
  }
  for (std::size_t k = 0; k < sum.data().size(); ++k)
    EXPECT_NEAR(st.film.data()[k], sum.data()[k] / 100.0, 1e-12 * sum.data()[k] / 100.0);
}

TEST(Accumulate, RejectsMismatchedFilms) {
  ProgressiveState st;
  accumulate(st, TransientFilm(2, 2, 3, 0.0, 1.0));
  EXPECT_THROW(accumulate(st, TransientFilm(2, 2, 4, 0.0, 1.0)), std::invalid_argument);
}

TEST(AmseSlope, ExactPowerLaws) {
  std::vector<std::pair<double, double>> s;
  for (int n = 1; n <= 1024; n *= 2) s.push_back({double(n), std::pow(n, -2.0 / 3.0)});
  EXPECT_NEAR(fit_amse_slope(s), -2.0 / 3.0, 1e-9);
  for (auto& p : s) p.second = 0.25;
  EXPECT_NEAR(fit_amse_slope(s), 0.0, 1e-12);
  const std::vector<std::pair<double, double>> three = {{1, 1}, {10, 0.1}, {100, 0.01}};
  EXPECT_NEAR(fit_amse_slope(three), -1.0, 1e-12);
}

TEST(AmseSlope, RejectsBadInput) {
  const std::vector<std::pair<double, double>> zero = {{1, 1}, {2, 0}};
  EXPECT_THROW(fit_amse_slope(zero), std::invalid_argument);
  const std::vector<std::pair<double, double>> one = {{1, 1}};
  EXPECT_THROW(fit_amse_slope(one), std::invalid_argument);
}

TEST(FilmMse, ComparesAtSinglePrecision) {
  TransientFilm a(2, 1, 2, 0.0, 1.0), b(2, 1, 2, 0.0, 1.0);
  a.set(1, 0, Spectrum(1.0 + 1e-12));
  b.set(1, 0, Spectrum(1.0));
  const std::vector<std::size_t> px = {1};
  EXPECT_EQ(film_mse(a, b, px), 0.0);
  a.set(1, 1, Spectrum(2.0, 0.0, 0.0));
  EXPECT_NEAR(film_mse(a, b, px), 4.0 / 6.0, 1e-15);
}

TEST(RunIteration, EmptyMediumGivesZeroFilm) {
  Scene s;
  s.camera = PinholeCamera({0, 0, -4}, {0, 0, 0}, {0, 1, 0}, 40.0, 8, 8);
  s.regions.push_back({BoxShape{{-1, -1, -1}, {1, 1, 1}}, Medium(0.0, 0.0), false});
  s.lights.push_back({{0, 0, 0}, Spectrum(1.0), Emission::DiracDelta});
  s.prepare();
  ProgressiveRenderer r(s, small_config(), kFilm);
  const auto& film = r.run_iteration(1);
  for (double v : film.data()) EXPECT_EQ(v, 0.0);
}

TEST(RunIteration, SameSeedSameIterationIsBitIdentical) {
  const Scene s = fog_box();
  ProgressiveRenderer r1(s, small_config(), kFilm), r2(s, small_config(), kFilm);
  const TransientFilm a = r1.run_iteration(3);
  const TransientFilm b = r2.run_iteration(3);
  EXPECT_TRUE(identical(a, b));
  double sum = 0.0;
  for (double v : a.data()) sum += v;
  EXPECT_GT(sum, 0.0);
  const TransientFilm c = r1.run_iteration(4);
  EXPECT_FALSE(identical(a, c));
}

TEST(RunIteration, IndependentOfWorkerCount) {
  const Scene s = fog_box();
  auto c1 = small_config();
  auto c4 = small_config();
  c4.workers = 4;
  ProgressiveRenderer r1(s, c1, kFilm), r4(s, c4, kFilm);
  r1.run();
  r4.run();
  EXPECT_TRUE(identical(r1.state().film, r4.state().film));
}

TEST(RunIteration, TimeIntegralEqualsSteadyRender) {
  // The steady renderer sums the same splats without binning, so every pixel's time
  // integral (overflow included) must agree up to summation order.
  const Scene s = fog_box();
  for (auto mode : {BeamMode::Beams1D, BeamMode::Beams2D}) {
    auto cfg = small_config();
    cfg.mode = mode;
    cfg.walk.max_vertices = 2;
    ProgressiveRenderer r(s, cfg, kFilm);
    const auto& film = r.run_iteration(1);
    const auto [radius, bandwidth] = r.bandwidths(1);
    const BeamMap map(trace_photons(s, cfg.walk, cfg.seed, 1, radius, 1));
    KernelSpec k;
    k.radius = radius;
    k.time_bandwidth = bandwidth;
    const auto steady = render_beams_steady(s, map, cfg, k, 1);
    for (std::size_t p = 0; p < film.pixel_count(); ++p)
      for (int c = 0; c < 3; ++c)
        EXPECT_NEAR(film.time_integral(p, true)[c], steady[p][c], 1e-9 * (1.0 + steady[p][c])) << p;
  }
}

TEST(RunIteration, PixelSubsetMatchesFullRender) {
  const Scene s = fog_box();
  auto full = small_config();
  auto subset = small_config();
  subset.pixels = {3, 77, 130};
  ProgressiveRenderer a(s, full, kFilm), b(s, subset, kFilm);
  const TransientFilm fa = a.run_iteration(2);
  const TransientFilm fb = b.run_iteration(2);
  for (std::size_t p = 0; p < fa.pixel_count(); ++p) {
    const bool chosen = p == 3 || p == 77 || p == 130;
    for (int k = 0; k < fa.bins(); ++k) {
      if (chosen) EXPECT_EQ(fa.at(p, k), fb.at(p, k));
      else EXPECT_TRUE(fb.at(p, k).is_black());
    }
  }
}

TEST(Renderer, BandwidthsFollowTheSchedule) {
  const Scene s = fog_box();
  auto cfg = small_config();
  cfg.initial_bandwidth = 1e-9;
  ProgressiveRenderer r(s, cfg, kFilm);
  r.run();
  ASSERT_EQ(r.state().log.size(), 4u);
  for (const auto& rec : r.state().log) {
    const auto [rr, tt] = bandwidths_closed_form(rec.n, cfg.alpha, cfg.beta_t, 0.05, 1e-9);
    EXPECT_DOUBLE_EQ(rec.radius, rr);
    EXPECT_DOUBLE_EQ(rec.bandwidth, tt);
    EXPECT_TRUE(std::isnan(rec.mse));
  }
  cfg.mode = BeamMode::Beams2D;
  ProgressiveRenderer r2(s, cfg, kFilm);
  EXPECT_EQ(r2.bandwidths(50).first, 0.05);
}

TEST(Renderer, DefaultBandwidths) {
  const Scene s = fog_box();
  ProgressiveConfig cfg;
  ProgressiveRenderer r(s, cfg, kFilm);
  EXPECT_NEAR(r.initial_radius(), 0.01 * s.bounds().diagonal(), 1e-15);
  EXPECT_NEAR(r.initial_bandwidth(), 4.0 * kFilm.bin_width(), 1e-24);
}

TEST(Renderer, LogsMseAgainstReference) {
  const Scene s = fog_box();
  ProgressiveRenderer r(s, small_config(), kFilm);
  const TransientFilm reference(16, 16, kFilm.bins, kFilm.t_min, kFilm.t_max);
  const std::vector<std::size_t> px = {0, 100, 200};
  for (int j = 1; j <= 3; ++j) {
    r.step(&reference, px);
    EXPECT_EQ(r.state().log.back().n, j);
    EXPECT_DOUBLE_EQ(r.state().log.back().mse, film_mse(r.state().film, reference, px));
  }
}

TEST(Config, Validation) {
  ProgressiveConfig c;
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.beta_t = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.pixels = {1, 2, 1};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.initial_radius = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
