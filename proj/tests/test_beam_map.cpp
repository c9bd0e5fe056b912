#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tpb/beam_map.hpp"

using namespace tpb;

namespace {

const Medium kVacuumLike(0.0, 0.0);

PhotonBeam make_beam(Vec3 o, Vec3 d, double len, double radius, double t_b = 0.0, const Medium* m = &kVacuumLike) {
  PhotonBeam b;
  b.origin = o;
  b.direction = normalize(d);
  b.length = len;
  b.radius = radius;
  b.flux = Spectrum(1.0);
  b.start_time = t_b;
  b.region = 0;
  b.medium = m;
  return b;
}

// Independent point-in-blur test: inside the flat-ended cylinder around the segment.
bool inside_blur(const PhotonBeam& b, const Vec3& p) {
  const double u = dot(p - b.origin, b.direction);
  if (u < 0.0 || u > b.length) return false;
  return length(p - (b.origin + b.direction * u)) < b.radius;
}

std::vector<PhotonBeam> random_beams(std::mt19937& gen, int n, double radius_scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.0, 1.0);
  std::vector<PhotonBeam> beams;
  for (int i = 0; i < n; ++i)
    beams.push_back(make_beam({u(gen) * 5, u(gen) * 5, u(gen) * 5}, {u(gen), u(gen), u(gen) + 1e-3},
                              pos(gen) * 3.0 + 1e-3, (pos(gen) + 0.05) * radius_scale, pos(gen) * 1e-8));
  return beams;
}

}  // namespace

TEST(BeamMap, EmptyMapReturnsNothing) {
  const BeamMap map = build_map({});
  EXPECT_EQ(map.size(), 0u);
  EXPECT_TRUE(map.intersect_ray(Ray{{0, 0, 0}, {1, 0, 0}, 0}, 10.0).empty());
}

TEST(BeamMap, SingleBeamWithinRadius) {
  const BeamMap map = build_map({make_beam({0, 0, 0}, {1, 0, 0}, 2.0, 0.1)});
  const auto hits = map.intersect_ray(Ray{{1, -1, 0.05}, {0, 1, 0}, 0}, 5.0);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].beam, 0u);
}

TEST(BeamMap, RayOutsideRadiusGivesNoRecord) {
  const BeamMap map = build_map({make_beam({0, 0, 0}, {1, 0, 0}, 2.0, 0.1)});
  EXPECT_TRUE(map.intersect_ray(Ray{{1, -1, 0.15}, {0, 1, 0}, 0}, 5.0).empty());
  // Past the beam's end cap.
  EXPECT_TRUE(map.intersect_ray(Ray{{2.05, -1, 0.0}, {0, 1, 0}, 0}, 5.0).empty());
  // Ray segment too short to reach the beam.
  EXPECT_TRUE(map.intersect_ray(Ray{{1, -1, 0.0}, {0, 1, 0}, 0}, 0.85).empty());
}

TEST(IntersectBeam, PerpendicularCrossingChordIsTwoRadii) {
  const auto beam = make_beam({0, 0, 0}, {1, 0, 0}, 2.0, 0.1);
  const auto isect = intersect_beam(beam, 0, Ray{{1, -1, 0}, {0, 1, 0}, 0}, 5.0);
  ASSERT_TRUE(isect);
  EXPECT_NEAR(isect->s_r_plus - isect->s_r_minus, 0.2, 1e-12);
  EXPECT_NEAR(isect->s_r, 1.0, 1e-12);
  EXPECT_NEAR(isect->s_b, 1.0, 1e-12);
  EXPECT_NEAR(isect->distance, 0.0, 1e-12);
  EXPECT_NEAR(isect->theta_b, kPi / 2, 1e-12);
  EXPECT_TRUE(isect->closest_in_blur);
  EXPECT_FALSE(isect->degenerate);
}

TEST(IntersectBeam, CenterTimeAddsBeamAndRayTravel) {
  const double d = 0.299792458;  // 1 ns of travel
  const auto beam = make_beam({0, 0, 0}, {1, 0, 0}, 2.0, 0.05, 1e-9);
  const auto isect = intersect_beam(beam, 0, Ray{{d, -d, 0}, {0, 1, 0}, 0.0}, 5.0);
  ASSERT_TRUE(isect);
  EXPECT_NEAR(isect->s_b, d, 1e-12);
  EXPECT_NEAR(isect->s_r, d, 1e-12);
  EXPECT_NEAR(isect->t_center, 3.0e-9, 1e-18);
  // Unwarped drops the camera leg.
  const auto un = intersect_beam(beam, 0, Ray{{d, -d, 0}, {0, 1, 0}, 0.0}, 5.0, {true});
  EXPECT_NEAR(un->t_center, 2.0e-9, 1e-18);
}

TEST(IntersectBeam, IndexOfRefractionScalesTimes) {
  const Medium water(0.0, 0.1, {}, 1.33);
  const auto beam = make_beam({0, 0, 0}, {1, 0, 0}, 4.0, 0.05, 0.0, &water);
  const auto isect = intersect_beam(beam, 0, Ray{{1, -2, 0}, {0, 1, 0}, 0.0}, 5.0);
  ASSERT_TRUE(isect);
  EXPECT_NEAR(isect->t_center, 1.33 * 3.0 / kSpeedOfLight, 1e-20);
}

TEST(IntersectBeam, IntervalMatchesPointSampling) {
  // Oracle: march along the ray and classify points with an independent blur test.
  std::mt19937 gen(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto beam = make_beam({u(gen), u(gen), u(gen)}, {u(gen), u(gen), u(gen)}, 1.0 + u(gen) * 0.5,
                                0.2 + 0.1 * u(gen));
    // Aim near a random point of the beam so most trials intersect.
    const Vec3 target = beam.origin + beam.direction * (beam.length * (0.5 + 0.6 * u(gen))) +
                        Vec3{u(gen), u(gen), u(gen)} * (0.4 * beam.radius);
    const Vec3 origin{u(gen) * 2, u(gen) * 2, u(gen) * 2};
    const Ray ray{origin, normalize(target - origin), 0.0};
    const double len = 4.0;
    const auto isect = intersect_beam(beam, 0, ray, len);
    const int steps = 4000;
    double first = -1.0, last = -1.0;
    for (int i = 0; i <= steps; ++i) {
      const double s = len * i / steps;
      if (inside_blur(beam, ray.at(s))) {
        if (first < 0.0) first = s;
        last = s;
      }
    }
    const double h = len / steps;
    if (first < 0.0) {
      // Allow a miss only if the chord is shorter than the sampling step.
      if (isect) {
        EXPECT_LT(isect->s_r_plus - isect->s_r_minus, h) << trial;
      }
      continue;
    }
    ASSERT_TRUE(isect) << trial;
    EXPECT_NEAR(isect->s_r_minus, first, h) << trial;
    EXPECT_NEAR(isect->s_r_plus, last, h) << trial;
    // Beam-side parameters are projections of the ray interval ends.
    EXPECT_NEAR(isect->s_b_entry, dot(ray.at(isect->s_r_minus) - beam.origin, beam.direction), 1e-9);
    EXPECT_NEAR(isect->s_b_exit, dot(ray.at(isect->s_r_plus) - beam.origin, beam.direction), 1e-9);
    EXPECT_LE(isect->s_b_minus, isect->s_b_plus);
    EXPECT_LE(isect->t_minus, isect->t_center);
    EXPECT_LE(isect->t_center, isect->t_plus);
    ++checked;
  }
  EXPECT_GT(checked, 200);
}

TEST(IntersectBeam, TimesAtIntervalEndsMatchPathLength) {
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto beam = make_beam({u(gen), u(gen), u(gen)}, {u(gen), u(gen), u(gen)}, 2.0, 0.3, 1e-9);
    const Ray ray{{u(gen) * 2, u(gen) * 2, u(gen) * 2}, normalize(Vec3{u(gen), u(gen), u(gen)}), 2e-9};
    const auto isect = intersect_beam(beam, 0, ray, 5.0);
    if (!isect) continue;
    auto path_time = [&](double s) {
      const double ub = dot(ray.at(s) - beam.origin, beam.direction);
      return beam.start_time + ray.start_time + (ub + s) / kSpeedOfLight;
    };
    EXPECT_NEAR(isect->t_minus, path_time(isect->s_r_minus), 1e-18);
    EXPECT_NEAR(isect->t_plus, path_time(isect->s_r_plus), 1e-18);
  }
}

TEST(IntersectBeam, ParallelRayIsDegenerate) {
  const auto beam = make_beam({0, 0, 0}, {1, 0, 0}, 2.0, 0.1);
  const auto isect = intersect_beam(beam, 0, Ray{{-1, 0.05, 0}, {1, 0, 0}, 0}, 5.0);
  ASSERT_TRUE(isect);
  EXPECT_TRUE(isect->degenerate);
  EXPECT_NEAR(isect->s_r_minus, 1.0, 1e-12);
  EXPECT_NEAR(isect->s_r_plus, 3.0, 1e-12);
  EXPECT_FALSE(intersect_beam(beam, 0, Ray{{-1, 0.15, 0}, {1, 0, 0}, 0}, 5.0));
}

TEST(BeamMap, BvhMatchesBruteForceOnRandomBeams) {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const BeamMap map(random_beams(gen, 10000, 0.05), {0.5});
  for (int k = 0; k < 100; ++k) {
    const Ray ray{{u(gen) * 6, u(gen) * 6, u(gen) * 6}, normalize(Vec3{u(gen), u(gen), u(gen)}), 0.0};
    const auto a = map.intersect_ray(ray, 12.0);
    const auto b = map.intersect_ray_brute_force(ray, 12.0);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].beam, b[i].beam);
      EXPECT_EQ(a[i].s_r_minus, b[i].s_r_minus);
      EXPECT_EQ(a[i].t_center, b[i].t_center);
    }
  }
}

TEST(BeamMap, RegionFilter) {
  auto b0 = make_beam({0, 0, 0}, {1, 0, 0}, 2.0, 0.1);
  auto b1 = b0;
  b1.region = 3;
  const BeamMap map({b0, b1});
  const Ray ray{{1, -1, 0}, {0, 1, 0}, 0};
  EXPECT_EQ(map.intersect_ray(ray, 5.0).size(), 2u);
  const auto only = map.intersect_ray(ray, 5.0, {}, 3);
  ASSERT_EQ(only.size(), 1u);
  EXPECT_EQ(only[0].beam, 1u);
}
