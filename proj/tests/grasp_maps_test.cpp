#include "graspmap/grasp_maps.hpp"

#include <gtest/gtest.h>

#include "graspmap/rng.hpp"

using namespace graspmap;

namespace {

/// Independent point-in-rotated-rect check for the center-third mask, with
/// the same half-open convention the rasterizer promises.
bool oracle_in_mask(const GraspRectangle& rect, int u, int v) {
  const Vec2 au{std::cos(rect.theta), std::sin(rect.theta)};
  const Vec2 av{-au.y, au.x};
  const Vec2 d{u - rect.center_x, v - rect.center_y};
  const double du = dot(d, au);
  const double dv = dot(d, av);
  return du >= -rect.width / 2 && du < rect.width / 2 && dv >= -rect.height / 6 &&
         dv < rect.height / 6;
}

GraspRectangle make_rect(double cx, double cy, double theta, double h, double w) {
  GraspRectangle r;
  r.center_x = cx;
  r.center_y = cy;
  r.theta = theta;
  r.height = h;
  r.width = w;
  return r;
}

}  // namespace

TEST(Rasterize, AxisAlignedCenterThirdStrip) {
  auto maps = GraspMapSet<double>::zeros(100, 100);
  const GraspRectangle rect = make_rect(50, 50, 0, 30, 30);
  rasterize_rect_to_maps(rect, maps, 150.0);

  int count = 0;
  for (int v = 0; v < 100; ++v) {
    for (int u = 0; u < 100; ++u) {
      const bool inside = u >= 35 && u <= 64 && v >= 45 && v <= 54;
      EXPECT_EQ(maps.quality.at2(v, u), inside ? 1.0 : 0.0) << "u=" << u << " v=" << v;
      if (inside) {
        ++count;
        EXPECT_DOUBLE_EQ(maps.angle_cos.at2(v, u), 1.0);  // cos 0
        EXPECT_DOUBLE_EQ(maps.angle_sin.at2(v, u), 0.0);
        EXPECT_DOUBLE_EQ(maps.width_plane.at2(v, u), 30.0 / 150.0);
      }
    }
  }
  EXPECT_EQ(count, 30 * 10);
}

TEST(Rasterize, MatchesPointInRectOracle) {
  Rng rng = make_rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    auto maps = GraspMapSet<double>::zeros(80, 80);
    GraspRectangle rect = make_rect(uniform_double(rng, 25, 55), uniform_double(rng, 25, 55),
                                    canonical_angle(uniform_double(rng, -kPi / 2, kPi / 2)),
                                    uniform_double(rng, 9, 30), uniform_double(rng, 9, 30));
    rasterize_rect_to_maps(rect, maps, 120.0);
    for (int v = 0; v < 80; ++v) {
      for (int u = 0; u < 80; ++u) {
        EXPECT_EQ(maps.quality.at2(v, u) == 1.0, oracle_in_mask(rect, u, v))
            << "trial " << trial << " u=" << u << " v=" << v;
      }
    }
  }
}

TEST(Rasterize, UntouchedMapsStayZero) {
  const auto maps = GraspMapSet<float>::zeros(40, 40);
  for (std::int64_t i = 0; i < maps.quality.size(); ++i) {
    EXPECT_EQ(maps.quality[i], 0.0f);
    EXPECT_EQ(maps.width_plane[i], 0.0f);
  }
}

TEST(Rasterize, DiagonalRectWritesConstantAnglePlanes) {
  auto maps = GraspMapSet<double>::zeros(64, 64);
  rasterize_rect_to_maps(make_rect(32, 32, kPi / 4, 18, 18), maps, 100.0);
  int touched = 0;
  for (int v = 0; v < 64; ++v) {
    for (int u = 0; u < 64; ++u) {
      if (maps.quality.at2(v, u) != 1.0) continue;
      ++touched;
      EXPECT_NEAR(maps.angle_cos.at2(v, u), 0.0, 1e-12);  // cos(pi/2)
      EXPECT_NEAR(maps.angle_sin.at2(v, u), 1.0, 1e-12);
    }
  }
  EXPECT_GT(touched, 0);
}

TEST(Rasterize, AnglePlanesStayOnUnitCircle) {
  Rng rng = make_rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    auto maps = GraspMapSet<double>::zeros(60, 60);
    rasterize_rect_to_maps(make_rect(30, 30, canonical_angle(uniform_double(rng, -2, 2)),
                                     uniform_double(rng, 10, 24), uniform_double(rng, 10, 24)),
                           maps, 100.0);
    for (std::int64_t i = 0; i < maps.quality.size(); ++i) {
      if (maps.quality[i] > 0) {
        const double n = maps.angle_cos[i] * maps.angle_cos[i] +
                         maps.angle_sin[i] * maps.angle_sin[i];
        EXPECT_NEAR(n, 1.0, 1e-12);
      }
    }
  }
}

TEST(Rasterize, MaskAreaTracksWTimesHOverThree) {
  Rng rng = make_rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    auto maps = GraspMapSet<float>::zeros(120, 120);
    const GraspRectangle rect =
        make_rect(uniform_double(rng, 40, 80), uniform_double(rng, 40, 80),
                  canonical_angle(uniform_double(rng, -kPi / 2, kPi / 2)),
                  uniform_double(rng, 9, 40), uniform_double(rng, 9, 40));
    rasterize_rect_to_maps(rect, maps, 200.0);
    int count = 0;
    for (std::int64_t i = 0; i < maps.quality.size(); ++i) count += maps.quality[i] == 1.0f;
    const double expected = rect.width * rect.height / 3.0;
    EXPECT_NEAR(count, expected, rect.width + 2.0) << "trial " << trial;
  }
}

TEST(Rasterize, ClipsOffImageParts) {
  auto maps = GraspMapSet<double>::zeros(50, 50);
  rasterize_rect_to_maps(make_rect(0, 0, 0.2, 30, 30), maps, 100.0);
  int count = 0;
  for (std::int64_t i = 0; i < maps.quality.size(); ++i) count += maps.quality[i] == 1.0;
  EXPECT_GT(count, 0);
  EXPECT_LT(count, 300);
}

TEST(DecodeBest, FindsSinglePeak) {
  auto maps = GraspMapSet<double>::zeros(64, 64);
  maps.quality.at2(20, 10) = 0.9;  // (u, v) = (10, 20)
  maps.angle_cos.at2(20, 10) = std::cos(0.6);
  maps.angle_sin.at2(20, 10) = std::sin(0.6);
  maps.width_plane.at2(20, 10) = 0.5;
  const PixelGrasp g = decode_best_grasp(maps, 100.0);
  EXPECT_EQ(g.u, 10);
  EXPECT_EQ(g.v, 20);
  EXPECT_DOUBLE_EQ(g.quality, 0.9);
  EXPECT_NEAR(g.phi, 0.3, 1e-12);
  EXPECT_DOUBLE_EQ(g.width_px, 50.0);
}

TEST(DecodeBest, RoundTripsRasterizedRect) {
  Rng rng = make_rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    auto maps = GraspMapSet<double>::zeros(96, 96);
    const double width_max = default_width_max(96);
    const double w = uniform_double(rng, 10, width_max);
    const GraspRectangle rect =
        make_rect(uniform_double(rng, 35, 60), uniform_double(rng, 35, 60),
                  canonical_angle(uniform_double(rng, -kPi / 2, kPi / 2)),
                  uniform_double(rng, 9, 30), w);
    rasterize_rect_to_maps(rect, maps, width_max);
    const PixelGrasp g = decode_best_grasp(maps, width_max);
    EXPECT_NEAR(angle_distance(g.phi, rect.theta), 0.0, 1e-6);
    EXPECT_NEAR(g.width_px, rect.width, 1.0);
    EXPECT_DOUBLE_EQ(g.quality, 1.0);
  }
}

TEST(DecodeBest, UniformPlaneTiesToOrigin) {
  auto maps = GraspMapSet<double>::zeros(16, 16);
  maps.quality.fill(0.25);
  const PixelGrasp g = decode_best_grasp(maps, 100.0);
  EXPECT_EQ(g.u, 0);
  EXPECT_EQ(g.v, 0);
}

TEST(DecodeBest, AllNanQualityThrows) {
  auto maps = GraspMapSet<double>::zeros(8, 8);
  maps.quality.fill(std::nan(""));
  EXPECT_THROW(decode_best_grasp(maps, 100.0), NumericError);
}

TEST(DecodeTopK, TwoDisjointRectsYieldOneGraspEach) {
  auto maps = GraspMapSet<double>::zeros(100, 100);
  const GraspRectangle a = make_rect(25, 25, 0.3, 15, 20);
  const GraspRectangle b = make_rect(75, 75, -0.9, 15, 20);
  rasterize_rect_to_maps(a, maps, 150.0);
  rasterize_rect_to_maps(b, maps, 150.0);
  // Rasterized masks are plateaus: the separation radius must exceed the
  // mask diameter so the second pick leaves the first mask.
  const auto grasps = decode_top_k(maps, 2, 0.5, 40.0, 150.0);
  ASSERT_EQ(grasps.size(), 2u);
  int in_a = 0, in_b = 0;
  for (const PixelGrasp& g : grasps) {
    in_a += oracle_in_mask(a, g.u, g.v) ? 1 : 0;
    in_b += oracle_in_mask(b, g.u, g.v) ? 1 : 0;
  }
  EXPECT_EQ(in_a, 1);
  EXPECT_EQ(in_b, 1);
}

TEST(DecodeTopK, AllZeroQualityYieldsEmptyList) {
  const auto maps = GraspMapSet<double>::zeros(32, 32);
  EXPECT_TRUE(decode_top_k(maps, 5, 0.5, 2.0, 100.0).empty());
}

TEST(DecodeTopK, TopOneMatchesBestGrasp) {
  auto maps = GraspMapSet<double>::zeros(64, 64);
  rasterize_rect_to_maps(make_rect(30, 28, 0.7, 12, 18), maps, 100.0);
  const auto top = decode_top_k(maps, 1, 0.5, 2.0, 100.0);
  const PixelGrasp best = decode_best_grasp(maps, 100.0);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].u, best.u);
  EXPECT_EQ(top[0].v, best.v);
  EXPECT_EQ(top[0].quality, best.quality);
}

TEST(DecodeTopK, QualitiesDescendAndRespectThresholdAndK) {
  Rng rng = make_rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    auto maps = GraspMapSet<double>::zeros(48, 48);
    for (std::int64_t i = 0; i < maps.quality.size(); ++i) {
      maps.quality[i] = uniform_double(rng, 0, 1);
    }
    const int k = uniform_int(rng, 1, 6);
    const double threshold = uniform_double(rng, 0.1, 0.9);
    const auto grasps = decode_top_k(maps, k, threshold, 3.0, 100.0);
    EXPECT_LE(grasps.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < grasps.size(); ++i) {
      EXPECT_GE(grasps[i].quality, threshold);
      if (i > 0) EXPECT_LE(grasps[i].quality, grasps[i - 1].quality);
      for (std::size_t j = 0; j < i; ++j) {
        const double dx = grasps[i].u - grasps[j].u, dy = grasps[i].v - grasps[j].v;
        EXPECT_GE(std::sqrt(dx * dx + dy * dy), 3.0);
      }
    }
  }
}

TEST(PixelGraspToRectangle, DefaultHeightRatio) {
  PixelGrasp g;
  g.u = 5;
  g.v = 6;
  g.phi = 0;
  g.width_px = 20;
  g.quality = 1;
  const GraspRectangle r = pixel_grasp_to_rectangle(g);
  EXPECT_DOUBLE_EQ(r.center_x, 5);
  EXPECT_DOUBLE_EQ(r.center_y, 6);
  EXPECT_DOUBLE_EQ(r.width, 20);
  EXPECT_DOUBLE_EQ(r.height, 10);
  const GraspRectangle square = pixel_grasp_to_rectangle(g, 1.0);
  EXPECT_DOUBLE_EQ(square.height, square.width);
}

TEST(PixelGraspToRectangle, RoundTripsThroughCorners) {
  PixelGrasp g;
  g.u = 40;
  g.v = 33;
  g.phi = -0.8;
  g.width_px = 26;
  const GraspRectangle r = pixel_grasp_to_rectangle(g, 0.5);
  const GraspRectangle back = rect_from_corners(corners_from_rect(r));
  EXPECT_NEAR(back.center_x, r.center_x, 1e-6);
  EXPECT_NEAR(back.center_y, r.center_y, 1e-6);
  EXPECT_NEAR(angle_distance(back.theta, r.theta), 0, 1e-6);
  EXPECT_NEAR(back.width, r.width, 1e-6);
  EXPECT_NEAR(back.height, r.height, 1e-6);
}

TEST(PixelGraspToRectangle, RejectsNonPositiveWidth) {
  PixelGrasp g;
  g.width_px = 0;
  EXPECT_THROW(pixel_grasp_to_rectangle(g), NumericError);
}

TEST(Defaults, ScaleWithImageSize) {
  EXPECT_DOUBLE_EQ(default_width_max(400), 150.0);
  EXPECT_DOUBLE_EQ(default_width_max(96), 36.0);
  EXPECT_DOUBLE_EQ(default_min_separation(400), 10.0);
  EXPECT_DOUBLE_EQ(default_min_separation(96), 2.0);
}
