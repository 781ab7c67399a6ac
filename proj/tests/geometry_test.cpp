#include "graspmap/geometry.hpp"

#include <gtest/gtest.h>

#include "graspmap/rng.hpp"

using namespace graspmap;

namespace {

constexpr double kDeg = kPi / 180.0;

GraspRectangle random_rect(Rng& rng, double center_lo = 20, double center_hi = 80,
                           double w_lo = 8, double w_hi = 40) {
  GraspRectangle r;
  r.center_x = uniform_double(rng, center_lo, center_hi);
  r.center_y = uniform_double(rng, center_lo, center_hi);
  r.theta = canonical_angle(uniform_double(rng, -kPi / 2, kPi / 2));
  r.width = uniform_double(rng, w_lo, w_hi);
  r.height = uniform_double(rng, w_lo / 2, w_hi);
  return r;
}

/// Dense point-sampling estimate of the Jaccard index; the independent
/// oracle for the polygon-clipping result.
double jaccard_by_rasterization(const GraspRectangle& a, const GraspRectangle& b, double step) {
  const auto inside = [](const GraspRectangle& r, double x, double y) {
    const Vec2 u{std::cos(r.theta), std::sin(r.theta)};
    const Vec2 v{-u.y, u.x};
    const Vec2 d{x - r.center_x, y - r.center_y};
    return std::abs(dot(d, u)) <= r.width / 2 && std::abs(dot(d, v)) <= r.height / 2;
  };
  const auto ca = corners_from_rect(a);
  const auto cb = corners_from_rect(b);
  double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
  for (const auto& corners : {ca, cb}) {
    for (const Vec2& c : corners) {
      min_x = std::min(min_x, c.x);
      max_x = std::max(max_x, c.x);
      min_y = std::min(min_y, c.y);
      max_y = std::max(max_y, c.y);
    }
  }
  long inter = 0, uni = 0;
  for (double y = min_y + step / 2; y < max_y; y += step) {
    for (double x = min_x + step / 2; x < max_x; x += step) {
      const bool ia = inside(a, x, y), ib = inside(b, x, y);
      inter += (ia && ib) ? 1 : 0;
      uni += (ia || ib) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

TEST(RectFromCorners, AxisAlignedExample) {
  const std::array<Vec2, 4> corners = {Vec2{0, 0}, Vec2{4, 0}, Vec2{4, 2}, Vec2{0, 2}};
  const GraspRectangle r = rect_from_corners(corners);
  EXPECT_DOUBLE_EQ(r.center_x, 2.0);
  EXPECT_DOUBLE_EQ(r.center_y, 1.0);
  EXPECT_DOUBLE_EQ(r.theta, 0.0);
  EXPECT_DOUBLE_EQ(r.width, 4.0);
  EXPECT_DOUBLE_EQ(r.height, 2.0);
}

TEST(RectFromCorners, VerticalEdgeFoldsToHalfPi) {
  const std::array<Vec2, 4> corners = {Vec2{0, 0}, Vec2{0, 4}, Vec2{-2, 4}, Vec2{-2, 0}};
  const GraspRectangle r = rect_from_corners(corners);
  EXPECT_DOUBLE_EQ(r.theta, kPi / 2);
  EXPECT_DOUBLE_EQ(r.width, 4.0);
  EXPECT_DOUBLE_EQ(r.height, 2.0);
}

TEST(RectFromCorners, RejectsBadInput) {
  const std::array<Vec2, 4> nan_corners = {Vec2{0, 0}, Vec2{std::nan(""), 0}, Vec2{1, 1},
                                           Vec2{0, 1}};
  EXPECT_THROW(rect_from_corners(nan_corners), NumericError);
  const std::array<Vec2, 4> degenerate = {Vec2{1, 1}, Vec2{1, 1}, Vec2{2, 2}, Vec2{2, 1}};
  EXPECT_THROW(rect_from_corners(degenerate), NumericError);
}

TEST(RectFromCorners, RoundTripsThroughCorners) {
  Rng rng = make_rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const GraspRectangle r = random_rect(rng);
    const GraspRectangle back = rect_from_corners(corners_from_rect(r));
    EXPECT_NEAR(back.center_x, r.center_x, 1e-6);
    EXPECT_NEAR(back.center_y, r.center_y, 1e-6);
    EXPECT_NEAR(angle_distance(back.theta, r.theta), 0.0, 1e-6);
    EXPECT_NEAR(back.width, r.width, 1e-6);
    EXPECT_NEAR(back.height, r.height, 1e-6);
  }
}

TEST(AngleDistance, BasicCases) {
  EXPECT_DOUBLE_EQ(angle_distance(0.1, 0.1), 0.0);
  EXPECT_NEAR(angle_distance(87 * kDeg, -88 * kDeg), 5 * kDeg, 1e-12);
  EXPECT_NEAR(angle_distance(10 * kDeg, 35 * kDeg), 25 * kDeg, 1e-12);
  EXPECT_LT(angle_distance(10 * kDeg, 35 * kDeg), 30 * kDeg);
}

TEST(AngleDistance, IsPseudometricModuloPi) {
  Rng rng = make_rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = uniform_double(rng, -10, 10);
    const double b = uniform_double(rng, -10, 10);
    EXPECT_DOUBLE_EQ(angle_distance(a, a), 0.0);
    EXPECT_DOUBLE_EQ(angle_distance(a, b), angle_distance(b, a));
    EXPECT_NEAR(angle_distance(a, a + kPi), 0.0, 1e-9);
    EXPECT_GE(angle_distance(a, b), 0.0);
    EXPECT_LE(angle_distance(a, b), kPi / 2 + 1e-12);
  }
}

TEST(Jaccard, IdenticalRectanglesGiveExactlyOne) {
  Rng rng = make_rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const GraspRectangle r = random_rect(rng);
    EXPECT_EQ(jaccard(r, r), 1.0);
  }
}

TEST(Jaccard, DisjointRectanglesGiveZero) {
  GraspRectangle a{10, 10, 0.3, 4, 6};
  GraspRectangle b{100, 100, -0.7, 4, 6};
  EXPECT_DOUBLE_EQ(jaccard(a, b), 0.0);
}

TEST(Jaccard, HalfShiftedSquaresGiveOneThird) {
  // 10x10 squares offset by 5: intersection 50, union 150.
  GraspRectangle a{0, 0, 0, 10, 10};
  GraspRectangle b{5, 0, 0, 10, 10};
  EXPECT_NEAR(jaccard(a, b), 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(jaccard_by_rasterization(a, b, 0.01), 1.0 / 3.0, 2e-3);
}

TEST(Jaccard, SymmetricAndBounded) {
  Rng rng = make_rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const GraspRectangle a = random_rect(rng);
    const GraspRectangle b = random_rect(rng);
    const double j = jaccard(a, b);
    EXPECT_GE(j, 0.0);
    EXPECT_LE(j, 1.0);
    EXPECT_NEAR(j, jaccard(b, a), 1e-12);
  }
}

TEST(Jaccard, AgreesWithRasterizationOracle) {
  Rng rng = make_rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    GraspRectangle a = random_rect(rng, 30, 60, 10, 30);
    GraspRectangle b = random_rect(rng, 30, 60, 10, 30);
    const double exact = jaccard(a, b);
    const double sampled = jaccard_by_rasterization(a, b, 0.05);
    EXPECT_NEAR(exact, sampled, 0.01) << "trial " << trial;
  }
}

TEST(RectangleMetric, ExactMatchPasses) {
  const GraspRectangle g{50, 50, 0.4, 10, 20};
  const std::vector<GraspRectangle> gt = {g};
  EXPECT_TRUE(rectangle_metric_match(g, gt));
}

TEST(RectangleMetric, FullOverlapWithBadAngleFails) {
  const GraspRectangle gt_rect{50, 50, 0.0, 20, 20};
  GraspRectangle pred = gt_rect;
  pred.theta = canonical_angle(45 * kDeg);
  const std::vector<GraspRectangle> gt = {gt_rect};
  EXPECT_FALSE(rectangle_metric_match(pred, gt));
}

TEST(RectangleMetric, ThresholdSweepSeparatesBorderlineOverlap) {
  // Axis-aligned squares shifted to land at J = 0.28: passes at 0.25, fails
  // at the stricter 0.30.
  GraspRectangle gt_rect{0, 0, 0, 10, 10};
  GraspRectangle pred{5.625, 0, 0, 10, 10};
  const double j = jaccard(pred, gt_rect);
  EXPECT_NEAR(j, 0.28, 1e-9);
  const std::vector<GraspRectangle> gt = {gt_rect};
  EXPECT_TRUE(rectangle_metric_match(pred, gt, 0.25));
  EXPECT_FALSE(rectangle_metric_match(pred, gt, 0.30));
}

TEST(RectangleMetric, EmptyGroundTruthThrows) {
  const GraspRectangle g{0, 0, 0, 4, 4};
  EXPECT_THROW(rectangle_metric_match(g, {}), Error);
}
