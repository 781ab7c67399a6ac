#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "graspmap/errors.hpp"

namespace graspmap {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0;
  double y = 0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Folds an angle into (-pi/2, pi/2]; grasp orientations are pi-periodic.
inline double canonical_angle(double theta) {
  double t = std::remainder(theta, kPi);  // [-pi/2, pi/2]
  if (t <= -kPi / 2) t += kPi;
  return t;
}

/// Smallest distance between two angles modulo pi, in [0, pi/2].
inline double angle_distance(double phi_a, double phi_b) {
  return std::fabs(std::remainder(phi_a - phi_b, kPi));
}

/// Oriented grasp box: center in pixels, rotation relative to the image
/// x-axis, width along the rotation axis and height across it.
struct GraspRectangle {
  double center_x = 0;
  double center_y = 0;
  double theta = 0;   // radians in (-pi/2, pi/2]
  double height = 0;  // extent perpendicular to theta, > 0
  double width = 0;   // extent along theta, > 0
};

/// Corner order: the first edge (P0 -> P1) runs along theta with length
/// width; P1 -> P2 is perpendicular with length height.
inline std::array<Vec2, 4> corners_from_rect(const GraspRectangle& r) {
  const Vec2 u{std::cos(r.theta), std::sin(r.theta)};
  const Vec2 v{-u.y, u.x};
  const Vec2 c{r.center_x, r.center_y};
  const Vec2 hu = (r.width / 2) * u;
  const Vec2 hv = (r.height / 2) * v;
  return {c - hu - hv, c + hu - hv, c + hu + hv, c - hu + hv};
}

/// Fits a rectangle to 4 ordered corners; the first edge is a gripper-plate
/// edge. Center is the corner mean.
inline GraspRectangle rect_from_corners(const std::array<Vec2, 4>& p) {
  for (const Vec2& q : p) {
    if (!std::isfinite(q.x) || !std::isfinite(q.y)) {
      throw NumericError("rect_from_corners: non-finite corner coordinate");
    }
  }
  const Vec2 e0 = p[1] - p[0];
  const Vec2 e1 = p[2] - p[1];
  const double width = norm(e0);
  const double height = norm(e1);
  if (width <= 0 || height <= 0) {
    throw NumericError("rect_from_corners: degenerate zero-length edge");
  }
  GraspRectangle r;
  r.center_x = (p[0].x + p[1].x + p[2].x + p[3].x) / 4;
  r.center_y = (p[0].y + p[1].y + p[2].y + p[3].y) / 4;
  r.theta = canonical_angle(std::atan2(e0.y, e0.x));
  r.width = width;
  r.height = height;
  return r;
}

inline double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0;
  double acc = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    acc += a.x * b.y - a.y * b.x;
  }
  return std::fabs(acc) / 2;
}

namespace detail {

inline std::vector<Vec2> oriented_ccw(std::span<const Vec2> poly) {
  double acc = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    acc += a.x * b.y - a.y * b.x;
  }
  std::vector<Vec2> out(poly.begin(), poly.end());
  if (acc < 0) std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Sutherland-Hodgman clipping of `subject` against a convex `clip` polygon.
/// Points on a clip edge count as inside, so clipping a polygon against
/// itself returns its vertices unchanged.
inline std::vector<Vec2> clip_polygon(std::span<const Vec2> subject,
                                      std::span<const Vec2> clip) {
  std::vector<Vec2> output = detail::oriented_ccw(subject);
  const std::vector<Vec2> clipper = detail::oriented_ccw(clip);
  for (std::size_t e = 0; e < clipper.size() && !output.empty(); ++e) {
    const Vec2 a = clipper[e];
    const Vec2 b = clipper[(e + 1) % clipper.size()];
    const Vec2 edge = b - a;
    std::vector<Vec2> input;
    input.swap(output);
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2 cur = input[i];
      const Vec2 prev = input[(i + input.size() - 1) % input.size()];
      const double side_cur = cross(edge, cur - a);
      const double side_prev = cross(edge, prev - a);
      const bool in_cur = side_cur >= 0;
      const bool in_prev = side_prev >= 0;
      if (in_cur != in_prev) {
        const double t = side_prev / (side_prev - side_cur);
        output.push_back(prev + t * (cur - prev));
      }
      if (in_cur) output.push_back(cur);
    }
  }
  return output;
}

/// Intersection-over-union of two oriented rectangles via exact polygon
/// clipping. Result in [0, 1]; identical rectangles give exactly 1.
inline double jaccard(const GraspRectangle& a, const GraspRectangle& b) {
  const auto ca = corners_from_rect(a);
  const auto cb = corners_from_rect(b);
  const auto inter_poly = clip_polygon(ca, cb);
  const double inter = polygon_area(inter_poly);
  const double area_a = polygon_area(std::span<const Vec2>(ca));
  const double area_b = polygon_area(std::span<const Vec2>(cb));
  const double uni = area_a + area_b - inter;
  if (uni <= 0) return 0;
  const double j = inter / uni;
  return j < 0 ? 0 : (j > 1 ? 1 : j);
}

inline constexpr double kAngleThresholdRad = kPi / 6;  // 30 degrees

/// Rectangle metric: true iff some ground-truth rectangle is within 30
/// degrees of the prediction and overlaps it with Jaccard index above the
/// threshold.
inline bool rectangle_metric_match(const GraspRectangle& pred,
                                   std::span<const GraspRectangle> ground_truth,
                                   double jaccard_threshold = 0.25) {
  if (ground_truth.empty()) {
    throw Error("rectangle_metric_match: ground truth set is empty");
  }
  for (const GraspRectangle& g : ground_truth) {
    if (angle_distance(pred.theta, g.theta) < kAngleThresholdRad &&
        jaccard(pred, g) > jaccard_threshold) {
      return true;
    }
  }
  return false;
}

}  // namespace graspmap
