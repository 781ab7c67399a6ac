#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "graspmap/errors.hpp"
#include "graspmap/geometry.hpp"
#include "graspmap/tensor.hpp"

namespace graspmap {

/// Grasp attached to a pixel: (u, v) are column/row coordinates.
struct PixelGrasp {
  int u = 0;
  int v = 0;
  double phi = 0;       // radians in (-pi/2, pi/2]
  double width_px = 0;  // gripper width in pixels
  double quality = 0;   // in [0, 1]
};

/// Per-pixel grasp planes over an H x W image: quality, the angle encoded as
/// cos(2*phi)/sin(2*phi), and gripper width normalized to [0, 1].
template <typename T>
struct GraspMapSet {
  int height = 0;
  int width = 0;
  Tensor<T> quality;
  Tensor<T> angle_cos;
  Tensor<T> angle_sin;
  Tensor<T> width_plane;

  static GraspMapSet zeros(int h, int w) {
    GraspMapSet m;
    m.height = h;
    m.width = w;
    m.quality = Tensor<T>({h, w});
    m.angle_cos = Tensor<T>({h, w});
    m.angle_sin = Tensor<T>({h, w});
    m.width_plane = Tensor<T>({h, w});
    return m;
  }
};

/// Width normalization divisor: 150 px at the 400 x 400 reference scale,
/// proportional elsewhere.
inline double default_width_max(int image_size) { return 150.0 * image_size / 400.0; }

/// Minimum peak separation for top-k extraction: 10 px at 400 x 400,
/// proportional elsewhere, never below 2 px.
inline double default_min_separation(int image_size) {
  return std::max(2.0, std::round(10.0 * image_size / 400.0));
}

/// Stamps the rectangle's parameters into the maps over its center-third
/// mask: the sub-rectangle with the same center and theta, full width and a
/// third of the height. Pixels outside the image are clipped; pixels outside
/// the mask are untouched. Overlaps overwrite in call order.
template <typename T>
void rasterize_rect_to_maps(const GraspRectangle& rect, GraspMapSet<T>& maps,
                            double width_max) {
  const Vec2 axis_u{std::cos(rect.theta), std::sin(rect.theta)};
  const Vec2 axis_v{-axis_u.y, axis_u.x};
  const Vec2 center{rect.center_x, rect.center_y};
  const double half_w = rect.width / 2;
  const double half_mask_h = rect.height / 6;

  GraspRectangle mask = rect;
  mask.height = rect.height / 3;
  const auto mask_corners = corners_from_rect(mask);
  double min_x = mask_corners[0].x, max_x = mask_corners[0].x;
  double min_y = mask_corners[0].y, max_y = mask_corners[0].y;
  for (const Vec2& c : mask_corners) {
    min_x = std::min(min_x, c.x);
    max_x = std::max(max_x, c.x);
    min_y = std::min(min_y, c.y);
    max_y = std::max(max_y, c.y);
  }
  const int u_lo = std::max(0, static_cast<int>(std::floor(min_x)));
  const int u_hi = std::min(maps.width - 1, static_cast<int>(std::ceil(max_x)));
  const int v_lo = std::max(0, static_cast<int>(std::floor(min_y)));
  const int v_hi = std::min(maps.height - 1, static_cast<int>(std::ceil(max_y)));

  const T cos2 = static_cast<T>(std::cos(2 * rect.theta));
  const T sin2 = static_cast<T>(std::sin(2 * rect.theta));
  const T w_norm = static_cast<T>(std::clamp(rect.width / width_max, 0.0, 1.0));

  for (int v = v_lo; v <= v_hi; ++v) {
    for (int u = u_lo; u <= u_hi; ++u) {
      const Vec2 d = Vec2{static_cast<double>(u), static_cast<double>(v)} - center;
      const double du = dot(d, axis_u);
      const double dv = dot(d, axis_v);
      if (du >= -half_w && du < half_w && dv >= -half_mask_h && dv < half_mask_h) {
        const auto idx = maps.quality.index2(v, u);
        maps.quality[idx] = T(1);
        maps.angle_cos[idx] = cos2;
        maps.angle_sin[idx] = sin2;
        maps.width_plane[idx] = w_norm;
      }
    }
  }
}

/// Grasp at the quality argmax; ties resolve to the first pixel in row-major
/// order. Non-finite quality entries are skipped.
template <typename T>
PixelGrasp decode_best_grasp(const GraspMapSet<T>& maps, double width_max) {
  if (maps.height <= 0 || maps.width <= 0) {
    throw ShapeError("decode_best_grasp: empty grasp maps");
  }
  int best_u = -1, best_v = -1;
  double best_q = 0;
  bool found = false;
  for (int v = 0; v < maps.height; ++v) {
    for (int u = 0; u < maps.width; ++u) {
      const double q = static_cast<double>(maps.quality.at2(v, u));
      if (!std::isfinite(q)) continue;
      if (!found || q > best_q) {
        found = true;
        best_q = q;
        best_u = u;
        best_v = v;
      }
    }
  }
  if (!found) {
    throw NumericError("decode_best_grasp: quality plane has no finite values");
  }
  PixelGrasp g;
  g.u = best_u;
  g.v = best_v;
  g.quality = best_q;
  const auto idx = maps.quality.index2(best_v, best_u);
  g.phi = canonical_angle(
      0.5 * std::atan2(static_cast<double>(maps.angle_sin[idx]),
                       static_cast<double>(maps.angle_cos[idx])));
  g.width_px = static_cast<double>(maps.width_plane[idx]) * width_max;
  return g;
}

/// Up to k grasps at local maxima of the quality plane (3x3 neighborhood,
/// plateau pixels qualify), each with quality >= q_threshold and pairwise
/// centers at least min_separation apart, in descending quality order.
template <typename T>
std::vector<PixelGrasp> decode_top_k(const GraspMapSet<T>& maps, int k, double q_threshold,
                                     double min_separation, double width_max) {
  if (k < 1) throw ConfigError(msg("decode_top_k: k must be >= 1, got ", k));
  struct Candidate {
    int u, v;
    double q;
  };
  std::vector<Candidate> candidates;
  for (int v = 0; v < maps.height; ++v) {
    for (int u = 0; u < maps.width; ++u) {
      const double q = static_cast<double>(maps.quality.at2(v, u));
      if (!std::isfinite(q) || q < q_threshold) continue;
      bool is_max = true;
      for (int dv = -1; dv <= 1 && is_max; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          if (du == 0 && dv == 0) continue;
          const int nu = u + du, nv = v + dv;
          if (nu < 0 || nu >= maps.width || nv < 0 || nv >= maps.height) continue;
          const double nq = static_cast<double>(maps.quality.at2(nv, nu));
          if (std::isfinite(nq) && nq > q) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({u, v, q});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.q > b.q; });

  std::vector<PixelGrasp> out;
  const double min_sep_sq = min_separation * min_separation;
  for (const Candidate& c : candidates) {
    if (static_cast<int>(out.size()) >= k) break;
    bool separated = true;
    for (const PixelGrasp& g : out) {
      const double dx = c.u - g.u, dy = c.v - g.v;
      if (dx * dx + dy * dy < min_sep_sq) {
        separated = false;
        break;
      }
    }
    if (!separated) continue;
    PixelGrasp g;
    g.u = c.u;
    g.v = c.v;
    g.quality = c.q;
    const auto idx = maps.quality.index2(c.v, c.u);
    g.phi = canonical_angle(
        0.5 * std::atan2(static_cast<double>(maps.angle_sin[idx]),
                         static_cast<double>(maps.angle_cos[idx])));
    g.width_px = static_cast<double>(maps.width_plane[idx]) * width_max;
    out.push_back(g);
  }
  return out;
}

/// Rectangle for metric evaluation: the predicted gripper width along phi and
/// height = width * height_ratio across it.
inline GraspRectangle pixel_grasp_to_rectangle(const PixelGrasp& g, double height_ratio = 0.5) {
  if (g.width_px <= 0) {
    throw NumericError(msg("pixel_grasp_to_rectangle: width must be positive, got ", g.width_px));
  }
  GraspRectangle r;
  r.center_x = g.u;
  r.center_y = g.v;
  r.theta = canonical_angle(g.phi);
  r.width = g.width_px;
  r.height = g.width_px * height_ratio;
  return r;
}

}  // namespace graspmap
