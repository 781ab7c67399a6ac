#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "graspmap/depth_image.hpp"
#include "graspmap/errors.hpp"
#include "graspmap/geometry.hpp"
#include "graspmap/grasp_maps.hpp"
#include "graspmap/rng.hpp"
#include "graspmap/tensor.hpp"

namespace graspmap {

/// One training/evaluation unit: a depth image with its positive grasp
/// rectangles. object_id groups images of the same physical object.
struct Sample {
  std::string id;
  std::string object_id;
  DepthImage depth;
  std::vector<GraspRectangle> rects;
};

namespace detail {

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : line) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) {
        tokens.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

inline bool parse_double(const std::string& token, double& out) {
  const char* begin = token.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + token.size() && end != begin;
}

}  // namespace detail

struct RectParseResult {
  std::vector<GraspRectangle> rects;
  int skipped_nan_groups = 0;
};

/// Parses rectangle-file text in the Cornell convention: four "x y" corner
/// lines per rectangle, first edge a gripper-plate edge. Groups containing
/// NaN coordinates are skipped and counted.
inline RectParseResult parse_cornell_rects(const std::string& text) {
  std::vector<std::string> lines = detail::split_lines(text);
  while (!lines.empty() && detail::tokenize(lines.back()).empty()) lines.pop_back();

  std::vector<Vec2> points;
  points.reserve(lines.size());
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto tokens = detail::tokenize(lines[li]);
    if (tokens.size() != 2) {
      throw ParseError(msg("rectangle file line ", li + 1, ": expected 2 coordinates, got ",
                           tokens.size()));
    }
    Vec2 p;
    if (!detail::parse_double(tokens[0], p.x) || !detail::parse_double(tokens[1], p.y)) {
      throw ParseError(msg("rectangle file line ", li + 1, ": non-numeric coordinate"));
    }
    points.push_back(p);
  }
  if (points.size() % 4 != 0) {
    throw ParseError(msg("rectangle file line ", (points.size() / 4) * 4 + 1,
                         ": incomplete 4-corner group (", points.size(), " lines total)"));
  }

  RectParseResult result;
  for (std::size_t g = 0; g + 3 < points.size(); g += 4) {
    const std::array<Vec2, 4> corners = {points[g], points[g + 1], points[g + 2], points[g + 3]};
    bool has_nan = false;
    for (const Vec2& c : corners) {
      if (std::isnan(c.x) || std::isnan(c.y)) has_nan = true;
    }
    if (has_nan) {
      result.skipped_nan_groups += 1;
      continue;
    }
    result.rects.push_back(rect_from_corners(corners));
  }
  return result;
}

/// Parses an ASCII point cloud whose header declares x/y/z and a row-major
/// index field; pixel (index / out_w, index % out_w) receives the point's z.
/// Pixels with no point are marked invalid.
inline DepthImage parse_ascii_pcd_to_depth(const std::string& text, int out_h, int out_w) {
  const auto lines = detail::split_lines(text);
  int z_col = -1, index_col = -1;
  std::size_t data_start = 0;
  bool saw_data = false;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto tokens = detail::tokenize(lines[li]);
    if (tokens.empty()) continue;
    if (tokens[0] == "FIELDS") {
      bool has_x = false, has_y = false;
      for (std::size_t f = 1; f < tokens.size(); ++f) {
        if (tokens[f] == "x") has_x = true;
        if (tokens[f] == "y") has_y = true;
        if (tokens[f] == "z") z_col = static_cast<int>(f - 1);
        if (tokens[f] == "index") index_col = static_cast<int>(f - 1);
      }
      if (!has_x || !has_y || z_col < 0) {
        throw ParseError("point cloud FIELDS must include x, y and z");
      }
      if (index_col < 0) {
        throw ParseError("point cloud FIELDS missing required 'index' field");
      }
    } else if (tokens[0] == "DATA") {
      if (tokens.size() < 2 || tokens[1] != "ascii") {
        throw ParseError(msg("point cloud DATA must be ascii, got '",
                             tokens.size() > 1 ? tokens[1] : "", "'"));
      }
      data_start = li + 1;
      saw_data = true;
      break;
    }
  }
  if (z_col < 0 || index_col < 0) {
    throw ParseError("point cloud header missing FIELDS declaration");
  }
  if (!saw_data) throw ParseError("point cloud header missing DATA declaration");

  DepthImage img(out_h, out_w);
  const long max_index = static_cast<long>(out_h) * out_w;
  const int need = std::max(z_col, index_col) + 1;
  for (std::size_t li = data_start; li < lines.size(); ++li) {
    const auto tokens = detail::tokenize(lines[li]);
    if (tokens.empty()) continue;
    if (static_cast<int>(tokens.size()) < need) {
      throw ParseError(msg("point cloud line ", li + 1, ": expected at least ", need,
                           " fields, got ", tokens.size()));
    }
    double z = 0, index_val = 0;
    if (!detail::parse_double(tokens[static_cast<std::size_t>(z_col)], z) ||
        !detail::parse_double(tokens[static_cast<std::size_t>(index_col)], index_val)) {
      throw ParseError(msg("point cloud line ", li + 1, ": non-numeric field"));
    }
    const long idx = static_cast<long>(index_val);
    if (idx < 0 || idx >= max_index) {
      throw ParseError(msg("point cloud line ", li + 1, ": index ", idx,
                           " out of range for ", out_h, "x", out_w));
    }
    img.depth[static_cast<std::size_t>(idx)] = static_cast<float>(z);
    img.valid[static_cast<std::size_t>(idx)] = 1;
  }
  return img;
}

inline constexpr double kZoomMin = 0.8;
inline constexpr double kRotationMaxRad = 20.0 * kPi / 180.0;

/// One affine draw of the augmentation pipeline: rotate about the image
/// center, scale by zoom, crop an out_size window at crop_offset.
struct AugmentParams {
  double zoom = 1.0;       // in [0.8, 1.0]
  double rotation = 0.0;   // radians in [-20deg, +20deg]
  Vec2 crop_offset{0, 0};  // top-left of the crop window
  std::uint64_t seed = 0;

  static AugmentParams identity(int in_h, int in_w, int out_size) {
    AugmentParams p;
    p.crop_offset = {(in_w - out_size) / 2.0, (in_h - out_size) / 2.0};
    return p;
  }

  /// Seed-deterministic draw respecting the zoom feasibility bound
  /// out_size <= zoom * min(H, W).
  static AugmentParams draw(std::uint64_t seed, int in_h, int in_w, int out_size) {
    Rng rng = make_rng(seed);
    AugmentParams p;
    p.seed = seed;
    const double min_dim = std::min(in_h, in_w);
    const double zoom_lo = std::max(kZoomMin, static_cast<double>(out_size) / min_dim);
    if (zoom_lo > 1.0) {
      throw ConfigError(msg("augment draw: crop size ", out_size,
                            " cannot be met from a ", in_h, "x", in_w, " image"));
    }
    p.zoom = uniform_double(rng, zoom_lo, 1.0);
    p.rotation = uniform_double(rng, -kRotationMaxRad, kRotationMaxRad);
    const double cx = (in_w - 1) / 2.0, cy = (in_h - 1) / 2.0;
    const double zhw = p.zoom * (in_w - 1) / 2.0;
    const double zhh = p.zoom * (in_h - 1) / 2.0;
    const double x_lo = cx - zhw, x_hi = cx + zhw - (out_size - 1);
    const double y_lo = cy - zhh, y_hi = cy + zhh - (out_size - 1);
    p.crop_offset.x = uniform_double(rng, x_lo, std::max(x_lo, x_hi));
    p.crop_offset.y = uniform_double(rng, y_lo, std::max(y_lo, y_hi));
    return p;
  }
};

/// Applies one affine map (rotate about center, zoom, crop) to the depth
/// image (nearest-neighbor, border-clamped) and the identical map to every
/// rectangle. Rectangles whose center leaves the crop are dropped; dropping
/// all of them is an error.
inline Sample augment_sample(const Sample& s, const AugmentParams& p, int out_size) {
  if (p.zoom < kZoomMin - 1e-9 || p.zoom > 1.0 + 1e-9) {
    throw ConfigError(msg("augment: zoom ", p.zoom, " outside [0.8, 1.0]"));
  }
  if (std::fabs(p.rotation) > kRotationMaxRad + 1e-9) {
    throw ConfigError(msg("augment: rotation ", p.rotation, " rad outside +/-20 degrees"));
  }
  const int in_h = s.depth.height, in_w = s.depth.width;
  if (out_size > p.zoom * std::min(in_h, in_w) + 1e-9) {
    throw ConfigError(msg("augment: crop size ", out_size, " exceeds zoomed image extent ",
                          p.zoom * std::min(in_h, in_w)));
  }

  const double cx = (in_w - 1) / 2.0, cy = (in_h - 1) / 2.0;
  const double cr = std::cos(p.rotation), sr = std::sin(p.rotation);

  const auto transform = [&](Vec2 q) -> Vec2 {
    const double dx = q.x - cx, dy = q.y - cy;
    return {p.zoom * (cr * dx - sr * dy) + cx - p.crop_offset.x,
            p.zoom * (sr * dx + cr * dy) + cy - p.crop_offset.y};
  };
  const auto inverse = [&](double x, double y) -> Vec2 {
    const double dx = (x + p.crop_offset.x - cx) / p.zoom;
    const double dy = (y + p.crop_offset.y - cy) / p.zoom;
    return {cr * dx + sr * dy + cx, -sr * dx + cr * dy + cy};
  };

  Sample out;
  out.id = s.id;
  out.object_id = s.object_id;
  out.depth = DepthImage(out_size, out_size);
  for (int y = 0; y < out_size; ++y) {
    for (int x = 0; x < out_size; ++x) {
      const Vec2 src = inverse(x, y);
      const int sx = std::clamp(static_cast<int>(std::lround(src.x)), 0, in_w - 1);
      const int sy = std::clamp(static_cast<int>(std::lround(src.y)), 0, in_h - 1);
      out.depth.at(y, x) = s.depth.at(sy, sx);
      out.depth.valid[out.depth.index(y, x)] = s.depth.valid[s.depth.index(sy, sx)];
    }
  }

  for (const GraspRectangle& r : s.rects) {
    const auto corners = corners_from_rect(r);
    std::array<Vec2, 4> moved;
    for (int i = 0; i < 4; ++i) moved[static_cast<std::size_t>(i)] = transform(corners[i]);
    const GraspRectangle nr = rect_from_corners(moved);
    if (nr.center_x < 0 || nr.center_x >= out_size || nr.center_y < 0 ||
        nr.center_y >= out_size) {
      continue;
    }
    out.rects.push_back(nr);
  }
  if (out.rects.empty() && !s.rects.empty()) {
    throw Error(msg("augment: every rectangle of sample '", s.id, "' left the crop window"));
  }
  return out;
}

/// Deterministic center crop (identity augmentation path).
inline Sample center_crop_sample(const Sample& s, int out_size) {
  if (out_size == s.depth.height && out_size == s.depth.width) return s;
  return augment_sample(s, AugmentParams::identity(s.depth.height, s.depth.width, out_size),
                        out_size);
}

inline constexpr float kSyntheticBackgroundDepth = 0.70f;
inline constexpr float kSyntheticBarDepth = 0.60f;

/// Analytic desk-scale dataset: a flat plane with `bars` raised bars and
/// grasp rectangles perpendicular to each bar axis, centers spaced every
/// thickness/2 along the bar's middle half. Deterministic per seed.
inline std::vector<Sample> make_synthetic(int count, int size, std::uint64_t seed,
                                          int bars = 1) {
  if (size < 64) throw ConfigError(msg("make_synthetic: size must be >= 64, got ", size));
  if (bars < 1 || bars > 4) {
    throw ConfigError(msg("make_synthetic: bars must be in [1, 4], got ", bars));
  }

  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng = make_rng(seed_mix(seed, static_cast<std::uint64_t>(i), 0x5A17));
    Sample s;
    {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "synth-%05d", i);
      s.id = buf;
      s.object_id = buf;
    }
    s.depth = DepthImage(size, size);
    std::fill(s.depth.depth.begin(), s.depth.depth.end(), kSyntheticBackgroundDepth);
    std::fill(s.depth.valid.begin(), s.depth.valid.end(), 1);

    std::vector<int> cells = {0, 1, 2, 3};
    if (bars > 1) shuffle(cells, rng);

    for (int b = 0; b < bars; ++b) {
      double region = size;
      Vec2 region_center{(size - 1) / 2.0, (size - 1) / 2.0};
      double bar_len, bar_th;
      if (bars > 1) {
        region = size / 2.0;
        const int cell = cells[static_cast<std::size_t>(b)];
        region_center = {(cell % 2) * region + (region - 1) / 2.0,
                         (cell / 2) * region + (region - 1) / 2.0};
        // Bars keep the single-bar thickness scale (capped to the cell) so
        // multi-bar scenes stay within the single-bar appearance range.
        bar_len = uniform_double(rng, 0.5, 0.85) * region;
        bar_th = std::min(uniform_double(rng, 0.08, 0.2) * size, 0.3 * region);
      } else {
        bar_len = uniform_double(rng, 0.4, 0.8) * region;
        bar_th = uniform_double(rng, 0.08, 0.2) * region;
      }
      const double bar_axis = canonical_angle(uniform_double(rng, -kPi / 2, kPi / 2));
      const Vec2 bar_center = region_center + Vec2{uniform_double(rng, -0.03, 0.03) * region,
                                                   uniform_double(rng, -0.03, 0.03) * region};

      GraspRectangle bar;
      bar.center_x = bar_center.x;
      bar.center_y = bar_center.y;
      bar.theta = bar_axis;
      bar.width = bar_len;
      bar.height = bar_th;

      const Vec2 axis_u{std::cos(bar_axis), std::sin(bar_axis)};
      const Vec2 axis_v{-axis_u.y, axis_u.x};
      const double half_len = bar_len / 2, half_th = bar_th / 2;
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const Vec2 d = Vec2{static_cast<double>(x), static_cast<double>(y)} - bar_center;
          const double du = dot(d, axis_u);
          const double dv = dot(d, axis_v);
          if (du >= -half_len && du < half_len && dv >= -half_th && dv < half_th) {
            s.depth.at(y, x) = kSyntheticBarDepth;
          }
        }
      }

      const double grip_w = bar_th + 0.06 * region;
      const double grip_h = grip_w / 2;
      const double grip_theta = canonical_angle(bar_axis + kPi / 2);
      for (double t = -bar_len / 4; t <= bar_len / 4 + 1e-9; t += bar_th / 2) {
        GraspRectangle g;
        g.center_x = bar_center.x + t * axis_u.x;
        g.center_y = bar_center.y + t * axis_u.y;
        g.theta = grip_theta;
        g.width = grip_w;
        g.height = grip_h;
        s.rects.push_back(g);
      }
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

enum class SplitMode { kImageWise, kObjectWise };

struct FoldSplit {
  std::vector<int> train;
  std::vector<int> test;
};

/// Deterministic cross-validation folds. ImageWise shuffles sample indices
/// into near-equal folds; ObjectWise shuffles object ids so no object spans
/// a fold's train/test boundary.
inline std::vector<FoldSplit> split_folds(const std::vector<Sample>& samples, SplitMode mode,
                                          int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError(msg("split_folds: folds must be >= 2, got ", folds));
  const int n = static_cast<int>(samples.size());
  std::vector<int> fold_of(static_cast<std::size_t>(n), -1);

  Rng rng = make_rng(seed_mix(seed, 0xF01D5));
  if (mode == SplitMode::kImageWise) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    shuffle(order, rng);
    for (int j = 0; j < n; ++j) fold_of[static_cast<std::size_t>(order[j])] = j % folds;
  } else {
    std::vector<std::string> objects;
    for (const Sample& s : samples) objects.push_back(s.object_id);
    std::sort(objects.begin(), objects.end());
    objects.erase(std::unique(objects.begin(), objects.end()), objects.end());
    if (static_cast<int>(objects.size()) < folds) {
      throw ConfigError(msg("split_folds: object-wise split needs at least ", folds,
                            " distinct objects, got ", objects.size()));
    }
    shuffle(objects, rng);
    std::vector<std::pair<std::string, int>> object_fold;
    for (std::size_t j = 0; j < objects.size(); ++j) {
      object_fold.emplace_back(objects[j], static_cast<int>(j) % folds);
    }
    std::sort(object_fold.begin(), object_fold.end());
    for (int i = 0; i < n; ++i) {
      const auto it = std::lower_bound(
          object_fold.begin(), object_fold.end(),
          std::pair<std::string, int>{samples[static_cast<std::size_t>(i)].object_id, -1});
      fold_of[static_cast<std::size_t>(i)] = it->second;
    }
  }

  std::vector<FoldSplit> out(static_cast<std::size_t>(folds));
  for (int i = 0; i < n; ++i) {
    for (int f = 0; f < folds; ++f) {
      if (fold_of[static_cast<std::size_t>(i)] == f) {
        out[static_cast<std::size_t>(f)].test.push_back(i);
      } else {
        out[static_cast<std::size_t>(f)].train.push_back(i);
      }
    }
  }
  return out;
}

/// Network input normalization: subtract the image mean, clamp to [-1, 1].
inline Tensor<float> depth_to_input(const DepthImage& img) {
  Tensor<float> plane({img.height, img.width});
  double mean = 0;
  for (float d : img.depth) mean += d;
  mean /= static_cast<double>(img.depth.size());
  for (std::size_t i = 0; i < img.depth.size(); ++i) {
    plane[static_cast<std::int64_t>(i)] =
        std::clamp(static_cast<float>(img.depth[i] - mean), -1.0f, 1.0f);
  }
  return plane;
}

/// Rasterizes every rectangle of the sample into fresh maps, in file order.
template <typename T = float>
GraspMapSet<T> rasterize_sample(const Sample& s, double width_max) {
  GraspMapSet<T> maps = GraspMapSet<T>::zeros(s.depth.height, s.depth.width);
  for (const GraspRectangle& r : s.rects) rasterize_rect_to_maps(r, maps, width_max);
  return maps;
}

}  // namespace graspmap
