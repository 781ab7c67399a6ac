#pragma once

#include <cstdint>
#include <vector>

#include "graspmap/errors.hpp"

namespace graspmap {

/// Depth field in meters with a validity mask (false where the sensor
/// returned nothing).
struct DepthImage {
  int height = 0;
  int width = 0;
  std::vector<float> depth;
  std::vector<std::uint8_t> valid;

  DepthImage() = default;
  DepthImage(int h, int w)
      : height(h), width(w), depth(static_cast<std::size_t>(h) * w, 0.0f),
        valid(static_cast<std::size_t>(h) * w, 0) {}

  std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
  float& at(int y, int x) { return depth[index(y, x)]; }
  float at(int y, int x) const { return depth[index(y, x)]; }
  bool is_valid(int y, int x) const { return valid[index(y, x)] != 0; }

  bool all_valid() const {
    for (std::uint8_t v : valid) {
      if (!v) return false;
    }
    return true;
  }
};

/// Fills invalid pixels by iterative nearest-valid-neighbor dilation over the
/// 4-neighborhood. Each round fills every invalid pixel adjacent to the
/// already-valid set with its first valid neighbor's value (neighbor order
/// up, left, right, down), so a filled pixel carries the value of a nearest
/// valid pixel under 4-neighbor distance. Valid pixels pass through
/// bit-exactly; the result is all-valid.
inline DepthImage inpaint_depth(const DepthImage& img) {
  bool any_valid = false;
  for (std::uint8_t v : img.valid) {
    if (v) {
      any_valid = true;
      break;
    }
  }
  if (!any_valid) throw Error("inpaint_depth: image has no valid pixels");

  DepthImage out = img;
  std::size_t remaining = 0;
  for (std::uint8_t v : out.valid) remaining += v ? 0 : 1;

  std::vector<std::pair<std::size_t, float>> fills;
  while (remaining > 0) {
    fills.clear();
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        const std::size_t i = out.index(y, x);
        if (out.valid[i]) continue;
        const int ny[4] = {y - 1, y, y, y + 1};
        const int nx[4] = {x, x - 1, x + 1, x};
        for (int n = 0; n < 4; ++n) {
          if (ny[n] < 0 || ny[n] >= out.height || nx[n] < 0 || nx[n] >= out.width) continue;
          const std::size_t j = out.index(ny[n], nx[n]);
          if (out.valid[j]) {
            fills.emplace_back(i, out.depth[j]);
            break;
          }
        }
      }
    }
    for (const auto& [i, value] : fills) {
      out.depth[i] = value;
      out.valid[i] = 1;
    }
    remaining -= fills.size();
  }
  return out;
}

}  // namespace graspmap
