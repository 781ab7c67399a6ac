#pragma once

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "graspmap/depth_image.hpp"
#include "graspmap/errors.hpp"
#include "graspmap/geometry.hpp"
#include "graspmap/grasp_maps.hpp"
#include "graspmap/tensor.hpp"

namespace graspmap {

/// 8-bit RGB raster for overlays and false-color maps.
struct ImageU8 {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;  // 3 bytes per pixel, row-major

  ImageU8() = default;
  ImageU8(int h, int w) : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3, 0) {}

  void set(int y, int x, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || x >= width || y < 0 || y >= height) return;
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }
};

namespace detail {

struct FileHandle {
  std::FILE* fp = nullptr;
  explicit FileHandle(const std::string& path, const char* mode)
      : fp(std::fopen(path.c_str(), mode)) {}
  ~FileHandle() {
    if (fp) std::fclose(fp);
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
};

}  // namespace detail

/// Writes depth as 16-bit grayscale PNG in millimeters; invalid pixels store
/// 0. Valid depths quantize to at least 1 mm so they stay distinguishable
/// from invalid.
inline void write_png_gray16(const std::string& path, const DepthImage& img) {
  detail::FileHandle file(path, "wb");
  if (!file.fp) throw IoError(msg("cannot open '", path, "' for writing"));

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(msg("libpng write failed for '", path, "'"));
  }
  png_init_io(png, file.fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_set_swap(png);

  std::vector<std::uint16_t> row(static_cast<std::size_t>(img.width));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!img.is_valid(y, x)) {
        row[static_cast<std::size_t>(x)] = 0;
        continue;
      }
      long mm = std::lround(static_cast<double>(img.at(y, x)) * 1000.0);
      if (mm < 1) mm = 1;
      if (mm > 65535) mm = 65535;
      row[static_cast<std::size_t>(x)] = static_cast<std::uint16_t>(mm);
    }
    png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Reads a 16-bit grayscale millimeter PNG back into a DepthImage; 0 marks
/// invalid pixels.
inline DepthImage read_png_gray16(const std::string& path) {
  detail::FileHandle file(path, "rb");
  if (!file.fp) throw IoError(msg("cannot open '", path, "' for reading"));

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(msg("libpng read failed for '", path, "'"));
  }
  png_init_io(png, file.fp);
  png_read_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int depth_bits = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth_bits != 16 || color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(msg("'", path, "' is not a 16-bit grayscale PNG (bits=", depth_bits,
                      ", color=", color, ")"));
  }
  png_set_swap(png);

  DepthImage img(height, width);
  std::vector<std::uint16_t> row(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    png_read_row(png, reinterpret_cast<png_bytep>(row.data()), nullptr);
    for (int x = 0; x < width; ++x) {
      const std::uint16_t mm = row[static_cast<std::size_t>(x)];
      if (mm == 0) continue;
      img.at(y, x) = static_cast<float>(mm) / 1000.0f;
      img.valid[img.index(y, x)] = 1;
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_png_rgb(const std::string& path, const ImageU8& img) {
  detail::FileHandle file(path, "wb");
  if (!file.fp) throw IoError(msg("cannot open '", path, "' for writing"));

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(msg("libpng write failed for '", path, "'"));
  }
  png_init_io(png, file.fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.rgb.data() +
                                             static_cast<std::size_t>(y) * img.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Depth rendered as grayscale, nearer surfaces brighter.
inline ImageU8 depth_to_gray_rgb(const DepthImage& img) {
  float lo = 0, hi = 0;
  bool first = true;
  for (std::size_t i = 0; i < img.depth.size(); ++i) {
    if (!img.valid[i]) continue;
    if (first || img.depth[i] < lo) lo = img.depth[i];
    if (first || img.depth[i] > hi) hi = img.depth[i];
    first = false;
  }
  const float span = hi > lo ? hi - lo : 1.0f;
  ImageU8 out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::uint8_t v = 0;
      if (img.is_valid(y, x)) {
        const float t = (img.at(y, x) - lo) / span;
        v = static_cast<std::uint8_t>(std::lround((1.0f - t) * 215.0f) + 40);
      }
      out.set(y, x, v, v, v);
    }
  }
  return out;
}

/// Quality rendered blue (low) to red (high).
template <typename T>
ImageU8 quality_to_rgb(const GraspMapSet<T>& maps) {
  ImageU8 out(maps.height, maps.width);
  for (int y = 0; y < maps.height; ++y) {
    for (int x = 0; x < maps.width; ++x) {
      double q = static_cast<double>(maps.quality.at2(y, x));
      q = std::clamp(q, 0.0, 1.0);
      out.set(y, x, static_cast<std::uint8_t>(std::lround(q * 255)), 0,
              static_cast<std::uint8_t>(std::lround((1.0 - q) * 255)));
    }
  }
  return out;
}

/// Angle rendered as hue over (-pi/2, pi/2], dimmed where quality is low.
template <typename T>
ImageU8 angle_to_rgb(const GraspMapSet<T>& maps) {
  ImageU8 out(maps.height, maps.width);
  for (int y = 0; y < maps.height; ++y) {
    for (int x = 0; x < maps.width; ++x) {
      const auto idx = maps.quality.index2(y, x);
      const double phi =
          0.5 * std::atan2(static_cast<double>(maps.angle_sin[idx]),
                           static_cast<double>(maps.angle_cos[idx]));
      const double q = std::clamp(static_cast<double>(maps.quality[idx]), 0.0, 1.0);
      const double hue = (phi + kPi / 2) / kPi * 6.0;  // [0, 6)
      const double value = 0.15 + 0.85 * q;
      const int sector = std::min(5, static_cast<int>(hue));
      const double f = hue - sector;
      const double p = 0, qq = value * (1 - f), tt = value * f;
      double r = 0, g = 0, b = 0;
      switch (sector) {
        case 0: r = value; g = tt; b = p; break;
        case 1: r = qq; g = value; b = p; break;
        case 2: r = p; g = value; b = tt; break;
        case 3: r = p; g = qq; b = value; break;
        case 4: r = tt; g = p; b = value; break;
        default: r = value; g = p; b = qq; break;
      }
      out.set(y, x, static_cast<std::uint8_t>(std::lround(r * 255)),
              static_cast<std::uint8_t>(std::lround(g * 255)),
              static_cast<std::uint8_t>(std::lround(b * 255)));
    }
  }
  return out;
}

template <typename T>
ImageU8 width_to_rgb(const GraspMapSet<T>& maps) {
  ImageU8 out(maps.height, maps.width);
  for (int y = 0; y < maps.height; ++y) {
    for (int x = 0; x < maps.width; ++x) {
      const double w = std::clamp(static_cast<double>(maps.width_plane.at2(y, x)), 0.0, 1.0);
      const auto v = static_cast<std::uint8_t>(std::lround(w * 255));
      out.set(y, x, v, v, v);
    }
  }
  return out;
}

inline void draw_line(ImageU8& img, Vec2 a, Vec2 b, std::uint8_t r, std::uint8_t g,
                      std::uint8_t bl, int thickness = 1) {
  int x0 = static_cast<int>(std::lround(a.x)), y0 = static_cast<int>(std::lround(a.y));
  const int x1 = static_cast<int>(std::lround(b.x)), y1 = static_cast<int>(std::lround(b.y));
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  const int pad = (thickness - 1) / 2;
  while (true) {
    for (int oy = -pad; oy <= pad + (thickness - 1) % 2; ++oy) {
      for (int ox = -pad; ox <= pad + (thickness - 1) % 2; ++ox) {
        img.set(y0 + oy, x0 + ox, r, g, bl);
      }
    }
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

/// Draws a grasp rectangle; the gripper-plate edges (first and third) render
/// at double thickness.
inline void draw_grasp_rect(ImageU8& img, const GraspRectangle& rect, std::uint8_t r,
                            std::uint8_t g, std::uint8_t b) {
  const auto c = corners_from_rect(rect);
  draw_line(img, c[0], c[1], r, g, b, 2);
  draw_line(img, c[1], c[2], r, g, b, 1);
  draw_line(img, c[2], c[3], r, g, b, 2);
  draw_line(img, c[3], c[0], r, g, b, 1);
}

}  // namespace graspmap
