#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "graspmap/dataset.hpp"
#include "graspmap/errors.hpp"
#include "graspmap/image_io.hpp"

namespace graspmap {

namespace fs = std::filesystem;

inline std::string read_text_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(msg("cannot open '", path.string(), "' for reading"));
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

inline void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(msg("cannot open '", path.string(), "' for writing"));
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw IoError(msg("write failed for '", path.string(), "'"));
}

/// Rectangle-file text in the Cornell 4-corner convention, one "x y" line
/// per corner.
inline std::string rects_to_text(const std::vector<GraspRectangle>& rects) {
  std::string out;
  char buf[96];
  for (const GraspRectangle& r : rects) {
    for (const Vec2& c : corners_from_rect(r)) {
      std::snprintf(buf, sizeof(buf), "%.4f %.4f\n", c.x, c.y);
      out += buf;
    }
  }
  return out;
}

inline constexpr const char* kManifestName = "manifest.jsonl";

/// Writes samples as portable depth PNGs plus Cornell-format rectangle files
/// and a line-delimited manifest (id, object_id, depth_path, rects_path).
inline void save_dataset(const fs::path& dir, const std::vector<Sample>& samples) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) {
    throw IoError(msg("output directory '", dir.string(), "' cannot be created"));
  }
  std::string manifest;
  for (const Sample& s : samples) {
    const std::string depth_name = s.id + "_depth.png";
    const std::string rects_name = s.id + "_rects.txt";
    write_png_gray16((dir / depth_name).string(), s.depth);
    write_text_file(dir / rects_name, rects_to_text(s.rects));
    nlohmann::json rec;
    rec["id"] = s.id;
    rec["object_id"] = s.object_id;
    rec["depth_path"] = depth_name;
    rec["rects_path"] = rects_name;
    manifest += rec.dump() + "\n";
  }
  write_text_file(dir / kManifestName, manifest);
}

/// Loads a portable dataset directory through its manifest. Depth images
/// with invalid pixels are inpainted on load.
inline std::vector<Sample> load_portable_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  if (!fs::exists(manifest_path)) {
    throw IoError(msg("no ", kManifestName, " in '", dir.string(), "'"));
  }
  std::vector<Sample> samples;
  std::istringstream lines(read_text_file(manifest_path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(msg("manifest line ", line_no, ": ", e.what()));
    }
    Sample s;
    s.id = rec.at("id").get<std::string>();
    s.object_id = rec.at("object_id").get<std::string>();
    s.depth = read_png_gray16((dir / rec.at("depth_path").get<std::string>()).string());
    if (!s.depth.all_valid()) s.depth = inpaint_depth(s.depth);
    s.rects = parse_cornell_rects(
                  read_text_file(dir / rec.at("rects_path").get<std::string>()))
                  .rects;
    samples.push_back(std::move(s));
  }
  return samples;
}

inline constexpr int kCornellHeight = 480;
inline constexpr int kCornellWidth = 640;

struct CornellLoadResult {
  std::vector<Sample> samples;
  std::vector<std::string> failures;  // "file: reason" entries
};

/// Loads the raw Cornell layout: pcd<NNNN>.txt point clouds beside
/// pcd<NNNN>cpos.txt positive rectangles. object_id comes from a z.txt
/// mapping ("<id> <object>" lines) when present, else equals the image id.
inline CornellLoadResult load_cornell_dataset(const fs::path& dir) {
  CornellLoadResult result;
  if (!fs::is_directory(dir)) {
    throw IoError(msg("'", dir.string(), "' is not a directory"));
  }

  std::vector<std::pair<std::string, std::string>> object_map;
  if (fs::exists(dir / "z.txt")) {
    std::istringstream lines(read_text_file(dir / "z.txt"));
    std::string line;
    while (std::getline(lines, line)) {
      const auto tokens = detail::tokenize(line);
      if (tokens.size() >= 2) object_map.emplace_back(tokens[0], tokens[1]);
    }
    std::sort(object_map.begin(), object_map.end());
  }

  const auto is_cloud_name = [](const std::string& name) {
    if (name.rfind("pcd", 0) != 0 || name.size() <= 7) return false;
    if (name.compare(name.size() - 4, 4, ".txt") != 0) return false;
    for (std::size_t i = 3; i + 4 < name.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
    }
    return true;
  };

  std::vector<fs::path> rect_files;
  std::vector<fs::path> cloud_files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > 8 && name.rfind("cpos.txt") == name.size() - 8 &&
        name.rfind("pcd", 0) == 0) {
      rect_files.push_back(entry.path());
    } else if (is_cloud_name(name)) {
      cloud_files.push_back(entry.path());
    }
  }
  std::sort(rect_files.begin(), rect_files.end());
  std::sort(cloud_files.begin(), cloud_files.end());
  for (const fs::path& cloud : cloud_files) {
    const std::string id = cloud.stem().string();
    if (!fs::exists(cloud.parent_path() / (id + "cpos.txt"))) {
      result.failures.push_back(
          msg(cloud.string(), ": missing rectangle file '", id, "cpos.txt'"));
    }
  }

  for (const fs::path& rect_path : rect_files) {
    const std::string stem = rect_path.filename().string();
    const std::string id = stem.substr(0, stem.size() - 8);  // pcdNNNN
    const fs::path cloud_path = rect_path.parent_path() / (id + ".txt");
    try {
      if (!fs::exists(cloud_path)) {
        throw IoError(msg("missing point cloud '", cloud_path.string(), "'"));
      }
      Sample s;
      s.id = id;
      const std::string key = id.size() > 3 ? id.substr(3) : id;
      const auto it = std::lower_bound(
          object_map.begin(), object_map.end(),
          std::pair<std::string, std::string>{key, ""});
      s.object_id = (it != object_map.end() && it->first == key) ? it->second : id;
      s.depth = parse_ascii_pcd_to_depth(read_text_file(cloud_path), kCornellHeight,
                                         kCornellWidth);
      const auto parsed = parse_cornell_rects(read_text_file(rect_path));
      s.rects = parsed.rects;
      if (s.rects.empty()) throw ParseError("no usable rectangles");
      result.samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      result.failures.push_back(msg(rect_path.string(), ": ", e.what()));
    }
  }
  return result;
}

/// Loads either layout: a manifest directory or a raw Cornell directory.
inline std::vector<Sample> load_dataset(const fs::path& dir) {
  if (fs::exists(dir / kManifestName)) return load_portable_dataset(dir);
  CornellLoadResult r = load_cornell_dataset(dir);
  if (r.samples.empty()) {
    std::string detail = r.failures.empty() ? "no samples found" : r.failures.front();
    throw IoError(msg("no loadable samples in '", dir.string(), "' (", detail, ")"));
  }
  for (Sample& s : r.samples) {
    if (!s.depth.all_valid()) s.depth = inpaint_depth(s.depth);
  }
  return r.samples;
}

struct ConvertResult {
  int converted = 0;
  std::vector<std::string> failures;
};

/// Converts a raw Cornell directory into the portable layout: parses point
/// clouds, inpaints depth, writes depth PNGs + copied rectangle files + a
/// manifest.
inline ConvertResult convert_cornell(const fs::path& cornell_dir, const fs::path& out_dir) {
  CornellLoadResult loaded = load_cornell_dataset(cornell_dir);
  ConvertResult result;
  result.failures = loaded.failures;

  std::vector<Sample> converted;
  for (Sample& s : loaded.samples) {
    try {
      s.depth = inpaint_depth(s.depth);
      converted.push_back(std::move(s));
    } catch (const std::exception& e) {
      result.failures.push_back(msg(s.id, ": ", e.what()));
    }
  }
  save_dataset(out_dir, converted);
  result.converted = static_cast<int>(converted.size());
  return result;
}

}  // namespace graspmap
