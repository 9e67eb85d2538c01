#pragma once

// Synthetic dual-stain slides. A SemanticMap (nuclei, stroma texture, tissue
// regions) is rendered through two stain palettes, so domain X and domain Y
// images of the same map are pixel-aligned.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "seamstain/raster.hpp"

namespace seamstain {

struct SlideSpec {
  std::uint64_t seed = 0;
  int width = 1024;
  int height = 1024;
  double nucleus_density = 30.0;  // nuclei per 10^4 px^2; 0 gives no nuclei
  double nucleus_radius_min = 3.0;
  double nucleus_radius_max = 6.0;
  double stroma_scale = 32.0;  // base wavelength of the stroma noise, px
  int region_count = 4;

  // Throws InvalidArgument; also rejects slides narrower than 2 * max radius.
  void validate() const;
  bool operator==(const SlideSpec&) const = default;
};

struct SemanticMap {
  int width = 0;
  int height = 0;
  int region_count = 0;
  std::vector<std::uint8_t> nucleus_mask;  // 0/1, row-major
  std::vector<std::uint8_t> region_label;  // [0, region_count)
  std::vector<float> stroma_field;         // [0, 1]
  int nucleus_count = 0;

  // Uniform map: no nuclei, region 0, stroma 0 everywhere.
  static SemanticMap blank(int width, int height, int region_count = 1);
  bool operator==(const SemanticMap&) const = default;
};

SemanticMap generate_semantic(const SlideSpec& spec);

enum class Domain { X, Y };
std::string to_string(Domain d);

struct Rgb {
  double r = 0.0, g = 0.0, b = 0.0;
  bool operator==(const Rgb&) const = default;
};

struct ColorCurve {
  Rgb color;
  double gamma = 1.0;
  bool operator==(const ColorCurve&) const = default;
};

// Stroma pixels blend from the background towards the region's stroma color
// by stroma_field^gamma. Nucleus pixels take the nucleus color scaled by
// 0.85 + 0.3 * stroma_field^gamma. All nucleus colors stay darker (luma) than
// any non-nucleus color, so structure survives a luma threshold.
struct StainPalette {
  Domain domain = Domain::X;
  ColorCurve nucleus;
  std::vector<ColorCurve> stroma;  // indexed by region label modulo size
  Rgb background;

  void validate() const;
  bool operator==(const StainPalette&) const = default;
};

StainPalette he_palette();     // domain X: purple nuclei, pink stroma
StainPalette fapck_palette();  // domain Y: brown nuclei, tan/magenta stroma on white

Raster render(const SemanticMap& sem, const StainPalette& palette);

// Luma threshold separating nuclei from everything else for both shipped
// palettes.
inline constexpr double kStructureThreshold = 0.45;
std::vector<std::uint8_t> structure_mask(const Raster& r, double threshold = kStructureThreshold);

struct SlideRecord {
  std::string id;
  std::string split;  // "trainX", "trainY" or "eval"
  SlideSpec spec;
  std::vector<std::string> tiles;  // training tiles, relative to the root
  std::string x_path;              // eval pair, relative to the root
  std::string y_path;
  bool operator==(const SlideRecord&) const = default;
};

struct Manifest {
  std::uint64_t seed = 0;
  int tile = 0;
  int overlap = 0;
  std::vector<SlideRecord> slides;
  std::filesystem::path root;  // directory the relative paths resolve against; not serialized

  std::vector<std::filesystem::path> train_paths(Domain d) const;
  std::vector<const SlideRecord*> eval_slides() const;
  std::filesystem::path resolve(const std::string& rel) const { return root / rel; }

  // Compares the serialized content (root excluded).
  bool operator==(const Manifest& o) const {
    return seed == o.seed && tile == o.tile && overlap == o.overlap && slides == o.slides;
  }
};

void to_json(nlohmann::json& j, const SlideSpec& s);
void from_json(const nlohmann::json& j, SlideSpec& s);
std::string write_manifest_text(const Manifest& m);
Manifest parse_manifest_text(const std::string& text);
void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);  // sets root to the file's directory

struct DatasetConfig {
  int n_train_slides = 8;
  int n_eval_slides = 4;
  int tile = 128;
  int overlap = 32;
  std::uint64_t seed = 0;
  SlideSpec slide;  // template; each slide gets its own derived seed

  void validate() const;
  bool operator==(const DatasetConfig&) const = default;
};

void to_json(nlohmann::json& j, const DatasetConfig& c);
void from_json(const nlohmann::json& j, DatasetConfig& c);

// Writes <out>/trainX/*.png from the first half of the training slides
// (domain X palette), <out>/trainY/*.png from the second half (domain Y),
// <out>/eval/<id>/{X,Y}.png and <out>/manifest.json.
Manifest build_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace seamstain
