#include "seamstain/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "seamstain/config_json.hpp"
#include "seamstain/image_io.hpp"
#include "seamstain/seeding.hpp"
#include "seamstain/tiling.hpp"

namespace seamstain {

void SlideSpec::validate() const {
  if (width <= 0 || height <= 0) throw InvalidArgument("slide dimensions must be positive");
  if (!(nucleus_radius_min >= 2.0)) throw InvalidArgument("nucleus_radius_range.min must be >= 2");
  if (!(nucleus_radius_max >= nucleus_radius_min)) throw InvalidArgument("nucleus_radius_range must be ordered");
  if (width < 2.0 * nucleus_radius_max || height < 2.0 * nucleus_radius_max) {
    throw InvalidArgument("slide is smaller than twice the maximum nucleus radius");
  }
  if (!(nucleus_density >= 0.0) || !std::isfinite(nucleus_density)) {
    throw InvalidArgument("nucleus_density must be finite and >= 0");
  }
  if (!(stroma_scale > 0.0)) throw InvalidArgument("stroma_scale must be positive");
  if (region_count < 1 || region_count > 255) throw InvalidArgument("region_count must be in [1, 255]");
}

SemanticMap SemanticMap::blank(int width, int height, int region_count) {
  SemanticMap m;
  m.width = width;
  m.height = height;
  m.region_count = region_count;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  m.nucleus_mask.assign(n, 0);
  m.region_label.assign(n, 0);
  m.stroma_field.assign(n, 0.0f);
  return m;
}

namespace {

constexpr int kOctaves = 3;
constexpr double kPersistence = 0.5;

double lattice(std::uint64_t seed, int octave, long ix, long iy) {
  const std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
                            static_cast<std::uint32_t>(iy);
  return unit_interval(mix_seed(seed ^ (static_cast<std::uint64_t>(octave + 1) << 56), key));
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Value noise: bilinear (smoothstep-weighted) interpolation of hashed lattice
// values, octaves at halving wavelength and amplitude, normalized to [0, 1].
void fill_stroma(SemanticMap& m, std::uint64_t seed, double scale) {
  double amp_total = 0.0;
  for (int o = 0; o < kOctaves; ++o) amp_total += std::pow(kPersistence, o);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      double v = 0.0;
      for (int o = 0; o < kOctaves; ++o) {
        const double wavelength = scale / std::pow(2.0, o);
        const double fx = (x + 0.5) / wavelength;
        const double fy = (y + 0.5) / wavelength;
        const long ix = static_cast<long>(std::floor(fx));
        const long iy = static_cast<long>(std::floor(fy));
        const double tx = smoothstep(fx - ix);
        const double ty = smoothstep(fy - iy);
        const double a = lattice(seed, o, ix, iy);
        const double b = lattice(seed, o, ix + 1, iy);
        const double c = lattice(seed, o, ix, iy + 1);
        const double d = lattice(seed, o, ix + 1, iy + 1);
        const double top = a + (b - a) * tx;
        const double bottom = c + (d - c) * tx;
        v += std::pow(kPersistence, o) * (top + (bottom - top) * ty);
      }
      m.stroma_field[static_cast<std::size_t>(y) * m.width + x] = static_cast<float>(v / amp_total);
    }
  }
}

// Voronoi partition; cells of a Euclidean Voronoi diagram are convex, hence
// contiguous.
void fill_regions(SemanticMap& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::pair<double, double>> sites(static_cast<std::size_t>(m.region_count));
  for (auto& s : sites) {
    s.first = unit_interval(rng()) * m.width;
    s.second = unit_interval(rng()) * m.height;
  }
#pragma omp parallel for schedule(static)
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      int best = 0;
      double best_d = INFINITY;
      for (int r = 0; r < m.region_count; ++r) {
        const double dx = x + 0.5 - sites[r].first;
        const double dy = y + 0.5 - sites[r].second;
        const double d = dx * dx + dy * dy;
        if (d < best_d) {
          best_d = d;
          best = r;
        }
      }
      m.region_label[static_cast<std::size_t>(y) * m.width + x] = static_cast<std::uint8_t>(best);
    }
  }
}

// Jittered grid: one nucleus per cell of area 10^4/density. Centers keep
// max_radius + 1 px from the cell walls when the cell is large enough, so
// disks never touch and each nucleus is one connected component.
void place_nuclei(SemanticMap& m, const SlideSpec& spec, std::uint64_t seed) {
  if (spec.nucleus_density <= 0.0) return;
  const double cell = std::sqrt(1e4 / spec.nucleus_density);
  const int nx = std::max(1, static_cast<int>(std::lround(m.width / cell)));
  const int ny = std::max(1, static_cast<int>(std::lround(m.height / cell)));
  const double cw = static_cast<double>(m.width) / nx;
  const double chh = static_cast<double>(m.height) / ny;
  const double margin = spec.nucleus_radius_max + 1.0;
  std::mt19937_64 rng(seed);
  for (int gy = 0; gy < ny; ++gy) {
    for (int gx = 0; gx < nx; ++gx) {
      auto coord = [&](double lo, double size) {
        const double span = size - 2.0 * margin;
        return span > 0.0 ? lo + margin + unit_interval(rng()) * span : lo + 0.5 * size;
      };
      const double cx = coord(gx * cw, cw);
      const double cy = coord(gy * chh, chh);
      const double r =
          spec.nucleus_radius_min + unit_interval(rng()) * (spec.nucleus_radius_max - spec.nucleus_radius_min);
      const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
      const int x1 = std::min(m.width - 1, static_cast<int>(std::ceil(cx + r)));
      const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
      const int y1 = std::min(m.height - 1, static_cast<int>(std::ceil(cy + r)));
      bool any = false;
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double dx = x + 0.5 - cx;
          const double dy = y + 0.5 - cy;
          if (dx * dx + dy * dy <= r * r) {
            m.nucleus_mask[static_cast<std::size_t>(y) * m.width + x] = 1;
            any = true;
          }
        }
      }
      m.nucleus_count += any ? 1 : 0;
    }
  }
}

}  // namespace

SemanticMap generate_semantic(const SlideSpec& spec) {
  spec.validate();
  SemanticMap m = SemanticMap::blank(spec.width, spec.height, spec.region_count);
  fill_stroma(m, mix_seed(spec.seed, 11), spec.stroma_scale);
  fill_regions(m, mix_seed(spec.seed, 12));
  place_nuclei(m, spec, mix_seed(spec.seed, 13));
  return m;
}

std::string to_string(Domain d) { return d == Domain::X ? "X" : "Y"; }

namespace {

bool in_unit_cube(const Rgb& c) {
  return c.r >= 0.0 && c.r <= 1.0 && c.g >= 0.0 && c.g <= 1.0 && c.b >= 0.0 && c.b <= 1.0;
}

double luma(const Rgb& c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

}  // namespace

void StainPalette::validate() const {
  if (stroma.empty()) throw InvalidArgument("palette needs at least one stroma curve");
  auto check = [](const ColorCurve& c) {
    if (!in_unit_cube(c.color)) throw InvalidArgument("palette colors must lie in [0,1]^3");
    if (!(c.gamma > 0.0)) throw InvalidArgument("palette gamma must be positive");
  };
  check(nucleus);
  for (const auto& c : stroma) check(c);
  if (!in_unit_cube(background)) throw InvalidArgument("palette colors must lie in [0,1]^3");
}

StainPalette he_palette() {
  StainPalette p;
  p.domain = Domain::X;
  p.nucleus = {{0.33, 0.20, 0.52}, 1.0};
  p.stroma = {{{0.93, 0.62, 0.80}, 1.0},
              {{0.86, 0.46, 0.70}, 1.0},
              {{0.84, 0.68, 0.90}, 1.0},
              {{0.95, 0.64, 0.72}, 1.0}};
  p.background = {0.96, 0.93, 0.96};
  return p;
}

StainPalette fapck_palette() {
  StainPalette p;
  p.domain = Domain::Y;
  p.nucleus = {{0.42, 0.26, 0.12}, 1.3};
  p.stroma = {{{0.88, 0.76, 0.58}, 0.7},
              {{0.84, 0.48, 0.72}, 0.7},
              {{0.82, 0.64, 0.46}, 0.7},
              {{0.92, 0.84, 0.70}, 0.7}};
  p.background = {0.97, 0.97, 0.97};
  return p;
}

Raster render(const SemanticMap& sem, const StainPalette& palette) {
  palette.validate();
  const std::size_t n = static_cast<std::size_t>(sem.width) * sem.height;
  if (sem.nucleus_mask.size() != n || sem.region_label.size() != n || sem.stroma_field.size() != n) {
    throw ShapeMismatch("render: semantic layers do not share the map dimensions");
  }
  Raster out(sem.height, sem.width, 3);
  auto px = out.values();
  const std::size_t n_curves = palette.stroma.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const double s = sem.stroma_field[i];
    Rgb c;
    if (sem.nucleus_mask[i]) {
      const double k = 0.85 + 0.3 * std::pow(s, palette.nucleus.gamma);
      c = {palette.nucleus.color.r * k, palette.nucleus.color.g * k, palette.nucleus.color.b * k};
    } else {
      const ColorCurve& curve = palette.stroma[sem.region_label[i] % n_curves];
      const double t = std::pow(s, curve.gamma);
      const Rgb& bg = palette.background;
      c = {bg.r + (curve.color.r - bg.r) * t, bg.g + (curve.color.g - bg.g) * t, bg.b + (curve.color.b - bg.b) * t};
    }
    px[3 * i + 0] = static_cast<float>(std::clamp(c.r, 0.0, 1.0));
    px[3 * i + 1] = static_cast<float>(std::clamp(c.g, 0.0, 1.0));
    px[3 * i + 2] = static_cast<float>(std::clamp(c.b, 0.0, 1.0));
  }
  return out;
}

std::vector<std::uint8_t> structure_mask(const Raster& r, double threshold) {
  const Raster y = luma(r);
  std::vector<std::uint8_t> mask(y.values().size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = y.values()[i] < threshold ? 1 : 0;
  return mask;
}

// ---------------------------------------------------------------- manifest

std::vector<std::filesystem::path> Manifest::train_paths(Domain d) const {
  const std::string split = d == Domain::X ? "trainX" : "trainY";
  std::vector<std::filesystem::path> out;
  for (const auto& s : slides) {
    if (s.split != split) continue;
    for (const auto& t : s.tiles) out.push_back(resolve(t));
  }
  return out;
}

std::vector<const SlideRecord*> Manifest::eval_slides() const {
  std::vector<const SlideRecord*> out;
  for (const auto& s : slides) {
    if (s.split == "eval") out.push_back(&s);
  }
  return out;
}

void to_json(nlohmann::json& j, const SlideSpec& s) {
  j = {{"seed", s.seed},
       {"width", s.width},
       {"height", s.height},
       {"nucleus_density", s.nucleus_density},
       {"nucleus_radius_range", {s.nucleus_radius_min, s.nucleus_radius_max}},
       {"stroma_scale", s.stroma_scale},
       {"region_count", s.region_count}};
}

void from_json(const nlohmann::json& j, SlideSpec& s) {
  json_detail::require_known_keys(
      j, {"seed", "width", "height", "nucleus_density", "nucleus_radius_range", "stroma_scale", "region_count"},
      "slide");
  json_detail::read(j, "seed", s.seed);
  json_detail::read(j, "width", s.width);
  json_detail::read(j, "height", s.height);
  json_detail::read(j, "nucleus_density", s.nucleus_density);
  if (j.contains("nucleus_radius_range")) {
    std::vector<double> r;
    json_detail::read(j, "nucleus_radius_range", r);
    if (r.size() != 2) throw InvalidArgument("nucleus_radius_range must be [min, max]");
    s.nucleus_radius_min = r[0];
    s.nucleus_radius_max = r[1];
  }
  json_detail::read(j, "stroma_scale", s.stroma_scale);
  json_detail::read(j, "region_count", s.region_count);
}

namespace {
constexpr const char* kManifestFormat = "seamstain-manifest-v1";
}

std::string write_manifest_text(const Manifest& m) {
  nlohmann::json slides = nlohmann::json::array();
  for (const auto& s : m.slides) {
    nlohmann::json rec = {{"id", s.id}, {"split", s.split}, {"spec", s.spec}};
    if (s.split == "eval") {
      rec["x"] = s.x_path;
      rec["y"] = s.y_path;
    } else {
      rec["tiles"] = s.tiles;
    }
    slides.push_back(std::move(rec));
  }
  const nlohmann::json j = {
      {"format", kManifestFormat}, {"seed", m.seed}, {"tile", m.tile}, {"overlap", m.overlap}, {"slides", slides}};
  return j.dump(1);
}

Manifest parse_manifest_text(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", std::string()) != kManifestFormat) throw InvalidArgument("not a seamstain manifest");
    Manifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.tile = j.at("tile").get<int>();
    m.overlap = j.at("overlap").get<int>();
    for (const auto& rec : j.at("slides")) {
      SlideRecord s;
      s.id = rec.at("id").get<std::string>();
      s.split = rec.at("split").get<std::string>();
      s.spec = rec.at("spec").get<SlideSpec>();
      if (s.split == "eval") {
        s.x_path = rec.at("x").get<std::string>();
        s.y_path = rec.at("y").get<std::string>();
      } else if (s.split == "trainX" || s.split == "trainY") {
        s.tiles = rec.at("tiles").get<std::vector<std::string>>();
      } else {
        throw InvalidArgument("unknown split '" + s.split + "'");
      }
      m.slides.push_back(std::move(s));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed manifest: ") + e.what());
  }
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << write_manifest_text(m) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Manifest m = parse_manifest_text(ss.str());
  m.root = path.parent_path();
  return m;
}

// ---------------------------------------------------------------- dataset

void DatasetConfig::validate() const {
  if (n_train_slides < 2) throw InvalidArgument("n_train_slides must be >= 2 to form disjoint X/Y sets");
  if (n_eval_slides < 0) throw InvalidArgument("n_eval_slides must be >= 0");
  if (tile <= 0 || overlap < 0 || overlap >= tile) throw InvalidArgument("need tile > overlap >= 0");
  slide.validate();
  if (slide.width < tile || slide.height < tile) throw InvalidArgument("slides must be at least one tile wide");
}

void to_json(nlohmann::json& j, const DatasetConfig& c) {
  j = {{"n_train_slides", c.n_train_slides},
       {"n_eval_slides", c.n_eval_slides},
       {"tile", c.tile},
       {"overlap", c.overlap},
       {"seed", c.seed},
       {"slide", c.slide}};
}

void from_json(const nlohmann::json& j, DatasetConfig& c) {
  json_detail::require_known_keys(j, {"n_train_slides", "n_eval_slides", "tile", "overlap", "seed", "slide"},
                                  "synth");
  json_detail::read(j, "n_train_slides", c.n_train_slides);
  json_detail::read(j, "n_eval_slides", c.n_eval_slides);
  json_detail::read(j, "tile", c.tile);
  json_detail::read(j, "overlap", c.overlap);
  json_detail::read(j, "seed", c.seed);
  if (j.contains("slide")) from_json(j.at("slide"), c.slide);
}

namespace {

std::string slide_id(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03d", prefix, i);
  return buf;
}

std::string tile_name(const std::string& id, int x, int y) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "_y%05d_x%05d.png", y, x);
  return id + buf;
}

}  // namespace

Manifest build_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  try {
    std::filesystem::create_directories(out_dir / "trainX");
    std::filesystem::create_directories(out_dir / "trainY");
    std::filesystem::create_directories(out_dir / "eval");
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError(std::string("cannot create dataset directories: ") + e.what());
  }

  Manifest m;
  m.seed = cfg.seed;
  m.tile = cfg.tile;
  m.overlap = cfg.overlap;
  m.root = out_dir;
  const int n_x = cfg.n_train_slides / 2;
  for (int i = 0; i < cfg.n_train_slides; ++i) {
    SlideRecord s;
    s.id = slide_id("train", i);
    s.split = i < n_x ? "trainX" : "trainY";
    s.spec = cfg.slide;
    s.spec.seed = mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(i));
    m.slides.push_back(std::move(s));
  }
  for (int i = 0; i < cfg.n_eval_slides; ++i) {
    SlideRecord s;
    s.id = slide_id("eval", i);
    s.split = "eval";
    s.spec = cfg.slide;
    s.spec.seed = mix_seed(cfg.seed, 2000 + static_cast<std::uint64_t>(i));
    s.x_path = "eval/" + s.id + "/X.png";
    s.y_path = "eval/" + s.id + "/Y.png";
    m.slides.push_back(std::move(s));
  }

  const TilePlan plan = plan_tiles(cfg.slide.width, cfg.slide.height, cfg.tile, cfg.overlap);
  const StainPalette px = he_palette();
  const StainPalette py = fapck_palette();
  std::vector<std::string> errors(m.slides.size());
  // Slides are independent; each iteration writes only its own files and
  // its own manifest record.
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m.slides.size()); ++i) {
    SlideRecord& s = m.slides[i];
    try {
      const SemanticMap sem = generate_semantic(s.spec);
      if (s.split == "eval") {
        write_png(out_dir / s.x_path, render(sem, px));
        write_png(out_dir / s.y_path, render(sem, py));
        continue;
      }
      const bool is_x = s.split == "trainX";
      const Raster slide = render(sem, is_x ? px : py);
      const std::vector<Raster> tiles = extract(slide, plan);
      for (std::size_t t = 0; t < tiles.size(); ++t) {
        const auto [x, y] = plan.origins[t];
        const std::string rel = s.split + "/" + tile_name(s.id, x, y);
        write_png(out_dir / rel, tiles[t]);
        s.tiles.push_back(rel);
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw IoError(e);
  }
  write_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace seamstain
