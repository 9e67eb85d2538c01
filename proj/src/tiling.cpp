#include "seamstain/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace seamstain {

std::vector<int> axis_positions(int dim, int tile, int stride) {
  std::vector<int> out;
  for (int p = 0;; p += stride) {
    out.push_back(std::min(p, dim - tile));
    if (p + tile >= dim) break;
  }
  return out;
}

TilePlan plan_tiles(int slide_w, int slide_h, int tile, int overlap) {
  if (tile <= 0) throw InvalidArgument("plan_tiles: tile must be positive");
  if (tile > slide_w || tile > slide_h) {
    throw InvalidArgument("plan_tiles: tile " + std::to_string(tile) + " exceeds slide " +
                          std::to_string(slide_w) + "x" + std::to_string(slide_h));
  }
  if (overlap < 0 || overlap >= tile) throw InvalidArgument("plan_tiles: need 0 <= overlap < tile");
  TilePlan plan;
  plan.slide_w = slide_w;
  plan.slide_h = slide_h;
  plan.tile = tile;
  plan.overlap = overlap;
  plan.xs = axis_positions(slide_w, tile, plan.stride());
  plan.ys = axis_positions(slide_h, tile, plan.stride());
  for (int y : plan.ys) {
    for (int x : plan.xs) plan.origins.emplace_back(x, y);
  }
  return plan;
}

namespace {

void require_plan_matches(const Raster& r, const TilePlan& plan, const char* what) {
  if (r.width() != plan.slide_w || r.height() != plan.slide_h) {
    throw ShapeMismatch(std::string(what) + ": raster " + std::to_string(r.width()) + "x" +
                        std::to_string(r.height()) + " does not match plan " + std::to_string(plan.slide_w) +
                        "x" + std::to_string(plan.slide_h));
  }
}

double ramp(int u, int tile, int overlap) {
  if (overlap <= 0) return 1.0;
  const int d = std::min(u, tile - 1 - u);
  return std::min(1.0, (d + 1.0) / (overlap + 1.0));
}

}  // namespace

std::vector<Raster> extract(const Raster& slide, const TilePlan& plan) {
  require_plan_matches(slide, plan, "extract");
  std::vector<Raster> tiles;
  tiles.reserve(plan.size());
  for (const auto& [x, y] : plan.origins) tiles.push_back(crop(slide, x, y, plan.tile, plan.tile));
  return tiles;
}

std::string to_string(Blend b) {
  switch (b) {
    case Blend::nearest_center: return "nearest_center";
    case Blend::average: return "average";
    case Blend::feather: return "feather";
  }
  return "?";
}

Blend parse_blend(const std::string& s) {
  if (s == "nearest_center") return Blend::nearest_center;
  if (s == "average") return Blend::average;
  if (s == "feather") return Blend::feather;
  throw InvalidArgument("unknown blend mode '" + s + "'");
}

std::vector<int> axis_owners(int dim, std::span<const int> positions, int tile) {
  // Compare doubled coordinates: pixel center 2x+1, tile center 2p+tile.
  std::vector<int> owner(static_cast<std::size_t>(dim));
  std::size_t best = 0;
  for (int x = 0; x < dim; ++x) {
    const long px = 2L * x + 1;
    // Owners are monotone in x, so the search can resume from the last one.
    while (best + 1 < positions.size() &&
           std::labs(2L * positions[best + 1] + tile - px) < std::labs(2L * positions[best] + tile - px)) {
      ++best;
    }
    owner[x] = static_cast<int>(best);
  }
  return owner;
}

std::vector<int> assignment_map(const TilePlan& plan) {
  const auto ox = axis_owners(plan.slide_w, plan.xs, plan.tile);
  const auto oy = axis_owners(plan.slide_h, plan.ys, plan.tile);
  const int nx = static_cast<int>(plan.xs.size());
  std::vector<int> map(static_cast<std::size_t>(plan.slide_w) * plan.slide_h);
  for (int y = 0; y < plan.slide_h; ++y) {
    for (int x = 0; x < plan.slide_w; ++x) map[static_cast<std::size_t>(y) * plan.slide_w + x] = oy[y] * nx + ox[x];
  }
  return map;
}

Raster stitch(std::span<const Raster> tiles, const TilePlan& plan, Blend blend) {
  if (tiles.size() != plan.size()) {
    throw ShapeMismatch("stitch: " + std::to_string(tiles.size()) + " tiles for a plan of " +
                        std::to_string(plan.size()));
  }
  if (tiles.empty()) throw ShapeMismatch("stitch: empty plan");
  const int channels = tiles.front().channels();
  for (const Raster& t : tiles) {
    if (t.width() != plan.tile || t.height() != plan.tile || t.channels() != channels) {
      throw ShapeMismatch("stitch: tile dimensions do not match the plan");
    }
  }
  Raster out(plan.slide_h, plan.slide_w, channels);
  const int nx = static_cast<int>(plan.xs.size());

  if (blend == Blend::nearest_center) {
    const auto ox = axis_owners(plan.slide_w, plan.xs, plan.tile);
    const auto oy = axis_owners(plan.slide_h, plan.ys, plan.tile);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < plan.slide_h; ++y) {
      for (int x = 0; x < plan.slide_w; ++x) {
        const int tx = ox[x];
        const int ty = oy[y];
        const Raster& t = tiles[static_cast<std::size_t>(ty) * nx + tx];
        const float* src = t.pixel(y - plan.ys[ty], x - plan.xs[tx]);
        float* dst = out.pixel(y, x);
        for (int c = 0; c < channels; ++c) dst[c] = src[c];
      }
    }
    return out;
  }

  // Weighted accumulation in double; the division by the weight sum
  // reproduces identical overlapping values exactly.
  std::vector<double> acc(out.size(), 0.0);
  std::vector<double> weight(static_cast<std::size_t>(plan.slide_w) * plan.slide_h, 0.0);
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const auto [x0, y0] = plan.origins[i];
    const Raster& t = tiles[i];
    for (int v = 0; v < plan.tile; ++v) {
      const double wy = blend == Blend::feather ? ramp(v, plan.tile, plan.overlap) : 1.0;
      for (int u = 0; u < plan.tile; ++u) {
        const double w = blend == Blend::feather ? wy * ramp(u, plan.tile, plan.overlap) : 1.0;
        const std::size_t p = static_cast<std::size_t>(y0 + v) * plan.slide_w + (x0 + u);
        weight[p] += w;
        const float* src = t.pixel(v, u);
        for (int c = 0; c < channels; ++c) acc[p * channels + c] += w * src[c];
      }
    }
  }
  auto dst = out.values();
  for (std::size_t p = 0; p < weight.size(); ++p) {
    for (int c = 0; c < channels; ++c) {
      dst[p * channels + c] = static_cast<float>(acc[p * channels + c] / weight[p]);
    }
  }
  return out;
}

double seam_index(const Raster& stitched, const TilePlan& plan) {
  require_plan_matches(stitched, plan, "seam_index");
  const auto ox = axis_owners(plan.slide_w, plan.xs, plan.tile);
  const auto oy = axis_owners(plan.slide_h, plan.ys, plan.tile);
  const int w = plan.slide_w;
  const int h = plan.slide_h;
  const int ch = stitched.channels();

  auto pair_diff = [&](const float* a, const float* b) {
    double s = 0.0;
    for (int c = 0; c < ch; ++c) s += std::fabs(static_cast<double>(a[c]) - b[c]);
    return s / ch;
  };

  double h_bound = 0.0, h_inner = 0.0, v_bound = 0.0, v_inner = 0.0;
  long nh_bound = 0, nh_inner = 0, nv_bound = 0, nv_inner = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      const double d = pair_diff(stitched.pixel(y, x), stitched.pixel(y, x + 1));
      if (ox[x] != ox[x + 1]) {
        h_bound += d;
        ++nh_bound;
      } else {
        h_inner += d;
        ++nh_inner;
      }
    }
  }
  for (int y = 0; y + 1 < h; ++y) {
    const bool boundary = oy[y] != oy[y + 1];
    for (int x = 0; x < w; ++x) {
      const double d = pair_diff(stitched.pixel(y, x), stitched.pixel(y + 1, x));
      if (boundary) {
        v_bound += d;
        ++nv_bound;
      } else {
        v_inner += d;
        ++nv_inner;
      }
    }
  }
  const long n_bound = nh_bound + nv_bound;
  if (n_bound == 0) throw UndefinedIndex("seam_index: plan has no tile boundaries");
  const double numerator = (h_bound + v_bound) / static_cast<double>(n_bound);
  const double mean_h = nh_inner > 0 ? h_inner / static_cast<double>(nh_inner) : 0.0;
  const double mean_v = nv_inner > 0 ? v_inner / static_cast<double>(nv_inner) : 0.0;
  const double denominator =
      (static_cast<double>(nh_bound) * mean_h + static_cast<double>(nv_bound) * mean_v) / static_cast<double>(n_bound);
  if (denominator < 1e-8) return kSeamIndexCap;
  return numerator / denominator;
}

double whole_vs_stitched_mse(const ImageOperator& op, const Raster& slide, const TilePlan& plan) {
  const Raster whole = op(slide);
  if (!whole.same_dims(slide)) throw ShapeMismatch("whole_vs_stitched_mse: operator changed dimensions");
  std::vector<Raster> tiles = extract(slide, plan);
  for (Raster& t : tiles) {
    Raster mapped = op(t);
    if (!mapped.same_dims(t)) throw ShapeMismatch("whole_vs_stitched_mse: operator changed dimensions");
    t = std::move(mapped);
  }
  return mean_squared_error(whole, stitch(tiles, plan, Blend::nearest_center));
}

}  // namespace seamstain
