#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seamstain/raster.hpp"

namespace seamstain {

// Regular grid of square tiles. Axis positions are 0, stride, 2*stride, ...
// with the last one clamped to dim - tile, so every tile lies inside the
// slide and every pixel is covered. Origins are (x, y), row-major.
struct TilePlan {
  int slide_w = 0;
  int slide_h = 0;
  int tile = 0;
  int overlap = 0;
  std::vector<int> xs;
  std::vector<int> ys;
  std::vector<std::pair<int, int>> origins;

  int stride() const noexcept { return tile - overlap; }
  std::size_t size() const noexcept { return origins.size(); }
};

std::vector<int> axis_positions(int dim, int tile, int stride);

// Throws InvalidArgument for tile > min(w, h), overlap < 0 or overlap >= tile.
TilePlan plan_tiles(int slide_w, int slide_h, int tile, int overlap);

std::vector<Raster> extract(const Raster& slide, const TilePlan& plan);

enum class Blend { nearest_center, average, feather };
std::string to_string(Blend b);
Blend parse_blend(const std::string& s);

// nearest_center: each pixel from the tile whose center is closest (ties to
//                 the earlier tile); average: mean of covering tiles;
// feather:        covering tiles weighted by a linear ramp that rises over
//                 the overlap band from each tile edge.
Raster stitch(std::span<const Raster> tiles, const TilePlan& plan, Blend blend);

// Per-axis owner index under nearest_center (pixel center vs tile center).
std::vector<int> axis_owners(int dim, std::span<const int> positions, int tile);

// Tile index owning each pixel under nearest_center, row-major H x W.
std::vector<int> assignment_map(const TilePlan& plan);

// Returned when interior differences vanish (< 1e-8), e.g. on a constant
// image with steps only at tile boundaries.
inline constexpr double kSeamIndexCap = 1e6;

// Mean absolute forward difference over pixel pairs that straddle a
// nearest_center boundary, divided by the mean over non-boundary pairs of the
// same orientation (weighted by the boundary pair counts). ~1 = no seams.
// Throws UndefinedIndex when the plan has no internal boundary.
double seam_index(const Raster& stitched, const TilePlan& plan);

using ImageOperator = std::function<Raster(const Raster&)>;

// MSE between op(slide) and the nearest_center stitch of op applied per tile.
double whole_vs_stitched_mse(const ImageOperator& op, const Raster& slide, const TilePlan& plan);

}  // namespace seamstain
