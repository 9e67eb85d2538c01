#pragma once

#include <string>
#include <utility>
#include <vector>

#include "seamstain/raster.hpp"
#include "seamstain/tiling.hpp"
#include "seamstain/trainer.hpp"

namespace seamstain {

enum class Direction { x_to_y, y_to_x };
std::string to_string(Direction d);     // "X2Y" / "Y2X"
Direction parse_direction(const std::string& s);

const Generator<float>& generator_for(const ModelBundle& bundle, Direction d);

// [0,1] raster through the direction's generator and back to [0,1].
// Dimensions must be multiples of 4.
Raster translate_tile(const ModelBundle& bundle, Direction d, const Raster& tile);

// plan_tiles -> translate_tile on every tile -> stitch.
Raster translate_slide(const ModelBundle& bundle, Direction d, const Raster& slide, int tile, int overlap,
                       Blend blend = Blend::nearest_center);

struct NamedSlide {
  std::string id;
  Raster image;
};

struct ArtifactRow {
  std::string slide_id;
  std::string model;
  double seam_index = 0.0;
  double whole_vs_stitched_mse = 0.0;
  bool operator==(const ArtifactRow&) const = default;
};

// Two rows per slide ("ours", then "baseline"): seam_index of the
// nearest_center reconstruction and its MSE against whole-slide inference.
std::vector<ArtifactRow> artifact_report(const ModelBundle& ours, const ModelBundle& baseline,
                                         const std::vector<NamedSlide>& slides, int tile, int overlap,
                                         Direction d = Direction::x_to_y);

std::string artifact_csv(const std::vector<ArtifactRow>& rows);

}  // namespace seamstain
