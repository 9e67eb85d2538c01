#include "seamstain/inference.hpp"

#include <sstream>

namespace seamstain {

std::string to_string(Direction d) { return d == Direction::x_to_y ? "X2Y" : "Y2X"; }

Direction parse_direction(const std::string& s) {
  if (s == "X2Y") return Direction::x_to_y;
  if (s == "Y2X") return Direction::y_to_x;
  throw InvalidArgument("direction must be X2Y or Y2X, got '" + s + "'");
}

const Generator<float>& generator_for(const ModelBundle& bundle, Direction d) {
  return d == Direction::x_to_y ? bundle.g1 : bundle.g2;
}

Raster translate_tile(const ModelBundle& bundle, Direction d, const Raster& tile) {
  if (tile.width() % 4 != 0 || tile.height() % 4 != 0) {
    throw InvalidArgument("translate_tile: tile dimensions must be multiples of 4");
  }
  return from_model_output(generator_for(bundle, d).forward(to_model_input<float>(tile)));
}

Raster translate_slide(const ModelBundle& bundle, Direction d, const Raster& slide, int tile, int overlap,
                       Blend blend) {
  const TilePlan plan = plan_tiles(slide.width(), slide.height(), tile, overlap);
  std::vector<Raster> tiles = extract(slide, plan);
  for (Raster& t : tiles) t = translate_tile(bundle, d, t);
  return stitch(tiles, plan, blend);
}

std::vector<ArtifactRow> artifact_report(const ModelBundle& ours, const ModelBundle& baseline,
                                         const std::vector<NamedSlide>& slides, int tile, int overlap,
                                         Direction d) {
  if (slides.empty()) throw InvalidArgument("artifact_report: no slides");
  std::vector<ArtifactRow> rows;
  for (const NamedSlide& s : slides) {
    const TilePlan plan = plan_tiles(s.image.width(), s.image.height(), tile, overlap);
    for (const auto& [name, bundle] : {std::pair<const char*, const ModelBundle*>{"ours", &ours},
                                       std::pair<const char*, const ModelBundle*>{"baseline", &baseline}}) {
      // Same quantities as seam_index(translate_slide(...)) and
      // whole_vs_stitched_mse(translate_tile, ...), sharing one tiled pass.
      const Raster stitched = translate_slide(*bundle, d, s.image, tile, overlap);
      ArtifactRow row;
      row.slide_id = s.id;
      row.model = name;
      row.seam_index = seam_index(stitched, plan);
      row.whole_vs_stitched_mse = mean_squared_error(translate_tile(*bundle, d, s.image), stitched);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string artifact_csv(const std::vector<ArtifactRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "slide_id,model,seam_index,whole_vs_stitched_mse\n";
  for (const auto& r : rows) os << r.slide_id << ',' << r.model << ',' << r.seam_index << ',' << r.whole_vs_stitched_mse << '\n';
  return os.str();
}

}  // namespace seamstain
