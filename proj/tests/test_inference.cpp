#include <sstream>

#include "seamstain/inference.hpp"
#include "test_util.hpp"

namespace seamstain {
namespace {

using testing::textured_raster;

ModelBundle small_bundle(std::uint64_t seed) {
  GeneratorConfig g;
  g.base_channels = 8;
  g.n_res_blocks = 2;
  g.split_index = 1;
  DiscriminatorConfig d;
  d.base_channels = 8;
  return make_bundle(g, d, seed, 0);
}

TEST(Inference, TranslateTileKeepsShapeAndRange) {
  const ModelBundle b = small_bundle(1);
  const Raster tile = textured_raster(32, 48, 2, 3);
  for (Direction d : {Direction::x_to_y, Direction::y_to_x}) {
    const Raster out = translate_tile(b, d, tile);
    EXPECT_TRUE(out.same_dims(tile));
    for (float v : out.values()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
  EXPECT_NE(translate_tile(b, Direction::x_to_y, tile), translate_tile(b, Direction::y_to_x, tile));
  EXPECT_THROW(translate_tile(b, Direction::x_to_y, textured_raster(30, 32, 2, 3)), InvalidArgument);
}

TEST(Inference, Deterministic) {
  const ModelBundle a = small_bundle(2), b = small_bundle(2);
  const Raster slide = textured_raster(64, 64, 3, 3);
  EXPECT_EQ(translate_slide(a, Direction::x_to_y, slide, 32, 8), translate_slide(b, Direction::x_to_y, slide, 32, 8));
}

TEST(Inference, SingleTileSlideIsTileTranslation) {
  const ModelBundle b = small_bundle(3);
  const Raster slide = textured_raster(32, 32, 4, 3);
  EXPECT_EQ(translate_slide(b, Direction::x_to_y, slide, 32, 8), translate_tile(b, Direction::x_to_y, slide));
}

TEST(Inference, StitchedSlideHasSlideDimensions) {
  const ModelBundle b = small_bundle(4);
  const Raster slide = textured_raster(80, 112, 5, 3);
  for (Blend blend : {Blend::nearest_center, Blend::average, Blend::feather}) {
    EXPECT_TRUE(translate_slide(b, Direction::y_to_x, slide, 32, 8, blend).same_dims(slide));
  }
}

TEST(Inference, UntrainedNetworksLeaveArtifacts) {
  // Instance normalization sees different statistics per tile, so even a
  // random network's tiled output differs from its whole-slide output.
  const ModelBundle b = small_bundle(5);
  const Raster slide = textured_raster(96, 96, 6, 3);
  const auto rows = artifact_report(b, b, {NamedSlide{"s0", slide}}, 48, 8);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GT(rows[0].whole_vs_stitched_mse, 0.0);
  EXPECT_TRUE(std::isfinite(rows[0].seam_index));
  EXPECT_GT(rows[0].seam_index, 0.0);
}

TEST(ArtifactReport, RowsMatchDirectComputation) {
  const ModelBundle ours = small_bundle(7), base = small_bundle(8);
  const std::vector<NamedSlide> slides{{"a", textured_raster(64, 64, 9, 3)}, {"b", textured_raster(64, 96, 10, 3)}};
  const auto rows = artifact_report(ours, base, slides, 32, 8);
  ASSERT_EQ(rows.size(), 4u);
  const char* models[] = {"ours", "baseline"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const NamedSlide& s = slides[i / 2];
    const ModelBundle& m = i % 2 == 0 ? ours : base;
    EXPECT_EQ(rows[i].slide_id, s.id);
    EXPECT_EQ(rows[i].model, models[i % 2]);
    const auto plan = plan_tiles(s.image.width(), s.image.height(), 32, 8);
    EXPECT_EQ(rows[i].seam_index, seam_index(translate_slide(m, Direction::x_to_y, s.image, 32, 8), plan));
    const ImageOperator op = [&](const Raster& r) { return translate_tile(m, Direction::x_to_y, r); };
    EXPECT_EQ(rows[i].whole_vs_stitched_mse, whole_vs_stitched_mse(op, s.image, plan));
  }
}

TEST(ArtifactReport, IdenticalCheckpointsGiveIdenticalRows) {
  const ModelBundle a = small_bundle(11), b = small_bundle(11);
  const auto rows = artifact_report(a, b, {NamedSlide{"s", textured_raster(64, 64, 12, 3)}}, 32, 8);
  EXPECT_EQ(rows[0].seam_index, rows[1].seam_index);
  EXPECT_EQ(rows[0].whole_vs_stitched_mse, rows[1].whole_vs_stitched_mse);
}

TEST(ArtifactReport, CsvFormat) {
  const std::vector<ArtifactRow> rows{{"s0", "ours", 1.5, 0.25}, {"s0", "baseline", 2.0, 0.5}};
  std::istringstream in(artifact_csv(rows));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "slide_id,model,seam_index,whole_vs_stitched_mse");
  std::getline(in, line);
  EXPECT_EQ(line, "s0,ours,1.5,0.25");
  std::getline(in, line);
  EXPECT_EQ(line, "s0,baseline,2,0.5");
  EXPECT_FALSE(std::getline(in, line));
}

TEST(ArtifactReport, Errors) {
  const ModelBundle b = small_bundle(13);
  EXPECT_THROW(artifact_report(b, b, {}, 32, 8), InvalidArgument);
  EXPECT_THROW(parse_direction("XY"), InvalidArgument);
  EXPECT_EQ(parse_direction(to_string(Direction::y_to_x)), Direction::y_to_x);
}

}  // namespace
}  // namespace seamstain
