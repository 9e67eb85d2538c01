#include <cmath>
#include <set>

#include "seamstain/tiling.hpp"
#include "test_util.hpp"

namespace seamstain {
namespace {

using testing::random_raster;
using testing::textured_raster;

TEST(TilePlan, WorkedExample1024) {
  const auto p = plan_tiles(1024, 1024, 512, 128);
  EXPECT_EQ(p.xs, (std::vector<int>{0, 384, 512}));
  EXPECT_EQ(p.ys, p.xs);
  EXPECT_EQ(p.size(), 9u);
  EXPECT_EQ(p.origins[1], (std::pair{384, 0}));
  EXPECT_EQ(p.origins[3], (std::pair{0, 384}));
}

TEST(TilePlan, WorkedExample2048) {
  const auto p = plan_tiles(2048, 2048, 512, 128);
  EXPECT_EQ(p.xs, (std::vector<int>{0, 384, 768, 1152, 1536}));
  EXPECT_EQ(p.size(), 25u);
}

TEST(TilePlan, AxisPositionsCoverAndStayInside) {
  for (int dim : {16, 17, 100, 129, 333}) {
    for (int tile : {16, 5, 9}) {
      for (int overlap : {0, 1, tile / 2, tile - 1}) {
        if (tile > dim) continue;
        const auto pos = axis_positions(dim, tile, tile - overlap);
        ASSERT_FALSE(pos.empty());
        EXPECT_EQ(pos.front(), 0);
        EXPECT_EQ(pos.back(), dim - tile);
        for (std::size_t i = 1; i < pos.size(); ++i) {
          EXPECT_GT(pos[i], pos[i - 1]);
          // Adjacent tiles touch or overlap, so no gap is left.
          EXPECT_LE(pos[i], pos[i - 1] + tile);
        }
      }
    }
  }
}

TEST(TilePlan, NonSquareSlide) {
  const auto p = plan_tiles(300, 100, 64, 16);
  EXPECT_EQ(p.size(), p.xs.size() * p.ys.size());
  EXPECT_EQ(p.ys.back(), 36);
  EXPECT_EQ(p.xs.back(), 236);
}

TEST(TilePlan, RejectsBadGeometry) {
  EXPECT_THROW(plan_tiles(100, 100, 128, 0), InvalidArgument);
  EXPECT_THROW(plan_tiles(200, 100, 128, 0), InvalidArgument);
  EXPECT_THROW(plan_tiles(256, 256, 128, -1), InvalidArgument);
  EXPECT_THROW(plan_tiles(256, 256, 128, 128), InvalidArgument);
  EXPECT_THROW(parse_blend("gaussian"), InvalidArgument);
  for (Blend b : {Blend::nearest_center, Blend::average, Blend::feather}) EXPECT_EQ(parse_blend(to_string(b)), b);
}

TEST(Extract, TilesAreCrops) {
  const Raster slide = random_raster(70, 90, 3, 1);
  const auto plan = plan_tiles(90, 70, 32, 8);
  const auto tiles = extract(slide, plan);
  ASSERT_EQ(tiles.size(), plan.size());
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const auto [x, y] = plan.origins[i];
    EXPECT_EQ(tiles[i], crop(slide, x, y, 32, 32));
  }
}

TEST(Stitch, UnmodifiedTilesReassembleTheSlide) {
  const Raster slide = random_raster(77, 101, 3, 2);
  for (auto [tile, overlap] : {std::pair{32, 0}, std::pair{32, 8}, std::pair{20, 19}, std::pair{77, 10}}) {
    const auto plan = plan_tiles(101, 77, tile, overlap);
    const auto tiles = extract(slide, plan);
    EXPECT_EQ(stitch(tiles, plan, Blend::nearest_center), slide);
    for (Blend b : {Blend::average, Blend::feather}) {
      const Raster out = stitch(tiles, plan, b);
      ASSERT_TRUE(out.same_dims(slide));
      for (std::size_t i = 0; i < out.size(); ++i) ASSERT_NEAR(out.values()[i], slide.values()[i], 1e-6);
    }
  }
}

// Two 8-wide tiles over a 12-wide strip: columns 4..7 are shared.
TEST(Stitch, AverageGivesHalfInTheSharedBand) {
  const auto plan = plan_tiles(12, 8, 8, 4);
  ASSERT_EQ(plan.xs, (std::vector<int>{0, 4}));
  const std::vector<Raster> tiles{Raster(8, 8, 1, 0.0f), Raster(8, 8, 1, 1.0f)};
  const Raster out = stitch(tiles, plan, Blend::average);
  for (int x = 0; x < 12; ++x) {
    const float expected = x < 4 ? 0.0f : (x < 8 ? 0.5f : 1.0f);
    for (int y = 0; y < 8; ++y) EXPECT_FLOAT_EQ(out.at(y, x, 0), expected) << x;
  }
  // nearest_center switches at the midpoint between centers 4 and 8.
  const Raster nc = stitch(tiles, plan, Blend::nearest_center);
  for (int x = 0; x < 12; ++x) EXPECT_FLOAT_EQ(nc.at(0, x, 0), x < 6 ? 0.0f : 1.0f) << x;
  // Feathering is monotone across the band and stays within the tile values.
  const Raster f = stitch(tiles, plan, Blend::feather);
  for (int x = 1; x < 12; ++x) EXPECT_GE(f.at(0, x, 0), f.at(0, x - 1, 0));
  EXPECT_FLOAT_EQ(f.at(0, 0, 0), 0.0f);
  EXPECT_FLOAT_EQ(f.at(0, 11, 0), 1.0f);
}

TEST(Stitch, RejectsMismatchedTiles) {
  const auto plan = plan_tiles(12, 8, 8, 4);
  const std::vector<Raster> one{Raster(8, 8, 1)};
  EXPECT_ANY_THROW(stitch(one, plan, Blend::average));
  const std::vector<Raster> wrong{Raster(8, 8, 1), Raster(7, 8, 1)};
  EXPECT_ANY_THROW(stitch(wrong, plan, Blend::average));
}

TEST(AssignmentMap, OwnersAreNearestCenters) {
  const auto plan = plan_tiles(50, 40, 16, 6);
  const auto map = assignment_map(plan);
  std::set<int> used;
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 50; ++x) {
      const int owner = map[static_cast<std::size_t>(y) * 50 + x];
      used.insert(owner);
      const auto [ox, oy] = plan.origins[static_cast<std::size_t>(owner)];
      // Pixel lies inside its owner, and no tile center is strictly closer
      // along either axis.
      EXPECT_GE(x, ox);
      EXPECT_LT(x, ox + 16);
      EXPECT_GE(y, oy);
      EXPECT_LT(y, oy + 16);
      for (int px : plan.xs) EXPECT_GE(std::abs(2 * px + 16 - (2 * x + 1)), std::abs(2 * ox + 16 - (2 * x + 1)));
      for (int py : plan.ys) EXPECT_GE(std::abs(2 * py + 16 - (2 * y + 1)), std::abs(2 * oy + 16 - (2 * y + 1)));
    }
  }
  EXPECT_EQ(used.size(), plan.size());
}

TEST(SeamIndex, SeamlessImagesScoreNearOne) {
  const auto plan = plan_tiles(256, 256, 64, 16);
  // Linear ramp: identical differences everywhere.
  Raster ramp(256, 256, 3);
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 256; ++x)
      for (int c = 0; c < 3; ++c) ramp.at(y, x, c) = static_cast<float>((x + 2 * y) / 800.0);
  EXPECT_NEAR(seam_index(ramp, plan), 1.0, 1e-4);
  for (unsigned seed : {1u, 2u, 3u}) {
    const double s = seam_index(textured_raster(256, 256, seed, 3), plan);
    EXPECT_GE(s, 0.8);
    EXPECT_LE(s, 1.25);
    const double n = seam_index(random_raster(256, 256, 3, seed), plan);
    EXPECT_GE(n, 0.8);
    EXPECT_LE(n, 1.25);
  }
}

TEST(SeamIndex, TileOffsetsRaiseTheIndex) {
  const auto plan = plan_tiles(128, 128, 64, 16);
  const Raster slide = textured_raster(128, 128, 4, 3);
  auto tiles = extract(slide, plan);
  for (std::size_t i = 0; i < tiles.size(); ++i)
    for (float& v : tiles[i].values()) v = std::clamp(v + 0.2f * static_cast<float>(i % 2), 0.0f, 1.0f);
  const double seamless = seam_index(slide, plan);
  const double offset = seam_index(stitch(tiles, plan, Blend::nearest_center), plan);
  EXPECT_GT(offset, 1.5);
  EXPECT_GT(offset, seamless + 0.5);
}

TEST(SeamIndex, PiecewiseConstantHitsCap) {
  // 2x2 tiles, each a different constant: all variation sits on boundaries.
  const auto plan = plan_tiles(64, 64, 32, 0);
  std::vector<Raster> tiles;
  for (int i = 0; i < 4; ++i) tiles.emplace_back(32, 32, 3, 0.2f * static_cast<float>(i));
  EXPECT_EQ(seam_index(stitch(tiles, plan, Blend::nearest_center), plan), kSeamIndexCap);
}

TEST(SeamIndex, InvariantToPositiveAffineIntensityMaps) {
  const auto plan = plan_tiles(96, 96, 32, 8);
  auto tiles = extract(textured_raster(96, 96, 5, 3), plan);
  for (std::size_t i = 0; i < tiles.size(); ++i)
    for (float& v : tiles[i].values()) v = v * (0.8f + 0.05f * static_cast<float>(i % 3));
  const Raster img = stitch(tiles, plan, Blend::nearest_center);
  Raster mapped = img;
  for (float& v : mapped.values()) v = 0.5f * v + 0.2f;
  EXPECT_NEAR(seam_index(mapped, plan), seam_index(img, plan), 1e-4 * seam_index(img, plan));
}

TEST(SeamIndex, SingleTileIsUndefined) {
  const auto plan = plan_tiles(32, 32, 32, 0);
  EXPECT_THROW(seam_index(random_raster(32, 32, 3, 1), plan), UndefinedIndex);
  // Mismatched raster.
  EXPECT_ANY_THROW(seam_index(random_raster(31, 32, 3, 1), plan_tiles(64, 64, 32, 0)));
}

TEST(WholeVsStitched, PointwiseOperatorsAreExact) {
  const Raster slide = textured_raster(96, 80, 6, 3);
  const auto plan = plan_tiles(80, 96, 32, 8);
  EXPECT_EQ(whole_vs_stitched_mse([](const Raster& r) { return r; }, slide, plan), 0.0);
  const ImageOperator gamma = [](const Raster& r) {
    Raster out = r;
    for (float& v : out.values()) v = std::pow(v, 0.7f);
    return out;
  };
  EXPECT_EQ(whole_vs_stitched_mse(gamma, slide, plan), 0.0);
}

TEST(WholeVsStitched, ImageStatisticsBreakTiling) {
  // Texture on a horizontal ramp, so tile means differ from the slide mean.
  Raster slide = textured_raster(96, 80, 7, 3);
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 80; ++x)
      for (int c = 0; c < 3; ++c) slide.at(y, x, c) = 0.5f * slide.at(y, x, c) + 0.5f * static_cast<float>(x) / 80.0f;
  const auto plan = plan_tiles(80, 96, 32, 8);
  const ImageOperator center = [](const Raster& r) {
    double mean = 0.0;
    for (float v : r.values()) mean += v;
    mean /= static_cast<double>(r.size());
    Raster out = r;
    for (float& v : out.values()) v = static_cast<float>(v - mean + 0.5);
    return out;
  };
  EXPECT_GT(whole_vs_stitched_mse(center, slide, plan), 1e-3);
}

}  // namespace
}  // namespace seamstain
