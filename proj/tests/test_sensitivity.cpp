#include <algorithm>
#include <sstream>

#include "fixtures.hpp"
#include "seamstain/sensitivity.hpp"
#include "test_util.hpp"

namespace seamstain {
namespace {

using testing::random_raster;
using testing::TempDir;
using testing::textured_raster;

const PerturbationKind kKinds[] = {PerturbationKind::contrast, PerturbationKind::brightness, PerturbationKind::color};

TEST(Perturb, IdentityMagnitudesLeaveImageUnchanged) {
  const Raster x = random_raster(16, 16, 3, 1);
  for (PerturbationKind k : kKinds) {
    const Raster p = perturb(x, k, identity_magnitude(k));
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(p.values()[i], x.values()[i], 1e-6) << to_string(k);
  }
}

TEST(Perturb, ZeroContrastGivesChannelMeans) {
  const Raster x = random_raster(8, 12, 3, 2);
  const Raster p = perturb(x, PerturbationKind::contrast, 0.0);
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (int y = 0; y < 8; ++y)
      for (int xx = 0; xx < 12; ++xx) mean += x.at(y, xx, c);
    mean /= 96.0;
    for (int y = 0; y < 8; ++y)
      for (int xx = 0; xx < 12; ++xx) EXPECT_NEAR(p.at(y, xx, c), mean, 1e-6);
  }
}

TEST(Perturb, HandValues) {
  Raster x(1, 1, 3);
  x.at(0, 0, 0) = 0.9f;
  x.at(0, 0, 1) = 0.5f;
  x.at(0, 0, 2) = 0.2f;
  const Raster b = perturb(x, PerturbationKind::brightness, 0.3);
  EXPECT_FLOAT_EQ(b.at(0, 0, 0), 1.0f);
  EXPECT_FLOAT_EQ(b.at(0, 0, 1), 0.8f);
  EXPECT_FLOAT_EQ(b.at(0, 0, 2), 0.5f);
  const Raster d = perturb(x, PerturbationKind::brightness, -0.3);
  EXPECT_FLOAT_EQ(d.at(0, 0, 2), 0.0f);
  const Raster c = perturb(x, PerturbationKind::color, 1.2);
  EXPECT_FLOAT_EQ(c.at(0, 0, 0), 1.0f);  // 1.08 clipped
  EXPECT_FLOAT_EQ(c.at(0, 0, 1), 0.5f);
  EXPECT_FLOAT_EQ(c.at(0, 0, 2), 0.16f);
}

TEST(Perturb, ContrastStretchAroundMean) {
  Raster x(1, 2, 1);
  x.at(0, 0, 0) = 0.4f;
  x.at(0, 1, 0) = 0.6f;
  const Raster p = perturb(x, PerturbationKind::contrast, 1.5);
  EXPECT_FLOAT_EQ(p.at(0, 0, 0), 0.35f);
  EXPECT_FLOAT_EQ(p.at(0, 1, 0), 0.65f);
}

TEST(Perturb, DeterministicAndRangePreserving) {
  const Raster x = random_raster(16, 16, 3, 3);
  for (PerturbationKind k : kKinds) {
    const auto r = magnitude_range(k);
    for (double m : {r.lo, 0.5 * (r.lo + r.hi), r.hi}) {
      const Raster p = perturb(x, k, m);
      EXPECT_EQ(p, perturb(x, k, m));
      for (float v : p.values()) {
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
      }
    }
  }
}

TEST(Perturb, RejectsOutOfRangeMagnitudes) {
  const Raster x = random_raster(4, 4, 3, 4);
  EXPECT_THROW(perturb(x, PerturbationKind::contrast, 1.6), InvalidArgument);
  EXPECT_THROW(perturb(x, PerturbationKind::contrast, -0.1), InvalidArgument);
  EXPECT_THROW(perturb(x, PerturbationKind::brightness, 0.31), InvalidArgument);
  EXPECT_THROW(perturb(x, PerturbationKind::color, 0.69), InvalidArgument);
  EXPECT_THROW(perturb(random_raster(4, 4, 1, 4), PerturbationKind::color, 1.2), InvalidArgument);
  EXPECT_THROW(parse_perturbation_kind("hue"), InvalidArgument);
  for (PerturbationKind k : kKinds) EXPECT_EQ(parse_perturbation_kind(to_string(k)), k);
}

TEST(PerturbationSpec, DefaultsAreFivePointGridsAroundIdentity) {
  const auto specs = default_perturbations();
  ASSERT_EQ(specs.size(), 3u);
  for (const auto& s : specs) {
    EXPECT_NO_THROW(s.validate());
    ASSERT_EQ(s.grid.size(), 5u);
    EXPECT_DOUBLE_EQ(s.grid[2], identity_magnitude(s.kind));
  }
  PerturbationSpec bad{PerturbationKind::brightness, {0.1, 0.2}};
  EXPECT_THROW(bad.validate(), InvalidArgument);  // no identity
  bad.grid = {0.1, 0.0};
  EXPECT_THROW(bad.validate(), InvalidArgument);  // unsorted
  bad.grid = {};
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad.grid = {0.0, 0.5};
  EXPECT_THROW(bad.validate(), InvalidArgument);  // out of range
}

ModelBundle small_bundle(std::uint64_t seed) {
  GeneratorConfig g;
  g.base_channels = 8;
  g.n_res_blocks = 2;
  g.split_index = 1;
  DiscriminatorConfig d;
  d.base_channels = 8;
  return make_bundle(g, d, seed, 0);
}

TEST(EmbeddingMse, ZeroOnIdenticalInputsAndSymmetric) {
  const ModelBundle b = small_bundle(5);
  const Raster x = textured_raster(32, 32, 6, 3);
  const Raster p = perturb(x, PerturbationKind::brightness, 0.2);
  EXPECT_EQ(embedding_mse(b, Direction::x_to_y, x, x), 0.0);
  EXPECT_GT(embedding_mse(b, Direction::x_to_y, x, p), 0.0);
  EXPECT_EQ(embedding_mse(b, Direction::x_to_y, x, p), embedding_mse(b, Direction::x_to_y, p, x));
  EXPECT_THROW(embedding_mse(b, Direction::x_to_y, x, textured_raster(32, 36, 6, 3)), ShapeMismatch);
}

TEST(EmbeddingMse, MatchesEncoderDifference) {
  const ModelBundle b = small_bundle(7);
  const Raster x = textured_raster(32, 32, 8, 3);
  const Raster p = perturb(x, PerturbationKind::contrast, 0.5);
  const auto ex = b.g2.encode(to_model_input<float>(x));
  const auto ep = b.g2.encode(to_model_input<float>(p));
  double s = 0.0;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const double d = static_cast<double>(ex.values()[i]) - ep.values()[i];
    s += d * d;
  }
  EXPECT_NEAR(embedding_mse(b, Direction::y_to_x, x, p), s / ex.size(), 1e-9);
}

TEST(Sweep, RowsIdentityZerosAndOrderInvariance) {
  const ModelBundle ours = small_bundle(9), base = small_bundle(10);
  std::vector<Raster> tiles;
  for (unsigned i = 0; i < 4; ++i) tiles.push_back(textured_raster(32, 32, 20 + i, 3));
  const auto specs = default_perturbations();
  const auto pts = sweep(ours, base, tiles, specs);
  ASSERT_EQ(pts.size(), 2u * 15u);
  for (const auto& p : pts) {
    EXPECT_TRUE(p.model == "ours" || p.model == "baseline");
    if (p.magnitude == identity_magnitude(p.kind)) {
      EXPECT_EQ(p.mean_mse, 0.0);
    } else {
      EXPECT_GT(p.mean_mse, 0.0);
    }
  }
  std::vector<Raster> reversed(tiles.rbegin(), tiles.rend());
  const auto rpts = sweep(ours, base, reversed, specs);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(rpts[i].model, pts[i].model);
    EXPECT_NEAR(rpts[i].mean_mse, pts[i].mean_mse, 1e-12 * std::max(1.0, pts[i].mean_mse));
  }
  EXPECT_THROW(sweep(ours, base, {}, specs), InvalidArgument);
}

TEST(Sweep, CsvHasHeaderAndOneLinePerPoint) {
  const std::vector<CurvePoint> pts{{"ours", PerturbationKind::contrast, 0.5, 0.25},
                                    {"baseline", PerturbationKind::color, 1.3, 1e-3}};
  std::istringstream in(sensitivity_csv(pts));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "model,kind,magnitude,mean_mse");
  std::getline(in, line);
  EXPECT_EQ(line, "ours,contrast,0.5,0.25");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 19), "baseline,color,1.3,");
  EXPECT_FALSE(std::getline(in, line));
}

TEST(SampleEvalTiles, SeededDistinctAndFromEvalSlides) {
  TempDir dir("sens");
  const Manifest m = build_dataset(testing::tiny_dataset(), dir.path());
  const auto a = sample_eval_tiles(m, Direction::x_to_y, 10, 16, 8, 3);
  EXPECT_EQ(a.size(), 10u);
  EXPECT_EQ(a, sample_eval_tiles(m, Direction::x_to_y, 10, 16, 8, 3));
  EXPECT_NE(a, sample_eval_tiles(m, Direction::x_to_y, 10, 16, 8, 4));
  // One 48x48 eval slide at 16/8 has 25 tiles; all of them are distinct.
  const auto all = sample_eval_tiles(m, Direction::x_to_y, 25, 16, 8, 3);
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) EXPECT_NE(all[i], all[j]);
  // Asking for more than the grid holds returns the whole grid.
  EXPECT_EQ(sample_eval_tiles(m, Direction::x_to_y, 40, 16, 8, 3).size(), 25u);
  EXPECT_THROW(sample_eval_tiles(m, Direction::x_to_y, 0, 16, 8, 3), InvalidArgument);
}

}  // namespace
}  // namespace seamstain
