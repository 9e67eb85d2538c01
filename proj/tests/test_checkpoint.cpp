#include <fstream>

#include "seamstain/checkpoint.hpp"
#include "test_util.hpp"

namespace seamstain {
namespace {

using testing::random_tensor;
using testing::TempDir;

ModelBundle trained_bundle(std::uint64_t seed, int steps) {
  GeneratorConfig g;
  g.base_channels = 2;
  g.n_res_blocks = 1;
  g.split_index = 1;
  g.outer_kernel = 3;
  DiscriminatorConfig d;
  d.base_channels = 2;
  d.n_layers = 1;
  d.kernel = 2;
  ModelBundle b = make_bundle(g, d, seed, 3);
  TrainConfig cfg;
  cfg.pool_size = 3;
  for (int i = 0; i < steps; ++i) {
    train_step(b, random_tensor<float>(Shape{1, 3, 8, 8}, 100 + i), random_tensor<float>(Shape{1, 3, 8, 8}, 200 + i),
               cfg);
  }
  b.epoch = 2;
  return b;
}

void expect_same(const ModelBundle& a, const ModelBundle& b) {
  EXPECT_EQ(a.generator, b.generator);
  EXPECT_EQ(a.discriminator, b.discriminator);
  EXPECT_TRUE(std::ranges::equal(a.g1.network().params(), b.g1.network().params()));
  EXPECT_TRUE(std::ranges::equal(a.g2.network().params(), b.g2.network().params()));
  EXPECT_TRUE(std::ranges::equal(a.d1.network().params(), b.d1.network().params()));
  EXPECT_TRUE(std::ranges::equal(a.d2.network().params(), b.d2.network().params()));
  for (auto [p, q] : {std::pair{&a.opt_g1, &b.opt_g1}, {&a.opt_g2, &b.opt_g2}, {&a.opt_d1, &b.opt_d1},
                      {&a.opt_d2, &b.opt_d2}}) {
    EXPECT_EQ(p->m, q->m);
    EXPECT_EQ(p->v, q->v);
    EXPECT_EQ(p->t, q->t);
  }
  EXPECT_EQ(a.pool_x.capacity(), b.pool_x.capacity());
  EXPECT_EQ(a.pool_x.images(), b.pool_x.images());
  EXPECT_EQ(a.pool_y.images(), b.pool_y.images());
  EXPECT_EQ(a.rng, b.rng);
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.epoch, b.epoch);
  EXPECT_EQ(a.step, b.step);
}

TEST(Checkpoint, RoundTripIsExact) {
  TempDir dir("ckpt");
  const ModelBundle b = trained_bundle(7, 5);
  save_checkpoint(dir.path() / "a.ckpt", b);
  expect_same(b, load_checkpoint(dir.path() / "a.ckpt"));
}

TEST(Checkpoint, ContinuedTrainingMatchesUninterrupted) {
  TempDir dir("ckpt");
  ModelBundle a = trained_bundle(8, 4);
  save_checkpoint(dir.path() / "mid.ckpt", a);
  ModelBundle b = load_checkpoint(dir.path() / "mid.ckpt");
  TrainConfig cfg;
  cfg.pool_size = 3;
  for (int i = 0; i < 6; ++i) {
    const auto x = random_tensor<float>(Shape{1, 3, 8, 8}, 300 + i);
    const auto y = random_tensor<float>(Shape{1, 3, 8, 8}, 400 + i);
    EXPECT_EQ(train_step(a, x, y, cfg), train_step(b, x, y, cfg));
  }
  expect_same(a, b);
}

TEST(Checkpoint, StartsWithMagic) {
  TempDir dir("ckpt");
  save_checkpoint(dir.path() / "m.ckpt", trained_bundle(9, 1));
  std::ifstream in(dir.path() / "m.ckpt", std::ios::binary);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCheckpointMagic);
}

TEST(Checkpoint, MissingFileIsIoError) {
  TempDir dir("ckpt");
  EXPECT_THROW(load_checkpoint(dir.path() / "absent.ckpt"), IoError);
}

TEST(Checkpoint, TruncatedFileIsIoError) {
  TempDir dir("ckpt");
  const auto path = dir.path() / "t.ckpt";
  save_checkpoint(path, trained_bundle(10, 1));
  const auto full = std::filesystem::file_size(path);
  for (auto keep : {std::uintmax_t{5}, std::uintmax_t{30}, full / 2, full - 1}) {
    std::filesystem::resize_file(path, keep);
    EXPECT_THROW(load_checkpoint(path), IoError) << "kept " << keep << " bytes";
    save_checkpoint(path, trained_bundle(10, 1));
  }
}

TEST(Checkpoint, ForeignFileIsIoError) {
  TempDir dir("ckpt");
  std::ofstream(dir.path() / "f.ckpt") << "PNG and friends\n0123456789abcdef";
  EXPECT_THROW(load_checkpoint(dir.path() / "f.ckpt"), IoError);
  // Valid header followed by garbage metadata.
  std::ofstream out(dir.path() / "g.ckpt", std::ios::binary);
  out << kCheckpointMagic << '\n';
  const std::uint64_t len = 4;
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out << "{{{{";
  out.close();
  EXPECT_THROW(load_checkpoint(dir.path() / "g.ckpt"), IoError);
}

TEST(Checkpoint, TrailingBytesAreRejected) {
  TempDir dir("ckpt");
  const auto path = dir.path() / "x.ckpt";
  save_checkpoint(path, trained_bundle(11, 1));
  std::ofstream(path, std::ios::binary | std::ios::app) << "extra";
  EXPECT_THROW(load_checkpoint(path), IoError);
}

TEST(Checkpoint, SaveReplacesExistingFile) {
  TempDir dir("ckpt");
  const auto path = dir.path() / "r.ckpt";
  save_checkpoint(path, trained_bundle(12, 1));
  const ModelBundle b = trained_bundle(13, 2);
  save_checkpoint(path, b);
  expect_same(b, load_checkpoint(path));
  EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir.path()), {}), 1);
}

}  // namespace
}  // namespace seamstain
