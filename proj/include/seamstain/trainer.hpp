#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seamstain/losses.hpp"
#include "seamstain/netarch.hpp"
#include "seamstain/seeding.hpp"

namespace seamstain {

struct Manifest;

struct TrainConfig {
  int epochs = 20;
  int batch = 1;
  double lr = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  LossWeights weights;
  int pool_size = 50;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // epochs; 0 = final checkpoint only
  AdversarialForm adversarial = AdversarialForm::least_squares;
  EmbeddingReduction reduction = EmbeddingReduction::euclidean;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  int log_every = 100;  // progress line cadence on stdout, 0 = silent

  void validate() const;
};

// History of generated images shown to the discriminators.
class ImagePool {
 public:
  explicit ImagePool(int capacity = 0) : capacity_(capacity) {}

  // Single image (N == 1). Fill phase stores and returns the input; once
  // full, returns the input with probability 1/2, otherwise swaps it with a
  // uniformly chosen stored image and returns that one.
  Tensor<float> query(const Tensor<float>& image, std::mt19937_64& rng);
  // Applies query() to each batch item.
  Tensor<float> query_batch(const Tensor<float>& images, std::mt19937_64& rng);

  int capacity() const noexcept { return capacity_; }
  const std::vector<Tensor<float>>& images() const noexcept { return images_; }
  std::vector<Tensor<float>>& images() noexcept { return images_; }

 private:
  int capacity_ = 0;
  std::vector<Tensor<float>> images_;
};

struct AdamState {
  std::vector<float> m;
  std::vector<float> v;
  std::int64_t t = 0;
};

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state, const AdamConfig& cfg);

// Everything a run needs to continue bit-for-bit: the four networks
// (G1: X->Y, G2: Y->X, D1 judges X, D2 judges Y), optimizer moments, fake
// pools, the RNG driving the pools, and the epoch/step counters.
struct ModelBundle {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  Generator<float> g1, g2;
  Discriminator<float> d1, d2;
  AdamState opt_g1, opt_g2, opt_d1, opt_d2;
  ImagePool pool_x;  // fakes in domain X, shown to D1
  ImagePool pool_y;  // fakes in domain Y, shown to D2
  std::mt19937_64 rng;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::int64_t step = 0;
};

ModelBundle make_bundle(const GeneratorConfig& gen, const DiscriminatorConfig& disc, std::uint64_t seed,
                        int pool_size);

// One optimization step: generators on total_G, then D1 and D2 on pooled
// fakes. Throws DivergenceError on a non-finite loss or gradient (no
// parameters are touched in that case).
LossBreakdown train_step(ModelBundle& bundle, const Tensor<float>& x, const Tensor<float>& y,
                         const TrainConfig& cfg);

// Index pairs (x_index, y_index) for one epoch: independent seeded shuffles
// of both sets, length max(nx, ny), the shorter set cycled.
std::vector<std::pair<int, int>> epoch_schedule(int nx, int ny, std::uint64_t seed, int epoch);

extern const char* const kLossLogHeader;
std::string loss_log_row(std::int64_t step, const LossBreakdown& l);

struct TrainResult {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  std::int64_t steps = 0;
};

// Full training run over the manifest's unpaired training tiles. Writes
// <out>/train_log.csv, <out>/epoch_<k>.ckpt every checkpoint_every epochs
// and <out>/final.ckpt. With resume_from, continues that checkpoint's run.
TrainResult train(const Manifest& manifest, const TrainConfig& cfg, const std::filesystem::path& out_dir,
                  const std::filesystem::path& resume_from = {});

}  // namespace seamstain
