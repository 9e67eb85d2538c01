#pragma once

// Small datasets and models that train in well under a second per epoch.

#include "seamstain/synthdata.hpp"
#include "seamstain/trainer.hpp"

namespace seamstain::testing {

// 2 + 2 training slides of 48x48 cut into 16x16 tiles with overlap 8
// (25 tiles per slide), and one 48x48 evaluation pair.
inline DatasetConfig tiny_dataset(std::uint64_t seed = 3) {
  DatasetConfig c;
  c.n_train_slides = 4;
  c.n_eval_slides = 1;
  c.tile = 16;
  c.overlap = 8;
  c.seed = seed;
  c.slide.width = 48;
  c.slide.height = 48;
  c.slide.nucleus_density = 40;
  c.slide.nucleus_radius_min = 2;
  c.slide.nucleus_radius_max = 3;
  c.slide.stroma_scale = 12;
  c.slide.region_count = 2;
  return c;
}

// Smallest configuration the user-facing validation accepts, with a
// two-layer discriminator (16x16 receptive field) so 16x16 tiles work.
inline TrainConfig tiny_train(std::uint64_t seed = 5, int epochs = 2) {
  TrainConfig t;
  t.epochs = epochs;
  t.seed = seed;
  t.generator.base_channels = 8;
  t.generator.n_res_blocks = 2;
  t.generator.split_index = 1;
  t.discriminator.base_channels = 8;
  t.discriminator.n_layers = 2;
  t.pool_size = 4;
  t.log_every = 0;
  return t;
}

}  // namespace seamstain::testing
