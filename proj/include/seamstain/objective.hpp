#pragma once

// Forward + backward of the combined cycle objective for one batch. Shared by
// the trainer (float) and the finite-difference checks (double).

#include "seamstain/losses.hpp"
#include "seamstain/netarch.hpp"

namespace seamstain {

struct ObjectiveConfig {
  // Gradient weights. w_adv only exists so individual terms can be isolated
  // by the gradient checks; training always uses 1.
  double w_adv = 1.0;
  LossWeights weights;
  AdversarialForm adversarial = AdversarialForm::least_squares;
  EmbeddingReduction reduction = EmbeddingReduction::euclidean;
};

template <typename T>
struct GeneratorPass {
  Tensor<T> fake_y;    // G1(x)
  Tensor<T> fake_x;    // G2(y)
  Tensor<T> cycled_x;  // G2(G1(x))
  Tensor<T> cycled_y;  // G1(G2(y))
  LossBreakdown losses;  // adv_G1, adv_G2, cyc, embd, total_G filled
};

// Runs G1 and G2 over both domains, scores the fakes with D2 and D1, and
// evaluates every generator term. The embedding term is skipped (and
// reported as 0) when weights.embd == 0. With `backprop`, parameter
// gradients of total = w_adv*(adv_G1 + adv_G2) + w_cyc*cyc + w_embd*embd
// are accumulated into g1 and g2. Discriminator gradients produced on the
// way are discarded.
template <typename T>
GeneratorPass<T> generator_objective(Generator<T>& g1, Generator<T>& g2, Discriminator<T>& d1,
                                     Discriminator<T>& d2, const Tensor<T>& x, const Tensor<T>& y,
                                     const ObjectiveConfig& cfg, bool backprop);

// Discriminator loss on a real/fake pair; with `backprop`, accumulates its
// parameter gradients into d.
template <typename T>
double discriminator_objective(Discriminator<T>& d, const Tensor<T>& real, const Tensor<T>& fake,
                               AdversarialForm form, bool backprop);

}  // namespace seamstain
