#pragma once

#include <cstdint>
#include <string>

#include "seamstain/tensor.hpp"

namespace seamstain {

struct LossWeights {
  double cyc = 10.0;
  double embd = 10.0;

  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

// One row of the training log. total_G = adv_G1 + adv_G2 + w_cyc*cyc + w_embd*embd;
// the discriminator terms are optimized separately and only reported here.
struct LossBreakdown {
  double adv_G1 = 0.0;
  double adv_G2 = 0.0;
  double adv_D1 = 0.0;
  double adv_D2 = 0.0;
  double cyc = 0.0;
  double embd = 0.0;
  double total_G = 0.0;

  bool operator==(const LossBreakdown&) const = default;
};

enum class AdversarialForm { least_squares, cross_entropy };
enum class EmbeddingReduction { euclidean, mean_square };

std::string to_string(AdversarialForm f);
std::string to_string(EmbeddingReduction r);
AdversarialForm parse_adversarial_form(const std::string& s);
EmbeddingReduction parse_embedding_reduction(const std::string& s);

struct AdversarialTerms {
  double d_loss = 0.0;
  double g_loss = 0.0;
};

// Least squares: d = 1/2 mean((D_real-1)^2) + 1/2 mean(D_fake^2),
//                g = mean((D_fake-1)^2).
// Cross entropy on logits: d = 1/2 [BCE(real,1) + BCE(fake,0)], g = BCE(fake,1).
template <typename T>
AdversarialTerms adversarial_terms(const Tensor<T>& d_real, const Tensor<T>& d_fake,
                                   AdversarialForm form = AdversarialForm::least_squares);

// Generator side of the adversarial loss; writes dL/d(logits) when grad != nullptr.
template <typename T>
double generator_adversarial(const Tensor<T>& d_fake, AdversarialForm form, Tensor<T>* grad);

// Discriminator side; gradients w.r.t. both logit maps.
template <typename T>
double discriminator_adversarial(const Tensor<T>& d_real, const Tensor<T>& d_fake, AdversarialForm form,
                                 Tensor<T>* grad_real, Tensor<T>* grad_fake);

// mean |reconstruction - original|; gradient w.r.t. the reconstruction.
template <typename T>
double l1_mean(const Tensor<T>& reconstruction, const Tensor<T>& original, Tensor<T>* grad);

// L1 cycle loss summed over the two directions.
template <typename T>
double cycle_loss(const Tensor<T>& x, const Tensor<T>& x_cycled, const Tensor<T>& y,
                  const Tensor<T>& y_cycled);

// One direction of the embedding consistency term, averaged over the batch.
// euclidean:   || flat(a_n - b_n) ||_2
// mean_square: mean over elements of (a_n - b_n)^2
// At a == b the euclidean gradient is taken to be zero.
template <typename T>
double embedding_distance(const Tensor<T>& a, const Tensor<T>& b, EmbeddingReduction reduction,
                          Tensor<T>* grad_a, Tensor<T>* grad_b);

// || e1(x) - e2(G1(x)) || + || e2(y) - e1(G2(y)) ||
template <typename T>
double embedding_consistency_loss(const Tensor<T>& e1x, const Tensor<T>& e2_g1x, const Tensor<T>& e2y,
                                  const Tensor<T>& e1_g2y,
                                  EmbeddingReduction reduction = EmbeddingReduction::euclidean);

// Fills total_G from the parts. Throws DivergenceError (with `step`) when
// any part is NaN or infinite.
LossBreakdown total_objective(const LossBreakdown& parts, const LossWeights& w, std::int64_t step = -1);

}  // namespace seamstain
