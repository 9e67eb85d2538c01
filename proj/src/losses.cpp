#include "seamstain/losses.hpp"

#include <cmath>

namespace seamstain {

void LossWeights::validate() const {
  if (!std::isfinite(cyc) || !std::isfinite(embd) || cyc < 0.0 || embd < 0.0) {
    throw InvalidArgument("loss weights must be finite and non-negative");
  }
}

std::string to_string(AdversarialForm f) {
  return f == AdversarialForm::least_squares ? "least_squares" : "cross_entropy";
}

std::string to_string(EmbeddingReduction r) {
  return r == EmbeddingReduction::euclidean ? "euclidean" : "mean_square";
}

AdversarialForm parse_adversarial_form(const std::string& s) {
  if (s == "least_squares" || s == "lsgan") return AdversarialForm::least_squares;
  if (s == "cross_entropy" || s == "vanilla") return AdversarialForm::cross_entropy;
  throw InvalidArgument("unknown adversarial form '" + s + "'");
}

EmbeddingReduction parse_embedding_reduction(const std::string& s) {
  if (s == "euclidean") return EmbeddingReduction::euclidean;
  if (s == "mean_square") return EmbeddingReduction::mean_square;
  throw InvalidArgument("unknown embedding reduction '" + s + "'");
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// mean over logits of the loss against `target`, gradient scaled by `scale`.
template <typename T>
double single_side(const Tensor<T>& logits, double target, AdversarialForm form, double scale, Tensor<T>* grad) {
  const auto v = logits.values();
  const double inv = 1.0 / static_cast<double>(v.size());
  if (grad) *grad = Tensor<T>(logits.shape());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double z = v[i];
    double loss;
    double d;
    if (form == AdversarialForm::least_squares) {
      loss = (z - target) * (z - target);
      d = 2.0 * (z - target);
    } else {
      // BCE with logits: target 1 -> softplus(-z), target 0 -> softplus(z).
      loss = target > 0.5 ? softplus(-z) : softplus(z);
      d = sigmoid(z) - target;
    }
    acc += loss;
    if (grad) grad->values()[i] = static_cast<T>(scale * d * inv);
  }
  return scale * acc * inv;
}

}  // namespace

template <typename T>
AdversarialTerms adversarial_terms(const Tensor<T>& d_real, const Tensor<T>& d_fake, AdversarialForm form) {
  AdversarialTerms t;
  t.d_loss = discriminator_adversarial<T>(d_real, d_fake, form, nullptr, nullptr);
  t.g_loss = generator_adversarial<T>(d_fake, form, nullptr);
  return t;
}

template <typename T>
double generator_adversarial(const Tensor<T>& d_fake, AdversarialForm form, Tensor<T>* grad) {
  return single_side(d_fake, 1.0, form, 1.0, grad);
}

template <typename T>
double discriminator_adversarial(const Tensor<T>& d_real, const Tensor<T>& d_fake, AdversarialForm form,
                                 Tensor<T>* grad_real, Tensor<T>* grad_fake) {
  return single_side(d_real, 1.0, form, 0.5, grad_real) + single_side(d_fake, 0.0, form, 0.5, grad_fake);
}

template <typename T>
double l1_mean(const Tensor<T>& reconstruction, const Tensor<T>& original, Tensor<T>* grad) {
  require_same_shape(reconstruction.shape(), original.shape(), "cycle loss");
  const auto r = reconstruction.values();
  const auto o = original.values();
  const double inv = 1.0 / static_cast<double>(r.size());
  if (grad) *grad = Tensor<T>(reconstruction.shape());
  double acc = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = static_cast<double>(r[i]) - o[i];
    acc += std::fabs(d);
    if (grad) grad->values()[i] = static_cast<T>(d > 0 ? inv : (d < 0 ? -inv : 0.0));
  }
  return acc * inv;
}

template <typename T>
double cycle_loss(const Tensor<T>& x, const Tensor<T>& x_cycled, const Tensor<T>& y, const Tensor<T>& y_cycled) {
  return l1_mean<T>(x_cycled, x, nullptr) + l1_mean<T>(y_cycled, y, nullptr);
}

template <typename T>
double embedding_distance(const Tensor<T>& a, const Tensor<T>& b, EmbeddingReduction reduction,
                          Tensor<T>* grad_a, Tensor<T>* grad_b) {
  require_same_shape(a.shape(), b.shape(), "embedding consistency");
  const int batch = a.n();
  const std::size_t per = a.size() / static_cast<std::size_t>(batch);
  if (grad_a) *grad_a = Tensor<T>(a.shape());
  if (grad_b) *grad_b = Tensor<T>(b.shape());
  double total = 0.0;
  for (int n = 0; n < batch; ++n) {
    const T* pa = a.item(n);
    const T* pb = b.item(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < per; ++i) {
      const double d = static_cast<double>(pa[i]) - pb[i];
      sq += d * d;
    }
    double value;
    double scale;  // dL/d(a_i - b_i) = scale * (a_i - b_i)
    if (reduction == EmbeddingReduction::euclidean) {
      value = std::sqrt(sq);
      scale = value > 0.0 ? 1.0 / (value * batch) : 0.0;
    } else {
      value = sq / static_cast<double>(per);
      scale = 2.0 / (static_cast<double>(per) * batch);
    }
    total += value;
    if (grad_a || grad_b) {
      for (std::size_t i = 0; i < per; ++i) {
        const double g = scale * (static_cast<double>(pa[i]) - pb[i]);
        if (grad_a) grad_a->item(n)[i] = static_cast<T>(g);
        if (grad_b) grad_b->item(n)[i] = static_cast<T>(-g);
      }
    }
  }
  return total / batch;
}

template <typename T>
double embedding_consistency_loss(const Tensor<T>& e1x, const Tensor<T>& e2_g1x, const Tensor<T>& e2y,
                                  const Tensor<T>& e1_g2y, EmbeddingReduction reduction) {
  return embedding_distance<T>(e1x, e2_g1x, reduction, nullptr, nullptr) +
         embedding_distance<T>(e2y, e1_g2y, reduction, nullptr, nullptr);
}

LossBreakdown total_objective(const LossBreakdown& parts, const LossWeights& w, std::int64_t step) {
  const double values[] = {parts.adv_G1, parts.adv_G2, parts.adv_D1, parts.adv_D2, parts.cyc, parts.embd};
  for (double v : values) {
    if (!std::isfinite(v)) throw DivergenceError("non-finite loss term", step);
  }
  LossBreakdown out = parts;
  out.total_G = parts.adv_G1 + parts.adv_G2 + w.cyc * parts.cyc + w.embd * parts.embd;
  if (!std::isfinite(out.total_G)) throw DivergenceError("non-finite total objective", step);
  return out;
}

#define SEAMSTAIN_INSTANTIATE(T)                                                                          \
  template AdversarialTerms adversarial_terms<T>(const Tensor<T>&, const Tensor<T>&, AdversarialForm);     \
  template double generator_adversarial<T>(const Tensor<T>&, AdversarialForm, Tensor<T>*);                 \
  template double discriminator_adversarial<T>(const Tensor<T>&, const Tensor<T>&, AdversarialForm,        \
                                               Tensor<T>*, Tensor<T>*);                                   \
  template double l1_mean<T>(const Tensor<T>&, const Tensor<T>&, Tensor<T>*);                              \
  template double cycle_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);   \
  template double embedding_distance<T>(const Tensor<T>&, const Tensor<T>&, EmbeddingReduction,            \
                                        Tensor<T>*, Tensor<T>*);                                          \
  template double embedding_consistency_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                                const Tensor<T>&, EmbeddingReduction);

SEAMSTAIN_INSTANTIATE(float)
SEAMSTAIN_INSTANTIATE(double)
#undef SEAMSTAIN_INSTANTIATE

}  // namespace seamstain
