#include "seamstain/objective.hpp"

namespace seamstain {
namespace {

template <typename T>
void scale(Tensor<T>& t, double s) {
  const T f = static_cast<T>(s);
  for (T& v : t.values()) v *= f;
}

// a += s * b
template <typename T>
void add_scaled(Tensor<T>& a, const Tensor<T>& b, double s) {
  auto av = a.values();
  auto bv = b.values();
  const T f = static_cast<T>(s);
  for (std::size_t i = 0; i < av.size(); ++i) av[i] += f * bv[i];
}

}  // namespace

template <typename T>
GeneratorPass<T> generator_objective(Generator<T>& g1, Generator<T>& g2, Discriminator<T>& d1,
                                     Discriminator<T>& d2, const Tensor<T>& x, const Tensor<T>& y,
                                     const ObjectiveConfig& cfg, bool backprop) {
  const bool use_embd = cfg.weights.embd != 0.0;
  Tape<T> enc_g1x, dec_g1x, enc_g2fy, dec_g2fy;
  Tape<T> enc_g2y, dec_g2y, enc_g1fx, dec_g1fx;
  Tape<T> d2_tape, d1_tape;
  Tape<T>* no_tape = nullptr;
  auto tape = [&](Tape<T>& t) { return backprop ? &t : no_tape; };

  GeneratorPass<T> pass;
  // X -> Y -> X, capturing e1(x) and e2(G1(x)).
  const Tensor<T> e1x = g1.encode(x, tape(enc_g1x));
  pass.fake_y = g1.decode(e1x, tape(dec_g1x));
  const Tensor<T> e2_fake_y = g2.encode(pass.fake_y, tape(enc_g2fy));
  pass.cycled_x = g2.decode(e2_fake_y, tape(dec_g2fy));
  // Y -> X -> Y, capturing e2(y) and e1(G2(y)).
  const Tensor<T> e2y = g2.encode(y, tape(enc_g2y));
  pass.fake_x = g2.decode(e2y, tape(dec_g2y));
  const Tensor<T> e1_fake_x = g1.encode(pass.fake_x, tape(enc_g1fx));
  pass.cycled_y = g1.decode(e1_fake_x, tape(dec_g1fx));

  const Tensor<T> d2_fake = d2.forward(pass.fake_y, tape(d2_tape));
  const Tensor<T> d1_fake = d1.forward(pass.fake_x, tape(d1_tape));

  Tensor<T> g_adv1, g_adv2, g_cyc_x, g_cyc_y;
  Tensor<T> g_e1x, g_e2fy, g_e2y, g_e1fx;
  Tensor<T>* none = nullptr;
  auto grad = [&](Tensor<T>& t) { return backprop ? &t : none; };

  LossBreakdown& l = pass.losses;
  l.adv_G1 = generator_adversarial(d2_fake, cfg.adversarial, grad(g_adv1));
  l.adv_G2 = generator_adversarial(d1_fake, cfg.adversarial, grad(g_adv2));
  l.cyc = l1_mean(pass.cycled_x, x, grad(g_cyc_x)) + l1_mean(pass.cycled_y, y, grad(g_cyc_y));
  if (use_embd) {
    l.embd = embedding_distance(e1x, e2_fake_y, cfg.reduction, grad(g_e1x), grad(g_e2fy)) +
             embedding_distance(e2y, e1_fake_x, cfg.reduction, grad(g_e2y), grad(g_e1fx));
  }
  l.total_G = l.adv_G1 + l.adv_G2 + cfg.weights.cyc * l.cyc + cfg.weights.embd * l.embd;
  if (!backprop) return pass;

  const double w_cyc = cfg.weights.cyc;
  const double w_embd = cfg.weights.embd;

  // Second half of each cycle: G2 on G1(x), G1 on G2(y).
  scale(g_cyc_x, w_cyc);
  Tensor<T> d_e2fy = g2.backward_decode(g_cyc_x, dec_g2fy);
  if (use_embd) add_scaled(d_e2fy, g_e2fy, w_embd);
  Tensor<T> d_fake_y = g2.backward_encode(d_e2fy, enc_g2fy, true);

  scale(g_cyc_y, w_cyc);
  Tensor<T> d_e1fx = g1.backward_decode(g_cyc_y, dec_g1fx);
  if (use_embd) add_scaled(d_e1fx, g_e1fx, w_embd);
  Tensor<T> d_fake_x = g1.backward_encode(d_e1fx, enc_g1fx, true);

  // Adversarial paths through the (frozen) discriminators.
  scale(g_adv1, cfg.w_adv);
  scale(g_adv2, cfg.w_adv);
  add_scaled(d_fake_y, d2.backward(g_adv1, d2_tape, true), 1.0);
  add_scaled(d_fake_x, d1.backward(g_adv2, d1_tape, true), 1.0);
  d1.network().zero_grad();
  d2.network().zero_grad();

  // First half of each cycle.
  Tensor<T> d_e1x = g1.backward_decode(d_fake_y, dec_g1x);
  if (use_embd) add_scaled(d_e1x, g_e1x, w_embd);
  g1.backward_encode(d_e1x, enc_g1x, false);

  Tensor<T> d_e2y = g2.backward_decode(d_fake_x, dec_g2y);
  if (use_embd) add_scaled(d_e2y, g_e2y, w_embd);
  g2.backward_encode(d_e2y, enc_g2y, false);
  return pass;
}

template <typename T>
double discriminator_objective(Discriminator<T>& d, const Tensor<T>& real, const Tensor<T>& fake,
                               AdversarialForm form, bool backprop) {
  Tape<T> real_tape, fake_tape;
  const Tensor<T> d_real = d.forward(real, backprop ? &real_tape : nullptr);
  const Tensor<T> d_fake = d.forward(fake, backprop ? &fake_tape : nullptr);
  Tensor<T> g_real, g_fake;
  const double loss = discriminator_adversarial(d_real, d_fake, form, backprop ? &g_real : nullptr,
                                                backprop ? &g_fake : nullptr);
  if (backprop) {
    d.backward(g_real, real_tape, false);
    d.backward(g_fake, fake_tape, false);
  }
  return loss;
}

template GeneratorPass<float> generator_objective<float>(Generator<float>&, Generator<float>&,
                                                         Discriminator<float>&, Discriminator<float>&,
                                                         const Tensor<float>&, const Tensor<float>&,
                                                         const ObjectiveConfig&, bool);
template GeneratorPass<double> generator_objective<double>(Generator<double>&, Generator<double>&,
                                                           Discriminator<double>&, Discriminator<double>&,
                                                           const Tensor<double>&, const Tensor<double>&,
                                                           const ObjectiveConfig&, bool);
template double discriminator_objective<float>(Discriminator<float>&, const Tensor<float>&,
                                               const Tensor<float>&, AdversarialForm, bool);
template double discriminator_objective<double>(Discriminator<double>&, const Tensor<double>&,
                                                const Tensor<double>&, AdversarialForm, bool);

}  // namespace seamstain
