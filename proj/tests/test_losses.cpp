#include <cmath>
#include <limits>

#include "gradcheck.hpp"
#include "seamstain/losses.hpp"
#include "test_util.hpp"

namespace seamstain {
namespace {

using testing::random_tensor;

Tensor<double> constant(double v, int h = 4, int w = 4) { return Tensor<double>(1, 1, h, w, v); }

Tensor<double> values(std::initializer_list<double> v) {
  Tensor<double> t(1, 1, 1, static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), t.data());
  return t;
}

TEST(Adversarial, LeastSquaresOptima) {
  const auto at_optimum = adversarial_terms(constant(1.0), constant(0.0));
  EXPECT_EQ(at_optimum.d_loss, 0.0);
  EXPECT_EQ(adversarial_terms(constant(1.0), constant(1.0)).g_loss, 0.0);
}

TEST(Adversarial, LeastSquaresHandValues) {
  EXPECT_DOUBLE_EQ(adversarial_terms(constant(0.0), constant(1.0)).d_loss, 1.0);
  EXPECT_DOUBLE_EQ(adversarial_terms(constant(0.3), constant(0.5)).g_loss, 0.25);
}

TEST(Adversarial, CrossEntropyForm) {
  // Logit 0 is probability 1/2 for both labels: every BCE is log 2.
  const auto t = adversarial_terms(constant(0.0), constant(0.0), AdversarialForm::cross_entropy);
  EXPECT_NEAR(t.d_loss, std::log(2.0), 1e-12);
  EXPECT_NEAR(t.g_loss, std::log(2.0), 1e-12);
  // Large logits stay finite.
  const auto big = adversarial_terms(constant(80.0), constant(-80.0), AdversarialForm::cross_entropy);
  EXPECT_TRUE(std::isfinite(big.d_loss));
  EXPECT_LT(big.d_loss, 1e-30);
}

TEST(Adversarial, GradientsMatchFiniteDifferences) {
  for (auto form : {AdversarialForm::least_squares, AdversarialForm::cross_entropy}) {
    const auto real = random_tensor<double>(Shape{1, 1, 3, 3}, 1);
    const auto fake = random_tensor<double>(Shape{1, 1, 3, 3}, 2);
    Tensor<double> gf, gr, gg;
    discriminator_adversarial(real, fake, form, &gr, &gf);
    generator_adversarial(fake, form, &gg);
    const double h = 1e-6;
    for (std::size_t i = 0; i < fake.size(); ++i) {
      auto fp = fake, fm = fake, rp = real, rm = real;
      fp.values()[i] += h;
      fm.values()[i] -= h;
      rp.values()[i] += h;
      rm.values()[i] -= h;
      EXPECT_NEAR((discriminator_adversarial<double>(real, fp, form, nullptr, nullptr) -
                   discriminator_adversarial<double>(real, fm, form, nullptr, nullptr)) / (2 * h),
                  gf.values()[i], 1e-7);
      EXPECT_NEAR((discriminator_adversarial<double>(rp, fake, form, nullptr, nullptr) -
                   discriminator_adversarial<double>(rm, fake, form, nullptr, nullptr)) / (2 * h),
                  gr.values()[i], 1e-7);
      EXPECT_NEAR((generator_adversarial<double>(fp, form, nullptr) - generator_adversarial<double>(fm, form, nullptr)) /
                      (2 * h),
                  gg.values()[i], 1e-7);
    }
  }
}

TEST(CycleLoss, HandValues) {
  const auto x = values({0, 0});
  EXPECT_EQ(cycle_loss(x, x, x, x), 0.0);
  EXPECT_DOUBLE_EQ(cycle_loss(x, values({1, 1}), x, x), 1.0);
  EXPECT_THROW(cycle_loss(x, values({1, 1, 1}), x, x), ShapeMismatch);
}

TEST(CycleLoss, HomogeneousUnderScaling) {
  const auto x = random_tensor<double>(Shape{1, 3, 4, 4}, 3);
  const auto xr = random_tensor<double>(Shape{1, 3, 4, 4}, 4);
  const auto y = random_tensor<double>(Shape{1, 3, 4, 4}, 5);
  const auto yr = random_tensor<double>(Shape{1, 3, 4, 4}, 6);
  auto scaled = [](Tensor<double> t) {
    for (double& v : t.values()) v *= 2.5;
    return t;
  };
  EXPECT_NEAR(cycle_loss(scaled(x), scaled(xr), scaled(y), scaled(yr)), 2.5 * cycle_loss(x, xr, y, yr), 1e-12);
  EXPECT_GE(cycle_loss(x, xr, y, yr), 0.0);
}

TEST(EmbeddingLoss, HandValueIsFive) {
  const auto same = values({0.5, -1.0});
  EXPECT_EQ(embedding_consistency_loss(same, same, values({0, 0}), values({3, 4})), 5.0);
  EXPECT_EQ(embedding_consistency_loss(same, same, same, same), 0.0);
}

TEST(EmbeddingLoss, MeanSquareReduction) {
  const auto same = values({0.5, -1.0});
  // (9 + 16) / 2
  EXPECT_DOUBLE_EQ(
      embedding_consistency_loss(same, same, values({0, 0}), values({3, 4}), EmbeddingReduction::mean_square), 12.5);
}

TEST(EmbeddingLoss, DirectionSwapInvariance) {
  const auto a = random_tensor<double>(Shape{2, 4, 3, 3}, 7);
  const auto b = random_tensor<double>(Shape{2, 4, 3, 3}, 8);
  const auto c = random_tensor<double>(Shape{2, 4, 3, 3}, 9);
  const auto d = random_tensor<double>(Shape{2, 4, 3, 3}, 10);
  for (auto r : {EmbeddingReduction::euclidean, EmbeddingReduction::mean_square}) {
    EXPECT_DOUBLE_EQ(embedding_consistency_loss(a, b, c, d, r), embedding_consistency_loss(c, d, a, b, r));
  }
}

TEST(EmbeddingLoss, EuclideanIsBatchAveraged) {
  Tensor<double> a(2, 1, 1, 2), b(2, 1, 1, 2);
  b.at(0, 0, 0, 0) = 3;
  b.at(0, 0, 0, 1) = 4;  // item 0 distance 5, item 1 distance 0
  EXPECT_DOUBLE_EQ(embedding_distance<double>(a, b, EmbeddingReduction::euclidean, nullptr, nullptr), 2.5);
}

TEST(EmbeddingLoss, GradientMatchesFiniteDifferences) {
  const auto a = random_tensor<double>(Shape{2, 2, 2, 2}, 11);
  const auto b = random_tensor<double>(Shape{2, 2, 2, 2}, 12);
  for (auto r : {EmbeddingReduction::euclidean, EmbeddingReduction::mean_square}) {
    Tensor<double> ga, gb;
    embedding_distance(a, b, r, &ga, &gb);
    const double h = 1e-6;
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto ap = a, am = a;
      ap.values()[i] += h;
      am.values()[i] -= h;
      const double num = (embedding_distance<double>(ap, b, r, nullptr, nullptr) -
                          embedding_distance<double>(am, b, r, nullptr, nullptr)) / (2 * h);
      EXPECT_NEAR(num, ga.values()[i], 1e-7);
      EXPECT_DOUBLE_EQ(gb.values()[i], -ga.values()[i]);
    }
  }
}

TEST(EmbeddingLoss, ZeroDistanceHasZeroGradient) {
  const auto a = random_tensor<double>(Shape{1, 2, 2, 2}, 13);
  Tensor<double> ga, gb;
  EXPECT_EQ(embedding_distance(a, a, EmbeddingReduction::euclidean, &ga, &gb), 0.0);
  for (double v : ga.values()) EXPECT_EQ(v, 0.0);
}

TEST(TotalObjective, HandValueIsTwo) {
  LossBreakdown parts;
  parts.adv_G1 = 0.25;
  parts.adv_G2 = 0.25;
  parts.cyc = 0.1;
  parts.embd = 0.05;
  EXPECT_DOUBLE_EQ(total_objective(parts, LossWeights{10, 10}).total_G, 2.0);
  EXPECT_EQ(total_objective(LossBreakdown{}, LossWeights{}).total_G, 0.0);
}

TEST(TotalObjective, ZeroEmbeddingWeightIsTheBaseline) {
  LossBreakdown parts;
  parts.adv_G1 = 0.31;
  parts.adv_G2 = 0.17;
  parts.cyc = 0.123;
  parts.embd = 7.0;
  const double baseline = parts.adv_G1 + parts.adv_G2 + 10.0 * parts.cyc;
  EXPECT_EQ(total_objective(parts, LossWeights{10, 0}).total_G, baseline);
}

TEST(TotalObjective, NonFinitePartsDiverge) {
  LossBreakdown parts;
  parts.cyc = std::numeric_limits<double>::quiet_NaN();
  try {
    total_objective(parts, LossWeights{}, 42);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 42);
  }
  parts.cyc = 0.0;
  parts.adv_D1 = std::numeric_limits<double>::infinity();
  EXPECT_THROW(total_objective(parts, LossWeights{}), DivergenceError);
}

TEST(LossWeights, Validation) {
  EXPECT_THROW((LossWeights{-1, 10}.validate()), InvalidArgument);
  EXPECT_THROW((LossWeights{10, std::numeric_limits<double>::infinity()}.validate()), InvalidArgument);
  EXPECT_NO_THROW((LossWeights{0, 0}.validate()));
}

TEST(Objective, ToyModelIsUnderAThousandParameters) {
  const auto m = testing::make_toy_model(1);
  EXPECT_LE(m.parameter_count(), 1000u);
}

class TermGradients : public ::testing::TestWithParam<int> {};

TEST_P(TermGradients, MatchCentralDifferences) {
  const ObjectiveConfig cfgs[] = {testing::adversarial_only(), testing::cycle_only(), testing::embedding_only()};
  auto m = testing::make_toy_model(17);
  EXPECT_GE(testing::check_generator_gradients(m, cfgs[GetParam()], 1e-4).fraction(), 0.95);
  // A 1e-4 step can straddle a ReLU or L1 kink, which spoils single
  // coordinates; at 1e-6 such crossings are rare.
  EXPECT_GE(testing::check_generator_gradients(m, cfgs[GetParam()], 1e-6).fraction(), 0.99);
}

INSTANTIATE_TEST_SUITE_P(AdvCycEmbd, TermGradients, ::testing::Values(0, 1, 2));

TEST(Objective, FullObjectiveGradientsWithResidualBlocks) {
  auto m = testing::make_toy_model(23, 2);
  ObjectiveConfig cfg;
  const auto r = testing::check_generator_gradients(m, cfg);
  EXPECT_GE(r.fraction(), 0.95);
  EXPECT_LT(r.max_relative_error, 1e-2);
}

TEST(Objective, DiscriminatorGradientsMatchCentralDifferences) {
  auto m = testing::make_toy_model(29);
  const auto fake = m.g1.forward(m.x);
  for (auto form : {AdversarialForm::least_squares, AdversarialForm::cross_entropy}) {
    m.d2.network().zero_grad();
    discriminator_objective(m.d2, m.y, fake, form, true);
    auto params = m.d2.network().params();
    const std::vector<double> analytic(m.d2.network().grads().begin(), m.d2.network().grads().end());
    const double h = 1e-4;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = discriminator_objective(m.d2, m.y, fake, form, false);
      params[i] = saved - h;
      const double down = discriminator_objective(m.d2, m.y, fake, form, false);
      params[i] = saved;
      EXPECT_LT(testing::relative_error(analytic[i], (up - down) / (2 * h)), 1e-4) << "param " << i;
    }
  }
}

TEST(Objective, ZeroEmbeddingWeightReportsZeroAndKeepsOtherTerms) {
  auto m = testing::make_toy_model(31);
  ObjectiveConfig ours, base;
  base.weights.embd = 0.0;
  const auto a = generator_objective(m.g1, m.g2, m.d1, m.d2, m.x, m.y, ours, false).losses;
  const auto b = generator_objective(m.g1, m.g2, m.d1, m.d2, m.x, m.y, base, false).losses;
  EXPECT_EQ(b.embd, 0.0);
  EXPECT_GT(a.embd, 0.0);
  EXPECT_EQ(a.adv_G1, b.adv_G1);
  EXPECT_EQ(a.adv_G2, b.adv_G2);
  EXPECT_EQ(a.cyc, b.cyc);
  EXPECT_EQ(b.total_G, b.adv_G1 + b.adv_G2 + 10.0 * b.cyc);
}

}  // namespace
}  // namespace seamstain
