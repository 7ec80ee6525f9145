#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ecgbal/error.hpp"
#include "ecgbal/losses.hpp"

namespace ecgbal {
namespace {

std::vector<double> random_logits(std::mt19937_64& rng, std::size_t M, double span = 4.0) {
  std::uniform_real_distribution<double> u(-span, span);
  std::vector<double> z(M);
  for (double& v : z) v = u(rng);
  return z;
}

std::vector<std::size_t> random_counts(std::mt19937_64& rng, std::size_t M) {
  std::uniform_int_distribution<std::size_t> u(1, 1000);
  std::vector<std::size_t> n(M);
  for (auto& v : n) v = u(rng);
  return n;
}

LossConfig config_for(LossKind kind) {
  LossConfig cfg;
  cfg.kind = kind;
  return cfg;
}

// ---------------------------------------------------------------------------
// softmax

TEST(Softmax, Symmetric) {
  for (double p : softmax(std::vector<double>{0, 0, 0})) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(Softmax, NoOverflow) {
  const auto p = softmax(std::vector<double>{1000.0, 0.0});
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_GE(p[1], 0.0);
  EXPECT_LT(p[1], 1e-300);
}

TEST(Softmax, ReferenceValues) {
  const auto p = softmax(std::vector<double>{1.0, 2.0});
  EXPECT_NEAR(p[0], 0.26894142136999512075, 1e-16);
  EXPECT_NEAR(p[1], 0.73105857863000487925, 1e-16);
}

TEST(Softmax, SumsToOne) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto p = softmax(random_logits(rng, 2 + i % 11, 30.0));
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// cross entropy

TEST(CrossEntropy, PerfectPredictionIsZero) {
  const auto out = cross_entropy(make_prediction(std::vector<double>{800.0, 0.0, -5.0}), 0);
  EXPECT_EQ(out.value, 0.0);
  for (double g : out.grad_logits) EXPECT_EQ(g, 0.0);
}

TEST(CrossEntropy, UniformNineClasses) {
  const auto out = cross_entropy(make_prediction(std::vector<double>(9, 0.3)), 4);
  EXPECT_NEAR(out.value, std::log(9.0), 1e-15);
}

TEST(CrossEntropy, ClosedFormGradient) {
  const auto out = cross_entropy(make_prediction(std::vector<double>{0, 0, 0}), 0);
  EXPECT_NEAR(out.grad_logits[0], -2.0 / 3.0, 1e-15);
  EXPECT_NEAR(out.grad_logits[1], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(out.grad_logits[2], 1.0 / 3.0, 1e-15);
}

TEST(CrossEntropy, TargetOutOfRange) {
  EXPECT_THROW(cross_entropy(make_prediction(std::vector<double>{0, 0}), 2), DimensionError);
}

TEST(OneHot, IndexAndRejection) {
  EXPECT_EQ(one_hot_index(std::vector<double>{0, 0, 1}), 2u);
  EXPECT_THROW(one_hot_index(std::vector<double>{0, 1, 1}), std::invalid_argument);
  EXPECT_THROW(one_hot_index(std::vector<double>{0, 0.5, 0}), std::invalid_argument);
  EXPECT_THROW(one_hot_index(std::vector<double>{0, 0}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// IWL

TEST(Iwl, PerfectPredictionIsZero) {
  for (double beta : {0.0, 0.3, 1.0, 2.0}) {
    IwlConfig cfg;
    cfg.beta = beta;
    EXPECT_EQ(iwl_loss(make_prediction(std::vector<double>{900.0, 0.0}), 0, cfg).value, 0.0);
  }
}

TEST(Iwl, BetaZeroIsCrossEntropy) {
  std::mt19937_64 rng(2);
  IwlConfig cfg;
  cfg.beta = 0.0;
  for (int i = 0; i < 500; ++i) {
    const std::size_t M = 2 + i % 9;
    const auto pred = make_prediction(random_logits(rng, M, 10.0));
    const std::size_t t = static_cast<std::size_t>(i) % M;
    const auto iwl = iwl_loss(pred, t, cfg);
    const auto ce = cross_entropy(pred, t);
    EXPECT_LE(std::fabs(iwl.value - ce.value), 1e-15 * std::fabs(ce.value));
    for (std::size_t m = 0; m < M; ++m)
      EXPECT_LE(std::fabs(iwl.grad_logits[m] - ce.grad_logits[m]), 1e-15 * std::fabs(ce.grad_logits[m]));
  }
}

TEST(Iwl, ReferenceValueBetaOne) {
  IwlConfig cfg;
  cfg.beta = 1.0;
  const auto pred = make_prediction(std::vector<double>{std::log(0.1), std::log(0.9)});
  // ln(100) * ln(10) at 25 digits
  EXPECT_NEAR(iwl_loss(pred, 0, cfg).value, 10.60379622095679602112333, 1e-9);
}

TEST(Iwl, RarerPredictionWeighsMore) {
  const IwlConfig cfg;  // beta 0.3
  EXPECT_GT(iwl_weight(0.1, cfg), iwl_weight(0.9, cfg));
  const auto low = iwl_loss(make_prediction(std::vector<double>{std::log(0.1), std::log(0.9)}), 0, cfg);
  const auto high = iwl_loss(make_prediction(std::vector<double>{std::log(0.9), std::log(0.1)}), 0, cfg);
  EXPECT_GT(low.value, high.value);
}

TEST(Iwl, StrictlyDecreasingInP) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (double beta : {0.0, 0.1, 0.3, 1.0, 2.0}) {
    IwlConfig cfg;
    cfg.beta = beta;
    for (int i = 0; i < 200; ++i) {
      double p1 = u(rng), p2 = u(rng);
      if (p1 > p2) std::swap(p1, p2);
      if (p2 - p1 < 1e-9) continue;
      const auto v = [&](double p) {
        return iwl_loss(make_prediction(std::vector<double>{std::log(p), std::log1p(-p)}), 0, cfg).value;
      };
      EXPECT_GT(v(p1), v(p2)) << "beta=" << beta << " p1=" << p1 << " p2=" << p2;
      if (beta > 0) EXPECT_GT(iwl_weight(p1, cfg), iwl_weight(p2, cfg));
      else EXPECT_EQ(iwl_weight(p1, cfg), iwl_weight(p2, cfg));
    }
  }
}

TEST(Iwl, BaseTenWeightIsOneAtCertainty) {
  IwlConfig cfg;
  cfg.base = LogBase::Ten;
  cfg.epsilon = 0.0;
  EXPECT_DOUBLE_EQ(iwl_weight(1.0, cfg), 1.0);
}

TEST(Iwl, StopGradientKeepsWeightConstant) {
  std::mt19937_64 rng(4);
  IwlConfig cfg;
  cfg.stop_weight_gradient = true;
  for (int i = 0; i < 50; ++i) {
    const auto pred = make_prediction(random_logits(rng, 5));
    const auto out = iwl_loss(pred, 1, cfg);
    const auto ce = cross_entropy(pred, 1);
    const double w = iwl_weight(pred.probs[1], cfg);
    for (std::size_t m = 0; m < 5; ++m) EXPECT_NEAR(out.grad_logits[m], w * ce.grad_logits[m], 1e-14);
  }
}

// ---------------------------------------------------------------------------
// baselines

TEST(Focal, GammaZeroIsCrossEntropy) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto pred = make_prediction(random_logits(rng, 6));
    const auto f = focal_loss(pred, 2, 0.0);
    const auto ce = cross_entropy(pred, 2);
    EXPECT_DOUBLE_EQ(f.value, ce.value);
    for (std::size_t m = 0; m < 6; ++m) EXPECT_DOUBLE_EQ(f.grad_logits[m], ce.grad_logits[m]);
  }
}

TEST(Focal, PerfectPredictionIsZero) {
  EXPECT_EQ(focal_loss(make_prediction(std::vector<double>{0.0, 900.0}), 1, 2.0).value, 0.0);
}

TEST(ClassBalanced, BetaZeroIsInnerLoss) {
  std::mt19937_64 rng(6);
  const std::vector<std::size_t> counts{500, 20, 3};
  for (double w : class_balanced_weights(counts, 0.0)) EXPECT_DOUBLE_EQ(w, 1.0);
  const auto pred = make_prediction(random_logits(rng, 3));
  EXPECT_DOUBLE_EQ(class_balanced_loss(pred, 2, 0.0, counts, CbInner::CrossEntropy).value,
                   cross_entropy(pred, 2).value);
  EXPECT_DOUBLE_EQ(class_balanced_loss(pred, 0, 0.0, counts, CbInner::Focal, 2.0).value,
                   focal_loss(pred, 0, 2.0).value);
}

TEST(ClassBalanced, EqualCountsIsInnerLoss) {
  std::mt19937_64 rng(7);
  const std::vector<std::size_t> counts(4, 77);
  const auto pred = make_prediction(random_logits(rng, 4));
  EXPECT_NEAR(class_balanced_loss(pred, 1, 0.9999, counts, CbInner::CrossEntropy).value,
              cross_entropy(pred, 1).value, 1e-15);
}

TEST(ClassBalanced, TailWeighsMore) {
  const std::vector<std::size_t> counts{100, 10};
  const auto w = class_balanced_weights(counts, 0.999);
  // Oracle: (1 - b) / (1 - b^n) directly, then mean-1 scaling.
  const double e0 = (1 - 0.999) / (1 - std::pow(0.999, 100));
  const double e1 = (1 - 0.999) / (1 - std::pow(0.999, 10));
  EXPECT_NEAR(w[0], 2 * e0 / (e0 + e1), 1e-12);
  EXPECT_NEAR(w[1], 2 * e1 / (e0 + e1), 1e-12);
  EXPECT_GT(w[1], w[0]);
}

TEST(Ldam, ZeroMarginIsScaledCrossEntropy) {
  std::mt19937_64 rng(8);
  const std::vector<std::size_t> counts{300, 40, 2};
  const auto z = random_logits(rng, 3, 1.0);
  std::vector<double> scaled(z);
  for (double& v : scaled) v *= 20.0;
  EXPECT_DOUBLE_EQ(ldam_loss(make_prediction(z), 1, 0.0, 20.0, counts).value,
                   cross_entropy(make_prediction(scaled), 1).value);
}

TEST(Ldam, MarginShape) {
  const auto equal = ldam_margins(std::vector<std::size_t>{50, 50, 50}, 0.5);
  for (double d : equal) EXPECT_DOUBLE_EQ(d, 0.5);
  const auto m = ldam_margins(std::vector<std::size_t>{16, 1}, 0.2);
  EXPECT_DOUBLE_EQ(m[1], 0.2);
  EXPECT_NEAR(m[0], 0.1, 1e-15);  // 16^(-1/4) = 1/2
}

// ---------------------------------------------------------------------------
// gradients

class AllLosses : public ::testing::TestWithParam<LossKind> {};

TEST_P(AllLosses, MatchesFiniteDifferences) {
  std::mt19937_64 rng(100 + static_cast<int>(GetParam()));
  std::uniform_int_distribution<std::size_t> msize(2, 12);
  for (int i = 0; i < 100; ++i) {
    LossConfig cfg = config_for(GetParam());
    const std::size_t M = msize(rng);
    const auto z = random_logits(rng, M, GetParam() == LossKind::Ldam ? 1.0 : 4.0);
    cfg.class_counts = random_counts(rng, M);
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, M - 1)(rng);
    const auto analytic = evaluate_loss(cfg, z, t).grad_logits;
    const auto numeric = finite_difference_grad(cfg, z, t);
    EXPECT_LT(gradient_relative_error(analytic, numeric), 1e-5) << loss_kind_name(GetParam());
  }
}

TEST_P(AllLosses, NonNegative) {
  std::mt19937_64 rng(200);
  LossConfig cfg = config_for(GetParam());
  cfg.class_counts = {10, 200, 3, 40};
  for (int i = 0; i < 100; ++i) EXPECT_GE(evaluate_loss(cfg, random_logits(rng, 4), i % 4).value, 0.0);
}

INSTANTIATE_TEST_SUITE_P(Kinds, AllLosses,
                         ::testing::Values(LossKind::CrossEntropy, LossKind::Iwl, LossKind::Focal,
                                           LossKind::ClassBalanced, LossKind::CbFocal, LossKind::Ldam),
                         [](const auto& info) { return std::string(loss_kind_name(info.param)); });

TEST(Gradcheck, IwlVariantsPass) {
  for (double beta : {0.0, 0.1, 0.3, 1.0, 2.0}) {
    for (bool stop : {false, true}) {
      for (LogBase base : {LogBase::Natural, LogBase::Ten}) {
        LossConfig cfg;
        cfg.iwl.beta = beta;
        cfg.iwl.stop_weight_gradient = stop;
        cfg.iwl.base = base;
        if (stop && beta > 0) continue;  // the stop-gradient gradient is not the derivative
        const auto report = gradcheck(cfg, 100, 9);
        EXPECT_TRUE(report.passed) << "beta=" << beta << " max=" << report.max_error;
      }
    }
  }
}

TEST(Gradcheck, TinyToleranceFails) {
  const auto report = gradcheck(LossConfig{}, 20, 1, 1e-15);
  EXPECT_FALSE(report.passed);
  EXPECT_GT(report.max_error, 1e-15);
}

TEST(FiniteDifference, ClosedFormGradientOfQuadratic) {
  const ScalarFunction f = [](std::span<const double> x) { return 3 * x[0] * x[0] + x[0] * x[1]; };
  const auto g = finite_difference_grad(f, std::vector<double>{1.0, 2.0});
  EXPECT_NEAR(g[0], 8.0, 1e-8);
  EXPECT_NEAR(g[1], 1.0, 1e-8);
}

TEST(FiniteDifference, SecondOrderConvergence) {
  const ScalarFunction f = [](std::span<const double> x) { return std::sin(x[0]) * std::exp(x[1]); };
  const std::vector<double> x{0.7, -0.3};
  const std::vector<double> exact{std::cos(0.7) * std::exp(-0.3), std::sin(0.7) * std::exp(-0.3)};
  const double e2 = gradient_relative_error(exact, finite_difference_grad(f, x, 1e-2));
  const double e3 = gradient_relative_error(exact, finite_difference_grad(f, x, 1e-3));
  const double e6 = gradient_relative_error(exact, finite_difference_grad(f, x, 1e-6));
  EXPECT_NEAR(e2 / e3, 100.0, 5.0);
  EXPECT_LT(e6, e2 / 1e3);
}

TEST(GradientError, Definition) {
  EXPECT_DOUBLE_EQ(gradient_relative_error(std::vector<double>{3, 4}, std::vector<double>{3, 4}), 0.0);
  EXPECT_DOUBLE_EQ(gradient_relative_error(std::vector<double>{3, 4}, std::vector<double>{0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(gradient_relative_error(std::vector<double>{1e-9}, std::vector<double>{0.0}), 1e-9);
}

// ---------------------------------------------------------------------------
// batch, config

TEST(BatchLoss, IsMeanOfRecords) {
  std::mt19937_64 rng(11);
  LossConfig cfg;
  std::vector<std::vector<double>> z;
  std::vector<std::size_t> t;
  double sum = 0.0;
  for (std::size_t i = 0; i < 17; ++i) {
    z.push_back(random_logits(rng, 5));
    t.push_back(i % 5);
    sum += evaluate_loss(cfg, z.back(), t.back()).value;
  }
  EXPECT_DOUBLE_EQ(batch_loss(cfg, z, t), sum / 17.0);
}

TEST(LossConfigTest, ParsingAndValidation) {
  EXPECT_EQ(parse_loss_kind("ce"), LossKind::CrossEntropy);
  EXPECT_EQ(parse_loss_kind("cb_focal"), LossKind::CbFocal);
  EXPECT_THROW(parse_loss_kind("hinge"), ConfigError);
  for (auto k : {LossKind::CrossEntropy, LossKind::Iwl, LossKind::Focal, LossKind::ClassBalanced,
                 LossKind::CbFocal, LossKind::Ldam})
    EXPECT_EQ(parse_loss_kind(loss_kind_name(k)), k);

  LossConfig cb = config_for(LossKind::ClassBalanced);
  EXPECT_THROW(validate(cb, 3), ConfigError);  // missing counts
  cb.class_counts = {1, 2, 3};
  EXPECT_NO_THROW(validate(cb, 3));
  LossConfig iwl;
  iwl.iwl.beta = -1.0;
  EXPECT_THROW(validate(iwl, 3), ConfigError);
}

}  // namespace
}  // namespace ecgbal
