// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "rsbench/dpo.hpp"

namespace {

using namespace rsbench;
using rsbench::testing::error_kind;

// ln 2 and ln(1 + e^-0.2) to 30 significant digits
constexpr double kLn2 = 0.693147180559945309417232121458;
constexpr double kLn1pExpMinus02 = 0.59813886938159183468709710167;

const dpo::Config kNoRpo{0.1, 0.0};

dpo::Instance random_instance(std::mt19937_64& rng, double spread = 200.0) {
  std::uniform_real_distribution<double> u(-spread, 0.0);
  return {u(rng), u(rng), u(rng), u(rng)};
}

TEST(Logit, PolicyEqualsReferenceGivesZero) {
  EXPECT_EQ(dpo::preference_logit({-12.5, -30.25, -12.5, -30.25}, 0.1), 0.0);
}

TEST(Logit, NetTwoNatsAtBetaPointOneIsPointTwo) {
  // chosen up 1.5 nats over the reference, rejected down 0.5
  EXPECT_NEAR(dpo::preference_logit({-8.5, -20.5, -10.0, -20.0}, 0.1), 0.2, 1e-15);
}

TEST(Logit, SwappingChosenAndRejectedNegates) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_instance(rng);
    const dpo::Instance swapped{x.logp_policy_l, x.logp_policy_w, x.logp_ref_l, x.logp_ref_w};
    EXPECT_EQ(dpo::preference_logit(swapped, 0.1), -dpo::preference_logit(x, 0.1));
  }
}

TEST(Loss, ZeroLogitIsLn2) {
  const auto r = dpo::loss({-5, -7, -5, -7}, kNoRpo);
  EXPECT_EQ(r.delta, 0.0);
  EXPECT_NEAR(r.total, kLn2, 1e-15);
  EXPECT_NEAR(r.base, kLn2, 1e-15);
}

TEST(Loss, LogitPointTwo) {
  const auto r = dpo::loss({-8.5, -20.5, -10.0, -20.0}, kNoRpo);
  EXPECT_NEAR(r.total, kLn1pExpMinus02, 1e-12);
}

TEST(Loss, RpoTermAddsChosenNll) {
  const dpo::Instance x{-8.5, -20.5, -10.0, -20.0};
  const auto r = dpo::loss(x, {0.1, 0.1});
  EXPECT_NEAR(r.total, kLn1pExpMinus02 + 0.1 * 8.5, 1e-12);
  EXPECT_NEAR(r.grad_policy_w, -0.1 * dpo::sigmoid(-r.delta) - 0.1, 1e-15);
}

TEST(Loss, AnalyticGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (const dpo::Config cfg : {dpo::Config{}, kNoRpo, dpo::Config{0.5, 1.0}, dpo::Config{0.01, 0.0}}) {
    for (int i = 0; i < 1000; ++i) {
      const auto x = random_instance(rng);
      const auto c = dpo::check_gradients(x, cfg, 1e-5, 1e-5);
      ASSERT_TRUE(c.passed) << "beta=" << cfg.beta << " delta=" << dpo::preference_logit(x, cfg.beta)
                            << " rel_w=" << c.rel_err_w << " rel_l=" << c.rel_err_l;
    }
  }
}

TEST(Loss, ShiftInvariance) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_instance(rng);
    const double c = std::ldexp(std::round(shift(rng) * 64), -6);  // exact in binary
    const dpo::Instance y{x.logp_policy_w + c, x.logp_policy_l + c, x.logp_ref_w + c, x.logp_ref_l + c};
    EXPECT_NEAR(dpo::preference_logit(y, 0.1), dpo::preference_logit(x, 0.1), 1e-12);
    EXPECT_NEAR(dpo::loss(y, kNoRpo).base, dpo::loss(x, kNoRpo).base, 1e-12);
  }
}

TEST(Loss, StrictlyDecreasingInLogit) {
  double prev = INFINITY;
  for (double d = -40.0; d <= 40.0; d += 0.25) {
    const double v = dpo::base_loss(d);
    EXPECT_LT(v, prev) << d;
    prev = v;
  }
  EXPECT_LT(dpo::base_loss(500.0), 1e-200);
  EXPECT_GT(dpo::base_loss(-500.0), 499.0);
}

TEST(Loss, StableForLargeLogits) {
  for (double d : {-500.0, -200.0, -40.0, 40.0, 200.0, 500.0}) {
    const double v = dpo::base_loss(d);
    EXPECT_TRUE(std::isfinite(v)) << d;
    EXPECT_GE(v, 0.0);
    if (d < 0) {
      EXPECT_NEAR(v, -d, 1e-12);
    } else {
      EXPECT_NEAR(v / std::exp(-d), 1.0, 1e-12);
    }
  }
  EXPECT_EQ(dpo::sigmoid(-800.0), 0.0);
  EXPECT_EQ(dpo::sigmoid(800.0), 1.0);
}

TEST(Loss, GradientSigns) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 2000; ++i) {
    const auto r = dpo::loss(random_instance(rng, 3000.0), kNoRpo);
    EXPECT_LE(r.grad_policy_w, 0.0);
    EXPECT_GE(r.grad_policy_l, 0.0);
    EXPECT_EQ(r.grad_policy_w, -r.grad_policy_l);
  }
}

TEST(Batch, Examples) {
  const dpo::Instance x{-8.5, -20.5, -10.0, -20.0};
  EXPECT_DOUBLE_EQ(dpo::batch_loss({x, x, x}, kNoRpo), dpo::loss(x, kNoRpo).total);
  // delta 0 and delta -> +inf (here 500)
  const dpo::Instance zero{-5, -7, -5, -7}, large{-1, -5001, -1, -1};
  EXPECT_NEAR(dpo::batch_loss({zero, large}, kNoRpo), kLn2 / 2.0, 1e-15);
  EXPECT_EQ(error_kind([] { dpo::batch_loss({}, dpo::Config{}); }), ErrorKind::EmptyBatch);
}

TEST(Validation, RejectsBadInputs) {
  EXPECT_EQ(error_kind([] { dpo::validate(dpo::Config{0.0, 0.1}); }), ErrorKind::Config);
  EXPECT_EQ(error_kind([] { dpo::validate(dpo::Config{0.1, -1.0}); }), ErrorKind::Config);
  EXPECT_EQ(error_kind([] { dpo::validate(dpo::Instance{NAN, -1, -1, -1}); }), ErrorKind::Validation);
  EXPECT_EQ(error_kind([] { dpo::validate(dpo::Instance{0.5, -1, -1, -1}); }), ErrorKind::Validation);
  EXPECT_EQ(error_kind([] { dpo::validate(dpo::Instance{-0.5, -1, -1, -1}); }), std::nullopt);
}

}  // namespace
