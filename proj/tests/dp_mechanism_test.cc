//
// Copyright 2026 The fedwd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "fedwd/dp_mechanism.h"

#include <cmath>

#include <gtest/gtest.h>

#include "dp_oracle.h"
#include "fedwd/status.h"
#include "test_util.h"

namespace fedwd {
namespace {

using testing::RandomPoints;
using testing::RelErr;
using testing::Split;
using testing::TestRng;

Hyper MakeHyper(double lambda, double q = 1.0) {
  Hyper h;
  h.lambda = lambda;
  h.q = q;
  return h;
}

// Clipped random batch that satisfies the default feature caps.
FederatedDataset ClippedBatch(TestRng& rng, int n, int p, int m, double c1, double c2) {
  auto pts = RandomPoints(rng, n, p);
  for (auto& pt : pts) pt.x = *ClipFeatures(pt.x, c1, c2);
  return Split(pts, p, m);
}

TEST(CalibrationTest, WorkedValues) {
  auto cal = CalibT1T2(1, 1, 1, 1, 100, 400, 1.0, 0.0);
  ASSERT_TRUE(cal.ok());
  EXPECT_NEAR(cal->t1, 2.8, 1e-12);
  EXPECT_NEAR(cal->t2, 2 * std::log(1.01), 1e-12);
  EXPECT_NEAR(cal->t2, 0.0199007, 1e-7);
  auto eta = LaplaceScale(0.8, 2.8, cal->t2);
  ASSERT_TRUE(eta.ok());
  EXPECT_NEAR(*eta, 3.58929, 1e-5);
  auto tau = GaussianSigma(0.8, 1e-5, 2.8);
  ASSERT_TRUE(tau.ok());
  EXPECT_NEAR(*tau, 33.8789, 1e-4);
  EXPECT_NEAR(MinRho(0.8, 1, 1, 10, 1), 8.0666, 1e-4);
  EXPECT_NEAR(*GaussianDelta1(1, 1, 1, 100), 2.8, 1e-12);
}

TEST(CalibrationTest, MatchesIndependentFormulas) {
  TestRng rng(31);
  for (int i = 0; i < 1000; ++i) {
    const double q = rng.Uniform(0.2, 5);
    const double c1 = rng.Uniform(1.1, 60), c2 = rng.Uniform(1.1, 20);
    const double cp = rng.Uniform(0.1, 5);
    const double n_prev = std::floor(rng.Uniform(1, 1e5));
    const double n_b = n_prev + std::floor(rng.Uniform(1, 1000));
    const double lambda = std::exp(rng.Uniform(std::log(1e-4), 0));
    const double rho = rng.Uniform(0, 100);
    const double eps = rng.Uniform(0.05, 5);
    const double delta = std::exp(rng.Uniform(std::log(1e-10), std::log(0.5)));

    auto cal = CalibT1T2(q, c1, c2, cp, n_prev, n_b, lambda, rho);
    ASSERT_TRUE(cal.ok());
    const double t1 = testing::RefT1(q, c1, c2, cp, n_prev);
    const double t2 = testing::RefT2(q, c2, n_b * lambda + rho);
    EXPECT_LE(RelErr(cal->t1, t1), 1e-12);
    EXPECT_LE(std::abs(cal->t2 - t2) / std::max(1e-300, t2), 1e-12);
    if (eps > t2) {
      EXPECT_LE(RelErr(*LaplaceScale(eps, t1, t2), testing::RefEta(eps, t1, t2)), 1e-12);
    } else {
      EXPECT_EQ(GetErrorKind(LaplaceScale(eps, t1, t2).status()),
                ErrorKind::kPrivacyBudgetTooSmall);
    }
    const double d1 = testing::RefDelta1(q, c2, cp, n_prev);
    EXPECT_LE(RelErr(*GaussianDelta1(q, c2, cp, n_prev), d1), 1e-12);
    EXPECT_LE(RelErr(*GaussianSigma(eps, delta, d1), testing::RefTau(eps, delta, d1)), 1e-12);
    EXPECT_LE(RelErr(MinRho(eps, q, c2, n_b, lambda),
                     testing::RefMinRho(eps, q, c2, n_b * lambda)),
              1e-12);
  }
}

TEST(CalibrationTest, Guards) {
  EXPECT_EQ(GetErrorKind(LaplaceScale(0.019, 2.8, 0.0199007).status()),
            ErrorKind::kPrivacyBudgetTooSmall);
  // Just above T2 the scale is finite but very large.
  EXPECT_GT(*LaplaceScale(0.02, 2.8, 2 * std::log(1.01)), 1e4);
  EXPECT_EQ(GetErrorKind(LaplaceScale(0.0199007, 2.8, 0.0199007).status()),
            ErrorKind::kPrivacyBudgetTooSmall);
  EXPECT_FALSE(CalibT1T2(1, 1, 1, 1, 0, 10, 1, 0).ok());
  EXPECT_FALSE(GaussianDelta1(1, 1, 1, 0.5).ok());
  EXPECT_FALSE(GaussianSigma(0.8, 1.0, 2.8).ok());
  EXPECT_FALSE(GaussianSigma(0.0, 1e-5, 2.8).ok());
  EXPECT_EQ(MinRho(0.8, 1, 1, 1e6, 1), 0.0);
}

TEST(ParseMechanismTest, Names) {
  EXPECT_EQ(*ParseMechanism("Laplace"), Mechanism::kLaplace);
  EXPECT_EQ(*ParseMechanism("GAUSSIAN"), Mechanism::kGaussian);
  EXPECT_EQ(GetErrorKind(ParseMechanism("exponential").status()), ErrorKind::kInvalidArgument);
  EXPECT_EQ(MechanismName(Mechanism::kLaplace), "laplace");
}

TEST(DpConfigTest, Validation) {
  DpConfig dp;
  EXPECT_TRUE(dp.Validate().ok());
  dp.delta = 0.0;
  EXPECT_FALSE(dp.Validate().ok());
  dp.mechanism = Mechanism::kLaplace;
  EXPECT_TRUE(dp.Validate().ok());
  dp.c1 = 1.0;
  EXPECT_FALSE(dp.Validate().ok());
  dp.c1 = 2.0;
  dp.epsilon = -1;
  EXPECT_FALSE(dp.Validate().ok());
}

TEST(ClipTest, SatisfiesBoundsAfterClipping) {
  TestRng rng(32);
  for (int i = 0; i < 1000; ++i) {
    const int p = rng.Int(1, 20);
    Vector x = rng.NormalVector(p, rng.Uniform(0.01, 10));
    const double c1 = rng.Uniform(1.01, 20), c2 = rng.Uniform(1.01, 10);
    auto clipped = ClipFeatures(x, c1, c2);
    ASSERT_TRUE(clipped.ok());
    EXPECT_TRUE(SatisfiesFeatureBounds(*clipped, c1, c2));
    if (SatisfiesFeatureBounds(x, c1, c2)) {
      EXPECT_EQ(*clipped, x);
    } else {
      // Rescaling keeps the direction.
      const double ratio = (*clipped)[0] / x[0];
      EXPECT_GT(ratio, 0.0);
      EXPECT_LT(ratio, 1.0);
      for (int j = 0; j < p; ++j) EXPECT_NEAR((*clipped)[j], ratio * x[j], 1e-12);
    }
  }
  EXPECT_FALSE(ClipFeatures(Vector{1.0}, 1.0, 2.0).ok());
}

TEST(ClipTest, ConditionExamples) {
  EXPECT_TRUE(SatisfiesFeatureBounds(Vector{0.5, 0.5}, 2.0, 2.0));
  EXPECT_FALSE(SatisfiesFeatureBounds(Vector{0.6, 0.5}, 2.0, 2.0));
  EXPECT_FALSE(SatisfiesFeatureBounds(Vector{1.8}, 3.0, 2.0));
}

TEST(NoiseTest, LaplaceMoments) {
  DpConfig dp;
  dp.mechanism = Mechanism::kLaplace;
  Rng rng(33);
  const NoiseDraw draw = SampleNoise(dp, 2.0, 200000, rng);
  double m1 = 0, m2 = 0, m4 = 0;
  for (double v : draw.xi) {
    m1 += v;
    m2 += v * v;
    m4 += v * v * v * v;
  }
  const double n = draw.xi.size();
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m1, 0.0, 0.03);
  EXPECT_NEAR(m2 / 8.0, 1.0, 0.03);
  EXPECT_NEAR(m4 / (m2 * m2), 6.0, 0.5);
  EXPECT_EQ(draw.scale, 2.0);
}

TEST(NoiseTest, GaussianMoments) {
  DpConfig dp;
  Rng rng(34);
  const NoiseDraw draw = SampleNoise(dp, 3.0, 200000, rng);
  double m1 = 0, m2 = 0, m4 = 0;
  for (double v : draw.xi) {
    m1 += v;
    m2 += v * v;
    m4 += v * v * v * v;
  }
  const double n = draw.xi.size();
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m1, 0.0, 0.03);
  EXPECT_NEAR(m2 / 9.0, 1.0, 0.02);
  EXPECT_NEAR(m4 / (m2 * m2), 3.0, 0.1);
}

TEST(NoiseTest, ZeroScaleDrawsNothing) {
  Rng rng(35);
  const NoiseDraw draw = SampleNoise(DpConfig{}, 0.0, 4, rng);
  EXPECT_EQ(draw.xi, Vector(4, 0.0));
  EXPECT_EQ(rng.draws(), 0u);
}

TEST(PrivateUpdateTest, ReducesToPlainUpdate) {
  TestRng rng(36);
  for (int trial = 0; trial < 50; ++trial) {
    const int p = rng.Int(1, 6);
    const Hyper h = MakeHyper(rng.Uniform(0.01, 0.5), rng.Uniform(0.5, 3));
    auto state = InitState(p, ModelState(rng.NormalVector(p + 1, 0.3)));
    ASSERT_TRUE(state.ok());
    // Build some history first.
    auto warm = Update(*state, Split(RandomPoints(rng, 30, p), p, 2), h);
    ASSERT_TRUE(warm.ok());
    const auto batch = Split(RandomPoints(rng, 30, p), p, 3);
    auto plain = Update(*warm, batch, h);
    auto priv = ApplyPrivateUpdate(*warm, batch, h, 0.0, Vector(p + 1, 0.0));
    ASSERT_TRUE(plain.ok() && priv.ok());
    EXPECT_LE(MaxAbsDiff(plain->theta.values(), priv->theta.values()),
              1e-10 * (1 + Norm2(plain->theta.values())));
    EXPECT_LE(plain->j_acc.MaxAbsDiff(priv->j_acc), 1e-12);
    EXPECT_EQ(plain->n_acc, priv->n_acc);
  }
}

TEST(PrivateUpdateTest, ClosedForm) {
  TestRng rng(37);
  const int p = 2;
  const Hyper h = MakeHyper(0.1);
  auto warm = Update(*InitState(p, ModelState(Vector(3, 0.0))),
                     Split(RandomPoints(rng, 20, p), p, 2), h);
  const auto batch = Split(RandomPoints(rng, 20, p), p, 2);
  const Vector xi = {0.3, -1.2, 2.0};
  const double rho = 4.0;
  auto priv = ApplyPrivateUpdate(*warm, batch, h, rho, xi);
  ASSERT_TRUE(priv.ok());
  // (S + rho I) theta = S theta_prev - g - xi
  auto agg = Aggregate(batch, warm->theta, h);
  SymMatrix s = warm->j_acc;
  ASSERT_TRUE(s.Add(agg->curvature).ok());
  SymMatrix lhs = s;
  lhs.AddScaledIdentity(rho);
  Vector residual = lhs.Multiply(priv->theta.values());
  Vector rhs = s.Multiply(warm->theta.values());
  Axpy(-1.0, agg->grad, rhs);
  Axpy(-1.0, xi, rhs);
  EXPECT_LE(MaxAbsDiff(residual, rhs), 1e-9);
}

TEST(UpdatePrivateTest, WarmStartThenCalibratedNoise) {
  TestRng rng(38);
  const int p = 3;
  const Hyper h = MakeHyper(0.05);
  DpConfig dp;
  dp.epsilon = 0.8;
  dp.delta = 1e-5;
  auto state = InitState(p, ModelState(Vector(p + 1, 0.0)));
  Rng noise(1);
  const auto b1 = ClippedBatch(rng, 50, p, 5, dp.c1, dp.c2);
  auto r1 = UpdatePrivate(*state, b1, h, dp, noise);
  ASSERT_TRUE(r1.ok()) << r1.status();
  EXPECT_TRUE(r1->record.warm_start);
  EXPECT_EQ(r1->state.theta.values(), Update(*state, b1, h)->theta.values());

  const auto b2 = ClippedBatch(rng, 50, p, 5, dp.c1, dp.c2);
  auto r2 = UpdatePrivate(r1->state, b2, h, dp, noise);
  ASSERT_TRUE(r2.ok()) << r2.status();
  EXPECT_FALSE(r2->record.warm_start);
  EXPECT_EQ(r2->record.n_prev, 50);
  EXPECT_EQ(r2->record.n_b, 100);
  EXPECT_LE(RelErr(r2->record.rho, testing::RefMinRho(0.8, 1, dp.c2, 100 * 0.05)), 1e-12);
  const double tau = testing::RefTau(0.8, 1e-5, testing::RefDelta1(1, dp.c2, 1, 50));
  EXPECT_LE(RelErr(r2->record.noise.scale, tau), 1e-12);
  EXPECT_TRUE(r2->record.rho_bound_met);

  dp.mechanism = Mechanism::kLaplace;
  auto r3 = UpdatePrivate(r1->state, b2, h, dp, noise);
  ASSERT_TRUE(r3.ok());
  const double nb_lr = 100 * 0.05 + r3->record.rho;
  const double eta = testing::RefEta(0.8, testing::RefT1(1, dp.c1, dp.c2, 1, 50),
                                     testing::RefT2(1, dp.c2, nb_lr));
  EXPECT_LE(RelErr(r3->record.noise.scale, eta), 1e-12);
}

TEST(UpdatePrivateTest, FloorReplacesWarmStart) {
  TestRng rng(39);
  DpConfig dp;
  dp.n0_floor = 1000;
  Rng noise(2);
  auto state = InitState(2, ModelState(Vector(3, 0.0)));
  auto r = UpdatePrivate(*state, ClippedBatch(rng, 20, 2, 2, dp.c1, dp.c2), MakeHyper(0.1), dp,
                         noise);
  ASSERT_TRUE(r.ok());
  EXPECT_FALSE(r->record.warm_start);
  EXPECT_EQ(r->record.n_prev, 1000);
  EXPECT_GT(r->record.noise.scale, 0.0);
}

TEST(UpdatePrivateTest, Errors) {
  TestRng rng(40);
  const Hyper h = MakeHyper(0.1);
  DpConfig dp;
  Rng noise(3);
  auto state = InitState(2, ModelState(Vector(3, 0.0)));
  FederatedDataset wide = Split(RandomPoints(rng, 10, 2), 2, 1);
  wide.clients[0][0].x = {5.0, 5.0};
  EXPECT_EQ(GetErrorKind(UpdatePrivate(*state, wide, h, dp, noise).status()),
            ErrorKind::kConditionViolation);

  auto warm = UpdatePrivate(*state, ClippedBatch(rng, 10, 2, 1, dp.c1, dp.c2), h, dp, noise);
  ASSERT_TRUE(warm.ok());
  const auto batch = ClippedBatch(rng, 10, 2, 1, dp.c1, dp.c2);
  dp.rho = 0.0;
  dp.mechanism = Mechanism::kLaplace;
  EXPECT_EQ(GetErrorKind(UpdatePrivate(warm->state, batch, h, dp, noise).status()),
            ErrorKind::kConditionViolation);
  dp.mechanism = Mechanism::kGaussian;
  auto gauss = UpdatePrivate(warm->state, batch, h, dp, noise);
  ASSERT_TRUE(gauss.ok());
  EXPECT_FALSE(gauss->record.rho_bound_met);
  EXPECT_FALSE(gauss->record.warnings.empty());
}

TEST(UpdatePrivateTest, SeededRunsRepeat) {
  TestRng rng(41);
  const Hyper h = MakeHyper(0.1);
  DpConfig dp;
  std::vector<FederatedDataset> batches;
  for (int b = 0; b < 4; ++b) batches.push_back(ClippedBatch(rng, 20, 3, 2, dp.c1, dp.c2));
  auto run = [&](uint64_t seed) {
    Rng noise(seed);
    OnlineState state = *InitState(3, ModelState(Vector(4, 0.0)));
    for (const auto& b : batches) state = UpdatePrivate(state, b, h, dp, noise)->state;
    return state.theta.values();
  };
  EXPECT_EQ(run(7), run(7));
  EXPECT_NE(run(7), run(8));
}

}  // namespace
}  // namespace fedwd
