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

#include "fedwd/fed_offline.h"

#include <cmath>

#include <gtest/gtest.h>

#include "fedwd/status.h"
#include "test_util.h"

namespace fedwd {
namespace {

using testing::RandomPoints;
using testing::Split;
using testing::TestRng;

FederatedDataset TwoPoints() {
  FederatedDataset data;
  data.p = 1;
  data.clients = {{{{1.0}, 1}}, {{{-1.0}, -1}}};
  return data;
}

Hyper MakeHyper(double lambda, double q = 1.0) {
  Hyper h;
  h.lambda = lambda;
  h.q = q;
  return h;
}

// Direct evaluation of the penalised objective for the grid search.
double RefObjective(const std::vector<LabeledPoint>& pts, double b0, double b1, double lambda) {
  double total = 0.0;
  for (const auto& pt : pts) {
    const double u = pt.y * (b0 + b1 * pt.x[0]);
    total += u <= 0.5 ? 1 - u : 1 / (4 * u);
  }
  return total + 0.5 * pts.size() * lambda * b1 * b1;
}

TEST(FederatedDatasetTest, CountsAndValidation) {
  FederatedDataset data = TwoPoints();
  EXPECT_EQ(data.TotalCount(), 2);
  EXPECT_EQ(data.Pooled().size(), 2u);
  EXPECT_TRUE(data.Validate().ok());
  data.clients[1][0].x = {1.0, 2.0};
  EXPECT_EQ(GetErrorKind(data.Validate()), ErrorKind::kInvalidArgument);
  EXPECT_FALSE(FederatedDataset{}.Validate().ok());
}

TEST(MmStepTest, HandExample) {
  auto next = MmStep(TwoPoints(), ModelState(Vector{0, 0}), MakeHyper(0.1));
  ASSERT_TRUE(next.ok());
  EXPECT_NEAR(next->values()[0], 0.0, 1e-12);
  EXPECT_NEAR(next->values()[1], 10.0, 1e-12);
}

TEST(MmStepTest, RejectsWrongThetaLength) {
  auto next = MmStep(TwoPoints(), ModelState(Vector{0, 0, 0}), MakeHyper(0.1));
  EXPECT_EQ(GetErrorKind(next.status()), ErrorKind::kInvalidArgument);
}

TEST(MmStepTest, FixedPointAtStationaryTheta) {
  // theta = (0, 2^{-1/3}) zeroes the gradient for lambda = 0.5.
  const ModelState theta(Vector{0, std::cbrt(0.5)});
  auto next = MmStep(TwoPoints(), theta, MakeHyper(0.5));
  ASSERT_TRUE(next.ok());
  EXPECT_LE(MaxAbsDiff(next->values(), theta.values()), 1e-12);
}

TEST(MmStepTest, PartitionInvariant) {
  TestRng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = rng.Int(1, 6);
    const auto pts = RandomPoints(rng, rng.Int(10, 60), p);
    const ModelState theta(rng.NormalVector(p + 1, 0.3));
    const Hyper h = MakeHyper(rng.Uniform(0.01, 0.5), rng.Uniform(0.5, 3));
    auto pooled = MmStep(Split(pts, p, 1), theta, h);
    auto split = MmStep(Split(pts, p, rng.Int(2, 7)), theta, h);
    ASSERT_TRUE(pooled.ok() && split.ok());
    EXPECT_LE(MaxAbsDiff(pooled->values(), split->values()), 1e-10);
  }
}

TEST(SurrogateTest, TouchesLossAtReference) {
  TestRng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = rng.Int(1, 5);
    const auto data = Split(RandomPoints(rng, 40, p), p, 4);
    const ModelState ref(rng.NormalVector(p + 1));
    const Hyper h = MakeHyper(0.1, rng.Uniform(0.5, 3));
    auto s = Surrogate(data, ref, ref, h);
    auto l = FederatedLoss(data, ref, h);
    ASSERT_TRUE(s.ok() && l.ok());
    EXPECT_NEAR(*s, *l, 1e-12 * (1 + std::abs(*l)));
  }
}

TEST(SurrogateTest, QuadraticAlongLines) {
  TestRng rng(13);
  const int p = 3;
  const auto data = Split(RandomPoints(rng, 30, p), p, 3);
  const ModelState ref(rng.NormalVector(p + 1));
  const Vector dir = rng.NormalVector(p + 1);
  const Hyper h = MakeHyper(0.2);
  auto at = [&](double t) {
    Vector v = ref.values();
    Axpy(t, dir, v);
    return *Surrogate(data, ModelState(v), ref, h);
  };
  // Constant second difference for a quadratic in t.
  const double d1 = at(1) - 2 * at(0) + at(-1);
  const double d2 = at(3) - 2 * at(2) + at(1);
  EXPECT_NEAR(d1, d2, 1e-9 * (1 + std::abs(d1)));
  EXPECT_GT(d1, 0.0);
}

TEST(FitOfflineTest, MatchesGridSearch) {
  const FederatedDataset data = TwoPoints();
  auto fit = FitOffline(data, MakeHyper(0.5), ModelState(Vector{0, 0}));
  ASSERT_TRUE(fit.ok());
  const auto pts = data.Pooled();
  double best = INFINITY, best0 = 0, best1 = 0;
  for (int i = -200; i <= 200; ++i) {
    for (int j = 0; j <= 400; ++j) {
      const double b0 = i * 0.005, b1 = j * 0.005;
      const double v = RefObjective(pts, b0, b1, 0.5);
      if (v < best) {
        best = v;
        best0 = b0;
        best1 = b1;
      }
    }
  }
  EXPECT_NEAR(best1, 0.794, 0.01);
  EXPECT_NEAR(fit->theta.values()[0], best0, 0.02);
  EXPECT_NEAR(fit->theta.values()[1], best1, 0.02);
  EXPECT_NEAR(fit->theta.values()[1], std::cbrt(0.5), 1e-6);
  EXPECT_TRUE(fit->converged);
}

TEST(FitOfflineTest, LossNeverIncreases) {
  TestRng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = rng.Int(1, 8);
    const auto data = Split(RandomPoints(rng, rng.Int(5, 80), p, rng.Uniform(0, 1.5)), p,
                            rng.Int(1, 5));
    Hyper h = MakeHyper(std::exp(rng.Uniform(std::log(1e-3), std::log(1.0))),
                        rng.Uniform(0.3, 5));
    h.max_iter = 100;
    auto fit = FitOffline(data, h, ModelState(rng.NormalVector(p + 1)));
    ASSERT_TRUE(fit.ok()) << fit.status();
    const auto& trace = fit->loss_trace;
    ASSERT_EQ(trace.size(), static_cast<size_t>(fit->iterations) + 1);
    for (size_t t = 1; t < trace.size(); ++t) {
      EXPECT_LE(trace[t], trace[t - 1] + 1e-12 * (1 + std::abs(trace[t - 1])))
          << "trial " << trial << " step " << t;
    }
  }
}

TEST(FitOfflineTest, OptimalStartStopsAfterOneStep) {
  const ModelState theta(Vector{0, std::cbrt(0.5)});
  auto fit = FitOffline(TwoPoints(), MakeHyper(0.5), theta);
  ASSERT_TRUE(fit.ok());
  EXPECT_EQ(fit->iterations, 1);
  EXPECT_TRUE(fit->converged);
  EXPECT_LE(MaxAbsDiff(fit->theta.values(), theta.values()), 1e-12);
}

TEST(FitOfflineTest, ReachesStationaryPoint) {
  TestRng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = rng.Int(1, 6);
    const auto data = Split(RandomPoints(rng, 100, p), p, 5);
    const Hyper h = MakeHyper(rng.Uniform(0.01, 0.3), rng.Uniform(0.5, 3));
    auto fit = FitOffline(data, h, ModelState(Vector(p + 1, 0.0)));
    ASSERT_TRUE(fit.ok());
    auto agg = Aggregate(data, fit->theta, h);
    ASSERT_TRUE(agg.ok());
    EXPECT_LE(Norm2(agg->grad) / data.TotalCount(), 10 * h.tol) << "trial " << trial;
  }
}

TEST(FitOfflineTest, RejectsBadHyper) {
  Hyper h = MakeHyper(0.0);
  EXPECT_EQ(GetErrorKind(FitOffline(TwoPoints(), h, ModelState(Vector{0, 0})).status()),
            ErrorKind::kInvalidArgument);
}

}  // namespace
}  // namespace fedwd
