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

#include "fedwd/dwd_core.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "fedwd/status.h"
#include "test_util.h"

namespace fedwd {
namespace {

using testing::RandomPoints;
using testing::RelErr;
using testing::TestRng;

// Reference formulas written with std::pow, separate from the library kernel.
double RefVq(double u, double q) {
  const double u0 = q / (q + 1);
  if (u <= u0) return 1 - u;
  return std::pow(u, -q) * std::pow(q, q) / std::pow(q + 1, q + 1);
}

double RefVqPrime(double u, double q) {
  const double u0 = q / (q + 1);
  if (u <= u0) return -1;
  return -std::pow(u, -(q + 1)) * std::pow(q / (q + 1), q + 1);
}

double Eval(const absl::StatusOr<double>& v) {
  EXPECT_TRUE(v.ok()) << v.status();
  return v.ok() ? *v : std::numeric_limits<double>::quiet_NaN();
}

Hyper MakeHyper(double lambda, double q, double eps) {
  Hyper h;
  h.lambda = lambda;
  h.q = q;
  h.eps_smooth = eps;
  return h;
}

TEST(VqTest, Examples) {
  EXPECT_DOUBLE_EQ(Eval(Vq(0.5, 1)), 0.5);
  EXPECT_DOUBLE_EQ(Eval(Vq(0.0, 1)), 1.0);
  EXPECT_DOUBLE_EQ(Eval(Vq(1.0, 1)), 0.25);
  EXPECT_NEAR(Eval(Vq(2.0, 2)), 1.0 / 27.0, 1e-15);
}

TEST(VqTest, RejectsBadArguments) {
  EXPECT_EQ(GetErrorKind(Vq(std::nan(""), 1).status()), ErrorKind::kInvalidArgument);
  EXPECT_EQ(GetErrorKind(Vq(INFINITY, 1).status()), ErrorKind::kInvalidArgument);
  EXPECT_EQ(GetErrorKind(Vq(0.0, 0.0).status()), ErrorKind::kInvalidArgument);
  EXPECT_EQ(GetErrorKind(VqPrime(0.0, -1.0).status()), ErrorKind::kInvalidArgument);
}

TEST(VqPrimeTest, Examples) {
  EXPECT_EQ(Eval(VqPrime(0.3, 1)), -1.0);
  EXPECT_DOUBLE_EQ(Eval(VqPrime(1.0, 1)), -0.25);
  EXPECT_EQ(Eval(VqPrime(0.5, 1)), -1.0);
  EXPECT_NEAR(RefVqPrime(0.5 + 1e-12, 1), -1.0, 1e-10);
}

TEST(VqTest, MatchesReferenceFormula) {
  TestRng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double q = std::exp(rng.Uniform(std::log(0.05), std::log(20.0)));
    const double u = rng.Uniform(-3, 6);
    EXPECT_LE(RelErr(Eval(Vq(u, q)), RefVq(u, q)), 1e-12) << "u=" << u << " q=" << q;
    EXPECT_LE(RelErr(Eval(VqPrime(u, q)), RefVqPrime(u, q)), 1e-12);
  }
}

TEST(SmoothingCoeffsTest, WorkedValues) {
  auto c = ComputeSmoothingCoeffs(1.0, 0.1);
  ASSERT_TRUE(c.ok());
  // k = (q+1) u0^{q+1} / (u0+eps)^{q+2} = 2 * 0.25 / 0.216
  const double k = 0.5 / 0.216;
  EXPECT_NEAR(c->a, k / 0.4, 1e-12);
  EXPECT_NEAR(c->b, k / 2, 1e-12);
  EXPECT_NEAR(c->c, -1 + 0.1 * k / 4, 1e-12);
  EXPECT_NEAR(c->a, 5.787037, 1e-6);
  EXPECT_NEAR(c->b, 1.157407, 1e-6);
  EXPECT_NEAR(c->c, -0.942130, 1e-6);
}

TEST(SmoothingCoeffsTest, RejectsWideBand) {
  EXPECT_EQ(GetErrorKind(ComputeSmoothingCoeffs(1.0, 0.5).status()),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(GetErrorKind(ComputeSmoothingCoeffs(1.0, 0.0).status()),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(GetErrorKind(VqSecondSmoothed(0.0, 1.0, 0.7).status()),
            ErrorKind::kInvalidArgument);
}

TEST(SmoothingCoeffsTest, Identities) {
  TestRng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double q = std::exp(rng.Uniform(std::log(0.01), std::log(100.0)));
    const double u0 = q / (q + 1);
    const double eps = rng.Uniform(1e-4, 0.99) * u0;
    auto c = ComputeSmoothingCoeffs(q, eps);
    ASSERT_TRUE(c.ok());
    EXPECT_NEAR(c->a * eps * eps - c->b * eps + c->c, -1.0, 1e-12);
    const double k = (q + 1) * std::pow(u0, q + 1) / std::pow(u0 + eps, q + 2);
    EXPECT_LE(RelErr(2 * c->a * eps + c->b, k), 1e-12);
  }
}

TEST(VqPrimeSmoothedTest, Examples) {
  EXPECT_EQ(Eval(VqPrimeSmoothed(0.4, 1, 0.1)), -1.0);
  EXPECT_NEAR(Eval(VqPrimeSmoothed(0.5, 1, 0.1)), -0.942130, 1e-6);
  EXPECT_DOUBLE_EQ(Eval(VqPrimeSmoothed(2.0, 1, 0.1)), -0.0625);
}

TEST(VqSecondSmoothedTest, Examples) {
  EXPECT_EQ(Eval(VqSecondSmoothed(0.2, 1, 0.1)), 0.0);
  EXPECT_NEAR(Eval(VqSecondSmoothed(0.6, 1, 0.1)), 2.314815, 1e-6);
  EXPECT_NEAR(Eval(VqSecondSmoothed(0.6 + 1e-12, 1, 0.1)), 0.5 / 0.216, 1e-9);
  EXPECT_NEAR(Eval(VqSecondSmoothed(0.4 + 1e-13, 1, 0.1)), 0.0, 1e-10);
}

TEST(SmoothedTest, ContinuityAtKnots) {
  TestRng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double q = std::exp(rng.Uniform(std::log(0.01), std::log(100.0)));
    const double u0 = q / (q + 1);
    const double eps = rng.Uniform(1e-3, 0.9) * u0;
    auto coeffs = ComputeSmoothingCoeffs(q, eps);
    ASSERT_TRUE(coeffs.ok());
    const auto& c = *coeffs;
    // Band polynomial evaluated at the knots against the outer branches.
    const double prime_band_left = c.a * eps * eps - c.b * eps + c.c;
    EXPECT_NEAR(prime_band_left, Eval(VqPrimeSmoothed(u0 - eps, q, eps)), 1e-10);
    const double second_band_left = -2 * c.a * eps + c.b;
    const double second_band_right = 2 * c.a * eps + c.b;
    EXPECT_NEAR(second_band_left, Eval(VqSecondSmoothed(u0 - eps, q, eps)), 1e-10);
    const double right = std::pow(u0 + eps, -(q + 2)) * std::pow(q, q + 1) /
                         std::pow(q + 1, q);
    EXPECT_LE(RelErr(second_band_right, right), 1e-10) << "q=" << q << " eps=" << eps;
    EXPECT_LE(RelErr(Eval(VqSecondSmoothed(u0 + eps, q, eps)), right), 1e-10);
  }
}

TEST(SmoothedTest, Bounds) {
  TestRng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const double q = std::exp(rng.Uniform(std::log(0.01), std::log(100.0)));
    const double u0 = q / (q + 1);
    const double eps = rng.Uniform(1e-3, 0.99) * u0;
    const double u = rng.Uniform(-2, 4);
    const double second = Eval(VqSecondSmoothed(u, q, eps));
    EXPECT_GE(second, 0.0);
    EXPECT_LE(second, CurvatureBound(q) * (1 + 1e-12));
    const double prime = Eval(VqPrime(u, q));
    EXPECT_LE(std::abs(prime), 1.0);
    EXPECT_LT(prime, 0.0);
  }
}

TEST(VqTest, PrimeMatchesFiniteDifference) {
  TestRng rng(5);
  int checked = 0;
  while (checked < 1000) {
    const double q = std::exp(rng.Uniform(std::log(0.1), std::log(10.0)));
    const double u0 = q / (q + 1);
    const double u = rng.Uniform(-3, 4);
    if (std::abs(u - u0) < 1e-3) continue;
    const double h = 1e-6;
    const double fd = (Eval(Vq(u + h, q)) - Eval(Vq(u - h, q))) / (2 * h);
    const double exact = Eval(VqPrime(u, q));
    EXPECT_LE(std::abs(fd - exact) / std::abs(exact), 1e-5) << "u=" << u << " q=" << q;
    ++checked;
  }
}

TEST(VqTest, Convex) {
  TestRng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const double q = std::exp(rng.Uniform(std::log(0.1), std::log(10.0)));
    double u[3] = {rng.Uniform(-2, 3), rng.Uniform(-2, 3), rng.Uniform(-2, 3)};
    std::sort(u, u + 3);
    if (u[2] - u[0] < 1e-9) continue;
    const double t = (u[1] - u[0]) / (u[2] - u[0]);
    const double chord = (1 - t) * Eval(Vq(u[0], q)) + t * Eval(Vq(u[2], q));
    EXPECT_LE(Eval(Vq(u[1], q)), chord + 1e-12);
  }
}

TEST(LossTest, Examples) {
  const Hyper h = MakeHyper(0.1, 1, 0.01);
  EXPECT_EQ(Eval(Loss({}, ModelState(Vector{0.3, 0.2}), h)), 0.0);
  const std::vector<LabeledPoint> one = {{{1.0}, 1}};
  EXPECT_DOUBLE_EQ(Eval(Loss(one, ModelState(Vector{0, 0}), h)), 1.0);
  EXPECT_NEAR(Eval(Loss(one, ModelState(Vector{0, 1}), h)), 0.30, 1e-15);
}

TEST(LossTest, DimensionMismatch) {
  const std::vector<LabeledPoint> one = {{{1.0, 2.0}, 1}};
  EXPECT_EQ(GetErrorKind(Loss(one, ModelState(Vector{0, 0}), Hyper{}).status()),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(GetErrorKind(ClientGradient(one, ModelState(Vector{0, 0}), Hyper{}).status()),
            ErrorKind::kInvalidArgument);
}

TEST(GradientTest, HandExample) {
  const std::vector<LabeledPoint> pts = {{{1.0}, 1}, {{-1.0}, -1}};
  auto g = ClientGradient(pts, ModelState(Vector{0, 0}), MakeHyper(0.1, 1, 0.01));
  ASSERT_TRUE(g.ok());
  EXPECT_EQ(*g, (Vector{0, -2}));
  auto empty = ClientGradient({}, ModelState(Vector{1, 2}), Hyper{});
  ASSERT_TRUE(empty.ok());
  EXPECT_EQ(*empty, (Vector{0, 0}));
}

TEST(GradientTest, MatchesFiniteDifferenceOfLoss) {
  TestRng rng(7);
  int checked = 0;
  for (int trial = 0; checked < 200 && trial < 2000; ++trial) {
    const int p = rng.Int(1, 5);
    const auto pts = RandomPoints(rng, rng.Int(1, 30), p);
    const Hyper h = MakeHyper(rng.Uniform(0.01, 1), rng.Uniform(0.3, 4), 0.01);
    const ModelState theta(rng.NormalVector(p + 1));
    // Skip draws with a margin near the kink.
    const double u0 = h.q / (h.q + 1);
    bool near_kink = false;
    for (const auto& pt : pts) {
      if (std::abs(pt.y * theta.Decision(pt.x) - u0) < 1e-3) near_kink = true;
    }
    if (near_kink) continue;
    auto g = ClientGradient(pts, theta, h);
    ASSERT_TRUE(g.ok());
    for (int k = 0; k <= p; ++k) {
      const double step = 1e-6;
      Vector plus = theta.values(), minus = theta.values();
      plus[k] += step;
      minus[k] -= step;
      const double fd = (Eval(Loss(pts, ModelState(plus), h)) -
                         Eval(Loss(pts, ModelState(minus), h))) /
                        (2 * step);
      EXPECT_LE(std::abs(fd - (*g)[k]) / std::max(1.0, std::abs((*g)[k])), 1e-5);
    }
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(CurvatureTest, LinearRegionGivesRidgeOnly) {
  const std::vector<LabeledPoint> pts = {{{1.0}, 1}, {{-1.0}, -1}};
  auto c = ClientCurvature(pts, ModelState(Vector{0, 0}), MakeHyper(0.1, 1, 0.01));
  ASSERT_TRUE(c.ok());
  EXPECT_NEAR(c->MaxAbsDiff(SymMatrix::Diagonal(Vector{0.2, 0.2})), 0.0, 1e-15);
  auto w = ClientCurvature(pts, ModelState(Vector{0, 0}), MakeHyper(0.1, 1, 0.01),
                           Regularizer::kInterceptFree);
  ASSERT_TRUE(w.ok());
  EXPECT_EQ((*w)(0, 0), 0.0);
  EXPECT_NEAR((*w)(1, 1), 0.2, 1e-15);
}

TEST(CurvatureTest, MatchesFiniteDifferenceOfSmoothedGradient) {
  TestRng rng(8);
  int checked = 0;
  for (int trial = 0; checked < 100 && trial < 5000; ++trial) {
    const int p = rng.Int(1, 4);
    const auto pts = RandomPoints(rng, rng.Int(1, 20), p);
    const Hyper h = MakeHyper(rng.Uniform(0.01, 1), rng.Uniform(0.5, 3), 0.05);
    const ModelState theta(rng.NormalVector(p + 1));
    const double u0 = h.q / (h.q + 1);
    bool near_knot = false;
    for (const auto& pt : pts) {
      const double u = pt.y * theta.Decision(pt.x);
      if (std::abs(u - (u0 - h.eps_smooth)) < 1e-3 || std::abs(u - (u0 + h.eps_smooth)) < 1e-3) {
        near_knot = true;
      }
    }
    if (near_knot) continue;
    // Gradient built from the smoothed derivative, written out here.
    auto smoothed_grad = [&](const Vector& t) {
      Vector g(p + 1, 0.0);
      const ModelState th(t);
      for (const auto& pt : pts) {
        const double d = Eval(VqPrimeSmoothed(pt.y * th.Decision(pt.x), h.q, h.eps_smooth));
        g[0] += pt.y * d;
        for (int j = 0; j < p; ++j) g[j + 1] += pt.y * d * pt.x[j];
      }
      for (int j = 1; j <= p; ++j) g[j] += pts.size() * h.lambda * t[j];
      return g;
    };
    auto c = ClientCurvature(pts, theta, h, Regularizer::kInterceptFree);
    ASSERT_TRUE(c.ok());
    const double step = 1e-6;
    for (int k = 0; k <= p; ++k) {
      Vector plus = theta.values(), minus = theta.values();
      plus[k] += step;
      minus[k] -= step;
      const Vector gp = smoothed_grad(plus), gm = smoothed_grad(minus);
      for (int i = 0; i <= p; ++i) {
        const double fd = (gp[i] - gm[i]) / (2 * step);
        EXPECT_LE(std::abs(fd - (*c)(i, k)) / std::max(1.0, std::abs((*c)(i, k))), 1e-4);
      }
    }
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(CurvatureTest, SymmetricAndBoundedBelow) {
  TestRng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const int p = rng.Int(1, 6);
    const int n = rng.Int(1, 40);
    const auto pts = RandomPoints(rng, n, p);
    const Hyper h = MakeHyper(rng.Uniform(0.01, 1), rng.Uniform(0.5, 3), 0.01);
    auto c = ClientCurvature(pts, ModelState(rng.NormalVector(p + 1)), h);
    ASSERT_TRUE(c.ok());
    // v^T C v >= n lambda |v|^2 for random v.
    for (int r = 0; r < 5; ++r) {
      const Vector v = rng.NormalVector(p + 1);
      EXPECT_GE(Dot(v, c->Multiply(v)), n * h.lambda * Dot(v, v) * (1 - 1e-12));
    }
  }
}

TEST(SummarizeTest, MatchesSeparateCalls) {
  TestRng rng(10);
  const auto pts = RandomPoints(rng, 25, 3);
  const ModelState theta(rng.NormalVector(4));
  const Hyper h = MakeHyper(0.05, 1.5, 0.02);
  auto s = Summarize(pts, theta, h);
  ASSERT_TRUE(s.ok());
  EXPECT_EQ(s->count, 25);
  EXPECT_LE(MaxAbsDiff(s->grad, *ClientGradient(pts, theta, h)), 1e-12);
  EXPECT_LE(s->curvature.MaxAbsDiff(*ClientCurvature(pts, theta, h)), 1e-12);
}

TEST(PredictTest, Examples) {
  const ModelState theta(Vector{0, 1});
  EXPECT_EQ(*Predict(theta, Vector{2}), 1);
  EXPECT_EQ(*Predict(theta, Vector{-3}), -1);
  EXPECT_EQ(*Predict(ModelState(Vector{0, 0}), Vector{-7}), 1);
  EXPECT_EQ(GetErrorKind(Predict(theta, Vector{1, 2}).status()), ErrorKind::kInvalidArgument);
}

TEST(MakePointTest, Validation) {
  EXPECT_TRUE(MakePoint({1.0, 2.0}, -1).ok());
  EXPECT_FALSE(MakePoint({1.0}, 0).ok());
  EXPECT_FALSE(MakePoint({1.0}, 2).ok());
  EXPECT_FALSE(MakePoint({std::nan("")}, 1).ok());
  EXPECT_FALSE(MakePoint({}, 1).ok());
}

TEST(HyperTest, Validation) {
  EXPECT_TRUE(Hyper{}.Validate().ok());
  EXPECT_FALSE(MakeHyper(0.0, 1, 0.01).Validate().ok());
  EXPECT_FALSE(MakeHyper(0.1, -1, 0.01).Validate().ok());
  EXPECT_FALSE(MakeHyper(0.1, 1, 0.5).Validate().ok());
}

}  // namespace
}  // namespace fedwd
