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

#include <algorithm>
#include <cmath>

#include "absl/strings/ascii.h"
#include "absl/strings/str_format.h"
#include "fedwd/status.h"

namespace fedwd {
namespace {

absl::Status CheckPositive(const char* name, double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    return InvalidArgument(absl::StrFormat("%s must be positive, got %g", name, value));
  }
  return absl::OkStatus();
}

}  // namespace

std::string_view MechanismName(Mechanism mechanism) {
  return mechanism == Mechanism::kLaplace ? "laplace" : "gaussian";
}

absl::StatusOr<Mechanism> ParseMechanism(std::string_view name) {
  const std::string lower = absl::AsciiStrToLower(ToAbsl(name));
  if (lower == "laplace") return Mechanism::kLaplace;
  if (lower == "gaussian") return Mechanism::kGaussian;
  return InvalidArgument(absl::StrFormat(
      "unknown mechanism \"%s\" (expected laplace or gaussian)", ToAbsl(name)));
}

absl::Status DpConfig::Validate() const {
  FEDWD_RETURN_IF_ERROR(CheckPositive("dp.epsilon", epsilon));
  if (mechanism == Mechanism::kGaussian && !(delta > 0.0 && delta < 1.0)) {
    return InvalidArgument(absl::StrFormat(
        "dp.delta must lie in (0, 1) for the Gaussian mechanism, got %g", delta));
  }
  if (rho.has_value() && !(*rho >= 0.0 && std::isfinite(*rho))) {
    return InvalidArgument(absl::StrFormat("dp.rho must be >= 0, got %g", *rho));
  }
  if (!(c1 > 1.0) || !(c2 > 1.0)) {
    return InvalidArgument(absl::StrFormat(
        "dp.c1 and dp.c2 must exceed 1 (the intercept alone has norm 1), got "
        "c1=%g c2=%g",
        c1, c2));
  }
  FEDWD_RETURN_IF_ERROR(CheckPositive("dp.c_prev", c_prev));
  if (n0_floor < 0) return InvalidArgument("dp.n0_floor must be >= 0");
  return absl::OkStatus();
}

absl::StatusOr<Vector> ClipFeatures(std::span<const double> x, double c1, double c2) {
  if (!(c1 > 1.0) || !(c2 > 1.0)) {
    return InvalidArgument(
        absl::StrFormat("clip bounds must exceed 1, got c1=%g c2=%g", c1, c2));
  }
  const double l1 = Norm1(x);
  const double l2 = Norm2(x);
  double scale = 1.0;
  if (1.0 + l1 > c1) scale = std::min(scale, (c1 - 1.0) / l1);
  if (1.0 + l2 * l2 > c2 * c2) scale = std::min(scale, std::sqrt(c2 * c2 - 1.0) / l2);
  Vector out(x.begin(), x.end());
  if (scale < 1.0) {
    for (double& v : out) v *= scale;
  }
  return out;
}

bool SatisfiesFeatureBounds(std::span<const double> x, double c1, double c2) {
  constexpr double kSlack = 1e-12;
  const double l1 = 1.0 + Norm1(x);
  const double l2 = std::sqrt(1.0 + Dot(x, x));
  return l1 <= c1 * (1.0 + kSlack) && l2 <= c2 * (1.0 + kSlack);
}

absl::StatusOr<Calibration> CalibT1T2(double q, double c1, double c2, double c_prev,
                                      double n_prev, double n_b, double lambda,
                                      double rho) {
  FEDWD_RETURN_IF_ERROR(CheckPositive("q", q));
  FEDWD_RETURN_IF_ERROR(CheckPositive("c1", c1));
  FEDWD_RETURN_IF_ERROR(CheckPositive("c2", c2));
  FEDWD_RETURN_IF_ERROR(CheckPositive("c_prev", c_prev));
  FEDWD_RETURN_IF_ERROR(CheckPositive("lambda", lambda));
  if (!(n_prev >= 1.0)) {
    return InvalidArgument(absl::StrFormat(
        "N_{b-1} must be >= 1 (the first private batch needs a warm start), got %g",
        n_prev));
  }
  if (!(n_b >= n_prev)) {
    return InvalidArgument(absl::StrFormat("N_b = %g is below N_{b-1} = %g", n_b, n_prev));
  }
  if (!(rho >= 0.0)) return InvalidArgument(absl::StrFormat("rho must be >= 0, got %g", rho));
  const double qq = (q + 1.0) * (q + 1.0);
  Calibration cal;
  cal.t1 = 2.0 * c1 + 2.0 * qq * c1 * c2 * c_prev / (q * std::sqrt(n_prev));
  cal.t2 = 2.0 * std::log1p(qq * c2 * c2 / ((n_b * lambda + rho) * q));
  return cal;
}

absl::StatusOr<double> LaplaceScale(double epsilon, double t1, double t2) {
  if (!(epsilon > t2)) {
    return PrivacyBudgetTooSmall(absl::StrFormat(
        "privacy budget too small: epsilon = %g must exceed T2 = %g", epsilon, t2));
  }
  if (!(t1 >= 0.0)) return InvalidArgument(absl::StrFormat("T1 must be >= 0, got %g", t1));
  return t1 / (epsilon - t2);
}

absl::StatusOr<double> GaussianDelta1(double q, double c2, double c_prev,
                                      double n_prev) {
  FEDWD_RETURN_IF_ERROR(CheckPositive("q", q));
  FEDWD_RETURN_IF_ERROR(CheckPositive("c2", c2));
  FEDWD_RETURN_IF_ERROR(CheckPositive("c_prev", c_prev));
  if (!(n_prev >= 1.0)) {
    return InvalidArgument(absl::StrFormat(
        "N_{b-1} must be >= 1 (the first private batch needs a warm start), got %g",
        n_prev));
  }
  const double qq = (q + 1.0) * (q + 1.0);
  return 2.0 * c2 + 2.0 * qq * c2 * c2 * c_prev / (q * std::sqrt(n_prev));
}

absl::StatusOr<double> GaussianSigma(double epsilon, double delta, double delta1) {
  FEDWD_RETURN_IF_ERROR(CheckPositive("epsilon", epsilon));
  if (!(delta > 0.0 && delta < 1.0)) {
    return InvalidArgument(absl::StrFormat("delta must lie in (0, 1), got %g", delta));
  }
  if (!(delta1 >= 0.0)) {
    return InvalidArgument(absl::StrFormat("Delta1 must be >= 0, got %g", delta1));
  }
  const double two_log = 2.0 * std::log(1.0 / delta);
  return delta1 * (std::sqrt(two_log) + std::sqrt(two_log + epsilon)) / epsilon;
}

double MinRho(double epsilon, double q, double c2, double n_b, double lambda) {
  const double bound =
      (q + 1.0) * (q + 1.0) * c2 * c2 / (std::expm1(epsilon / 4.0) * q) - n_b * lambda;
  return std::max(0.0, bound);
}

NoiseDraw SampleNoise(const DpConfig& config, double scale, int dim, Rng& rng) {
  NoiseDraw draw;
  draw.xi.assign(dim, 0.0);
  draw.scale = scale;
  draw.seed_path = absl::StrFormat("%s@%d", rng.path(), rng.draws());
  if (scale == 0.0) return draw;
  for (double& v : draw.xi) {
    if (config.mechanism == Mechanism::kLaplace) {
      const double u = rng.OpenUniform() - 0.5;
      const double mag = -scale * std::log1p(-2.0 * std::abs(u));
      v = u < 0.0 ? -mag : mag;
    } else {
      v = scale * rng.Normal();
    }
  }
  return draw;
}

absl::StatusOr<OnlineState> ApplyPrivateUpdate(const OnlineState& state,
                                               const FederatedDataset& batch,
                                               const Hyper& hyper, double rho,
                                               std::span<const double> xi) {
  FEDWD_RETURN_IF_ERROR(hyper.Validate());
  if (batch.TotalCount() == 0) return InvalidArgument("batch is empty");
  if (batch.p != state.p()) {
    return InvalidArgument(absl::StrFormat(
        "batch has p = %d but the stream has p = %d", batch.p, state.p()));
  }
  if (static_cast<int>(xi.size()) != state.theta.dim()) {
    return InvalidArgument(absl::StrFormat("noise has length %d, expected %d",
                                           xi.size(), state.theta.dim()));
  }
  if (!(rho >= 0.0)) return InvalidArgument(absl::StrFormat("rho must be >= 0, got %g", rho));
  FEDWD_RETURN_IF_ERROR(batch.Validate());

  FEDWD_ASSIGN_OR_RETURN(AggregateSummary agg, Aggregate(batch, state.theta, hyper));
  OnlineState next = state;
  FEDWD_RETURN_IF_ERROR(next.j_acc.Add(agg.curvature));

  Vector rhs = next.j_acc.Multiply(state.theta.values());
  Axpy(-1.0, agg.grad, rhs);
  Axpy(-1.0, xi, rhs);
  SymMatrix system = next.j_acc;
  system.AddScaledIdentity(rho);
  FEDWD_ASSIGN_OR_RETURN(Vector theta, SolveSpd(system, rhs));

  next.theta = ModelState(std::move(theta));
  next.n_acc += agg.count;
  next.batch_index += 1;
  if (!next.first_lambda.has_value()) {
    next.first_lambda = hyper.lambda;
  } else if (*next.first_lambda != hyper.lambda) {
    next.lambda_varied = true;
  }
  return next;
}

absl::StatusOr<PrivateUpdateResult> UpdatePrivate(const OnlineState& state,
                                                  const FederatedDataset& batch,
                                                  const Hyper& hyper,
                                                  const DpConfig& dp, Rng& rng) {
  FEDWD_RETURN_IF_ERROR(dp.Validate());
  FEDWD_RETURN_IF_ERROR(hyper.Validate());
  if (batch.TotalCount() == 0) return InvalidArgument("batch is empty");
  if (batch.p != state.p()) {
    return InvalidArgument(absl::StrFormat(
        "batch has p = %d but the stream has p = %d", batch.p, state.p()));
  }
  for (size_t m = 0; m < batch.clients.size(); ++m) {
    for (size_t i = 0; i < batch.clients[m].size(); ++i) {
      const Vector& x = batch.clients[m][i].x;
      if (static_cast<int>(x.size()) == batch.p && !SatisfiesFeatureBounds(x, dp.c1, dp.c2)) {
        return ConditionViolation(absl::StrFormat(
            "client %d point %d violates the feature bounds: ||x̄||_1 = %g (cap "
            "%g), ||x̄||_2 = %g (cap %g); clip features before private updates",
            m, i, 1.0 + Norm1(x), dp.c1, std::sqrt(1.0 + Dot(x, x)), dp.c2));
      }
    }
  }

  PrivateUpdateResult result;
  PrivateUpdateRecord& record = result.record;
  const double count = static_cast<double>(batch.TotalCount());

  if (state.n_acc == 0 && dp.n0_floor == 0) {
    record.warm_start = true;
    record.n_b = count;
    record.noise.xi.assign(state.theta.dim(), 0.0);
    record.noise.seed_path = rng.path();
    FEDWD_ASSIGN_OR_RETURN(result.state, Update(state, batch, hyper));
    return result;
  }

  record.n_prev = std::max(static_cast<double>(state.n_acc),
                           static_cast<double>(dp.n0_floor));
  record.n_b = record.n_prev + count;
  const double rho_floor = MinRho(dp.epsilon, hyper.q, dp.c2, record.n_b, hyper.lambda);
  record.rho = dp.rho.value_or(rho_floor);
  if (record.rho < rho_floor * (1.0 - 1e-12)) {
    const std::string message = absl::StrFormat(
        "rho = %g is below the lower bound %g required for the privacy guarantee",
        record.rho, rho_floor);
    if (dp.mechanism == Mechanism::kLaplace) return ConditionViolation(message);
    record.rho_bound_met = false;
    record.warnings.push_back(message);
  }

  double scale = 0.0;
  if (dp.mechanism == Mechanism::kLaplace) {
    FEDWD_ASSIGN_OR_RETURN(Calibration cal,
                           CalibT1T2(hyper.q, dp.c1, dp.c2, dp.c_prev, record.n_prev,
                                     record.n_b, hyper.lambda, record.rho));
    FEDWD_ASSIGN_OR_RETURN(scale, LaplaceScale(dp.epsilon, cal.t1, cal.t2));
    record.calibration = cal;
  } else {
    FEDWD_ASSIGN_OR_RETURN(double delta1,
                           GaussianDelta1(hyper.q, dp.c2, dp.c_prev, record.n_prev));
    FEDWD_ASSIGN_OR_RETURN(scale, GaussianSigma(dp.epsilon, dp.delta, delta1));
    record.delta1 = delta1;
  }
  record.noise = SampleNoise(dp, scale, state.theta.dim(), rng);
  FEDWD_ASSIGN_OR_RETURN(result.state, ApplyPrivateUpdate(state, batch, hyper,
                                                          record.rho, record.noise.xi));
  return result;
}

}  // namespace fedwd
