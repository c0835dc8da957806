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
#include <optional>

#include "absl/strings/str_format.h"
#include "fedwd/status.h"

namespace fedwd {
namespace {

absl::Status CheckTheta(const FederatedDataset& data, const ModelState& theta) {
  if (theta.dim() != data.p + 1) {
    return InvalidArgument(absl::StrFormat(
        "theta has length %d, expected p + 1 = %d", theta.dim(), data.p + 1));
  }
  return absl::OkStatus();
}

// Sum over all clients of x̄ x̄^T. Independent of theta.
SymMatrix GramMatrix(const FederatedDataset& data) {
  SymMatrix gram(data.p + 1);
  for (const auto& client : data.clients) {
    for (const LabeledPoint& pt : client) gram.AddOuterAugmented(pt.x, 1.0);
  }
  return gram;
}

}  // namespace

int FederatedDataset::TotalCount() const {
  int n = 0;
  for (const auto& client : clients) n += static_cast<int>(client.size());
  return n;
}

std::vector<LabeledPoint> FederatedDataset::Pooled() const {
  std::vector<LabeledPoint> pooled;
  pooled.reserve(TotalCount());
  for (const auto& client : clients) pooled.insert(pooled.end(), client.begin(), client.end());
  return pooled;
}

absl::Status FederatedDataset::Validate() const {
  if (clients.empty()) return InvalidArgument("dataset has no clients");
  if (p < 1) return InvalidArgument(absl::StrFormat("p must be >= 1, got %d", p));
  if (TotalCount() < 1) return InvalidArgument("dataset has no points");
  for (size_t m = 0; m < clients.size(); ++m) {
    absl::Status status = ValidatePoints(clients[m], p);
    if (!status.ok()) {
      return InvalidArgument(absl::StrFormat("client %d: %s", m, status.message()));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<AggregateSummary> Aggregate(const FederatedDataset& data,
                                           const ModelState& theta,
                                           const Hyper& hyper) {
  FEDWD_RETURN_IF_ERROR(CheckTheta(data, theta));
  AggregateSummary total{Vector(theta.dim(), 0.0), SymMatrix(theta.dim()), 0};
  for (const auto& client : data.clients) {
    FEDWD_ASSIGN_OR_RETURN(ClientSummary summary, Summarize(client, theta, hyper));
    Axpy(1.0, summary.grad, total.grad);
    FEDWD_RETURN_IF_ERROR(total.curvature.Add(summary.curvature));
    total.count += summary.count;
  }
  return total;
}

absl::StatusOr<double> FederatedLoss(const FederatedDataset& data,
                                     const ModelState& theta,
                                     const Hyper& hyper) {
  FEDWD_RETURN_IF_ERROR(CheckTheta(data, theta));
  double total = 0.0;
  for (const auto& client : data.clients) {
    FEDWD_ASSIGN_OR_RETURN(double loss, Loss(client, theta, hyper));
    total += loss;
  }
  return total;
}

absl::StatusOr<ModelState> MmStep(const FederatedDataset& data,
                                  const ModelState& theta_t, const Hyper& hyper) {
  FEDWD_ASSIGN_OR_RETURN(AggregateSummary agg, Aggregate(data, theta_t, hyper));
  FEDWD_ASSIGN_OR_RETURN(Vector step, SolveSpd(agg.curvature, agg.grad));
  Vector next = theta_t.values();
  Axpy(-1.0, step, next);
  return ModelState(std::move(next));
}

absl::StatusOr<double> Surrogate(const FederatedDataset& data,
                                 const ModelState& theta,
                                 const ModelState& theta_ref, const Hyper& hyper) {
  FEDWD_RETURN_IF_ERROR(CheckTheta(data, theta));
  FEDWD_ASSIGN_OR_RETURN(double base, FederatedLoss(data, theta_ref, hyper));
  FEDWD_ASSIGN_OR_RETURN(AggregateSummary agg, Aggregate(data, theta_ref, hyper));
  const Vector d = Subtract(theta.values(), theta_ref.values());
  const Vector hd = agg.curvature.Multiply(d);
  return base + Dot(d, agg.grad) + 0.5 * Dot(d, hd);
}

absl::StatusOr<FitReport> FitOffline(const FederatedDataset& data,
                                     const Hyper& hyper,
                                     const ModelState& theta0) {
  FEDWD_RETURN_IF_ERROR(hyper.Validate());
  FEDWD_RETURN_IF_ERROR(data.Validate());
  FEDWD_RETURN_IF_ERROR(CheckTheta(data, theta0));

  FitReport report;
  report.theta = theta0;
  FEDWD_ASSIGN_OR_RETURN(double current_loss, FederatedLoss(data, theta0, hyper));
  report.loss_trace.push_back(current_loss);

  std::optional<Cholesky> bound_factor;
  const double n_lambda = data.TotalCount() * hyper.lambda;

  for (int it = 1; it <= hyper.max_iter; ++it) {
    FEDWD_ASSIGN_OR_RETURN(AggregateSummary agg, Aggregate(data, report.theta, hyper));
    FEDWD_ASSIGN_OR_RETURN(Vector step, SolveSpd(agg.curvature, agg.grad));
    Vector candidate = report.theta.values();
    Axpy(-1.0, step, candidate);
    FEDWD_ASSIGN_OR_RETURN(double candidate_loss,
                           FederatedLoss(data, ModelState(candidate), hyper));
    StepKind kind = StepKind::kLocalCurvature;

    const double slack = 1e-12 * (1.0 + std::abs(current_loss));
    if (!(candidate_loss <= current_loss + slack)) {
      if (!bound_factor.has_value()) {
        SymMatrix bound = GramMatrix(data);
        SymMatrix scaled(bound.dim());
        FEDWD_RETURN_IF_ERROR(scaled.Add(bound, CurvatureBound(hyper.q)));
        scaled.AddScaledIdentity(n_lambda);
        FEDWD_ASSIGN_OR_RETURN(Cholesky chol, Cholesky::Factor(scaled));
        bound_factor = std::move(chol);
      }
      step = bound_factor->Solve(agg.grad);
      candidate = report.theta.values();
      Axpy(-1.0, step, candidate);
      FEDWD_ASSIGN_OR_RETURN(candidate_loss,
                             FederatedLoss(data, ModelState(candidate), hyper));
      kind = StepKind::kGlobalBound;
      ++report.fallback_steps;
    }

    report.theta = ModelState(std::move(candidate));
    current_loss = candidate_loss;
    report.loss_trace.push_back(current_loss);
    report.step_kinds.push_back(kind);
    report.iterations = it;
    report.final_step_norm = Norm2(step);
    if (report.final_step_norm <= hyper.tol) {
      report.converged = true;
      break;
    }
  }
  return report;
}

}  // namespace fedwd
