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

#ifndef FEDWD_FED_OFFLINE_H_
#define FEDWD_FED_OFFLINE_H_

#include <vector>

#include "absl/status/statusor.h"
#include "fedwd/dense_linalg.h"
#include "fedwd/dwd_core.h"

namespace fedwd {

// A fixed dataset split across M clients. Client order is the reduction order.
struct FederatedDataset {
  std::vector<std::vector<LabeledPoint>> clients;
  int p = 0;

  int num_clients() const { return static_cast<int>(clients.size()); }
  int TotalCount() const;
  // All points in client order, then stored order within a client.
  std::vector<LabeledPoint> Pooled() const;
  // Shape checks only: M >= 1, N >= 1, every point has p features and a valid
  // label, every feature finite.
  absl::Status Validate() const;
};

// Server-side sum of client summaries, reduced in ascending client index.
struct AggregateSummary {
  Vector grad;
  SymMatrix curvature;
  int count = 0;
};

absl::StatusOr<AggregateSummary> Aggregate(const FederatedDataset& data,
                                           const ModelState& theta,
                                           const Hyper& hyper);

// Sum over clients of the per-client loss (each client carries its own
// n^{(m)} lambda / 2 penalty, which sums to the pooled penalty).
absl::StatusOr<double> FederatedLoss(const FederatedDataset& data,
                                     const ModelState& theta,
                                     const Hyper& hyper);

// theta^{t+1} = theta^t - [sum_m H̄^m]^{-1} sum_m grad L^m.
absl::StatusOr<ModelState> MmStep(const FederatedDataset& data,
                                  const ModelState& theta_t, const Hyper& hyper);

// Quadratic model of the loss around theta_ref built from the summaries at
// theta_ref, evaluated at theta.
absl::StatusOr<double> Surrogate(const FederatedDataset& data,
                                 const ModelState& theta,
                                 const ModelState& theta_ref, const Hyper& hyper);

enum class StepKind {
  kLocalCurvature,  // plain MM step from the smoothed local curvature
  kGlobalBound,     // fallback step from the global curvature bound
};

struct FitReport {
  ModelState theta;
  int iterations = 0;
  double final_step_norm = 0.0;
  // loss_trace[0] is the loss at theta0; entry t is the loss after step t.
  std::vector<double> loss_trace;
  std::vector<StepKind> step_kinds;
  int fallback_steps = 0;
  bool converged = false;
};

// Iterates MM steps until the step norm drops to hyper.tol or hyper.max_iter
// steps have been taken.
//
// A step from the local smoothed curvature is accepted only if it does not
// increase the loss. Otherwise the step is recomputed with the curvature
// replaced by (q+1)^2/q * sum_i x̄_i x̄_i^T + N lambda I, which majorizes the
// loss everywhere, so every accepted step is a descent step.
absl::StatusOr<FitReport> FitOffline(const FederatedDataset& data,
                                     const Hyper& hyper,
                                     const ModelState& theta0);

}  // namespace fedwd

#endif  // FEDWD_FED_OFFLINE_H_
