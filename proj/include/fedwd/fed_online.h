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

#ifndef FEDWD_FED_ONLINE_H_
#define FEDWD_FED_ONLINE_H_

#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fedwd/dense_linalg.h"
#include "fedwd/dwd_core.h"
#include "fedwd/fed_offline.h"

namespace fedwd {

// Server state of the renewable estimator after b - 1 batches. Holds no raw
// observations: its size is O(p^2) however many batches have been consumed.
struct OnlineState {
  ModelState theta;
  SymMatrix j_acc;  // running sum of aggregated curvature matrices
  long long n_acc = 0;
  int batch_index = 0;
  // Set when a batch was processed with a lambda different from the first
  // batch's. Shared lambda is the supported configuration.
  std::optional<double> first_lambda;
  bool lambda_varied = false;

  int p() const { return theta.p(); }
};

absl::StatusOr<OnlineState> InitState(int p, const ModelState& theta0);

// Consumes one batch: curvature and gradient are evaluated at the previous
// estimate, then theta_b = theta_{b-1} - [j_acc + J_b]^{-1} g_b.
absl::StatusOr<OnlineState> Update(const OnlineState& state,
                                   const FederatedDataset& batch,
                                   const Hyper& hyper);

struct StreamResult {
  OnlineState state;
  std::vector<ModelState> trace;  // one estimate per consumed batch
};

absl::StatusOr<StreamResult> RunStream(const std::vector<FederatedDataset>& batches,
                                       const Hyper& hyper,
                                       const ModelState& theta0);

// Flat JSON snapshot: {"theta": [...], "j_acc_lower": [...], "n_acc": N,
// "batch_index": b, "dim": p + 1, ...}. The lower triangle is packed row by row.
std::string SerializeState(const OnlineState& state);
absl::StatusOr<OnlineState> DeserializeState(const std::string& json);

}  // namespace fedwd

#endif  // FEDWD_FED_ONLINE_H_
