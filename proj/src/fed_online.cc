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

#include "fedwd/fed_online.h"

#include "absl/strings/str_format.h"
#include "fedwd/status.h"
#include "json.hpp"

namespace fedwd {

absl::StatusOr<OnlineState> InitState(int p, const ModelState& theta0) {
  if (p < 1) return InvalidArgument(absl::StrFormat("p must be >= 1, got %d", p));
  if (theta0.dim() != p + 1) {
    return InvalidArgument(absl::StrFormat(
        "theta0 has length %d, expected p + 1 = %d", theta0.dim(), p + 1));
  }
  if (!theta0.AllFinite()) return InvalidArgument("theta0 has non-finite entries");
  OnlineState state;
  state.theta = theta0;
  state.j_acc = SymMatrix(p + 1);
  return state;
}

absl::StatusOr<OnlineState> Update(const OnlineState& state,
                                   const FederatedDataset& batch,
                                   const Hyper& hyper) {
  FEDWD_RETURN_IF_ERROR(hyper.Validate());
  if (batch.TotalCount() == 0) return InvalidArgument("batch is empty");
  if (batch.p != state.p()) {
    return InvalidArgument(absl::StrFormat(
        "batch has p = %d but the stream has p = %d", batch.p, state.p()));
  }
  FEDWD_RETURN_IF_ERROR(batch.Validate());

  FEDWD_ASSIGN_OR_RETURN(AggregateSummary agg, Aggregate(batch, state.theta, hyper));
  OnlineState next = state;
  FEDWD_RETURN_IF_ERROR(next.j_acc.Add(agg.curvature));
  FEDWD_ASSIGN_OR_RETURN(Vector step, SolveSpd(next.j_acc, agg.grad));
  Axpy(-1.0, step, next.theta.mutable_values());
  next.n_acc += agg.count;
  next.batch_index += 1;
  if (!next.first_lambda.has_value()) {
    next.first_lambda = hyper.lambda;
  } else if (*next.first_lambda != hyper.lambda) {
    next.lambda_varied = true;
  }
  return next;
}

absl::StatusOr<StreamResult> RunStream(const std::vector<FederatedDataset>& batches,
                                       const Hyper& hyper,
                                       const ModelState& theta0) {
  FEDWD_ASSIGN_OR_RETURN(OnlineState state, InitState(theta0.p(), theta0));
  StreamResult result;
  result.trace.reserve(batches.size());
  for (size_t b = 0; b < batches.size(); ++b) {
    absl::StatusOr<OnlineState> next = Update(state, batches[b], hyper);
    if (!next.ok()) {
      return WithContext(next.status(), absl::StrFormat("batch %d", b + 1));
    }
    state = *std::move(next);
    result.trace.push_back(state.theta);
  }
  result.state = std::move(state);
  return result;
}

std::string SerializeState(const OnlineState& state) {
  nlohmann::json doc;
  doc["dim"] = state.theta.dim();
  doc["theta"] = state.theta.values();
  doc["j_acc_lower"] = state.j_acc.PackedLower();
  doc["n_acc"] = state.n_acc;
  doc["batch_index"] = state.batch_index;
  if (state.first_lambda.has_value()) doc["lambda"] = *state.first_lambda;
  doc["lambda_varied"] = state.lambda_varied;
  return doc.dump(2);
}

absl::StatusOr<OnlineState> DeserializeState(const std::string& json) {
  nlohmann::json doc = nlohmann::json::parse(json, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    return ParseError("state snapshot is not a JSON object");
  }
  for (const char* key : {"dim", "theta", "j_acc_lower", "n_acc", "batch_index"}) {
    if (!doc.contains(key)) {
      return ParseError(absl::StrFormat("state snapshot is missing \"%s\"", key));
    }
  }
  OnlineState state;
  try {
    const int dim = doc["dim"].get<int>();
    Vector theta = doc["theta"].get<Vector>();
    if (dim < 2 || static_cast<int>(theta.size()) != dim) {
      return ParseError(absl::StrFormat(
          "state snapshot: theta has %d entries but dim is %d", theta.size(), dim));
    }
    state.theta = ModelState(std::move(theta));
    const Vector packed = doc["j_acc_lower"].get<Vector>();
    FEDWD_ASSIGN_OR_RETURN(state.j_acc, SymMatrix::FromPackedLower(dim, packed));
    state.n_acc = doc["n_acc"].get<long long>();
    state.batch_index = doc["batch_index"].get<int>();
    if (doc.contains("lambda")) state.first_lambda = doc["lambda"].get<double>();
    if (doc.contains("lambda_varied")) state.lambda_varied = doc["lambda_varied"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    return ParseError(absl::StrFormat("state snapshot: %s", e.what()));
  }
  if (state.n_acc < 0 || state.batch_index < 0) {
    return ParseError("state snapshot has negative counters");
  }
  return state;
}

}  // namespace fedwd
