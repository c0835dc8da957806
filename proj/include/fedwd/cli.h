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

#ifndef FEDWD_CLI_H_
#define FEDWD_CLI_H_

#include <ostream>
#include <string>

#include "absl/status/statusor.h"
#include "fedwd/config.h"
#include "fedwd/dwd_core.h"

namespace fedwd {

// Runs the pipeline for config.subcommand, writes outputs under config.out and
// prints a human-readable summary to out.
absl::Status Dispatch(const RunConfig& config, std::ostream& out);

// Theta snapshots as written by the fit subcommands.
absl::Status WriteThetaSnapshot(const ModelState& theta, std::string_view method,
                                std::string_view config_hash, const std::string& path);
absl::StatusOr<ModelState> ReadThetaSnapshot(const std::string& path);

// Loads batch_0001.csv, batch_0002.csv, ... from dir until the next index is
// missing. Each batch is cut into `clients` contiguous shards.
absl::StatusOr<std::vector<FederatedDataset>> LoadBatchDir(const std::string& dir,
                                                           int clients);

}  // namespace fedwd

#endif  // FEDWD_CLI_H_
