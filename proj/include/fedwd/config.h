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

#ifndef FEDWD_CONFIG_H_
#define FEDWD_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "fedwd/datagen.h"
#include "fedwd/dp_mechanism.h"
#include "fedwd/dwd_core.h"
#include "fedwd/eval_harness.h"

namespace fedwd {

enum class Subcommand { kSimulate, kFitOffline, kFitOnline, kFitOnlineDp, kEvaluate, kBenchmark };

std::string_view SubcommandName(Subcommand cmd);
absl::StatusOr<Subcommand> ParseSubcommand(std::string_view name);

// CSV inputs. train feeds the fit/benchmark pipelines, batch_dir is a dumped
// stream (batch_0001.csv, ...) for fit-online, and theta + test drive
// evaluate.
struct DataSpec {
  std::string train;
  std::string test;
  std::string batch_dir;
  std::string theta;
  std::string label_column = "y";
  std::string positive_tag = "1";
  std::string negative_tag = "-1";
  int clients = 10;
  int batches = 100;
  int train_parts = 4;
  int test_parts = 1;
};

struct RunConfig {
  Subcommand subcommand = Subcommand::kBenchmark;
  std::optional<SimDesign> design;
  std::optional<DataSpec> data;
  Hyper hyper;
  std::optional<DpConfig> dp;
  bool fixed_bounds = false;
  bool pooled_retrain_per_batch = false;
  OnlineInit online_init = OnlineInit::kZero;
  std::vector<Method> methods;
  int replicates = 1;
  std::string out = "fedwd_out";
  uint64_t seed = 1;

  absl::Status Validate() const;
};

// Command-line values that take precedence over the config file.
struct FlagOverrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> replicates;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<std::string> mechanism;
  std::optional<double> lambda;
  std::optional<double> q;
};

// Parses a JSON object of flat dotted keys ("design.p", "hyper.lambda", ...).
// Nested objects are flattened to the same keys. Unknown keys are rejected.
absl::StatusOr<RunConfig> ParseConfig(Subcommand subcommand, std::string_view json_text,
                                      const FlagOverrides& flags = {});
// Reads path (empty: no file) and calls ParseConfig.
absl::StatusOr<RunConfig> LoadConfig(Subcommand subcommand, const std::string& path,
                                     const FlagOverrides& flags = {});

// The resolved configuration as flat dotted keys.
std::string EchoConfig(const RunConfig& config);

}  // namespace fedwd

#endif  // FEDWD_CONFIG_H_
