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

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fedwd/cli.h"
#include "fedwd/config.h"
#include "fedwd/eval_harness.h"
#include "fedwd/status.h"

namespace {

struct Flags {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> replicates;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<std::string> mechanism;
  std::optional<double> lambda;
  std::optional<double> q;
};

void AddFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config with flat dotted keys");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--replicates", f.replicates, "Monte Carlo replicates");
  cmd->add_option("--epsilon", f.epsilon, "privacy budget per update");
  cmd->add_option("--delta", f.delta, "Gaussian mechanism delta");
  cmd->add_option("--mechanism", f.mechanism, "laplace or gaussian")
      ->check(CLI::IsMember({"laplace", "gaussian"}, CLI::ignore_case));
  cmd->add_option("--lambda", f.lambda, "ridge penalty");
  cmd->add_option("--q", f.q, "DWD loss exponent");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated generalized DWD: simulation, fitting and benchmarks"};
  app.set_version_flag("--version", std::string(fedwd::kVersion));
  app.require_subcommand(1);

  Flags flags;
  const char* kCommands[][2] = {
      {"simulate", "generate a synthetic stream and dump it as CSV"},
      {"fit-offline", "fit the offline federated MM solver"},
      {"fit-online", "fit the online renewable estimator"},
      {"fit-online-dp", "fit the differentially private online estimator"},
      {"evaluate", "score a saved theta snapshot on a test CSV"},
      {"benchmark", "Monte Carlo comparison of the requested methods"},
  };
  for (const auto& [name, help] : kCommands) AddFlags(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; usage errors share the config-error code.
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  absl::StatusOr<fedwd::Subcommand> cmd = fedwd::ParseSubcommand(name);
  if (!cmd.ok()) {
    std::cerr << "error: " << cmd.status().message() << '\n';
    return 2;
  }
  fedwd::FlagOverrides overrides;
  overrides.seed = flags.seed;
  overrides.out = flags.out;
  overrides.replicates = flags.replicates;
  overrides.epsilon = flags.epsilon;
  overrides.delta = flags.delta;
  overrides.mechanism = flags.mechanism;
  overrides.lambda = flags.lambda;
  overrides.q = flags.q;

  absl::StatusOr<fedwd::RunConfig> config = fedwd::LoadConfig(*cmd, flags.config, overrides);
  if (!config.ok()) {
    std::cerr << "config error: " << config.status().message() << '\n';
    return 2;
  }
  const absl::Status status = fedwd::Dispatch(*config, std::cout);
  if (!status.ok()) {
    std::cerr << "error (" << fedwd::ErrorKindName(fedwd::GetErrorKind(status))
              << "): " << status.message() << '\n';
    return 1;
  }
  return 0;
}
