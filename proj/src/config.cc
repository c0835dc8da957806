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

#include "fedwd/config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "fedwd/status.h"
#include "json.hpp"

namespace fedwd {
namespace {

using Json = nlohmann::json;
using FlatMap = std::map<std::string, Json>;

void Flatten(const Json& node, const std::string& prefix, FlatMap& out) {
  if (node.is_object()) {
    for (const auto& [key, value] : node.items()) {
      Flatten(value, prefix.empty() ? key : prefix + "." + key, out);
    }
    return;
  }
  out[prefix] = node;
}

absl::Status FieldError(std::string_view key, std::string_view what) {
  return InvalidArgument(absl::StrFormat("config field \"%s\": %s", ToAbsl(key), ToAbsl(what)));
}

absl::StatusOr<double> AsDouble(const std::string& key, const Json& v) {
  if (!v.is_number()) return FieldError(key, "expected a number");
  return v.get<double>();
}

absl::StatusOr<long long> AsInt(const std::string& key, const Json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  return FieldError(key, "expected an integer");
}

absl::StatusOr<std::string> AsString(const std::string& key, const Json& v) {
  if (!v.is_string()) return FieldError(key, "expected a string");
  return v.get<std::string>();
}

absl::StatusOr<bool> AsBool(const std::string& key, const Json& v) {
  if (!v.is_boolean()) return FieldError(key, "expected true or false");
  return v.get<bool>();
}

// A number, or [low, high] for a uniform range.
absl::StatusOr<std::pair<double, double>> AsRange(const std::string& key, const Json& v) {
  if (v.is_number()) return std::make_pair(v.get<double>(), v.get<double>());
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return std::make_pair(v[0].get<double>(), v[1].get<double>());
  }
  return FieldError(key, "expected a number or [low, high]");
}

absl::StatusOr<std::pair<int, int>> AsRatio(const std::string& key, const Json& v) {
  FEDWD_ASSIGN_OR_RETURN(std::string text, AsString(key, v));
  std::vector<std::string> parts = absl::StrSplit(text, ':');
  int a = 0, b = 0;
  if (parts.size() != 2 || !absl::SimpleAtoi(parts[0], &a) || !absl::SimpleAtoi(parts[1], &b) ||
      a < 1 || b < 1) {
    return FieldError(key, absl::StrFormat("expected a ratio like \"4:1\", got \"%s\"", text));
  }
  return std::make_pair(a, b);
}

absl::StatusOr<std::vector<Method>> AsMethods(const std::string& key, const Json& v) {
  std::vector<std::string> names;
  if (v.is_string()) {
    for (absl::string_view part : absl::StrSplit(v.get<std::string>(), ',', absl::SkipEmpty())) {
      names.emplace_back(absl::StripAsciiWhitespace(part));
    }
  } else if (v.is_array()) {
    for (const Json& e : v) {
      if (!e.is_string()) return FieldError(key, "expected method names");
      names.push_back(e.get<std::string>());
    }
  } else {
    return FieldError(key, "expected a list of method names");
  }
  std::vector<Method> methods;
  for (const std::string& name : names) {
    absl::StatusOr<Method> m = ParseMethod(name);
    if (!m.ok()) return FieldError(key, FromAbsl(m.status().message()));
    if (std::find(methods.begin(), methods.end(), *m) == methods.end()) methods.push_back(*m);
  }
  if (methods.empty()) return FieldError(key, "empty method list");
  return methods;
}

bool HasPrefix(const FlatMap& flat, std::string_view prefix) {
  for (const auto& [key, value] : flat) {
    if (key.rfind(prefix, 0) == 0) return true;
  }
  return false;
}

bool Contains(const std::vector<Method>& methods, Method m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

Json ParamJson(const ParamSpec& spec) {
  if (spec.is_fixed()) return spec.low;
  return Json::array({spec.low, spec.high});
}

}  // namespace

std::string_view SubcommandName(Subcommand cmd) {
  switch (cmd) {
    case Subcommand::kSimulate:
      return "simulate";
    case Subcommand::kFitOffline:
      return "fit-offline";
    case Subcommand::kFitOnline:
      return "fit-online";
    case Subcommand::kFitOnlineDp:
      return "fit-online-dp";
    case Subcommand::kEvaluate:
      return "evaluate";
    case Subcommand::kBenchmark:
      return "benchmark";
  }
  return "?";
}

absl::StatusOr<Subcommand> ParseSubcommand(std::string_view name) {
  for (Subcommand c : {Subcommand::kSimulate, Subcommand::kFitOffline, Subcommand::kFitOnline,
                       Subcommand::kFitOnlineDp, Subcommand::kEvaluate, Subcommand::kBenchmark}) {
    if (name == SubcommandName(c)) return c;
  }
  return InvalidArgument(absl::StrFormat("unknown subcommand \"%s\"", ToAbsl(name)));
}

absl::Status RunConfig::Validate() const {
  if (design.has_value() == data.has_value()) {
    return InvalidArgument("exactly one of design.* and data.* must be given");
  }
  if (design.has_value()) FEDWD_RETURN_IF_ERROR(design->Validate());
  FEDWD_RETURN_IF_ERROR(hyper.Validate());
  if (dp.has_value()) FEDWD_RETURN_IF_ERROR(dp->Validate());
  if (replicates < 1) return FieldError("replicates", "must be >= 1");
  if (out.empty()) return FieldError("out", "must not be empty");

  const bool wants_dp = Contains(methods, Method::kOnWDP);
  if (subcommand != Subcommand::kSimulate && subcommand != Subcommand::kEvaluate) {
    if (methods.empty()) return FieldError("methods", "no methods to run");
    if (wants_dp && !dp.has_value()) {
      return FieldError("dp", "OnWDP is requested but no dp.* settings are given");
    }
    if (!wants_dp && dp.has_value()) {
      return FieldError("dp", "dp.* settings are given but OnWDP is not requested");
    }
  }
  switch (subcommand) {
    case Subcommand::kSimulate:
      if (!design.has_value()) return FieldError("design", "simulate needs a synthetic design");
      break;
    case Subcommand::kEvaluate:
      if (!data.has_value() || data->theta.empty()) {
        return FieldError("data.theta", "evaluate needs a theta snapshot");
      }
      if (data->test.empty()) return FieldError("data.test", "evaluate needs a test CSV");
      break;
    case Subcommand::kFitOnlineDp:
      if (!wants_dp) return FieldError("methods", "fit-online-dp runs OnWDP");
      [[fallthrough]];
    default:
      if (data.has_value()) {
        if (data->train.empty() == data->batch_dir.empty()) {
          return InvalidArgument("exactly one of data.train and data.batch_dir must be given");
        }
        if (data->clients < 1) return FieldError("data.clients", "must be >= 1");
        if (data->batches < 1) return FieldError("data.batches", "must be >= 1");
      }
      break;
  }
  return absl::OkStatus();
}

absl::StatusOr<RunConfig> ParseConfig(Subcommand subcommand, std::string_view json_text,
                                      const FlagOverrides& flags) {
  Json root = Json::parse(json_text.begin(), json_text.end(), nullptr, false);
  if (root.is_discarded()) return ParseError("config is not valid JSON");
  if (!root.is_object()) return ParseError("config must be a JSON object");
  FlatMap flat;
  Flatten(root, "", flat);

  RunConfig cfg;
  cfg.subcommand = subcommand;
  const bool has_design = HasPrefix(flat, "design.");
  const bool has_data = HasPrefix(flat, "data.");
  if (has_design && has_data) {
    return InvalidArgument("exactly one of design.* and data.* must be given");
  }
  if (has_data || subcommand == Subcommand::kEvaluate) {
    cfg.data = DataSpec{};
  } else {
    cfg.design = SimDesign{};
  }
  const bool wants_dp_section = HasPrefix(flat, "dp.") || flags.epsilon || flags.delta ||
                                flags.mechanism || subcommand == Subcommand::kFitOnlineDp;
  std::optional<std::vector<Method>> methods;
  bool saw_epsilon = false, saw_delta = false;
  DpConfig dp;
  std::optional<double> mu_low, mu_high, sigma_low, sigma_high;

  for (const auto& [key, v] : flat) {
    SimDesign* d = cfg.design ? &*cfg.design : nullptr;
    DataSpec* ds = cfg.data ? &*cfg.data : nullptr;
    if (key == "seed") {
      FEDWD_ASSIGN_OR_RETURN(long long s, AsInt(key, v));
      if (s < 0) return FieldError(key, "must be >= 0");
      cfg.seed = static_cast<uint64_t>(s);
    } else if (key == "out") {
      FEDWD_ASSIGN_OR_RETURN(cfg.out, AsString(key, v));
    } else if (key == "replicates") {
      FEDWD_ASSIGN_OR_RETURN(long long r, AsInt(key, v));
      cfg.replicates = static_cast<int>(r);
    } else if (key == "methods") {
      FEDWD_ASSIGN_OR_RETURN(methods, AsMethods(key, v));
    } else if (key == "pooled_retrain_per_batch") {
      FEDWD_ASSIGN_OR_RETURN(cfg.pooled_retrain_per_batch, AsBool(key, v));
    } else if (key == "online.init") {
      FEDWD_ASSIGN_OR_RETURN(std::string name, AsString(key, v));
      absl::StatusOr<OnlineInit> init = ParseOnlineInit(name);
      if (!init.ok()) return FieldError(key, FromAbsl(init.status().message()));
      cfg.online_init = *init;
    } else if (key == "hyper.lambda") {
      FEDWD_ASSIGN_OR_RETURN(cfg.hyper.lambda, AsDouble(key, v));
    } else if (key == "hyper.q") {
      FEDWD_ASSIGN_OR_RETURN(cfg.hyper.q, AsDouble(key, v));
    } else if (key == "hyper.eps_smooth") {
      FEDWD_ASSIGN_OR_RETURN(cfg.hyper.eps_smooth, AsDouble(key, v));
    } else if (key == "hyper.max_iter") {
      FEDWD_ASSIGN_OR_RETURN(long long n, AsInt(key, v));
      cfg.hyper.max_iter = static_cast<int>(n);
    } else if (key == "hyper.tol") {
      FEDWD_ASSIGN_OR_RETURN(cfg.hyper.tol, AsDouble(key, v));
    } else if (key == "dp.mechanism") {
      FEDWD_ASSIGN_OR_RETURN(std::string name, AsString(key, v));
      absl::StatusOr<Mechanism> m = ParseMechanism(name);
      if (!m.ok()) return FieldError(key, FromAbsl(m.status().message()));
      dp.mechanism = *m;
    } else if (key == "dp.epsilon") {
      FEDWD_ASSIGN_OR_RETURN(dp.epsilon, AsDouble(key, v));
      saw_epsilon = true;
    } else if (key == "dp.delta") {
      FEDWD_ASSIGN_OR_RETURN(dp.delta, AsDouble(key, v));
      saw_delta = true;
    } else if (key == "dp.rho") {
      if (v.is_string() && v.get<std::string>() == "auto") {
        dp.rho.reset();
      } else {
        FEDWD_ASSIGN_OR_RETURN(dp.rho, AsDouble(key, v));
      }
    } else if (key == "dp.c1") {
      FEDWD_ASSIGN_OR_RETURN(dp.c1, AsDouble(key, v));
    } else if (key == "dp.c2") {
      FEDWD_ASSIGN_OR_RETURN(dp.c2, AsDouble(key, v));
    } else if (key == "dp.c_prev") {
      FEDWD_ASSIGN_OR_RETURN(dp.c_prev, AsDouble(key, v));
    } else if (key == "dp.n0_floor") {
      FEDWD_ASSIGN_OR_RETURN(dp.n0_floor, AsInt(key, v));
    } else if (key == "dp.fixed_bounds") {
      FEDWD_ASSIGN_OR_RETURN(cfg.fixed_bounds, AsBool(key, v));
    } else if (d != nullptr && key == "design.m_clients") {
      FEDWD_ASSIGN_OR_RETURN(long long n, AsInt(key, v));
      d->m_clients = static_cast<int>(n);
    } else if (d != nullptr && key == "design.n_batches") {
      FEDWD_ASSIGN_OR_RETURN(long long n, AsInt(key, v));
      d->n_batches = static_cast<int>(n);
    } else if (d != nullptr && key == "design.n_per_client") {
      FEDWD_ASSIGN_OR_RETURN(long long n, AsInt(key, v));
      d->n_per_client = static_cast<int>(n);
    } else if (d != nullptr && key == "design.p") {
      FEDWD_ASSIGN_OR_RETURN(long long n, AsInt(key, v));
      d->p = static_cast<int>(n);
    } else if (d != nullptr && key == "design.test_size") {
      FEDWD_ASSIGN_OR_RETURN(long long n, AsInt(key, v));
      d->test_size = static_cast<int>(n);
    } else if (d != nullptr && key == "design.mu") {
      FEDWD_ASSIGN_OR_RETURN(auto range, AsRange(key, v));
      mu_low = range.first;
      mu_high = range.second;
    } else if (d != nullptr && key == "design.mu_low") {
      FEDWD_ASSIGN_OR_RETURN(mu_low, AsDouble(key, v));
    } else if (d != nullptr && key == "design.mu_high") {
      FEDWD_ASSIGN_OR_RETURN(mu_high, AsDouble(key, v));
    } else if (d != nullptr && key == "design.sigma") {
      FEDWD_ASSIGN_OR_RETURN(auto range, AsRange(key, v));
      sigma_low = range.first;
      sigma_high = range.second;
    } else if (d != nullptr && key == "design.sigma_low") {
      FEDWD_ASSIGN_OR_RETURN(sigma_low, AsDouble(key, v));
    } else if (d != nullptr && key == "design.sigma_high") {
      FEDWD_ASSIGN_OR_RETURN(sigma_high, AsDouble(key, v));
    } else if (d != nullptr && key == "design.ratio") {
      FEDWD_ASSIGN_OR_RETURN(auto ratio, AsRatio(key, v));
      d->ratio_pos = ratio.first;
      d->ratio_neg = ratio.second;
    } else if (ds != nullptr && key == "data.train") {
      FEDWD_ASSIGN_OR_RETURN(ds->train, AsString(key, v));
    } else if (ds != nullptr && key == "data.test") {
      FEDWD_ASSIGN_OR_RETURN(ds->test, AsString(key, v));
    } else if (ds != nullptr && key == "data.batch_dir") {
      FEDWD_ASSIGN_OR_RETURN(ds->batch_dir, AsString(key, v));
    } else if (ds != nullptr && key == "data.theta") {
      FEDWD_ASSIGN_OR_RETURN(ds->theta, AsString(key, v));
    } else if (ds != nullptr && key == "data.label_column") {
      FEDWD_ASSIGN_OR_RETURN(ds->label_column, AsString(key, v));
    } else if (ds != nullptr && key == "data.positive_tag") {
      FEDWD_ASSIGN_OR_RETURN(ds->positive_tag, AsString(key, v));
    } else if (ds != nullptr && key == "data.negative_tag") {
      FEDWD_ASSIGN_OR_RETURN(ds->negative_tag, AsString(key, v));
    } else if (ds != nullptr && key == "data.clients") {
      FEDWD_ASSIGN_OR_RETURN(long long n, AsInt(key, v));
      ds->clients = static_cast<int>(n);
    } else if (ds != nullptr && key == "data.batches") {
      FEDWD_ASSIGN_OR_RETURN(long long n, AsInt(key, v));
      ds->batches = static_cast<int>(n);
    } else if (ds != nullptr && key == "data.split") {
      FEDWD_ASSIGN_OR_RETURN(auto ratio, AsRatio(key, v));
      ds->train_parts = ratio.first;
      ds->test_parts = ratio.second;
    } else {
      return FieldError(key, "unknown key");
    }
  }

  if (cfg.design.has_value()) {
    SimDesign& d = *cfg.design;
    if (mu_low || mu_high) {
      if (!mu_low || !mu_high) return FieldError("design.mu_low", "needs design.mu_high too");
      d.mu = ParamSpec{*mu_low, *mu_high};
    }
    if (sigma_low || sigma_high) {
      if (!sigma_low || !sigma_high) {
        return FieldError("design.sigma_low", "needs design.sigma_high too");
      }
      d.sigma = ParamSpec{*sigma_low, *sigma_high};
    }
  }

  // Flags win over the file.
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out) cfg.out = *flags.out;
  if (flags.replicates) cfg.replicates = *flags.replicates;
  if (flags.lambda) cfg.hyper.lambda = *flags.lambda;
  if (flags.q) cfg.hyper.q = *flags.q;
  if (flags.mechanism) {
    absl::StatusOr<Mechanism> m = ParseMechanism(*flags.mechanism);
    if (!m.ok()) return FieldError("dp.mechanism", FromAbsl(m.status().message()));
    dp.mechanism = *m;
  }
  if (flags.epsilon) {
    dp.epsilon = *flags.epsilon;
    saw_epsilon = true;
  }
  if (flags.delta) {
    dp.delta = *flags.delta;
    saw_delta = true;
  }
  if (cfg.design.has_value()) cfg.design->seed = cfg.seed;

  if (wants_dp_section) {
    if (!saw_epsilon) return FieldError("dp.epsilon", "required when dp is used");
    if (dp.mechanism == Mechanism::kGaussian && !saw_delta) {
      return FieldError("dp.delta", "required for the gaussian mechanism");
    }
    cfg.dp = dp;
  }

  if (methods.has_value()) {
    cfg.methods = *methods;
  } else {
    switch (subcommand) {
      case Subcommand::kFitOffline:
        cfg.methods = {Method::kOffWP};
        break;
      case Subcommand::kFitOnline:
        cfg.methods = {Method::kOnWP};
        break;
      case Subcommand::kFitOnlineDp:
        cfg.methods = {Method::kOnWDP};
        break;
      case Subcommand::kBenchmark:
        cfg.methods = {Method::kOffWP, Method::kOnWP};
        if (cfg.dp.has_value()) cfg.methods.push_back(Method::kOnWDP);
        break;
      default:
        break;
    }
  }
  FEDWD_RETURN_IF_ERROR(cfg.Validate());
  return cfg;
}

absl::StatusOr<RunConfig> LoadConfig(Subcommand subcommand, const std::string& path,
                                     const FlagOverrides& flags) {
  if (path.empty()) return ParseConfig(subcommand, "{}", flags);
  std::ifstream in(path);
  if (!in) return IoError(absl::StrFormat("cannot open config %s", path));
  std::stringstream buf;
  buf << in.rdbuf();
  absl::StatusOr<RunConfig> cfg = ParseConfig(subcommand, buf.str(), flags);
  if (!cfg.ok()) return WithContext(cfg.status(), path);
  return cfg;
}

std::string EchoConfig(const RunConfig& config) {
  Json j = Json::object();
  j["subcommand"] = std::string(SubcommandName(config.subcommand));
  j["seed"] = config.seed;
  j["out"] = config.out;
  j["replicates"] = config.replicates;
  Json methods = Json::array();
  for (Method m : config.methods) methods.push_back(std::string(MethodName(m)));
  j["methods"] = methods;
  j["pooled_retrain_per_batch"] = config.pooled_retrain_per_batch;
  j["online.init"] = std::string(OnlineInitName(config.online_init));
  j["hyper.lambda"] = config.hyper.lambda;
  j["hyper.q"] = config.hyper.q;
  j["hyper.eps_smooth"] = config.hyper.eps_smooth;
  j["hyper.max_iter"] = config.hyper.max_iter;
  j["hyper.tol"] = config.hyper.tol;
  if (config.design.has_value()) {
    const SimDesign& d = *config.design;
    j["design.m_clients"] = d.m_clients;
    j["design.n_batches"] = d.n_batches;
    j["design.n_per_client"] = d.n_per_client;
    j["design.p"] = d.p;
    j["design.mu"] = ParamJson(d.mu);
    j["design.sigma"] = ParamJson(d.sigma);
    j["design.ratio"] = absl::StrFormat("%d:%d", d.ratio_pos, d.ratio_neg);
    j["design.test_size"] = d.test_size;
  }
  if (config.data.has_value()) {
    const DataSpec& d = *config.data;
    j["data.train"] = d.train;
    j["data.test"] = d.test;
    j["data.batch_dir"] = d.batch_dir;
    j["data.theta"] = d.theta;
    j["data.label_column"] = d.label_column;
    j["data.positive_tag"] = d.positive_tag;
    j["data.negative_tag"] = d.negative_tag;
    j["data.clients"] = d.clients;
    j["data.batches"] = d.batches;
    j["data.split"] = absl::StrFormat("%d:%d", d.train_parts, d.test_parts);
  }
  if (config.dp.has_value()) {
    const DpConfig& dp = *config.dp;
    j["dp.mechanism"] = std::string(MechanismName(dp.mechanism));
    j["dp.epsilon"] = dp.epsilon;
    if (dp.mechanism == Mechanism::kGaussian) j["dp.delta"] = dp.delta;
    j["dp.rho"] = dp.rho.has_value() ? Json(*dp.rho) : Json("auto");
    j["dp.c1"] = dp.c1;
    j["dp.c2"] = dp.c2;
    j["dp.c_prev"] = dp.c_prev;
    j["dp.n0_floor"] = dp.n0_floor;
    j["dp.fixed_bounds"] = config.fixed_bounds;
  }
  return j.dump(2);
}

}  // namespace fedwd
