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

#include "fedwd/cli.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "absl/strings/str_format.h"
#include "fedwd/datagen.h"
#include "fedwd/eval_harness.h"
#include "fedwd/random.h"
#include "fedwd/status.h"
#include "json.hpp"

namespace fedwd {
namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

struct Manifest {
  Json doc;
  std::vector<std::string> outputs;
};

ExperimentOptions OptionsFrom(const RunConfig& config) {
  ExperimentOptions options;
  options.methods = config.methods;
  options.hyper = config.hyper;
  options.dp = config.dp;
  options.fixed_bounds = config.fixed_bounds;
  options.replicates = config.replicates;
  options.pooled_retrain_per_batch = config.pooled_retrain_per_batch;
  options.online_init = config.online_init;
  return options;
}

std::string OutPath(const RunConfig& config, const std::string& name) {
  return (fs::path(config.out) / name).string();
}

void PrintMetrics(const Metrics& m, std::ostream& out) {
  out << absl::StrFormat(
      "accuracy %.4f  precision %.4f  recall %.4f  f1 %.4f  specificity %.4f  (n=%d)\n",
      m.accuracy, m.precision, m.recall, m.f1, m.specificity, m.n_test);
}

absl::Status RunSimulate(const RunConfig& config, const std::string& hash, Manifest& manifest,
                         std::ostream& out) {
  FEDWD_ASSIGN_OR_RETURN(SimStream stream, GenStream(*config.design));
  const std::string dir = OutPath(config, "stream_" + hash);
  FEDWD_RETURN_IF_ERROR(DumpStreamCsv(stream, dir));
  manifest.outputs.push_back(dir);
  const SimDesign& d = *config.design;
  out << absl::StrFormat("wrote %d batches (%d clients x %d points) and %d test points to %s\n",
                         d.n_batches, d.m_clients, d.n_per_client, stream.test.size(), dir);
  if (d.mu.is_fixed() && d.sigma.is_fixed()) {
    absl::StatusOr<double> bayes = BayesAccuracy(d.p, d.mu.low, d.sigma.low);
    if (bayes.ok()) out << absl::StrFormat("Bayes accuracy %.4f\n", *bayes);
  }
  return absl::OkStatus();
}

absl::Status RunEvaluate(const RunConfig& config, const std::string& hash, Manifest& manifest,
                         std::ostream& out) {
  const DataSpec& ds = *config.data;
  FEDWD_ASSIGN_OR_RETURN(ModelState theta, ReadThetaSnapshot(ds.theta));
  FEDWD_ASSIGN_OR_RETURN(CsvData test,
                         LoadCsv(ds.test, ds.label_column, ds.positive_tag, ds.negative_tag));
  FEDWD_ASSIGN_OR_RETURN(Metrics m, Evaluate(theta, test.points));
  PrintMetrics(m, out);
  if (test.dropped_rows > 0) {
    out << absl::StrFormat("%d rows with other labels dropped\n", test.dropped_rows);
  }
  const std::string path = OutPath(config, "metrics_" + hash + ".json");
  std::ofstream f(path);
  if (!f) return IoError(absl::StrFormat("cannot write %s", path));
  f << Json{{"accuracy", m.accuracy},       {"precision", m.precision},
            {"recall", m.recall},           {"f1", m.f1},
            {"specificity", m.specificity}, {"n_test", m.n_test},
            {"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}}
           .dump(2)
    << '\n';
  manifest.outputs.push_back(path);
  return absl::OkStatus();
}

absl::Status RunBatchDir(const RunConfig& config, const std::string& hash, Manifest& manifest,
                         std::ostream& out) {
  const DataSpec& ds = *config.data;
  FEDWD_ASSIGN_OR_RETURN(std::vector<FederatedDataset> batches,
                         LoadBatchDir(ds.batch_dir, ds.clients));
  std::optional<CsvData> test;
  if (!ds.test.empty()) {
    FEDWD_ASSIGN_OR_RETURN(test,
                           LoadCsv(ds.test, ds.label_column, ds.positive_tag, ds.negative_tag));
  }
  const ExperimentOptions options = OptionsFrom(config);
  std::optional<DpConfig> dp = config.dp;
  if (dp.has_value()) {
    if (!config.fixed_bounds) {
      const FeatureCaps caps = ObservedCaps(batches.front());
      dp->c1 = caps.c1;
      dp->c2 = caps.c2;
    }
    FEDWD_RETURN_IF_ERROR(ClipBatches(batches, dp->c1, dp->c2));
    manifest.doc["feature_caps"] = {{"c1", dp->c1}, {"c2", dp->c2}};
  }
  out << absl::StrFormat("%d batches from %s, %d clients per batch\n", batches.size(),
                         ds.batch_dir, batches.front().num_clients());
  out << absl::StrFormat("%-10s %12s %10s\n", "method", "time (s)", "accuracy");
  for (Method method : config.methods) {
    Rng dp_rng = Rng(config.seed).Derive("dp_noise", 0);
    FEDWD_ASSIGN_OR_RETURN(FitOutcome fit,
                           FitMethod(method, batches, options, dp ? &*dp : nullptr, dp_rng));
    std::string acc = "-";
    if (test.has_value()) {
      FEDWD_ASSIGN_OR_RETURN(Metrics m, Evaluate(fit.theta, test->points));
      acc = absl::StrFormat("%.4f", m.accuracy);
    }
    out << absl::StrFormat("%-10s %12.4f %10s\n", ToAbsl(MethodName(method)), fit.wall_time_s, acc);
    const std::string path =
        OutPath(config, absl::StrFormat("theta_%s_%s.json", ToAbsl(MethodName(method)), hash));
    FEDWD_RETURN_IF_ERROR(WriteThetaSnapshot(fit.theta, MethodName(method), hash, path));
    manifest.outputs.push_back(path);
    if (!fit.private_log.empty()) {
      Json scales = Json::array();
      for (const PrivateBatchLog& e : fit.private_log) scales.push_back(e.scale);
      manifest.doc["dp_scales"] = scales;
    }
  }
  return absl::OkStatus();
}

absl::Status RunExperimentCommand(const RunConfig& config, const std::string& hash,
                                  Manifest& manifest, std::ostream& out) {
  ExperimentReport report;
  if (config.design.has_value()) {
    FEDWD_ASSIGN_OR_RETURN(report, RunExperiment(*config.design, OptionsFrom(config)));
  } else {
    const DataSpec& ds = *config.data;
    FEDWD_ASSIGN_OR_RETURN(CsvData data, LoadCsv(ds.train, ds.label_column, ds.positive_tag,
                                                 ds.negative_tag));
    if (data.dropped_rows > 0) {
      out << absl::StrFormat("%d rows with other labels dropped\n", data.dropped_rows);
    }
    CsvExperimentOptions opts;
    opts.base = OptionsFrom(config);
    opts.m_clients = ds.clients;
    opts.n_batches = ds.batches;
    opts.train_parts = ds.train_parts;
    opts.test_parts = ds.test_parts;
    opts.seed = config.seed;
    FEDWD_ASSIGN_OR_RETURN(report, RunCsvExperiment(data.points, opts));
  }
  // Outputs of one invocation share the hash of the full configuration.
  report.config_hash = hash;
  FEDWD_ASSIGN_OR_RETURN(auto paths, WriteReport(report, config.out));
  manifest.outputs.push_back(paths.first);
  manifest.outputs.push_back(paths.second);

  Json seeds = Json::array();
  Json caps = Json::array();
  for (const ReplicateRecord& r : report.replicates) {
    seeds.push_back(r.seed);
    if (r.c1 > 0.0) caps.push_back({{"c1", r.c1}, {"c2", r.c2}});
  }
  manifest.doc["replicate_seeds"] = seeds;
  if (!caps.empty()) manifest.doc["feature_caps"] = caps;

  if (config.subcommand != Subcommand::kBenchmark && !report.replicates.empty()) {
    const ReplicateRecord& first = report.replicates.front();
    for (size_t k = 0; k < report.methods.size(); ++k) {
      const std::string path = OutPath(
          config, absl::StrFormat("theta_%s_%s.json", ToAbsl(MethodName(report.methods[k])), hash));
      FEDWD_RETURN_IF_ERROR(
          WriteThetaSnapshot(first.thetas[k], MethodName(report.methods[k]), hash, path));
      manifest.outputs.push_back(path);
    }
  }
  out << FormatSummaryTable(report);
  for (const std::string& w : report.warnings) out << "note: " << w << '\n';
  return absl::OkStatus();
}

}  // namespace

absl::Status WriteThetaSnapshot(const ModelState& theta, std::string_view method,
                                std::string_view config_hash, const std::string& path) {
  std::ofstream out(path);
  if (!out) return IoError(absl::StrFormat("cannot write %s", path));
  Json j = {{"version", kVersion},
            {"method", std::string(method)},
            {"config_hash", std::string(config_hash)},
            {"p", theta.p()},
            {"theta", theta.values()}};
  out << j.dump(2) << '\n';
  return absl::OkStatus();
}

absl::StatusOr<ModelState> ReadThetaSnapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) return IoError(absl::StrFormat("cannot open %s", path));
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("theta") || !j["theta"].is_array()) {
    return ParseError(absl::StrFormat("%s: not a theta snapshot", path));
  }
  Vector values;
  for (const Json& v : j["theta"]) {
    if (!v.is_number()) return ParseError(absl::StrFormat("%s: non-numeric theta entry", path));
    values.push_back(v.get<double>());
  }
  if (values.size() < 2) return ParseError(absl::StrFormat("%s: theta too short", path));
  ModelState theta = ModelState::Zeros(static_cast<int>(values.size()) - 1);
  theta.mutable_values() = std::move(values);
  return theta;
}

absl::StatusOr<std::vector<FederatedDataset>> LoadBatchDir(const std::string& dir,
                                                           int clients) {
  if (clients < 1) return InvalidArgument("clients must be >= 1");
  std::vector<FederatedDataset> batches;
  for (int b = 1;; ++b) {
    const fs::path path = fs::path(dir) / absl::StrFormat("batch_%04d.csv", b);
    if (!fs::exists(path)) break;
    FEDWD_ASSIGN_OR_RETURN(CsvData csv, LoadCsv(path.string(), "y", "1", "-1"));
    const int n = static_cast<int>(csv.points.size());
    const int m_count = std::min(clients, n);
    FederatedDataset batch;
    batch.p = static_cast<int>(csv.feature_names.size());
    batch.clients.resize(m_count);
    for (int m = 0; m < m_count; ++m) {
      const int lo = static_cast<int>(static_cast<long long>(n) * m / m_count);
      const int hi = static_cast<int>(static_cast<long long>(n) * (m + 1) / m_count);
      batch.clients[m].assign(csv.points.begin() + lo, csv.points.begin() + hi);
    }
    if (!batches.empty() && batch.p != batches.front().p) {
      return ParseError(absl::StrFormat("%s: %d features, expected %d", path.string(), batch.p,
                                        batches.front().p));
    }
    batches.push_back(std::move(batch));
  }
  if (batches.empty()) {
    return IoError(absl::StrFormat("no batch_0001.csv found in %s", dir));
  }
  return batches;
}

absl::Status Dispatch(const RunConfig& config, std::ostream& out) {
  FEDWD_RETURN_IF_ERROR(config.Validate());
  const std::string echo = EchoConfig(config);
  const std::string hash = ConfigHash(echo);
  std::error_code ec;
  fs::create_directories(config.out, ec);
  if (ec) return IoError(absl::StrFormat("cannot create %s: %s", config.out, ec.message()));

  Manifest manifest;
  manifest.doc = {{"version", kVersion},
                  {"subcommand", std::string(SubcommandName(config.subcommand))},
                  {"config_hash", hash},
                  {"config", Json::parse(echo)},
                  {"seed", config.seed}};
  absl::Status status;
  switch (config.subcommand) {
    case Subcommand::kSimulate:
      status = RunSimulate(config, hash, manifest, out);
      break;
    case Subcommand::kEvaluate:
      status = RunEvaluate(config, hash, manifest, out);
      break;
    default:
      if (config.data.has_value() && !config.data->batch_dir.empty()) {
        status = RunBatchDir(config, hash, manifest, out);
      } else {
        status = RunExperimentCommand(config, hash, manifest, out);
      }
      break;
  }
  // The manifest is written even on failure so partial outputs are traceable.
  manifest.doc["outputs"] = manifest.outputs;
  manifest.doc["status"] = status.ok() ? "ok" : std::string(status.message());
  const std::string path = OutPath(config, "manifest_" + hash + ".json");
  std::ofstream f(path);
  if (!f) {
    return status.ok() ? IoError(absl::StrFormat("cannot write %s", path)) : status;
  }
  f << manifest.doc.dump(2) << '\n';
  if (status.ok()) out << "manifest: " << path << '\n';
  return status;
}

}  // namespace fedwd
