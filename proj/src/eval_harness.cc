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

#include "fedwd/eval_harness.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "absl/strings/ascii.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "fedwd/fed_online.h"
#include "fedwd/random.h"
#include "fedwd/status.h"
#include "json.hpp"

namespace fedwd {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

SummaryStat Summarize(const std::vector<double>& values) {
  SummaryStat stat;
  if (values.empty()) return stat;
  const double n = static_cast<double>(values.size());
  stat.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - stat.mean) * (v - stat.mean);
    stat.sd = std::sqrt(ss / (n - 1.0));
  }
  return stat;
}

bool Requests(const std::vector<Method>& methods, Method m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

// Fits every requested method on one prepared stream and evaluates on test.
absl::Status FitAll(const std::vector<FederatedDataset>& batches,
                    std::span<const LabeledPoint> test,
                    const ExperimentOptions& options, const DpConfig* dp,
                    Rng dp_rng, ReplicateRecord& record) {
  for (Method method : options.methods) {
    FEDWD_ASSIGN_OR_RETURN(FitOutcome fit, FitMethod(method, batches, options, dp, dp_rng));
    FEDWD_ASSIGN_OR_RETURN(Metrics metrics, Evaluate(fit.theta, test));
    metrics.wall_time_s = fit.wall_time_s;
    record.metrics.push_back(metrics);
    record.thetas.push_back(std::move(fit.theta));
    if (method == Method::kOnWDP) record.private_log = std::move(fit.private_log);
  }
  return absl::OkStatus();
}

void BuildSummaries(ExperimentReport& report) {
  report.summaries.clear();
  for (size_t k = 0; k < report.methods.size(); ++k) {
    std::vector<double> acc, prec, rec, f1, spec, time;
    for (const ReplicateRecord& r : report.replicates) {
      const Metrics& m = r.metrics[k];
      acc.push_back(m.accuracy);
      prec.push_back(m.precision);
      rec.push_back(m.recall);
      f1.push_back(m.f1);
      spec.push_back(m.specificity);
      time.push_back(m.wall_time_s);
    }
    report.summaries.push_back(MethodSummary{report.methods[k], Summarize(acc),
                                             Summarize(prec), Summarize(rec),
                                             Summarize(f1), Summarize(spec),
                                             Summarize(time)});
  }
}

nlohmann::json HyperJson(const Hyper& h) {
  return {{"lambda", h.lambda}, {"q", h.q}, {"eps_smooth", h.eps_smooth},
          {"max_iter", h.max_iter}, {"tol", h.tol}};
}

nlohmann::json DpJson(const DpConfig& dp) {
  nlohmann::json j = {{"mechanism", std::string(MechanismName(dp.mechanism))},
                      {"epsilon", dp.epsilon},
                      {"c1", dp.c1},
                      {"c2", dp.c2},
                      {"c_prev", dp.c_prev},
                      {"n0_floor", dp.n0_floor}};
  if (dp.mechanism == Mechanism::kGaussian) j["delta"] = dp.delta;
  j["rho"] = dp.rho.has_value() ? nlohmann::json(*dp.rho) : nlohmann::json("auto");
  return j;
}

nlohmann::json OptionsJson(const ExperimentOptions& options) {
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : options.methods) methods.push_back(std::string(MethodName(m)));
  nlohmann::json j = {{"methods", methods},
                      {"hyper", HyperJson(options.hyper)},
                      {"replicates", options.replicates},
                      {"fixed_bounds", options.fixed_bounds},
                      {"pooled_retrain_per_batch", options.pooled_retrain_per_batch},
                      {"online_init", std::string(OnlineInitName(options.online_init))}};
  if (options.dp.has_value()) j["dp"] = DpJson(*options.dp);
  return j;
}

nlohmann::json DesignJson(const SimDesign& d) {
  return {{"m_clients", d.m_clients},       {"n_batches", d.n_batches},
          {"n_per_client", d.n_per_client}, {"p", d.p},
          {"mu_low", d.mu.low},             {"mu_high", d.mu.high},
          {"sigma_low", d.sigma.low},       {"sigma_high", d.sigma.high},
          {"ratio", absl::StrFormat("%d:%d", d.ratio_pos, d.ratio_neg)},
          {"seed", d.seed},                 {"test_size", d.test_size}};
}

nlohmann::json StatJson(const SummaryStat& s) {
  nlohmann::json j = {{"mean", s.mean}};
  if (s.sd.has_value()) j["sd"] = *s.sd;
  return j;
}

bool ParseDouble(absl::string_view text, double& out) {
  text = absl::StripAsciiWhitespace(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

bool TagMatches(absl::string_view value, absl::string_view tag) {
  value = absl::StripAsciiWhitespace(value);
  tag = absl::StripAsciiWhitespace(tag);
  if (value == tag) return true;
  double a = 0.0, b = 0.0;
  return ParseDouble(value, a) && ParseDouble(tag, b) && a == b;
}

double Moment(const std::vector<double>& v, double mean, int k) {
  double s = 0.0;
  for (double x : v) s += std::pow(x - mean, k);
  return s / static_cast<double>(v.size());
}

absl::StatusOr<ModelState> InitialValue(const std::vector<FederatedDataset>& batches,
                                        const ExperimentOptions& options) {
  const ModelState zero = ModelState::Zeros(batches.front().p);
  if (options.online_init == OnlineInit::kZero) return zero;
  FEDWD_ASSIGN_OR_RETURN(FitReport fit, FitOffline(batches.front(), options.hyper, zero));
  return fit.theta;
}

}  // namespace

std::string_view OnlineInitName(OnlineInit init) {
  return init == OnlineInit::kZero ? "zero" : "first_batch";
}

absl::StatusOr<OnlineInit> ParseOnlineInit(std::string_view name) {
  if (name == "zero") return OnlineInit::kZero;
  if (name == "first_batch") return OnlineInit::kFirstBatchFit;
  return InvalidArgument(absl::StrFormat(
      "unknown online init \"%s\" (expected zero or first_batch)", ToAbsl(name)));
}

FeatureCaps ObservedCaps(const FederatedDataset& batch) {
  double l1 = 0.0, l2 = 0.0;
  for (const auto& client : batch.clients) {
    for (const LabeledPoint& pt : client) {
      l1 = std::max(l1, Norm1(pt.x));
      l2 = std::max(l2, Norm2(pt.x));
    }
  }
  return FeatureCaps{1.0 + l1, 1.0 + l2};
}

absl::Status ClipBatches(std::vector<FederatedDataset>& batches, double c1, double c2) {
  for (FederatedDataset& batch : batches) {
    for (auto& client : batch.clients) {
      for (LabeledPoint& pt : client) {
        FEDWD_ASSIGN_OR_RETURN(pt.x, ClipFeatures(pt.x, c1, c2));
      }
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<FitOutcome> FitMethod(Method method,
                                     const std::vector<FederatedDataset>& batches,
                                     const ExperimentOptions& options,
                                     const DpConfig* dp, Rng& dp_rng) {
  if (batches.empty()) return InvalidArgument("no batches to fit");
  const int p = batches.front().p;
  const Hyper& hyper = options.hyper;
  const ModelState zero = ModelState::Zeros(p);
  FitOutcome outcome;
  switch (method) {
    case Method::kOffPooled: {
      FederatedDataset pool;
      pool.p = p;
      pool.clients.resize(1);
      auto append = [&pool](const FederatedDataset& batch) {
        for (const auto& client : batch.clients) {
          pool.clients[0].insert(pool.clients[0].end(), client.begin(), client.end());
        }
      };
      if (options.pooled_retrain_per_batch) {
        outcome.theta = zero;
        for (const FederatedDataset& batch : batches) {
          append(batch);
          const auto start = Clock::now();
          FEDWD_ASSIGN_OR_RETURN(FitReport fit, FitOffline(pool, hyper, outcome.theta));
          outcome.wall_time_s += Seconds(Clock::now() - start);
          outcome.theta = fit.theta;
        }
      } else {
        for (const FederatedDataset& batch : batches) append(batch);
        const auto start = Clock::now();
        FEDWD_ASSIGN_OR_RETURN(FitReport fit, FitOffline(pool, hyper, zero));
        outcome.wall_time_s = Seconds(Clock::now() - start);
        outcome.theta = fit.theta;
      }
      break;
    }
    case Method::kOffWP: {
      FederatedDataset all;
      all.p = p;
      all.clients.resize(batches.front().clients.size());
      for (const FederatedDataset& batch : batches) {
        if (batch.clients.size() > all.clients.size()) all.clients.resize(batch.clients.size());
        for (size_t m = 0; m < batch.clients.size(); ++m) {
          all.clients[m].insert(all.clients[m].end(), batch.clients[m].begin(),
                                batch.clients[m].end());
        }
      }
      const auto start = Clock::now();
      FEDWD_ASSIGN_OR_RETURN(FitReport fit, FitOffline(all, hyper, zero));
      outcome.wall_time_s = Seconds(Clock::now() - start);
      outcome.theta = fit.theta;
      break;
    }
    case Method::kOnWP: {
      const auto start = Clock::now();
      FEDWD_ASSIGN_OR_RETURN(ModelState theta0, InitialValue(batches, options));
      FEDWD_ASSIGN_OR_RETURN(StreamResult run, RunStream(batches, hyper, theta0));
      outcome.wall_time_s = Seconds(Clock::now() - start);
      outcome.theta = run.state.theta;
      break;
    }
    case Method::kOnWDP: {
      if (dp == nullptr) return InvalidArgument("OnWDP requested without a dp config");
      if (options.online_init != OnlineInit::kZero && dp->n0_floor > 0) {
        return InvalidArgument("online.init=first_batch needs a public first batch (dp.n0_floor = 0)");
      }
      outcome.private_log.reserve(batches.size());
      const auto start = Clock::now();
      FEDWD_ASSIGN_OR_RETURN(ModelState theta0, InitialValue(batches, options));
      FEDWD_ASSIGN_OR_RETURN(OnlineState state, InitState(p, theta0));
      for (size_t b = 0; b < batches.size(); ++b) {
        absl::StatusOr<PrivateUpdateResult> r =
            UpdatePrivate(state, batches[b], hyper, *dp, dp_rng);
        if (!r.ok()) {
          return WithContext(r.status(), absl::StrFormat("batch %d", b + 1));
        }
        state = std::move(r->state);
        outcome.private_log.push_back(PrivateBatchLog{static_cast<int>(b + 1),
                                                      r->record.noise.scale, r->record.rho,
                                                      r->record.warm_start,
                                                      r->record.noise.seed_path});
      }
      outcome.wall_time_s = Seconds(Clock::now() - start);
      outcome.theta = state.theta;
      break;
    }
  }
  return outcome;
}

Metrics MetricsFromCounts(int tp, int fp, int tn, int fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  m.n_test = tp + fp + tn + fn;
  m.accuracy = m.n_test == 0 ? 0.0 : static_cast<double>(tp + tn) / m.n_test;
  if (tp + fp > 0) {
    m.precision = static_cast<double>(tp) / (tp + fp);
  } else {
    m.precision = (tp + fn == 0) ? 1.0 : 0.0;
  }
  m.recall = (tp + fn > 0) ? static_cast<double>(tp) / (tp + fn) : 1.0;
  m.specificity = (tn + fp > 0) ? static_cast<double>(tn) / (tn + fp) : 1.0;
  const double pr = m.precision + m.recall;
  m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
  return m;
}

absl::StatusOr<Metrics> Evaluate(const ModelState& theta,
                                 std::span<const LabeledPoint> test) {
  if (test.empty()) return InvalidArgument("test set is empty");
  int tp = 0, fp = 0, tn = 0, fn = 0;
  for (size_t i = 0; i < test.size(); ++i) {
    const LabeledPoint& pt = test[i];
    absl::StatusOr<int> pred = Predict(theta, pt.x);
    if (!pred.ok()) {
      return InvalidArgument(absl::StrFormat("test point %d: %s", i, pred.status().message()));
    }
    if (pt.y == 1) {
      (*pred == 1 ? tp : fn) += 1;
    } else if (pt.y == -1) {
      (*pred == 1 ? fp : tn) += 1;
    } else {
      return InvalidArgument(absl::StrFormat("test point %d has label %d", i, pt.y));
    }
  }
  return MetricsFromCounts(tp, fp, tn, fn);
}

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kOffPooled:
      return "OffPooled";
    case Method::kOffWP:
      return "OffWP";
    case Method::kOnWP:
      return "OnWP";
    case Method::kOnWDP:
      return "OnWDP";
  }
  return "?";
}

absl::StatusOr<Method> ParseMethod(std::string_view name) {
  const std::string lower = absl::AsciiStrToLower(ToAbsl(name));
  for (Method m : {Method::kOffPooled, Method::kOffWP, Method::kOnWP, Method::kOnWDP}) {
    if (lower == absl::AsciiStrToLower(ToAbsl(MethodName(m)))) return m;
  }
  return InvalidArgument(absl::StrFormat(
      "unknown method \"%s\" (expected OffPooled, OffWP, OnWP or OnWDP)", ToAbsl(name)));
}

absl::Status ExperimentOptions::Validate() const {
  FEDWD_RETURN_IF_ERROR(hyper.Validate());
  if (methods.empty()) return InvalidArgument("no methods requested");
  if (replicates < 1) {
    return InvalidArgument(absl::StrFormat("replicates must be >= 1, got %d", replicates));
  }
  const bool wants_dp = Requests(methods, Method::kOnWDP);
  if (wants_dp && !dp.has_value()) {
    return InvalidArgument("OnWDP requested but no dp configuration given");
  }
  if (dp.has_value()) FEDWD_RETURN_IF_ERROR(dp->Validate());
  return absl::OkStatus();
}

const MethodSummary* ExperimentReport::Find(Method method) const {
  for (const MethodSummary& s : summaries) {
    if (s.method == method) return &s;
  }
  return nullptr;
}

std::string ConfigHash(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return absl::StrFormat("%016x", h);
}

absl::StatusOr<ExperimentReport> RunExperiment(const SimDesign& design,
                                               const ExperimentOptions& options) {
  FEDWD_RETURN_IF_ERROR(design.Validate());
  FEDWD_RETURN_IF_ERROR(options.Validate());

  ExperimentReport report;
  report.methods = options.methods;
  nlohmann::json echo = {{"design", DesignJson(design)}, {"options", OptionsJson(options)}};
  report.echo_json = echo.dump();
  report.config_hash = ConfigHash(report.echo_json);

  const bool wants_dp = Requests(options.methods, Method::kOnWDP);
  const Rng master(design.seed);
  for (int r = 0; r < options.replicates; ++r) {
    SimDesign rep_design = design;
    rep_design.seed = master.Derive("replicate", r).seed();
    FEDWD_ASSIGN_OR_RETURN(SimStream stream, GenStream(rep_design));

    ReplicateRecord record;
    record.seed = rep_design.seed;
    std::optional<DpConfig> dp = options.dp;
    if (wants_dp) {
      if (!options.fixed_bounds) {
        FEDWD_ASSIGN_OR_RETURN(FederatedDataset calibration, GenCalibrationBatch(rep_design));
        const FeatureCaps bounds = ObservedCaps(calibration);
        dp->c1 = bounds.c1;
        dp->c2 = bounds.c2;
      }
      record.c1 = dp->c1;
      record.c2 = dp->c2;
      FEDWD_RETURN_IF_ERROR(ClipBatches(stream.batches, dp->c1, dp->c2));
    }
    const Rng dp_rng = Rng(rep_design.seed).Derive("dp_noise", 0);
    absl::Status status = FitAll(stream.batches, stream.test, options,
                                 dp.has_value() ? &*dp : nullptr, dp_rng, record);
    if (!status.ok()) {
      return WithContext(status, absl::StrFormat("replicate %d", r));
    }
    report.replicates.push_back(std::move(record));
  }
  BuildSummaries(report);
  if (options.dp.has_value()) {
    report.warnings.push_back(
        "privacy budgets are per batch update; no composition across updates is "
        "accounted for");
  }
  return report;
}

absl::StatusOr<ExperimentReport> RunCsvExperiment(const std::vector<LabeledPoint>& data,
                                                  const CsvExperimentOptions& options) {
  FEDWD_RETURN_IF_ERROR(options.base.Validate());
  if (options.m_clients < 1 || options.n_batches < 1) {
    return InvalidArgument("m_clients and n_batches must be >= 1");
  }
  if (data.empty()) return InvalidArgument("no data");
  const int p = static_cast<int>(data.front().x.size());
  FEDWD_RETURN_IF_ERROR(ValidatePoints(data, p));

  ExperimentReport report;
  report.methods = options.base.methods;
  nlohmann::json echo = {{"data", {{"rows", data.size()},
                                   {"p", p},
                                   {"m_clients", options.m_clients},
                                   {"n_batches", options.n_batches},
                                   {"split", absl::StrFormat("%d:%d", options.train_parts,
                                                             options.test_parts)},
                                   {"seed", options.seed}}},
                         {"options", OptionsJson(options.base)}};
  report.echo_json = echo.dump();
  report.config_hash = ConfigHash(report.echo_json);

  const bool wants_dp = Requests(options.base.methods, Method::kOnWDP);
  const Rng master(options.seed);
  for (int r = 0; r < options.base.replicates; ++r) {
    const uint64_t seed = master.Derive("replicate", r).seed();
    FEDWD_ASSIGN_OR_RETURN(auto split, SplitTrainTest(data, options.train_parts,
                                                      options.test_parts, seed));
    auto& [train, test] = split;
    FEDWD_ASSIGN_OR_RETURN(Standardizer standardizer, Standardizer::Fit(train));
    standardizer.Apply(train);
    standardizer.Apply(test);

    const int n_train = static_cast<int>(train.size());
    const int n_batches = std::min(options.n_batches, n_train);
    const int batch_size = n_train / n_batches;
    std::vector<FederatedDataset> batches(n_batches);
    for (int b = 0; b < n_batches; ++b) {
      const int begin = b * batch_size;
      const int end = (b == n_batches - 1) ? n_train : begin + batch_size;
      const int count = end - begin;
      const int clients = std::min(options.m_clients, count);
      FederatedDataset& batch = batches[b];
      batch.p = p;
      batch.clients.resize(clients);
      for (int m = 0; m < clients; ++m) {
        const int lo = begin + static_cast<int>(static_cast<long long>(count) * m / clients);
        const int hi =
            begin + static_cast<int>(static_cast<long long>(count) * (m + 1) / clients);
        batch.clients[m].assign(train.begin() + lo, train.begin() + hi);
      }
    }

    ReplicateRecord record;
    record.seed = seed;
    std::optional<DpConfig> dp = options.base.dp;
    if (wants_dp) {
      if (!options.base.fixed_bounds) {
        // The first batch is the public warm start; it also sets the caps.
        const FeatureCaps bounds = ObservedCaps(batches.front());
        dp->c1 = bounds.c1;
        dp->c2 = bounds.c2;
      }
      record.c1 = dp->c1;
      record.c2 = dp->c2;
      FEDWD_RETURN_IF_ERROR(ClipBatches(batches, dp->c1, dp->c2));
    }
    const Rng dp_rng = Rng(seed).Derive("dp_noise", 0);
    absl::Status status = FitAll(batches, test, options.base,
                                 dp.has_value() ? &*dp : nullptr, dp_rng, record);
    if (!status.ok()) {
      return WithContext(status, absl::StrFormat("replicate %d", r));
    }
    report.replicates.push_back(std::move(record));
  }
  BuildSummaries(report);
  return report;
}

std::string ReportToJson(const ExperimentReport& report) {
  nlohmann::json doc;
  doc["version"] = kVersion;
  doc["config_hash"] = report.config_hash;
  doc["config"] = nlohmann::json::parse(report.echo_json);
  doc["metric_conventions"] =
      "positive class +1; recall=1 with no actual positives; specificity=1 with "
      "no actual negatives; precision=1 with no positive predictions and no "
      "actual positives, else 0; f1=0 when precision+recall=0";
  nlohmann::json summaries = nlohmann::json::array();
  for (const MethodSummary& s : report.summaries) {
    summaries.push_back({{"method", std::string(MethodName(s.method))},
                         {"accuracy", StatJson(s.accuracy)},
                         {"precision", StatJson(s.precision)},
                         {"recall", StatJson(s.recall)},
                         {"f1", StatJson(s.f1)},
                         {"specificity", StatJson(s.specificity)},
                         {"wall_time_s", StatJson(s.wall_time_s)}});
  }
  doc["summaries"] = summaries;
  nlohmann::json reps = nlohmann::json::array();
  for (size_t r = 0; r < report.replicates.size(); ++r) {
    const ReplicateRecord& rec = report.replicates[r];
    nlohmann::json jr = {{"replicate", r}, {"seed", rec.seed}};
    if (rec.c1 > 0.0) {
      jr["c1"] = rec.c1;
      jr["c2"] = rec.c2;
    }
    nlohmann::json fits = nlohmann::json::array();
    for (size_t k = 0; k < rec.metrics.size(); ++k) {
      const Metrics& m = rec.metrics[k];
      fits.push_back({{"method", std::string(MethodName(report.methods[k]))},
                      {"accuracy", m.accuracy},
                      {"precision", m.precision},
                      {"recall", m.recall},
                      {"f1", m.f1},
                      {"specificity", m.specificity},
                      {"wall_time_s", m.wall_time_s},
                      {"n_test", m.n_test},
                      {"theta", rec.thetas[k].values()}});
    }
    jr["fits"] = fits;
    if (!rec.private_log.empty()) {
      nlohmann::json log = nlohmann::json::array();
      for (const PrivateBatchLog& e : rec.private_log) {
        log.push_back({{"batch", e.batch},
                       {"scale", e.scale},
                       {"rho", e.rho},
                       {"warm_start", e.warm_start},
                       {"seed_path", e.seed_path}});
      }
      jr["private_updates"] = log;
    }
    reps.push_back(jr);
  }
  doc["replicates"] = reps;
  doc["warnings"] = report.warnings;
  return doc.dump(2);
}

absl::StatusOr<std::pair<std::string, std::string>> WriteReport(
    const ExperimentReport& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return IoError(absl::StrFormat("cannot create %s: %s", dir, ec.message()));
  const std::string json_path =
      (std::filesystem::path(dir) / ("report_" + report.config_hash + ".json")).string();
  const std::string csv_path =
      (std::filesystem::path(dir) / ("replicates_" + report.config_hash + ".csv")).string();
  {
    std::ofstream out(json_path);
    if (!out) return IoError(absl::StrFormat("cannot write %s", json_path));
    out << ReportToJson(report) << '\n';
  }
  {
    std::ofstream out(csv_path);
    if (!out) return IoError(absl::StrFormat("cannot write %s", csv_path));
    out << "replicate,seed,method,accuracy,precision,recall,f1,specificity,wall_time_s,n_test\n";
    for (size_t r = 0; r < report.replicates.size(); ++r) {
      const ReplicateRecord& rec = report.replicates[r];
      for (size_t k = 0; k < rec.metrics.size(); ++k) {
        const Metrics& m = rec.metrics[k];
        out << absl::StrFormat("%d,%d,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n", r, rec.seed,
                               ToAbsl(MethodName(report.methods[k])), m.accuracy, m.precision,
                               m.recall, m.f1, m.specificity, m.wall_time_s, m.n_test);
      }
    }
  }
  return std::make_pair(json_path, csv_path);
}

std::string FormatSummaryTable(const ExperimentReport& report) {
  std::string out = absl::StrFormat("%-10s %18s %10s %10s %10s %14s\n", "method",
                                    "accuracy (%)", "precision", "recall", "f1",
                                    "time (s)");
  for (const MethodSummary& s : report.summaries) {
    const std::string acc =
        s.accuracy.sd.has_value()
            ? absl::StrFormat("%.2f +- %.2f", 100 * s.accuracy.mean, 100 * *s.accuracy.sd)
            : absl::StrFormat("%.2f", 100 * s.accuracy.mean);
    out += absl::StrFormat("%-10s %18s %10.4f %10.4f %10.4f %14.4f\n", ToAbsl(MethodName(s.method)),
                           acc, s.precision.mean, s.recall.mean, s.f1.mean,
                           s.wall_time_s.mean);
  }
  return out;
}

absl::StatusOr<CsvData> LoadCsv(const std::string& path, const std::string& label_column,
                                const std::string& positive_tag,
                                const std::string& negative_tag) {
  std::ifstream in(path);
  if (!in) return IoError(absl::StrFormat("cannot open %s", path));
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (absl::StripAsciiWhitespace(line).empty()) continue;
    for (absl::string_view field : absl::StrSplit(line, ',')) {
      header.emplace_back(absl::StripAsciiWhitespace(field));
    }
    break;
  }
  if (header.empty()) return ParseError(absl::StrFormat("%s: missing header row", path));
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    return ParseError(absl::StrFormat("%s: no column named \"%s\" in header", path,
                                      label_column));
  }
  const size_t label_idx = static_cast<size_t>(label_it - header.begin());

  CsvData data;
  for (size_t c = 0; c < header.size(); ++c) {
    if (c != label_idx) data.feature_names.push_back(header[c]);
  }
  if (data.feature_names.empty()) {
    return ParseError(absl::StrFormat("%s: no feature columns", path));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (absl::StripAsciiWhitespace(line).empty()) continue;
    std::vector<absl::string_view> fields = absl::StrSplit(line, ',');
    if (fields.size() != header.size()) {
      return ParseError(absl::StrFormat("%s:%d: expected %d fields, found %d", path, line_no,
                                        header.size(), fields.size()));
    }
    int y = 0;
    if (TagMatches(fields[label_idx], positive_tag)) {
      y = 1;
    } else if (TagMatches(fields[label_idx], negative_tag)) {
      y = -1;
    } else {
      ++data.dropped_rows;
      continue;
    }
    LabeledPoint pt;
    pt.y = y;
    pt.x.reserve(data.feature_names.size());
    for (size_t c = 0; c < fields.size(); ++c) {
      if (c == label_idx) continue;
      double v = 0.0;
      if (!ParseDouble(fields[c], v)) {
        return ParseError(absl::StrFormat("%s:%d: column \"%s\": \"%s\" is not numeric", path,
                                          line_no, header[c], fields[c]));
      }
      pt.x.push_back(v);
    }
    data.points.push_back(std::move(pt));
  }
  if (data.points.empty()) {
    return ParseError(absl::StrFormat(
        "%s: zero usable rows (%d rows dropped with labels other than \"%s\"/\"%s\")", path,
        data.dropped_rows, positive_tag, negative_tag));
  }
  return data;
}

absl::StatusOr<Standardizer> Standardizer::Fit(std::span<const LabeledPoint> train) {
  if (train.empty()) return InvalidArgument("cannot standardize with an empty training set");
  const size_t p = train.front().x.size();
  Standardizer s;
  s.mean_.assign(p, 0.0);
  s.sd_.assign(p, 0.0);
  for (const LabeledPoint& pt : train) Axpy(1.0, pt.x, s.mean_);
  for (double& m : s.mean_) m /= static_cast<double>(train.size());
  for (const LabeledPoint& pt : train) {
    for (size_t j = 0; j < p; ++j) s.sd_[j] += (pt.x[j] - s.mean_[j]) * (pt.x[j] - s.mean_[j]);
  }
  const double denom = train.size() > 1 ? static_cast<double>(train.size() - 1) : 1.0;
  for (double& v : s.sd_) {
    v = std::sqrt(v / denom);
    if (!(v > 0.0)) v = 1.0;  // constant column
  }
  return s;
}

void Standardizer::Apply(std::vector<LabeledPoint>& points) const {
  for (LabeledPoint& pt : points) {
    for (size_t j = 0; j < pt.x.size() && j < mean_.size(); ++j) {
      pt.x[j] = (pt.x[j] - mean_[j]) / sd_[j];
    }
  }
}

absl::StatusOr<std::pair<std::vector<LabeledPoint>, std::vector<LabeledPoint>>>
SplitTrainTest(const std::vector<LabeledPoint>& data, int train_parts, int test_parts,
               uint64_t seed) {
  if (train_parts < 1 || test_parts < 1) {
    return InvalidArgument(absl::StrFormat("split ratio parts must be >= 1, got %d:%d",
                                           train_parts, test_parts));
  }
  const size_t n = data.size();
  if (n < 2) return InvalidArgument("need at least 2 points to split");
  const long long n_test = std::llround(static_cast<double>(n) * test_parts /
                                        (train_parts + test_parts));
  if (n_test < 1 || n_test > static_cast<long long>(n) - 1) {
    return InvalidArgument(absl::StrFormat(
        "split %d:%d of %d points leaves an empty side", train_parts, test_parts, n));
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).Derive("split", 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::vector<LabeledPoint> train, test;
  test.reserve(n_test);
  train.reserve(n - n_test);
  for (size_t i = 0; i < n; ++i) {
    (static_cast<long long>(i) < n_test ? test : train).push_back(data[order[i]]);
  }
  return std::make_pair(std::move(train), std::move(test));
}

absl::StatusOr<SamplingReport> SamplingDistributionCheck(
    const SimDesign& design, const Hyper& hyper, int replicates, int coordinates,
    const std::optional<DpConfig>& dp, OnlineInit init) {
  FEDWD_RETURN_IF_ERROR(design.Validate());
  FEDWD_RETURN_IF_ERROR(hyper.Validate());
  if (replicates < 2) return InvalidArgument("replicates must be >= 2");
  if (dp.has_value()) FEDWD_RETURN_IF_ERROR(dp->Validate());
  const int dim = design.p + 1;
  coordinates = std::clamp(coordinates, 1, dim);

  SimDesign long_design = design;
  long_design.n_batches = 4 * design.n_batches;
  long_design.test_size = 2;

  std::vector<std::vector<double>> at_n(coordinates), at_4n(coordinates), priv_4n(coordinates);
  const Rng master(design.seed);
  ExperimentOptions init_options;
  init_options.hyper = hyper;
  init_options.online_init = init;
  for (int r = 0; r < replicates; ++r) {
    SimDesign rep = long_design;
    rep.seed = master.Derive("replicate", r).seed();
    FEDWD_ASSIGN_OR_RETURN(SimStream stream, GenStream(rep));
    FEDWD_ASSIGN_OR_RETURN(ModelState theta0, InitialValue(stream.batches, init_options));
    FEDWD_ASSIGN_OR_RETURN(StreamResult run, RunStream(stream.batches, hyper, theta0));
    const ModelState& short_theta = run.trace[design.n_batches - 1];
    const ModelState& long_theta = run.trace.back();
    for (int k = 0; k < coordinates; ++k) {
      at_n[k].push_back(short_theta[k]);
      at_4n[k].push_back(long_theta[k]);
    }
    if (dp.has_value()) {
      DpConfig cfg = *dp;
      FEDWD_ASSIGN_OR_RETURN(FederatedDataset calibration, GenCalibrationBatch(rep));
      const FeatureCaps bounds = ObservedCaps(calibration);
      cfg.c1 = bounds.c1;
      cfg.c2 = bounds.c2;
      FEDWD_RETURN_IF_ERROR(ClipBatches(stream.batches, cfg.c1, cfg.c2));
      Rng rng = Rng(rep.seed).Derive("dp_noise", 0);
      FEDWD_ASSIGN_OR_RETURN(ModelState private0, InitialValue(stream.batches, init_options));
      FEDWD_ASSIGN_OR_RETURN(OnlineState state, InitState(design.p, private0));
      for (const FederatedDataset& batch : stream.batches) {
        FEDWD_ASSIGN_OR_RETURN(PrivateUpdateResult res,
                               UpdatePrivate(state, batch, hyper, cfg, rng));
        state = std::move(res.state);
      }
      for (int k = 0; k < coordinates; ++k) priv_4n[k].push_back(state.theta[k]);
    }
  }

  SamplingReport report;
  report.replicates = replicates;
  const long long per_batch = static_cast<long long>(design.m_clients) * design.n_per_client;
  report.n_small = per_batch * design.n_batches;
  report.n_large = per_batch * long_design.n_batches;
  for (int k = 0; k < coordinates; ++k) {
    CoordinateSpread c;
    c.index = k;
    const SummaryStat s_n = Summarize(at_n[k]);
    const SummaryStat s_4n = Summarize(at_4n[k]);
    c.mean_n = s_n.mean;
    c.sd_n = s_n.sd.value_or(0.0);
    c.mean_4n = s_4n.mean;
    c.sd_4n = s_4n.sd.value_or(0.0);
    c.sd_ratio = c.sd_4n > 0.0 ? c.sd_n / c.sd_4n : 0.0;
    c.ratio_in_range = c.sd_ratio >= kSdRatioLow && c.sd_ratio <= kSdRatioHigh;
    const double m2 = Moment(at_4n[k], c.mean_4n, 2);
    if (m2 > 0.0) {
      c.skewness = Moment(at_4n[k], c.mean_4n, 3) / std::pow(m2, 1.5);
      c.excess_kurtosis = Moment(at_4n[k], c.mean_4n, 4) / (m2 * m2) - 3.0;
    }
    c.jarque_bera = replicates / 6.0 *
                    (c.skewness * c.skewness + 0.25 * c.excess_kurtosis * c.excess_kurtosis);
    c.normality_pass = m2 > 0.0 && c.jarque_bera < kJarqueBeraLimit;
    if (dp.has_value()) c.private_sd_4n = Summarize(priv_4n[k]).sd;
    report.ratio_in_range_count += c.ratio_in_range ? 1 : 0;
    report.normality_pass_count += c.normality_pass ? 1 : 0;
    report.coordinates.push_back(c);
  }
  return report;
}

}  // namespace fedwd
