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

#ifndef FEDWD_EVAL_HARNESS_H_
#define FEDWD_EVAL_HARNESS_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "fedwd/datagen.h"
#include "fedwd/dp_mechanism.h"
#include "fedwd/dwd_core.h"
#include "fedwd/fed_offline.h"
#include "fedwd/random.h"

namespace fedwd {

inline constexpr char kVersion[] = "fedwd 0.1.0";

// Binary classification metrics with +1 as the positive class.
//
// Zero denominators: recall is 1 when there are no actual positives and
// specificity is 1 when there are no actual negatives (nothing to find, nothing
// missed). Precision with no positive predictions is 1 if there were also no
// actual positives, else 0. F1 is 0 when precision + recall is 0.
struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double specificity = 0.0;
  double wall_time_s = 0.0;
  int n_test = 0;
  int tp = 0, fp = 0, tn = 0, fn = 0;
};

Metrics MetricsFromCounts(int tp, int fp, int tn, int fn);
absl::StatusOr<Metrics> Evaluate(const ModelState& theta,
                                 std::span<const LabeledPoint> test);

enum class Method { kOffPooled, kOffWP, kOnWP, kOnWDP };

std::string_view MethodName(Method method);
absl::StatusOr<Method> ParseMethod(std::string_view name);

// Initial value for the online estimators. kFirstBatchFit starts the stream
// from the offline fit on the first batch (the first batch is still consumed
// by the stream). For OnWDP it needs the first batch to be the public warm
// start, i.e. dp.n0_floor == 0.
enum class OnlineInit { kZero, kFirstBatchFit };

std::string_view OnlineInitName(OnlineInit init);
absl::StatusOr<OnlineInit> ParseOnlineInit(std::string_view name);

struct ExperimentOptions {
  std::vector<Method> methods = {Method::kOffWP, Method::kOnWP};
  Hyper hyper;
  // Required iff kOnWDP is requested. c1/c2 in here are overridden by the
  // calibration-batch bounds unless fixed_bounds is set.
  std::optional<DpConfig> dp;
  bool fixed_bounds = false;
  int replicates = 1;
  // OffPooled is refit on all data seen so far after every batch (warm-started
  // from the previous fit); its time is the sum over refits.
  bool pooled_retrain_per_batch = false;
  OnlineInit online_init = OnlineInit::kZero;

  absl::Status Validate() const;
};

struct SummaryStat {
  double mean = 0.0;
  std::optional<double> sd;  // absent with fewer than two replicates
};

struct MethodSummary {
  Method method;
  SummaryStat accuracy, precision, recall, f1, specificity, wall_time_s;
};

struct PrivateBatchLog {
  int batch = 0;
  double scale = 0.0;
  double rho = 0.0;
  bool warm_start = false;
  std::string seed_path;
};

struct ReplicateRecord {
  uint64_t seed = 0;
  std::vector<Metrics> metrics;     // parallel to ExperimentOptions::methods
  std::vector<ModelState> thetas;   // parallel to ExperimentOptions::methods
  double c1 = 0.0, c2 = 0.0;        // feature caps applied at ingestion (0: none)
  std::vector<PrivateBatchLog> private_log;
};

struct ExperimentReport {
  std::string echo_json;  // design and options as run
  std::string config_hash;
  std::vector<Method> methods;
  std::vector<ReplicateRecord> replicates;
  std::vector<MethodSummary> summaries;
  std::vector<std::string> warnings;

  const MethodSummary* Find(Method method) const;
};

// Fits one method on a stream of batches. OnWDP expects features already
// clipped to the caps in dp and draws its noise from dp_rng. wall_time_s covers
// the fit calls only.
struct FitOutcome {
  ModelState theta;
  double wall_time_s = 0.0;
  std::vector<PrivateBatchLog> private_log;
};

absl::StatusOr<FitOutcome> FitMethod(Method method,
                                     const std::vector<FederatedDataset>& batches,
                                     const ExperimentOptions& options,
                                     const DpConfig* dp, Rng& dp_rng);

// Caps 1 + max ||x||_1 and 1 + max ||x||_2 over the batch.
struct FeatureCaps {
  double c1 = 0.0;
  double c2 = 0.0;
};
FeatureCaps ObservedCaps(const FederatedDataset& batch);
absl::Status ClipBatches(std::vector<FederatedDataset>& batches, double c1, double c2);

absl::StatusOr<ExperimentReport> RunExperiment(const SimDesign& design,
                                               const ExperimentOptions& options);

// Real-data variant: each replicate re-splits the data, standardizes with
// training statistics, streams the training split as n_batches batches over
// m_clients clients and evaluates on the test split.
struct CsvExperimentOptions {
  ExperimentOptions base;
  int m_clients = 10;
  int n_batches = 100;
  int train_parts = 4;
  int test_parts = 1;
  uint64_t seed = 1;
};

absl::StatusOr<ExperimentReport> RunCsvExperiment(
    const std::vector<LabeledPoint>& data, const CsvExperimentOptions& options);

// Writes report_<hash>.json and replicates_<hash>.csv into dir and returns the
// two paths.
absl::StatusOr<std::pair<std::string, std::string>> WriteReport(
    const ExperimentReport& report, const std::string& dir);
std::string ReportToJson(const ExperimentReport& report);
std::string FormatSummaryTable(const ExperimentReport& report);

// FNV-1a 64 of the text, as 16 hex digits.
std::string ConfigHash(std::string_view text);

struct CsvData {
  std::vector<LabeledPoint> points;
  std::vector<std::string> feature_names;
  int dropped_rows = 0;
};

// Reads a headered CSV. Rows whose label equals positive_tag become +1, rows
// equal to negative_tag become -1 (numeric tags compare numerically), other
// rows are dropped and counted. All non-label columns are features in file
// order. Features are returned raw; see Standardizer.
absl::StatusOr<CsvData> LoadCsv(const std::string& path,
                                const std::string& label_column,
                                const std::string& positive_tag,
                                const std::string& negative_tag);

class Standardizer {
 public:
  static absl::StatusOr<Standardizer> Fit(std::span<const LabeledPoint> train);
  void Apply(std::vector<LabeledPoint>& points) const;
  const Vector& mean() const { return mean_; }
  const Vector& sd() const { return sd_; }

 private:
  Vector mean_;
  Vector sd_;
};

// Seeded shuffle, then the first round(n * test/(train+test)) points form the
// test set.
absl::StatusOr<std::pair<std::vector<LabeledPoint>, std::vector<LabeledPoint>>>
SplitTrainTest(const std::vector<LabeledPoint>& data, int train_parts,
               int test_parts, uint64_t seed);

// Sampling spread of the online estimator at stream lengths N and 4N.
struct CoordinateSpread {
  int index = 0;
  double mean_n = 0.0, sd_n = 0.0;
  double mean_4n = 0.0, sd_4n = 0.0;
  double sd_ratio = 0.0;  // sd_n / sd_4n
  bool ratio_in_range = false;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double jarque_bera = 0.0;
  bool normality_pass = false;
  std::optional<double> private_sd_4n;
};

struct SamplingReport {
  int replicates = 0;
  long long n_small = 0;
  long long n_large = 0;
  std::vector<CoordinateSpread> coordinates;
  int ratio_in_range_count = 0;
  int normality_pass_count = 0;
};

inline constexpr double kSdRatioLow = 1.6;
inline constexpr double kSdRatioHigh = 2.5;
// Jarque-Bera statistic limit: chi-square(2) upper 0.1% point.
inline constexpr double kJarqueBeraLimit = 13.815510557964274;

// design.n_batches sets N; each replicate streams 4 * n_batches batches and
// reads the estimate after n_batches and after 4 * n_batches. With dp set, the
// private estimator is run on the same streams and its spread at 4N reported.
absl::StatusOr<SamplingReport> SamplingDistributionCheck(
    const SimDesign& design, const Hyper& hyper, int replicates,
    int coordinates = 4, const std::optional<DpConfig>& dp = std::nullopt,
    OnlineInit init = OnlineInit::kZero);

}  // namespace fedwd

#endif  // FEDWD_EVAL_HARNESS_H_
