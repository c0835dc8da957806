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

#ifndef FEDWD_DATAGEN_H_
#define FEDWD_DATAGEN_H_

// Two-class Gaussian streams spread over M clients:
//   positives ~ N_p(mu 1_p, sigma^2 I_p), negatives ~ N_p(-mu 1_p, sigma^2 I_p).
// Heterogeneous designs draw (mu_m, sigma_m) once per client from uniform
// ranges and keep them for the whole stream.

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fedwd/dwd_core.h"
#include "fedwd/fed_offline.h"

namespace fedwd {

// A fixed value or a uniform range [low, high].
struct ParamSpec {
  double low = 0.0;
  double high = 0.0;

  static ParamSpec Fixed(double v) { return {v, v}; }
  static ParamSpec Uniform(double low, double high) { return {low, high}; }
  bool is_fixed() const { return low == high; }
};

struct SimDesign {
  int m_clients = 10;
  int n_batches = 100;
  int n_per_client = 10;
  int p = 50;
  ParamSpec mu = ParamSpec::Fixed(0.2);
  ParamSpec sigma = ParamSpec::Fixed(1.0);
  int ratio_pos = 1;
  int ratio_neg = 1;
  uint64_t seed = 1;
  int test_size = 2000;

  absl::Status Validate() const;
  // Positive count per shard: round(n * pos / (pos + neg)).
  int PositivesPerShard() const;
};

struct SiteParams {
  double mu = 0.0;
  double sigma = 1.0;
};

struct SimStream {
  std::vector<FederatedDataset> batches;
  std::vector<LabeledPoint> test;
  std::vector<SiteParams> sites;  // one entry per client
};

absl::StatusOr<SimStream> GenStream(const SimDesign& design);

// A single extra batch drawn from the design under its own sub-seed, used to
// calibrate feature bounds without touching the stream.
absl::StatusOr<FederatedDataset> GenCalibrationBatch(const SimDesign& design);

// Phi(|mu| sqrt(p) / sigma), the accuracy of the midpoint hyperplane on a
// balanced test set from the homogeneous design.
absl::StatusOr<double> BayesAccuracy(int p, double mu, double sigma);

double StandardNormalCdf(double x);

// Writes batch_0001.csv, batch_0002.csv, ... and test.csv into dir, columns
// y,x1..xp. Rows of a batch are client 1's shard, then client 2's, and so on.
absl::Status DumpStreamCsv(const SimStream& stream, const std::string& dir);
absl::Status WritePointsCsv(std::span<const LabeledPoint> points, int p,
                            const std::string& path);

}  // namespace fedwd

#endif  // FEDWD_DATAGEN_H_
