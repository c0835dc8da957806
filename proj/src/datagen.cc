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

#include "fedwd/datagen.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "absl/strings/str_format.h"
#include "fedwd/random.h"
#include "fedwd/status.h"

namespace fedwd {
namespace {

LabeledPoint DrawPoint(Rng& rng, int p, int y, const SiteParams& site) {
  LabeledPoint pt;
  pt.y = y;
  pt.x.resize(p);
  const double center = y * site.mu;
  for (double& v : pt.x) v = rng.Normal(center, site.sigma);
  return pt;
}

std::vector<SiteParams> DrawSites(const SimDesign& design) {
  std::vector<SiteParams> sites(design.m_clients);
  const Rng base(design.seed);
  for (int m = 0; m < design.m_clients; ++m) {
    Rng rng = base.Derive("site", m);
    sites[m].mu = design.mu.is_fixed()
                      ? design.mu.low
                      : design.mu.low + (design.mu.high - design.mu.low) * rng.Uniform();
    sites[m].sigma = design.sigma.is_fixed()
                         ? design.sigma.low
                         : design.sigma.low +
                               (design.sigma.high - design.sigma.low) * rng.Uniform();
  }
  return sites;
}

FederatedDataset DrawBatch(const SimDesign& design,
                           const std::vector<SiteParams>& sites,
                           const Rng& batch_base) {
  FederatedDataset batch;
  batch.p = design.p;
  batch.clients.resize(design.m_clients);
  const int n_pos = design.PositivesPerShard();
  for (int m = 0; m < design.m_clients; ++m) {
    Rng rng = batch_base.Derive("client", m);
    auto& shard = batch.clients[m];
    shard.reserve(design.n_per_client);
    for (int i = 0; i < design.n_per_client; ++i) {
      shard.push_back(DrawPoint(rng, design.p, i < n_pos ? 1 : -1, sites[m]));
    }
  }
  return batch;
}

}  // namespace

absl::Status SimDesign::Validate() const {
  if (m_clients < 1 || n_batches < 1 || n_per_client < 1 || p < 1) {
    return InvalidArgument(absl::StrFormat(
        "design counts must be >= 1 (m_clients=%d n_batches=%d n_per_client=%d p=%d)",
        m_clients, n_batches, n_per_client, p));
  }
  if (mu.low > mu.high) return InvalidArgument("design.mu range has low > high");
  if (!(sigma.low > 0.0) || sigma.low > sigma.high) {
    return InvalidArgument(absl::StrFormat(
        "design.sigma must be positive with low <= high, got [%g, %g]", sigma.low,
        sigma.high));
  }
  if (ratio_pos < 1 || ratio_neg < 1) {
    return InvalidArgument(absl::StrFormat(
        "design ratio parts must be >= 1, got %d:%d", ratio_pos, ratio_neg));
  }
  if (test_size < 2) return InvalidArgument("design.test_size must be >= 2");
  return absl::OkStatus();
}

int SimDesign::PositivesPerShard() const {
  return static_cast<int>(std::lround(static_cast<double>(n_per_client) * ratio_pos /
                                      (ratio_pos + ratio_neg)));
}

absl::StatusOr<SimStream> GenStream(const SimDesign& design) {
  FEDWD_RETURN_IF_ERROR(design.Validate());
  SimStream stream;
  stream.sites = DrawSites(design);
  const Rng base(design.seed);
  stream.batches.reserve(design.n_batches);
  for (int b = 0; b < design.n_batches; ++b) {
    stream.batches.push_back(DrawBatch(design, stream.sites, base.Derive("batch", b)));
  }
  // Balanced test set; each point comes from a uniformly chosen site.
  Rng rng = base.Derive("test", 0);
  stream.test.reserve(design.test_size);
  const int test_pos = design.test_size / 2;
  for (int i = 0; i < design.test_size; ++i) {
    const SiteParams& site =
        stream.sites[design.m_clients == 1 ? 0 : rng.Below(design.m_clients)];
    stream.test.push_back(DrawPoint(rng, design.p, i < test_pos ? 1 : -1, site));
  }
  return stream;
}

absl::StatusOr<FederatedDataset> GenCalibrationBatch(const SimDesign& design) {
  FEDWD_RETURN_IF_ERROR(design.Validate());
  return DrawBatch(design, DrawSites(design), Rng(design.seed).Derive("calibration", 0));
}

double StandardNormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

absl::StatusOr<double> BayesAccuracy(int p, double mu, double sigma) {
  if (!(sigma > 0.0)) {
    return InvalidArgument(absl::StrFormat("sigma must be positive, got %g", sigma));
  }
  if (p < 1) return InvalidArgument(absl::StrFormat("p must be >= 1, got %d", p));
  return StandardNormalCdf(std::abs(mu) * std::sqrt(static_cast<double>(p)) / sigma);
}

absl::Status WritePointsCsv(std::span<const LabeledPoint> points, int p,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) return IoError(absl::StrFormat("cannot open %s for writing", path));
  out << "y";
  for (int j = 1; j <= p; ++j) out << ",x" << j;
  out << '\n';
  for (const LabeledPoint& pt : points) {
    out << pt.y;
    for (double v : pt.x) out << ',' << absl::StrFormat("%.17g", v);
    out << '\n';
  }
  if (!out) return IoError(absl::StrFormat("write to %s failed", path));
  return absl::OkStatus();
}

absl::Status DumpStreamCsv(const SimStream& stream, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return IoError(absl::StrFormat("cannot create %s: %s", dir, ec.message()));
  for (size_t b = 0; b < stream.batches.size(); ++b) {
    const FederatedDataset& batch = stream.batches[b];
    const std::string path =
        (std::filesystem::path(dir) / absl::StrFormat("batch_%04d.csv", b + 1)).string();
    FEDWD_RETURN_IF_ERROR(WritePointsCsv(batch.Pooled(), batch.p, path));
  }
  if (!stream.test.empty()) {
    const int p = static_cast<int>(stream.test.front().x.size());
    FEDWD_RETURN_IF_ERROR(WritePointsCsv(
        stream.test, p, (std::filesystem::path(dir) / "test.csv").string()));
  }
  return absl::OkStatus();
}

}  // namespace fedwd
