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

#ifndef FEDWD_DP_MECHANISM_H_
#define FEDWD_DP_MECHANISM_H_

// Objective-perturbation privacy for the online estimator. Each private update
// solves
//
//   theta_b = [S + rho I]^{-1} [S theta_{b-1} - g_b - xi],   S = j_acc + J_b,
//
// where xi is Laplace (epsilon-DP) or Gaussian ((epsilon, delta)-DP) noise whose
// scale follows from the sensitivity constants T1, T2 and Delta1 below. The
// guarantee is per update; no composition across batches is accounted for.
//
// Every feature vector entering a private update must satisfy
// ||x̄||_1 <= c1 and ||x̄||_2 <= c2 with x̄ = (1, x^T)^T and rho
// must clear the lower bound computed by MinRho.

#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fedwd/dense_linalg.h"
#include "fedwd/fed_offline.h"
#include "fedwd/fed_online.h"
#include "fedwd/random.h"

namespace fedwd {

enum class Mechanism { kLaplace, kGaussian };

std::string_view MechanismName(Mechanism mechanism);
absl::StatusOr<Mechanism> ParseMechanism(std::string_view name);

struct DpConfig {
  Mechanism mechanism = Mechanism::kGaussian;
  double epsilon = 0.8;
  double delta = 1e-5;          // Gaussian only
  std::optional<double> rho;    // nullopt: smallest rho meeting the MinRho bound
  double c1 = 2.0;
  double c2 = 2.0;
  double c_prev = 1.0;
  // When the accumulated count is below this floor the calibration uses the
  // floor in place of N_{b-1}. Zero means the first batch of a stream is
  // consumed as a non-private warm start instead.
  long long n0_floor = 0;

  absl::Status Validate() const;
};

struct NoiseDraw {
  Vector xi;
  double scale = 0.0;  // eta (Laplace) or tau (Gaussian); 0 when no noise drawn
  std::string seed_path;
};

// Scales x so that x̄ = (1, x^T)^T satisfies both norm caps. Identity when the
// caps already hold.
absl::StatusOr<Vector> ClipFeatures(std::span<const double> x, double c1, double c2);

// True if x̄ satisfies both caps, with a relative slack of 1e-12.
bool SatisfiesFeatureBounds(std::span<const double> x, double c1, double c2);

struct Calibration {
  double t1 = 0.0;
  double t2 = 0.0;
};

// T1 = 2 C1 + 2 (q+1)^2 C1 C2 C_{p-1} / (q sqrt(N_{b-1}))
// T2 = 2 ln(1 + (q+1)^2 C2^2 / ((N_b lambda + rho) q))
absl::StatusOr<Calibration> CalibT1T2(double q, double c1, double c2, double c_prev,
                                      double n_prev, double n_b, double lambda,
                                      double rho);

// eta = T1 / (epsilon - T2). Fails with privacy-budget-too-small unless
// epsilon > T2.
absl::StatusOr<double> LaplaceScale(double epsilon, double t1, double t2);

// Delta1 = 2 C2 + 2 (q+1)^2 C2^2 C_{p-1} / (q sqrt(N_{b-1}))
absl::StatusOr<double> GaussianDelta1(double q, double c2, double c_prev,
                                      double n_prev);

// tau = Delta1 (sqrt(2 ln(1/delta)) + sqrt(2 ln(1/delta) + epsilon)) / epsilon
absl::StatusOr<double> GaussianSigma(double epsilon, double delta, double delta1);

// max(0, (q+1)^2 C2^2 / ((e^{epsilon/4} - 1) q) - N_b lambda)
double MinRho(double epsilon, double q, double c2, double n_b, double lambda);

// dim i.i.d. coordinates: Laplace(0, scale) by inverse CDF, or N(0, scale^2).
NoiseDraw SampleNoise(const DpConfig& config, double scale, int dim, Rng& rng);

struct PrivateUpdateRecord {
  NoiseDraw noise;
  double rho = 0.0;
  double n_prev = 0.0;  // N_{b-1} used in calibration
  double n_b = 0.0;     // N_b used in calibration
  std::optional<Calibration> calibration;  // Laplace
  std::optional<double> delta1;            // Gaussian
  bool warm_start = false;  // batch consumed without noise
  bool rho_bound_met = true;
  std::vector<std::string> warnings;
};

struct PrivateUpdateResult {
  OnlineState state;
  PrivateUpdateRecord record;
};

// Deterministic core of the private update for a given rho and noise vector.
// With rho = 0 and xi = 0 this reduces to Update().
absl::StatusOr<OnlineState> ApplyPrivateUpdate(const OnlineState& state,
                                               const FederatedDataset& batch,
                                               const Hyper& hyper, double rho,
                                               std::span<const double> xi);

// Full private update: checks the feature bounds, resolves rho, calibrates the noise
// scale with N_{b-1} = n_acc and N_b = n_acc + |batch|, draws xi from rng and
// applies the update.
absl::StatusOr<PrivateUpdateResult> UpdatePrivate(const OnlineState& state,
                                                  const FederatedDataset& batch,
                                                  const Hyper& hyper,
                                                  const DpConfig& dp, Rng& rng);

}  // namespace fedwd

#endif  // FEDWD_DP_MECHANISM_H_
