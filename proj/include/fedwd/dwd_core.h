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

#ifndef FEDWD_DWD_CORE_H_
#define FEDWD_DWD_CORE_H_

// Generalized distance-weighted discrimination (DWD) loss and the per-client
// summaries exchanged in federated fitting.
//
// The loss of a single margin u = y * (1, x^T) theta is
//
//   V_q(u) = 1 - u                                  if u <= q/(q+1)
//          = u^{-q} q^q / (q+1)^{q+1}               otherwise
//
// The two branches meet with matching slope at u0 = q/(q+1), so V_q is C^1 but
// has no second derivative at u0. Curvature is therefore taken from a smoothed
// derivative that replaces V_q' on (u0 - eps, u0 + eps) by a quadratic.
//
// Layout: theta = (beta0, beta^T)^T, intercept first. The ridge penalty never
// touches the intercept (W = diag(0, 1, ..., 1)).

#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fedwd/dense_linalg.h"

namespace fedwd {

struct LabeledPoint {
  Vector x;
  int y = 1;  // -1 or +1
};

// Validates the label and that every feature is finite.
absl::StatusOr<LabeledPoint> MakePoint(Vector x, int y);
absl::Status ValidatePoints(std::span<const LabeledPoint> data, int p);

class ModelState {
 public:
  ModelState() = default;
  explicit ModelState(Vector theta) : theta_(std::move(theta)) {}

  static ModelState Zeros(int p) { return ModelState(Vector(p + 1, 0.0)); }

  int dim() const { return static_cast<int>(theta_.size()); }
  int p() const { return dim() - 1; }
  double intercept() const { return theta_[0]; }
  std::span<const double> slopes() const {
    return std::span<const double>(theta_).subspan(1);
  }
  const Vector& values() const { return theta_; }
  Vector& mutable_values() { return theta_; }
  double operator[](int i) const { return theta_[i]; }

  // x̄^T theta with x̄ = (1, x^T)^T. No dimension check.
  double Decision(std::span<const double> x) const;

  bool AllFinite() const;

  friend bool operator==(const ModelState&, const ModelState&) = default;

 private:
  Vector theta_;
};

struct Hyper {
  double lambda = 0.01;
  double q = 1.0;
  double eps_smooth = 0.01;
  int max_iter = 500;
  double tol = 1e-8;

  absl::Status Validate() const;
};

enum class Regularizer {
  kFullIdentity,   // n * lambda * I_{p+1}; what every solver uses
  kInterceptFree,  // n * lambda * W; the exact Hessian of the penalty
};

struct ClientSummary {
  Vector grad;
  SymMatrix curvature;
  int count = 0;
};

struct SmoothingCoeffs {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

absl::StatusOr<double> Vq(double u, double q);
absl::StatusOr<double> VqPrime(double u, double q);
absl::StatusOr<SmoothingCoeffs> ComputeSmoothingCoeffs(double q, double eps_smooth);
absl::StatusOr<double> VqPrimeSmoothed(double u, double q, double eps_smooth);
absl::StatusOr<double> VqSecondSmoothed(double u, double q, double eps_smooth);

// Sum_i V_q(y_i x̄_i^T theta) + (n lambda / 2) theta^T W theta.
absl::StatusOr<double> Loss(std::span<const LabeledPoint> data,
                            const ModelState& theta, const Hyper& hyper);

// Sum_i y_i V_q'(y_i x̄_i^T theta) x̄_i + n lambda W theta, with the exact
// (unsmoothed) derivative.
absl::StatusOr<Vector> ClientGradient(std::span<const LabeledPoint> data,
                                      const ModelState& theta,
                                      const Hyper& hyper);

// Sum_i V~_q''(y_i x̄_i^T theta) x̄_i x̄_i^T + n lambda R.
absl::StatusOr<SymMatrix> ClientCurvature(
    std::span<const LabeledPoint> data, const ModelState& theta,
    const Hyper& hyper, Regularizer regularizer = Regularizer::kFullIdentity);

// Gradient plus FullIdentity curvature in one pass over the data.
absl::StatusOr<ClientSummary> Summarize(std::span<const LabeledPoint> data,
                                        const ModelState& theta,
                                        const Hyper& hyper);

// sign(x̄^T theta) with sign(0) = +1.
absl::StatusOr<int> Predict(const ModelState& theta, std::span<const double> x);

// Upper bound of V~_q'' over the real line: (q+1)^2 / q.
double CurvatureBound(double q);

namespace internal {

// Branch constants of V_q and its derivatives for one (q, eps) pair.
// Arguments are assumed valid.
class VqKernel {
 public:
  VqKernel(double q, double eps_smooth);

  double Value(double u) const;
  double Prime(double u) const;
  double PrimeSmoothed(double u) const;
  double SecondSmoothed(double u) const;

  double u0() const { return u0_; }
  const SmoothingCoeffs& coeffs() const { return coeffs_; }

 private:
  double q_;
  double eps_;
  double u0_;
  double value_scale_;   // q^q / (q+1)^{q+1}
  double prime_scale_;   // (q/(q+1))^{q+1}
  double second_scale_;  // q^{q+1} / (q+1)^q
  SmoothingCoeffs coeffs_;
};

SmoothingCoeffs SmoothingCoeffsUnchecked(double q, double eps_smooth);

}  // namespace internal
}  // namespace fedwd

#endif  // FEDWD_DWD_CORE_H_
