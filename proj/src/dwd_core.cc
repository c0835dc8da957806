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

#include "fedwd/dwd_core.h"

#include <cmath>

#include "absl/strings/str_format.h"
#include "fedwd/status.h"

namespace fedwd {
namespace {

absl::Status CheckQ(double q) {
  if (!(q > 0.0) || !std::isfinite(q)) {
    return InvalidArgument(absl::StrFormat("q must be positive and finite, got %g", q));
  }
  return absl::OkStatus();
}

absl::Status CheckArgs(double u, double q) {
  if (!std::isfinite(u)) return InvalidArgument("margin u is not finite");
  return CheckQ(q);
}

absl::Status CheckSmoothing(double q, double eps_smooth) {
  FEDWD_RETURN_IF_ERROR(CheckQ(q));
  const double u0 = q / (q + 1.0);
  if (!(eps_smooth > 0.0) || !(eps_smooth < u0)) {
    return InvalidArgument(absl::StrFormat(
        "eps_smooth must lie in (0, q/(q+1)) = (0, %g), got %g", u0, eps_smooth));
  }
  return absl::OkStatus();
}

absl::Status CheckData(std::span<const LabeledPoint> data, const ModelState& theta) {
  const int p = theta.p();
  if (theta.dim() < 2) {
    return InvalidArgument("theta must have length p + 1 with p >= 1");
  }
  for (size_t i = 0; i < data.size(); ++i) {
    if (static_cast<int>(data[i].x.size()) != p) {
      return InvalidArgument(absl::StrFormat(
          "point %d has %d features but theta implies p = %d", i,
          data[i].x.size(), p));
    }
    if (data[i].y != 1 && data[i].y != -1) {
      return InvalidArgument(
          absl::StrFormat("point %d has label %d; labels must be -1 or +1", i,
                          data[i].y));
    }
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<LabeledPoint> MakePoint(Vector x, int y) {
  if (y != 1 && y != -1) {
    return InvalidArgument(absl::StrFormat("label must be -1 or +1, got %d", y));
  }
  if (x.empty()) return InvalidArgument("feature vector must have length >= 1");
  for (size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) {
      return InvalidArgument(absl::StrFormat("feature %d is not finite", j));
    }
  }
  return LabeledPoint{std::move(x), y};
}

absl::Status ValidatePoints(std::span<const LabeledPoint> data, int p) {
  for (size_t i = 0; i < data.size(); ++i) {
    const LabeledPoint& pt = data[i];
    if (static_cast<int>(pt.x.size()) != p) {
      return InvalidArgument(absl::StrFormat(
          "point %d has %d features, expected %d", i, pt.x.size(), p));
    }
    if (pt.y != 1 && pt.y != -1) {
      return InvalidArgument(absl::StrFormat("point %d has label %d", i, pt.y));
    }
    for (double v : pt.x) {
      if (!std::isfinite(v)) {
        return InvalidArgument(absl::StrFormat("point %d has a non-finite feature", i));
      }
    }
  }
  return absl::OkStatus();
}

double ModelState::Decision(std::span<const double> x) const {
  double s = theta_[0];
  for (size_t j = 0; j < x.size(); ++j) s += theta_[j + 1] * x[j];
  return s;
}

bool ModelState::AllFinite() const {
  for (double v : theta_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

absl::Status Hyper::Validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    return InvalidArgument(absl::StrFormat("lambda must be positive, got %g", lambda));
  }
  FEDWD_RETURN_IF_ERROR(CheckSmoothing(q, eps_smooth));
  if (max_iter < 1) {
    return InvalidArgument(absl::StrFormat("max_iter must be >= 1, got %d", max_iter));
  }
  if (!(tol > 0.0)) {
    return InvalidArgument(absl::StrFormat("tol must be positive, got %g", tol));
  }
  return absl::OkStatus();
}

namespace internal {

SmoothingCoeffs SmoothingCoeffsUnchecked(double q, double eps) {
  const double u0 = q / (q + 1.0);
  // (q+1) u0^{q+1} / (u0+eps)^{q+2}
  const double k = (q + 1.0) * std::exp((q + 1.0) * std::log(u0) -
                                        (q + 2.0) * std::log(u0 + eps));
  return SmoothingCoeffs{
      .a = k / (4.0 * eps),
      .b = k / 2.0,
      .c = -1.0 + eps * k / 4.0,
  };
}

VqKernel::VqKernel(double q, double eps_smooth)
    : q_(q),
      eps_(eps_smooth),
      u0_(q / (q + 1.0)),
      value_scale_(std::exp(q * std::log(q) - (q + 1.0) * std::log(q + 1.0))),
      prime_scale_(std::exp((q + 1.0) * std::log(q / (q + 1.0)))),
      second_scale_(std::exp((q + 1.0) * std::log(q) - q * std::log(q + 1.0))),
      coeffs_(SmoothingCoeffsUnchecked(q, eps_smooth)) {}

double VqKernel::Value(double u) const {
  if (u <= u0_) return 1.0 - u;
  return value_scale_ * std::pow(u, -q_);
}

double VqKernel::Prime(double u) const {
  if (u <= u0_) return -1.0;
  return -prime_scale_ * std::pow(u, -(q_ + 1.0));
}

double VqKernel::PrimeSmoothed(double u) const {
  if (u <= u0_ - eps_) return -1.0;
  if (u < u0_ + eps_) {
    const double d = u - u0_;
    return (coeffs_.a * d + coeffs_.b) * d + coeffs_.c;
  }
  return -prime_scale_ * std::pow(u, -(q_ + 1.0));
}

double VqKernel::SecondSmoothed(double u) const {
  if (u <= u0_ - eps_) return 0.0;
  if (u < u0_ + eps_) return 2.0 * coeffs_.a * (u - u0_) + coeffs_.b;
  return second_scale_ * std::pow(u, -(q_ + 2.0));
}

}  // namespace internal

absl::StatusOr<double> Vq(double u, double q) {
  FEDWD_RETURN_IF_ERROR(CheckArgs(u, q));
  // eps only affects the smoothed members.
  return internal::VqKernel(q, 0.5 * q / (q + 1.0)).Value(u);
}

absl::StatusOr<double> VqPrime(double u, double q) {
  FEDWD_RETURN_IF_ERROR(CheckArgs(u, q));
  return internal::VqKernel(q, 0.5 * q / (q + 1.0)).Prime(u);
}

absl::StatusOr<SmoothingCoeffs> ComputeSmoothingCoeffs(double q, double eps_smooth) {
  FEDWD_RETURN_IF_ERROR(CheckSmoothing(q, eps_smooth));
  return internal::SmoothingCoeffsUnchecked(q, eps_smooth);
}

absl::StatusOr<double> VqPrimeSmoothed(double u, double q, double eps_smooth) {
  FEDWD_RETURN_IF_ERROR(CheckArgs(u, q));
  FEDWD_RETURN_IF_ERROR(CheckSmoothing(q, eps_smooth));
  return internal::VqKernel(q, eps_smooth).PrimeSmoothed(u);
}

absl::StatusOr<double> VqSecondSmoothed(double u, double q, double eps_smooth) {
  FEDWD_RETURN_IF_ERROR(CheckArgs(u, q));
  FEDWD_RETURN_IF_ERROR(CheckSmoothing(q, eps_smooth));
  return internal::VqKernel(q, eps_smooth).SecondSmoothed(u);
}

absl::StatusOr<double> Loss(std::span<const LabeledPoint> data,
                            const ModelState& theta, const Hyper& hyper) {
  FEDWD_RETURN_IF_ERROR(hyper.Validate());
  FEDWD_RETURN_IF_ERROR(CheckData(data, theta));
  const internal::VqKernel kernel(hyper.q, hyper.eps_smooth);
  double total = 0.0;
  for (const LabeledPoint& pt : data) {
    total += kernel.Value(pt.y * theta.Decision(pt.x));
  }
  double slope_sq = 0.0;
  for (double b : theta.slopes()) slope_sq += b * b;
  total += 0.5 * static_cast<double>(data.size()) * hyper.lambda * slope_sq;
  return total;
}

absl::StatusOr<Vector> ClientGradient(std::span<const LabeledPoint> data,
                                      const ModelState& theta,
                                      const Hyper& hyper) {
  FEDWD_RETURN_IF_ERROR(hyper.Validate());
  FEDWD_RETURN_IF_ERROR(CheckData(data, theta));
  const internal::VqKernel kernel(hyper.q, hyper.eps_smooth);
  const int dim = theta.dim();
  Vector grad(dim, 0.0);
  for (const LabeledPoint& pt : data) {
    const double coef = pt.y * kernel.Prime(pt.y * theta.Decision(pt.x));
    grad[0] += coef;
    for (int j = 1; j < dim; ++j) grad[j] += coef * pt.x[j - 1];
  }
  const double n_lambda = static_cast<double>(data.size()) * hyper.lambda;
  for (int j = 1; j < dim; ++j) grad[j] += n_lambda * theta[j];
  return grad;
}

absl::StatusOr<SymMatrix> ClientCurvature(std::span<const LabeledPoint> data,
                                          const ModelState& theta,
                                          const Hyper& hyper,
                                          Regularizer regularizer) {
  FEDWD_RETURN_IF_ERROR(hyper.Validate());
  FEDWD_RETURN_IF_ERROR(CheckData(data, theta));
  const internal::VqKernel kernel(hyper.q, hyper.eps_smooth);
  const int dim = theta.dim();
  SymMatrix curvature(dim);
  for (const LabeledPoint& pt : data) {
    curvature.AddOuterAugmented(pt.x, kernel.SecondSmoothed(pt.y * theta.Decision(pt.x)));
  }
  const double n_lambda = static_cast<double>(data.size()) * hyper.lambda;
  curvature.AddScaledIdentity(n_lambda);
  if (regularizer == Regularizer::kInterceptFree) {
    curvature.Set(0, 0, curvature(0, 0) - n_lambda);
  }
  return curvature;
}

absl::StatusOr<ClientSummary> Summarize(std::span<const LabeledPoint> data,
                                        const ModelState& theta,
                                        const Hyper& hyper) {
  FEDWD_RETURN_IF_ERROR(hyper.Validate());
  FEDWD_RETURN_IF_ERROR(CheckData(data, theta));
  const internal::VqKernel kernel(hyper.q, hyper.eps_smooth);
  const int dim = theta.dim();
  ClientSummary summary{Vector(dim, 0.0), SymMatrix(dim),
                        static_cast<int>(data.size())};
  for (const LabeledPoint& pt : data) {
    const double u = pt.y * theta.Decision(pt.x);
    const double coef = pt.y * kernel.Prime(u);
    summary.grad[0] += coef;
    for (int j = 1; j < dim; ++j) summary.grad[j] += coef * pt.x[j - 1];
    summary.curvature.AddOuterAugmented(pt.x, kernel.SecondSmoothed(u));
  }
  const double n_lambda = static_cast<double>(data.size()) * hyper.lambda;
  for (int j = 1; j < dim; ++j) summary.grad[j] += n_lambda * theta[j];
  summary.curvature.AddScaledIdentity(n_lambda);
  return summary;
}

absl::StatusOr<int> Predict(const ModelState& theta, std::span<const double> x) {
  if (static_cast<int>(x.size()) != theta.p()) {
    return InvalidArgument(absl::StrFormat(
        "x has %d features but theta implies p = %d", x.size(), theta.p()));
  }
  return theta.Decision(x) >= 0.0 ? 1 : -1;
}

double CurvatureBound(double q) { return (q + 1.0) * (q + 1.0) / q; }

}  // namespace fedwd
