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

#include "fedwd/dense_linalg.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_format.h"
#include "fedwd/status.h"

namespace fedwd {

SymMatrix::SymMatrix(int dim)
    : dim_(dim), data_(static_cast<size_t>(dim) * static_cast<size_t>(dim), 0.0) {}

SymMatrix SymMatrix::Identity(int dim) {
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i) m.data_[m.Index(i, i)] = 1.0;
  return m;
}

SymMatrix SymMatrix::Diagonal(std::span<const double> diag) {
  SymMatrix m(static_cast<int>(diag.size()));
  for (int i = 0; i < m.dim_; ++i) m.data_[m.Index(i, i)] = diag[i];
  return m;
}

void SymMatrix::Set(int i, int j, double value) {
  if (i < j) std::swap(i, j);
  data_[Index(i, j)] = value;
}

absl::Status SymMatrix::AddOuter(std::span<const double> v, double w) {
  if (static_cast<int>(v.size()) != dim_) {
    return InvalidArgument(absl::StrFormat(
        "AddOuter: vector length %d does not match matrix dim %d", v.size(),
        dim_));
  }
  if (!std::isfinite(w)) return InvalidArgument("AddOuter: weight is not finite");
  if (w == 0.0) return absl::OkStatus();
  for (int i = 0; i < dim_; ++i) {
    const double wi = w * v[i];
    double* row = &data_[Index(i, 0)];
    for (int j = 0; j <= i; ++j) row[j] += wi * v[j];
  }
  return absl::OkStatus();
}

void SymMatrix::AddOuterAugmented(std::span<const double> x, double w) {
  if (w == 0.0) return;
  data_[0] += w;
  for (int i = 1; i < dim_; ++i) {
    const double wi = w * x[i - 1];
    double* row = &data_[Index(i, 0)];
    row[0] += wi;
    const double* xs = x.data() - 1;
    for (int j = 1; j <= i; ++j) row[j] += wi * xs[j];
  }
}

void SymMatrix::AddScaledIdentity(double s) {
  for (int i = 0; i < dim_; ++i) data_[Index(i, i)] += s;
}

absl::Status SymMatrix::Add(const SymMatrix& other, double scale) {
  if (other.dim_ != dim_) {
    return InvalidArgument(absl::StrFormat(
        "SymMatrix::Add: dim %d does not match %d", other.dim_, dim_));
  }
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j <= i; ++j) data_[Index(i, j)] += scale * other.data_[Index(i, j)];
  }
  return absl::OkStatus();
}

Vector SymMatrix::Multiply(std::span<const double> v) const {
  Vector out(dim_, 0.0);
  for (int i = 0; i < dim_; ++i) {
    double acc = 0.0;
    for (int j = 0; j < dim_; ++j) acc += (*this)(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

Vector SymMatrix::PackedLower() const {
  Vector packed;
  packed.reserve(static_cast<size_t>(dim_) * (dim_ + 1) / 2);
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j <= i; ++j) packed.push_back(data_[Index(i, j)]);
  }
  return packed;
}

absl::StatusOr<SymMatrix> SymMatrix::FromPackedLower(
    int dim, std::span<const double> packed) {
  if (dim < 0 || packed.size() != static_cast<size_t>(dim) * (dim + 1) / 2) {
    return InvalidArgument(absl::StrFormat(
        "packed lower triangle has %d entries, expected %d for dim %d",
        packed.size(), dim < 0 ? 0 : dim * (dim + 1) / 2, dim));
  }
  SymMatrix m(dim);
  size_t k = 0;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j <= i; ++j) m.data_[m.Index(i, j)] = packed[k++];
  }
  return m;
}

double SymMatrix::MaxAbsDiff(const SymMatrix& other) const {
  double worst = 0.0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j <= i; ++j) {
      worst = std::max(worst, std::abs((*this)(i, j) - other(i, j)));
    }
  }
  return worst;
}

double SymMatrix::MaxAbs() const {
  double worst = 0.0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j <= i; ++j) worst = std::max(worst, std::abs((*this)(i, j)));
  }
  return worst;
}

absl::StatusOr<Cholesky> Cholesky::Factor(const SymMatrix& a) {
  const int n = a.dim();
  Cholesky chol;
  chol.dim_ = n;
  chol.lower_.assign(static_cast<size_t>(n) * n, 0.0);
  auto L = [&](int i, int j) -> double& {
    return chol.lower_[static_cast<size_t>(i) * n + j];
  };
  for (int j = 0; j < n; ++j) {
    double diag = a(j, j);
    const double* lj = &L(j, 0);
    for (int k = 0; k < j; ++k) diag -= lj[k] * lj[k];
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      return SingularMatrix(absl::StrFormat(
          "Cholesky factorization failed: non-positive pivot %g at index %d",
          diag, j));
    }
    const double ljj = std::sqrt(diag);
    L(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      const double* li = &L(i, 0);
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= li[k] * lj[k];
      L(i, j) = s / ljj;
    }
  }
  return chol;
}

Vector Cholesky::Solve(std::span<const double> rhs) const {
  const int n = dim_;
  Vector x(rhs.begin(), rhs.end());
  // Forward: L y = b.
  for (int i = 0; i < n; ++i) {
    const double* li = &lower_[static_cast<size_t>(i) * n];
    double s = x[i];
    for (int k = 0; k < i; ++k) s -= li[k] * x[k];
    x[i] = s / li[i];
  }
  // Backward: L^T x = y.
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int k = i + 1; k < n; ++k) s -= lower_[static_cast<size_t>(k) * n + i] * x[k];
    x[i] = s / lower_[static_cast<size_t>(i) * n + i];
  }
  return x;
}

absl::StatusOr<Vector> SolveSpd(const SymMatrix& a, std::span<const double> rhs) {
  if (static_cast<int>(rhs.size()) != a.dim()) {
    return InvalidArgument(absl::StrFormat(
        "SolveSpd: rhs length %d does not match matrix dim %d", rhs.size(),
        a.dim()));
  }
  FEDWD_ASSIGN_OR_RETURN(Cholesky chol, Cholesky::Factor(a));
  return chol.Solve(rhs);
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm2(std::span<const double> v) { return std::sqrt(Dot(v, v)); }

double Norm1(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

void Axpy(double s, std::span<const double> b, std::span<double> a) {
  for (size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

Vector Subtract(std::span<const double> a, std::span<const double> b) {
  Vector out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

double MaxAbsDiff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace fedwd
