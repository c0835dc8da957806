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

#ifndef FEDWD_DENSE_LINALG_H_
#define FEDWD_DENSE_LINALG_H_

#include <span>
#include <vector>

#include "absl/status/statusor.h"

namespace fedwd {

using Vector = std::vector<double>;

// Dense symmetric matrix. Only the lower triangle is stored in a meaningful
// state; reads of (i, j) with j > i are served from (j, i), so the matrix is
// symmetric by construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim);

  static SymMatrix Identity(int dim);
  static SymMatrix Diagonal(std::span<const double> diag);

  int dim() const { return dim_; }

  double operator()(int i, int j) const {
    return i >= j ? data_[Index(i, j)] : data_[Index(j, i)];
  }
  // Writes the lower-triangle element addressed by (i, j) in either order.
  void Set(int i, int j, double value);

  // acc += w * v v^T. Rejects a length mismatch or non-finite w.
  absl::Status AddOuter(std::span<const double> v, double w);
  // Same update where v is the augmented vector (1, x^T)^T. Avoids materializing
  // the augmented copy in the per-observation hot loops.
  void AddOuterAugmented(std::span<const double> x, double w);

  void AddScaledIdentity(double s);
  absl::Status Add(const SymMatrix& other, double scale = 1.0);

  Vector Multiply(std::span<const double> v) const;

  // Lower triangle, row by row: (0,0), (1,0), (1,1), (2,0), ...
  Vector PackedLower() const;
  static absl::StatusOr<SymMatrix> FromPackedLower(int dim,
                                                   std::span<const double> packed);

  double MaxAbsDiff(const SymMatrix& other) const;
  double MaxAbs() const;

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) = default;

 private:
  size_t Index(int i, int j) const {
    return static_cast<size_t>(i) * static_cast<size_t>(dim_) +
           static_cast<size_t>(j);
  }

  int dim_ = 0;
  std::vector<double> data_;
};

// Lower Cholesky factor L with A = L L^T.
class Cholesky {
 public:
  // Fails with a singular-matrix error naming the first non-positive pivot.
  static absl::StatusOr<Cholesky> Factor(const SymMatrix& a);

  Vector Solve(std::span<const double> rhs) const;
  int dim() const { return dim_; }

 private:
  int dim_ = 0;
  std::vector<double> lower_;
};

// Solves A x = rhs for symmetric positive-definite A.
absl::StatusOr<Vector> SolveSpd(const SymMatrix& a, std::span<const double> rhs);

double Dot(std::span<const double> a, std::span<const double> b);
double Norm2(std::span<const double> v);
double Norm1(std::span<const double> v);
// a += s * b
void Axpy(double s, std::span<const double> b, std::span<double> a);
Vector Subtract(std::span<const double> a, std::span<const double> b);
double MaxAbsDiff(std::span<const double> a, std::span<const double> b);

}  // namespace fedwd

#endif  // FEDWD_DENSE_LINALG_H_
