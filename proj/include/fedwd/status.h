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

#ifndef FEDWD_STATUS_H_
#define FEDWD_STATUS_H_

#include <string_view>

#include "absl/status/status.h"

namespace fedwd {

// The system abseil keeps its own string_view type.
inline absl::string_view ToAbsl(std::string_view s) { return {s.data(), s.size()}; }
inline std::string_view FromAbsl(absl::string_view s) { return {s.data(), s.size()}; }

// Error categories surfaced by the library. Every non-OK status produced by
// fedwd carries one of these as a payload so callers can branch on the kind
// without parsing messages.
enum class ErrorKind {
  kNone = 0,
  kInvalidArgument,
  kSingularMatrix,
  kPrivacyBudgetTooSmall,
  kConditionViolation,
  kParse,
  kIo,
};

absl::Status InvalidArgument(std::string_view message);
absl::Status SingularMatrix(std::string_view message);
absl::Status PrivacyBudgetTooSmall(std::string_view message);
absl::Status ConditionViolation(std::string_view message);
absl::Status ParseError(std::string_view message);
absl::Status IoError(std::string_view message);

// Returns kNone for OK statuses and for statuses created outside fedwd.
ErrorKind GetErrorKind(const absl::Status& status);

std::string_view ErrorKindName(ErrorKind kind);

// Prefixes the message with context, keeping code and payloads.
absl::Status WithContext(const absl::Status& status, std::string_view context);

}  // namespace fedwd

#define FEDWD_RETURN_IF_ERROR(expr)              \
  do {                                           \
    ::absl::Status fedwd_status_ = (expr);       \
    if (!fedwd_status_.ok()) return fedwd_status_; \
  } while (0)

#define FEDWD_CONCAT_INNER_(a, b) a##b
#define FEDWD_CONCAT_(a, b) FEDWD_CONCAT_INNER_(a, b)

#define FEDWD_ASSIGN_OR_RETURN(lhs, rexpr) \
  FEDWD_ASSIGN_OR_RETURN_IMPL_(FEDWD_CONCAT_(fedwd_statusor_, __LINE__), lhs, rexpr)

#define FEDWD_ASSIGN_OR_RETURN_IMPL_(statusor, lhs, rexpr) \
  auto statusor = (rexpr);                                 \
  if (!statusor.ok()) return statusor.status();            \
  lhs = std::move(statusor).value()

#endif  // FEDWD_STATUS_H_
