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

#include "fedwd/status.h"

#include <optional>
#include <string>

#include "absl/strings/cord.h"
#include "absl/strings/str_cat.h"

namespace fedwd {
namespace {

constexpr std::string_view kKindUrl = "type.fedwd/error_kind";

absl::Status Make(absl::StatusCode code, ErrorKind kind,
                  std::string_view message) {
  absl::Status status(code, ToAbsl(message));
  status.SetPayload(ToAbsl(kKindUrl), absl::Cord(ToAbsl(ErrorKindName(kind))));
  return status;
}

}  // namespace

absl::Status InvalidArgument(std::string_view message) {
  return Make(absl::StatusCode::kInvalidArgument, ErrorKind::kInvalidArgument,
              message);
}

absl::Status SingularMatrix(std::string_view message) {
  return Make(absl::StatusCode::kFailedPrecondition, ErrorKind::kSingularMatrix,
              message);
}

absl::Status PrivacyBudgetTooSmall(std::string_view message) {
  return Make(absl::StatusCode::kOutOfRange, ErrorKind::kPrivacyBudgetTooSmall,
              message);
}

absl::Status ConditionViolation(std::string_view message) {
  return Make(absl::StatusCode::kFailedPrecondition,
              ErrorKind::kConditionViolation, message);
}

absl::Status ParseError(std::string_view message) {
  return Make(absl::StatusCode::kInvalidArgument, ErrorKind::kParse, message);
}

absl::Status IoError(std::string_view message) {
  return Make(absl::StatusCode::kNotFound, ErrorKind::kIo, message);
}

ErrorKind GetErrorKind(const absl::Status& status) {
  if (status.ok()) return ErrorKind::kNone;
  auto payload = status.GetPayload(ToAbsl(kKindUrl));
  if (!payload.has_value()) return ErrorKind::kNone;
  const std::string name(*payload);
  for (ErrorKind kind :
       {ErrorKind::kInvalidArgument, ErrorKind::kSingularMatrix,
        ErrorKind::kPrivacyBudgetTooSmall, ErrorKind::kConditionViolation,
        ErrorKind::kParse, ErrorKind::kIo}) {
    if (name == ErrorKindName(kind)) return kind;
  }
  return ErrorKind::kNone;
}

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNone:
      return "none";
    case ErrorKind::kInvalidArgument:
      return "invalid-argument";
    case ErrorKind::kSingularMatrix:
      return "singular-matrix";
    case ErrorKind::kPrivacyBudgetTooSmall:
      return "privacy-budget-too-small";
    case ErrorKind::kConditionViolation:
      return "condition-violation";
    case ErrorKind::kParse:
      return "parse-error";
    case ErrorKind::kIo:
      return "io-error";
  }
  return "unknown";
}

absl::Status WithContext(const absl::Status& status, std::string_view context) {
  if (status.ok()) return status;
  absl::Status out(status.code(), absl::StrCat(ToAbsl(context), ": ", status.message()));
  status.ForEachPayload([&out](absl::string_view url, const absl::Cord& payload) {
    out.SetPayload(url, payload);
  });
  return out;
}

}  // namespace fedwd
