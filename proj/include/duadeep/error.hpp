// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace duadeep {

// Error classes map one-to-one onto CLI exit codes (see tools/duadeep.cpp).
enum class ErrorKind {
  kDimension = 10,
  kContract = 11,
  kConfig = 12,
  kRecordRejected = 13,
  kDomain = 14,
  kDegenerate = 15,
  kEmptySequence = 16,
  kSplitInfeasible = 17,
  kFormat = 18,
  kIo = 19,
  kMissingEmbedding = 20,
  kConfigMismatch = 21,
  kUndefinedMetric = 22,
  kNonFinite = 23,
  kNoRecords = 24,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind);

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace duadeep
