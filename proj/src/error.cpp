// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "duadeep/error.hpp"

#include "duadeep/tensor.hpp"

namespace duadeep {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kContract: return "contract error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kRecordRejected: return "record rejected";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kDegenerate: return "degenerate scaler";
    case ErrorKind::kEmptySequence: return "empty sequence";
    case ErrorKind::kSplitInfeasible: return "split infeasible";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kMissingEmbedding: return "missing embedding";
    case ErrorKind::kConfigMismatch: return "configuration mismatch";
    case ErrorKind::kUndefinedMetric: return "undefined metric";
    case ErrorKind::kNonFinite: return "non-finite value";
    case ErrorKind::kNoRecords: return "no records retained";
  }
  return "error";
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

}  // namespace duadeep
