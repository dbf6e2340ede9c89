// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace duadeep::metrics {

// Length mismatches throw kDimension; fewer than two samples throw kContract.
double rmse(std::span<const double> pred, std::span<const double> target);
double mae(std::span<const double> pred, std::span<const double> target);

/// 1 - SS_res / SS_tot around the target mean. Constant target -> kUndefinedMetric.
double r2(std::span<const double> pred, std::span<const double> target);

/// Constant input -> kUndefinedMetric.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of their rank range.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Mann-Whitney AUC: P(pos > neg) + 0.5 P(pos == neg), via rank sums.
/// Labels are 0/1; a single class -> kUndefinedMetric.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct ThresholdPolicy {
  enum class Kind { kMedian, kFixed };
  Kind kind = Kind::kMedian;
  double value = 0.0;  // used by kFixed
  std::string text;    // as parsed, echoed verbatim in reports

  /// "median" or "fixed:<t>".
  static ThresholdPolicy parse(std::string_view text);
  std::string to_string() const;
};

struct Binarized {
  std::vector<std::uint8_t> labels;
  double threshold = 0.0;
};

/// label = 1 iff pkd >= threshold. A single resulting class -> kUndefinedMetric.
Binarized binarize_targets(std::span<const double> pkds, const ThresholdPolicy& policy);

enum class Scale { kStandardized, kPkd };
Scale parse_scale(std::string_view text);
const char* scale_name(Scale scale);

struct EvalReport {
  double rmse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;
  double pearson = 0.0;
  double spearman = 0.0;
  std::optional<double> auc;  // empty when binarization leaves one class
  std::size_t n = 0;
  std::optional<double> auc_threshold;
  std::string auc_policy = "median";
  Scale scale = Scale::kStandardized;
  std::vector<std::string> warnings;
};

/// Regression metrics on (pred, target) as given; AUC ranks `pred` against
/// labels from binarizing `true_pkd` under `policy`.
EvalReport evaluate(std::span<const double> pred, std::span<const double> target, std::span<const double> true_pkd,
                    const ThresholdPolicy& policy, Scale scale);

nlohmann::json to_json(const EvalReport& report);

}  // namespace duadeep::metrics
