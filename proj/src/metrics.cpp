// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "duadeep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include <nlohmann/json.hpp>

#include "duadeep/error.hpp"

namespace duadeep::metrics {
namespace {

void check_pair(const char* what, std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::kDimension, std::string(what) + ": length mismatch " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()));
  }
  if (a.size() < 2) fail(ErrorKind::kContract, std::string(what) + ": need at least 2 samples");
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> target) {
  check_pair("rmse", pred, target);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

double mae(std::span<const double> pred, std::span<const double> target) {
  check_pair("mae", pred, target);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

double r2(std::span<const double> pred, std::span<const double> target) {
  check_pair("r2", pred, target);
  const double mu = mean_of(target);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ss_res += (target[i] - pred[i]) * (target[i] - pred[i]);
    ss_tot += (target[i] - mu) * (target[i] - mu);
  }
  if (!(ss_tot > 0.0)) fail(ErrorKind::kUndefinedMetric, "r2 is undefined for a constant target");
  return 1.0 - ss_res / ss_tot;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_pair("pearson", x, y);
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) fail(ErrorKind::kUndefinedMetric, "correlation is undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  check_pair("spearman", x, y);
  const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  return pearson(rx, ry);
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorKind::kDimension, "roc_auc: " + std::to_string(scores.size()) + " scores for " +
                                    std::to_string(labels.size()) + " labels");
  }
  std::size_t n_pos = 0;
  for (const std::uint8_t l : labels) {
    if (l > 1) fail(ErrorKind::kContract, "roc_auc: labels must be 0 or 1");
    n_pos += l;
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorKind::kUndefinedMetric, "AUC is undefined with a single class");
  const std::vector<double> ranks = average_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (labels[i] == 1) rank_sum += ranks[i];
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

ThresholdPolicy ThresholdPolicy::parse(std::string_view text) {
  if (text == "median") return {Kind::kMedian, 0.0, "median"};
  constexpr std::string_view prefix = "fixed:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string number(text.substr(prefix.size()));
    char* end = nullptr;
    const double v = std::strtod(number.c_str(), &end);
    if (!number.empty() && end == number.c_str() + number.size() && std::isfinite(v)) {
      return {Kind::kFixed, v, std::string(text)};
    }
  }
  fail(ErrorKind::kConfig, "AUC policy must be 'median' or 'fixed:<threshold>', got '" + std::string(text) + "'");
}

std::string ThresholdPolicy::to_string() const {
  if (!text.empty()) return text;
  if (kind == Kind::kMedian) return "median";
  nlohmann::json v = value;  // shortest round-trip representation
  return "fixed:" + v.dump();
}

namespace {

double threshold_for(std::span<const double> pkds, const ThresholdPolicy& policy) {
  if (pkds.size() < 2) fail(ErrorKind::kContract, "binarize_targets: need at least 2 values");
  if (policy.kind == ThresholdPolicy::Kind::kFixed) return policy.value;
  std::vector<double> sorted(pkds.begin(), pkds.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

}  // namespace

Binarized binarize_targets(std::span<const double> pkds, const ThresholdPolicy& policy) {
  Binarized out;
  out.threshold = threshold_for(pkds, policy);
  out.labels.reserve(pkds.size());
  std::size_t positives = 0;
  for (const double v : pkds) {
    out.labels.push_back(v >= out.threshold ? 1 : 0);
    positives += out.labels.back();
  }
  if (positives == 0 || positives == pkds.size()) {
    fail(ErrorKind::kUndefinedMetric, "threshold " + std::to_string(out.threshold) + " (" + policy.to_string() +
                                          ") leaves a single class; AUC is undefined");
  }
  return out;
}

Scale parse_scale(std::string_view text) {
  if (text == "standardized") return Scale::kStandardized;
  if (text == "pkd") return Scale::kPkd;
  fail(ErrorKind::kConfig, "scale must be 'standardized' or 'pkd', got '" + std::string(text) + "'");
}

const char* scale_name(Scale scale) { return scale == Scale::kPkd ? "pkd" : "standardized"; }

EvalReport evaluate(std::span<const double> pred, std::span<const double> target, std::span<const double> true_pkd,
                    const ThresholdPolicy& policy, Scale scale) {
  EvalReport r;
  r.n = pred.size();
  r.scale = scale;
  r.auc_policy = policy.to_string();
  r.rmse = rmse(pred, target);
  r.mae = mae(pred, target);
  r.r2 = metrics::r2(pred, target);
  r.pearson = metrics::pearson(pred, target);
  r.spearman = metrics::spearman(pred, target);
  if (true_pkd.size() != pred.size()) fail(ErrorKind::kDimension, "evaluate: pK_d count differs from predictions");
  r.auc_threshold = threshold_for(true_pkd, policy);
  try {
    const Binarized b = binarize_targets(true_pkd, policy);
    r.auc = roc_auc(pred, b.labels);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kUndefinedMetric) throw;
    r.warnings.emplace_back(e.what());
  }
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j = {{"rmse", r.rmse},
                      {"mae", r.mae},
                      {"r2", r.r2},
                      {"pearson", r.pearson},
                      {"spearman", r.spearman},
                      {"auc", nullptr},
                      {"n", r.n},
                      {"auc_threshold", nullptr},
                      {"auc_policy", r.auc_policy},
                      {"scale", scale_name(r.scale)},
                      {"warnings", r.warnings}};
  if (r.auc) j["auc"] = *r.auc;
  if (r.auc_threshold) j["auc_threshold"] = *r.auc_threshold;
  return j;
}

}  // namespace duadeep::metrics
