// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "duadeep/dataio.hpp"
#include "duadeep/embedding.hpp"
#include "duadeep/model.hpp"

namespace duadeep::train {

enum class Precision { kF32, kF64 };

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  Precision precision = Precision::kF32;
  double target_train_mse = 0.0;  // > 0 stops once train MSE drops below it
  bool shuffle = true;
  std::size_t workers = 1;  // per-sample forward/backward fan-out within a batch

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_rmse = 0.0;
  double val_rmse = 0.0;
  double seconds = 0.0;
};

/// Adam with bias correction. Moment buffers are allocated on the first step
/// and keyed by position in the parameter list, which must stay fixed.
template <typename T>
class Adam {
 public:
  Adam(double lr, double beta1, double beta2, double eps) : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Updates every tensor from its grad buffer.
  void step(std::span<Tensor<T>* const> params);

  std::size_t steps() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

/// All parameter tensors of a model in visit order.
template <typename T>
std::vector<Tensor<T>*> parameter_list(model::ModelParams<T>& params);

/// Stop once `patience` consecutive epochs fail to improve on the best
/// validation RMSE.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true when training should stop after this epoch.
  bool update(double val_rmse);

  bool improved() const noexcept { return improved_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best() const noexcept { return best_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  bool improved_ = false;
};

/// Embeddings of a record's two streams, checked against the token counts.
struct PairEmbeddings {
  const Tensor<float>* antigen = nullptr;
  const Tensor<float>* antibody = nullptr;
};

/// Throws kMissingEmbedding naming the first absent id, kConfigMismatch on a
/// width mismatch, kFormat when row counts differ from residue counts.
std::vector<PairEmbeddings> resolve_embeddings(std::span<const data::CleanRecord> records,
                                               const embed::EmbeddingStore& store, std::size_t d_e);

/// Standardized-scale predictions, one per record, each on its own tape.
template <typename T>
std::vector<double> predict_records(const model::ModelParams<T>& params, std::span<const data::CleanRecord> records,
                                    const embed::EmbeddingStore& store);

template <typename T>
struct TrainResult {
  model::ModelParams<T> best;  // parameters at the lowest validation RMSE
  std::vector<EpochRecord> curve;
  std::size_t best_epoch = 0;
  double best_val_rmse = 0.0;
  std::string stop_reason;  // "max_epochs" | "patience" | "target"
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on the standardized MSE. Each batch is padded to its
/// longest antigen and antibody with masks. Per-sample gradients are reduced
/// in sample order, so results do not depend on `workers`.
template <typename T>
TrainResult<T> train(const model::ModelConfig& model_config, const TrainConfig& config,
                     const data::SplitDataset& dataset, const embed::EmbeddingStore& store,
                     const EpochCallback& on_epoch = {});

/// Same, starting from given parameters.
template <typename T>
TrainResult<T> train_from(model::ModelParams<T> params, const TrainConfig& config, const data::SplitDataset& dataset,
                          const embed::EmbeddingStore& store, const EpochCallback& on_epoch = {});

/// Header "epoch,train_rmse,val_rmse,seconds". With `with_timing` false the
/// seconds column is written as 0 so reruns are byte-identical.
void write_curve_csv(const std::string& path, std::span<const EpochRecord> curve, bool with_timing = true);
std::string curve_csv(std::span<const EpochRecord> curve, bool with_timing = true);

}  // namespace duadeep::train
