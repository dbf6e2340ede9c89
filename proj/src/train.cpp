// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "duadeep/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "duadeep/error.hpp"
#include "duadeep/ops.hpp"
#include "duadeep/rng.hpp"

namespace duadeep::train {

void TrainConfig::validate() const {
  auto bad = [](const std::string& msg) { fail(ErrorKind::kConfig, "train config: " + msg); };
  if (!(lr > 0.0) || !std::isfinite(lr)) bad("lr must be positive");
  if (batch_size == 0) bad("batch_size must be positive");
  if (max_epochs == 0) bad("max_epochs must be positive");
  if (patience == 0) bad("patience must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) bad("betas must lie in [0, 1)");
  if (!(eps > 0.0)) bad("eps must be positive");
  if (!(target_train_mse >= 0.0)) bad("target_train_mse must be >= 0");
  if (workers == 0) bad("workers must be positive");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"seed", c.seed},
          {"precision", c.precision == Precision::kF64 ? 64 : 32},
          {"target_train_mse", c.target_train_mse},
          {"shuffle", c.shuffle},
          {"workers", c.workers}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) fail(ErrorKind::kConfig, "train config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "lr") {
        c.lr = v.get<double>();
      } else if (key == "batch_size") {
        c.batch_size = v.get<std::size_t>();
      } else if (key == "max_epochs") {
        c.max_epochs = v.get<std::size_t>();
      } else if (key == "patience") {
        c.patience = v.get<std::size_t>();
      } else if (key == "beta1") {
        c.beta1 = v.get<double>();
      } else if (key == "beta2") {
        c.beta2 = v.get<double>();
      } else if (key == "eps") {
        c.eps = v.get<double>();
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "precision") {
        const int bits = v.get<int>();
        if (bits != 32 && bits != 64) fail(ErrorKind::kConfig, "precision must be 32 or 64");
        c.precision = bits == 64 ? Precision::kF64 : Precision::kF32;
      } else if (key == "target_train_mse") {
        c.target_train_mse = v.get<double>();
      } else if (key == "shuffle") {
        c.shuffle = v.get<bool>();
      } else if (key == "workers") {
        c.workers = v.get<std::size_t>();
      } else {
        fail(ErrorKind::kConfig, "unknown train config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("train config: ") + e.what());
  }
  return c;
}

template <typename T>
void Adam<T>::step(std::span<Tensor<T>* const> params) {
  if (m_.empty()) {
    for (const Tensor<T>* p : params) {
      m_.emplace_back(p->size(), T(0));
      v_.emplace_back(p->size(), T(0));
    }
  }
  if (m_.size() != params.size()) fail(ErrorKind::kContract, "Adam: parameter list changed between steps");
  ++t_;
  const T b1 = static_cast<T>(beta1_), b2 = static_cast<T>(beta2_);
  const T c1 = T(1) - static_cast<T>(std::pow(beta1_, static_cast<double>(t_)));
  const T c2 = T(1) - static_cast<T>(std::pow(beta2_, static_cast<double>(t_)));
  const T lr = static_cast<T>(lr_), eps = static_cast<T>(eps_);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<T>& p = *params[k];
    if (!p.has_grad()) continue;
    if (m_[k].size() != p.size()) fail(ErrorKind::kContract, "Adam: parameter size changed between steps");
    std::span<T> value = p.data();
    std::span<const T> g = p.grad();
    std::vector<T>& m = m_[k];
    std::vector<T>& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const T m_hat = m[i] / c1;
      const T v_hat = v[i] / c2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template <typename T>
std::vector<Tensor<T>*> parameter_list(model::ModelParams<T>& params) {
  std::vector<Tensor<T>*> out;
  params.visit([&](const std::string&, Tensor<T>& t) { out.push_back(&t); });
  return out;
}

bool EarlyStopping::update(double val_rmse) {
  ++epoch_;
  improved_ = val_rmse < best_;
  if (improved_) {
    best_ = val_rmse;
    best_epoch_ = epoch_;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  return since_best_ >= patience_;
}

std::vector<PairEmbeddings> resolve_embeddings(std::span<const data::CleanRecord> records,
                                               const embed::EmbeddingStore& store, std::size_t d_e) {
  if (store.d_e() != d_e) {
    fail(ErrorKind::kConfigMismatch, "embedding width " + std::to_string(store.d_e()) +
                                         " does not match model d_e " + std::to_string(d_e));
  }
  auto lookup = [&](const std::string& id, std::size_t tokens) -> const Tensor<float>* {
    const embed::EmbeddingMatrix& m = store.at(id);
    if (m.length() != tokens) {
      fail(ErrorKind::kFormat, "embedding for " + id + " has " + std::to_string(m.length()) +
                                   " rows but the sequence has " + std::to_string(tokens) + " tokens");
    }
    return &m.values;
  };
  std::vector<PairEmbeddings> out;
  out.reserve(records.size());
  for (const data::CleanRecord& r : records) {
    out.push_back({lookup(r.antigen_id, r.antigen_tokens.size()), lookup(r.antibody_id, r.antibody_tokens.size())});
  }
  return out;
}

namespace {

template <typename T>
std::vector<double> predict_resolved(const model::ModelParams<T>& params, std::span<const PairEmbeddings> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const PairEmbeddings& p : pairs) {
    const auto ag = model::StreamInput<T>::from(*p.antigen);
    const auto ab = model::StreamInput<T>::from(*p.antibody);
    out.push_back(static_cast<double>(model::predict(params, ag, ab)));
  }
  return out;
}

std::vector<double> targets_of(std::span<const data::CleanRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const data::CleanRecord& r : records) out.push_back(r.pkd_std);
  return out;
}

double rmse_of(std::span<const double> pred, std::span<const double> target) {
  if (pred.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_seconds(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Forward + backward of one sample on its own tape; gradients stay on the
// tape until flushed so samples may run concurrently.
template <typename T>
struct SampleJob {
  std::unique_ptr<Tape<T>> tape;
  Var<T> loss;
  double loss_value = 0.0;
};

template <typename T>
void run_sample(SampleJob<T>& job, const model::ModelParams<T>& params, const PairEmbeddings& pair, double target,
                std::size_t pad_ag, std::size_t pad_ab, T weight, const model::ForwardOptions& options) {
  job.tape = std::make_unique<Tape<T>>();
  const auto ag = model::StreamInput<T>::from(*pair.antigen, pad_ag);
  const auto ab = model::StreamInput<T>::from(*pair.antibody, pad_ab);
  const Var<T> pred = model::model_forward(*job.tape, ag, ab, params, options);
  const Var<T> loss = ops::mse_loss(pred, Tensor<T>::scalar(static_cast<T>(target)));
  job.loss = ops::scale(loss, weight);
  job.loss_value = static_cast<double>(job.loss.value().item());
  job.tape->propagate(job.loss);
}

}  // namespace

template <typename T>
std::vector<double> predict_records(const model::ModelParams<T>& params, std::span<const data::CleanRecord> records,
                                    const embed::EmbeddingStore& store) {
  const std::vector<PairEmbeddings> pairs = resolve_embeddings(records, store, params.config.d_e);
  return predict_resolved(params, pairs);
}

template <typename T>
TrainResult<T> train(const model::ModelConfig& model_config, const TrainConfig& config,
                     const data::SplitDataset& dataset, const embed::EmbeddingStore& store,
                     const EpochCallback& on_epoch) {
  model_config.validate();
  return train_from(model::init_params<T>(model_config), config, dataset, store, on_epoch);
}

template <typename T>
TrainResult<T> train_from(model::ModelParams<T> params, const TrainConfig& config, const data::SplitDataset& dataset,
                          const embed::EmbeddingStore& store, const EpochCallback& on_epoch) {
  using Clock = std::chrono::steady_clock;
  config.validate();
  params.config.validate();
  if (dataset.train.empty()) fail(ErrorKind::kNoRecords, "training split is empty");

  const std::vector<PairEmbeddings> train_pairs = resolve_embeddings(dataset.train, store, params.config.d_e);
  const std::vector<PairEmbeddings> val_pairs = resolve_embeddings(dataset.val, store, params.config.d_e);
  const std::vector<double> train_y = targets_of(dataset.train);
  const std::vector<double> val_y = targets_of(dataset.val);

  params.set_requires_grad(true);
  const std::vector<Tensor<T>*> plist = parameter_list(params);
  Adam<T> adam(config.lr, config.beta1, config.beta2, config.eps);
  EarlyStopping stopper(config.patience);
  Rng rng(config.seed);

  TrainResult<T> result;
  result.best = params;
  result.best.set_requires_grad(false);
  result.stop_reason = "max_epochs";

  std::vector<std::size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = Clock::now();
    if (config.shuffle) rng.shuffle(order);

    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::size_t n = end - start;
      std::size_t pad_ag = 0, pad_ab = 0;
      for (std::size_t i = start; i < end; ++i) {
        pad_ag = std::max(pad_ag, train_pairs[order[i]].antigen->dim(0));
        pad_ab = std::max(pad_ab, train_pairs[order[i]].antibody->dim(0));
      }
      const T weight = T(1) / static_cast<T>(n);
      params.zero_grad();

      std::vector<SampleJob<T>> jobs(n);
      auto options_for = [&](std::size_t i) {
        model::ForwardOptions o;
        o.training = true;
        o.dropout_seed = mix64(config.seed ^ mix64(epoch ^ mix64(batch_index ^ mix64(i))));
        return o;
      };
      double batch_loss = 0.0;
      if (config.workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t k = order[start + i];
          run_sample(jobs[i], params, train_pairs[k], train_y[k], pad_ag, pad_ab, weight, options_for(i));
          jobs[i].tape->flush_leaf_grads();
          batch_loss += jobs[i].loss_value;
          jobs[i].tape.reset();
        }
      } else {
        const std::size_t workers = std::min(config.workers, n);
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
          threads.emplace_back([&, w] {
            try {
              for (std::size_t i = w; i < n; i += workers) {
                const std::size_t k = order[start + i];
                run_sample(jobs[i], params, train_pairs[k], train_y[k], pad_ag, pad_ab, weight, options_for(i));
              }
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        }
        for (std::thread& t : threads) t.join();
        for (const std::exception_ptr& e : errors) {
          if (e) std::rethrow_exception(e);
        }
        for (std::size_t i = 0; i < n; ++i) {
          jobs[i].tape->flush_leaf_grads();
          batch_loss += jobs[i].loss_value;
        }
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch " << batch_index
            << " (max |param| = " << static_cast<double>(params.max_abs()) << ")";
        fail(ErrorKind::kNonFinite, msg.str());
      }
      adam.step(plist);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_rmse = rmse_of(predict_resolved(params, train_pairs), train_y);
    rec.val_rmse = rmse_of(predict_resolved(params, val_pairs), val_y);
    rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!std::isfinite(rec.train_rmse)) {
      std::ostringstream msg;
      msg << "non-finite training RMSE after epoch " << epoch
          << " (max |param| = " << static_cast<double>(params.max_abs()) << ")";
      fail(ErrorKind::kNonFinite, msg.str());
    }
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);

    // Without a validation split the training RMSE drives model selection.
    const double monitored = val_pairs.empty() ? rec.train_rmse : rec.val_rmse;
    const bool stop = stopper.update(monitored);
    if (stopper.improved()) {
      result.best = params;
      result.best.set_requires_grad(false);
    }
    if (config.target_train_mse > 0.0 && rec.train_rmse * rec.train_rmse < config.target_train_mse) {
      result.stop_reason = "target";
      break;
    }
    if (stop) {
      result.stop_reason = "patience";
      break;
    }
  }
  result.best_epoch = stopper.best_epoch();
  result.best_val_rmse = stopper.best();
  return result;
}

std::string curve_csv(std::span<const EpochRecord> curve, bool with_timing) {
  std::string out = "epoch,train_rmse,val_rmse,seconds\n";
  for (const EpochRecord& r : curve) {
    out += std::to_string(r.epoch) + "," + format_double(r.train_rmse) + "," + format_double(r.val_rmse) + "," +
           (with_timing ? format_seconds(r.seconds) : std::string("0")) + "\n";
  }
  return out;
}

void write_curve_csv(const std::string& path, std::span<const EpochRecord> curve, bool with_timing) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::kIo, "cannot open " + path + " for writing");
  f << curve_csv(curve, with_timing);
  if (!f) fail(ErrorKind::kIo, "failed writing " + path);
}

#define DUADEEP_INSTANTIATE_TRAIN(T)                                                                            \
  template class Adam<T>;                                                                                       \
  template std::vector<Tensor<T>*> parameter_list(model::ModelParams<T>&);                                      \
  template std::vector<double> predict_records(const model::ModelParams<T>&, std::span<const data::CleanRecord>, \
                                               const embed::EmbeddingStore&);                                   \
  template TrainResult<T> train(const model::ModelConfig&, const TrainConfig&, const data::SplitDataset&,       \
                                const embed::EmbeddingStore&, const EpochCallback&);                            \
  template TrainResult<T> train_from(model::ModelParams<T>, const TrainConfig&, const data::SplitDataset&,      \
                                     const embed::EmbeddingStore&, const EpochCallback&);

DUADEEP_INSTANTIATE_TRAIN(float)
DUADEEP_INSTANTIATE_TRAIN(double)

#undef DUADEEP_INSTANTIATE_TRAIN

}  // namespace duadeep::train
