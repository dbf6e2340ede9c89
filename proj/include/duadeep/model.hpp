// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "duadeep/tape.hpp"
#include "duadeep/tensor.hpp"

namespace duadeep::model {

/// DuaDeep uses both branches per stream; ESM-T only the transformer
/// branch; ESM-C only the CNN branch.
enum class Variant { kDuaDeep, kEsmT, kEsmC };

Variant parse_variant(std::string_view name);  // "duadeep" | "esm-t" | "esm-c"
const char* variant_name(Variant v);

struct ConvSpec {
  std::size_t filters = 0;
  std::size_t kernel = 0;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct ModelConfig {
  std::size_t d_e = 1280;
  std::size_t n_heads = 8;
  std::size_t n_layers = 2;
  std::size_t d_ff = 0;  // 0 means 4 * d_e
  ConvSpec conv1{256, 3};
  ConvSpec conv2{128, 5};
  std::vector<std::size_t> head_dims{512, 128};
  Variant variant = Variant::kDuaDeep;
  std::uint64_t seed = 0;
  double dropout = 0.0;  // applied after each hidden head layer while training
  double ln_eps = 1e-5;

  bool uses_transformer() const { return variant != Variant::kEsmC; }
  bool uses_cnn() const { return variant != Variant::kEsmT; }
  std::size_t d_k() const { return d_e / n_heads; }
  std::size_t ffn_width() const { return d_ff == 0 ? 4 * d_e : d_ff; }
  std::size_t d_cnn() const { return conv2.filters; }

  /// Width of the fused vector fed to the head:
  /// DuaDeep 2 * (d_e + d_cnn), ESM-T 2 * d_e, ESM-C 2 * d_cnn.
  std::size_t fusion_width() const;

  /// Throws kConfig on any violated invariant.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& config);

/// Unknown keys are rejected; absent keys keep `base` values.
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

template <typename T>
struct AttentionParams {
  std::vector<Tensor<T>> wq, wk, wv;  // per head, [d_e x d_k]
  Tensor<T> wo;                       // [d_e x d_e]
};

template <typename T>
struct EncoderLayerParams {
  AttentionParams<T> attn;
  Tensor<T> ln1_gamma, ln1_beta;  // [d_e]
  Tensor<T> w1, b1;               // [d_e x d_ff], [d_ff]
  Tensor<T> w2, b2;               // [d_ff x d_e], [d_e]
  Tensor<T> ln2_gamma, ln2_beta;  // [d_e]
};

template <typename T>
struct CnnParams {
  Tensor<T> conv1_w, conv1_b;  // [K1 x d_e x F1], [F1]
  Tensor<T> conv2_w, conv2_b;  // [K2 x F1 x F2], [F2]
};

template <typename T>
struct StreamParams {
  std::vector<EncoderLayerParams<T>> layers;  // empty for ESM-C
  CnnParams<T> cnn;                           // unallocated for ESM-T
};

template <typename T>
struct HeadParams {
  std::vector<Tensor<T>> w, b;  // hidden layers
  Tensor<T> w_out;              // [last hidden x 1]
  Tensor<T> b_out;              // [1]
};

/// All learnable tensors of one model. Antigen and antibody streams hold
/// separate weights.
///
/// visit() walks tensors in the canonical order used by checkpoints, the
/// initializer and the optimizer: antigen stream, antibody stream, head. A
/// stream lists its encoder layers (per-head W_Q, per-head W_K, per-head W_V,
/// W_O, LN1 gamma/beta, W_1, b_1, W_2, b_2, LN2 gamma/beta) and then its CNN
/// (conv1 w/b, conv2 w/b). The head lists hidden (W, b) pairs, then W_out,
/// b_out.
template <typename T>
struct ModelParams {
  ModelConfig config;
  StreamParams<T> antigen;
  StreamParams<T> antibody;
  HeadParams<T> head;

  /// Correctly shaped zero tensors for `config` (gammas included). The
  /// stored config has d_ff resolved.
  static ModelParams zeros(const ModelConfig& config);

  void visit(const std::function<void(const std::string&, Tensor<T>&)>& fn);
  void visit(const std::function<void(const std::string&, const Tensor<T>&)>& fn) const;

  std::size_t parameter_count() const;
  void set_requires_grad(bool on);
  void zero_grad();
  bool all_finite() const;
  T max_abs() const;

  template <typename U>
  ModelParams<U> cast() const;
};

/// Closed-form count of learnable scalars for a configuration.
std::size_t parameter_count(const ModelConfig& config);

/// Xavier-uniform weights (bound sqrt(6 / (fan_in + fan_out)); conv fans are
/// kernel * channels), zero biases, gamma = 1, beta = 0. Deterministic in
/// config.seed; float and double models from one seed share the same draws.
template <typename T>
ModelParams<T> init_params(const ModelConfig& config);

/// One stream's residue embeddings plus its padding mask.
template <typename T>
struct StreamInput {
  Tensor<T> embeddings;  // [L x d_e], masked rows are zero
  Tensor<T> mask;        // [L], 1 = residue, 0 = padding

  /// Copies `embeddings` ([len x d_e]) and zero-pads to `padded_len` rows.
  template <typename U>
  static StreamInput from(const Tensor<U>& embeddings, std::size_t padded_len = 0);

  std::size_t length() const { return mask.size(); }
};

struct ForwardOptions {
  bool training = false;
  std::uint64_t dropout_seed = 0;
};

/// Optional hook receiving each head's attention weights [L x L].
template <typename T>
using AttentionObserver = std::function<void(std::size_t head, const Tensor<T>& weights)>;

template <typename T>
Var<T> mhsa_forward(Tape<T>& tape, const Var<T>& x, const AttentionParams<T>& params, const Tensor<T>& mask,
                    const AttentionObserver<T>& observer = {});

template <typename T>
Var<T> ffn_forward(Tape<T>& tape, const Var<T>& x, const EncoderLayerParams<T>& params);

/// Post-norm layer: h = LN(x + MHSA(x)); out = LN(h + FFN(h)).
template <typename T>
Var<T> encoder_layer_forward(Tape<T>& tape, const Var<T>& x, const EncoderLayerParams<T>& params,
                             const Tensor<T>& mask, T ln_eps = T(1e-5));

/// Encoder stack followed by masked global average pooling -> [d_e].
template <typename T>
Var<T> transformer_branch(Tape<T>& tape, const StreamInput<T>& input, const StreamParams<T>& params,
                          T ln_eps = T(1e-5));

/// conv(K1) -> ReLU -> conv(K2) -> ReLU -> masked global average -> [d_cnn].
/// Padded rows are zeroed after each convolution.
template <typename T>
Var<T> cnn_branch(Tape<T>& tape, const StreamInput<T>& input, const StreamParams<T>& params);

/// [T_bar ; C] for one stream.
template <typename T>
Var<T> fuse_intra(const Var<T>& pooled_transformer, const Var<T>& pooled_cnn);

/// [F_A ; F_B].
template <typename T>
Var<T> fuse_inter(const Var<T>& antigen_features, const Var<T>& antibody_features);

/// Variant-dependent fused vector [fusion_width].
template <typename T>
Var<T> fused_features(Tape<T>& tape, const StreamInput<T>& antigen, const StreamInput<T>& antibody,
                      const ModelParams<T>& params);

/// ReLU hidden layers, then a single linear unit -> [1].
template <typename T>
Var<T> head_forward(Tape<T>& tape, const Var<T>& fused, const HeadParams<T>& params,
                    const ForwardOptions& options = {}, double dropout = 0.0);

/// Predicted standardized affinity, shape [1].
template <typename T>
Var<T> model_forward(Tape<T>& tape, const StreamInput<T>& antigen, const StreamInput<T>& antibody,
                     const ModelParams<T>& params, const ForwardOptions& options = {});

/// Inference on a private tape.
template <typename T>
T predict(const ModelParams<T>& params, const StreamInput<T>& antigen, const StreamInput<T>& antibody);

}  // namespace duadeep::model
