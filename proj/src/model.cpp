// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "duadeep/model.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "duadeep/ops.hpp"
#include "duadeep/rng.hpp"

namespace duadeep::model {

Variant parse_variant(std::string_view name) {
  if (name == "duadeep") return Variant::kDuaDeep;
  if (name == "esm-t") return Variant::kEsmT;
  if (name == "esm-c") return Variant::kEsmC;
  fail(ErrorKind::kConfig, "unknown variant '" + std::string(name) + "' (expected duadeep, esm-t or esm-c)");
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kDuaDeep: return "duadeep";
    case Variant::kEsmT: return "esm-t";
    case Variant::kEsmC: return "esm-c";
  }
  return "?";
}

std::size_t ModelConfig::fusion_width() const {
  std::size_t per_stream = 0;
  if (uses_transformer()) per_stream += d_e;
  if (uses_cnn()) per_stream += d_cnn();
  return 2 * per_stream;
}

void ModelConfig::validate() const {
  const auto bad = [](const std::string& what) { fail(ErrorKind::kConfig, "model config: " + what); };
  if (d_e == 0) bad("d_e must be positive");
  if (uses_transformer()) {
    if (n_heads == 0) bad("n_heads must be positive");
    if (d_e % n_heads != 0) {
      bad("d_e (" + std::to_string(d_e) + ") must be divisible by n_heads (" + std::to_string(n_heads) + ")");
    }
  }
  if (uses_cnn()) {
    for (const ConvSpec* c : {&conv1, &conv2}) {
      if (c->filters == 0) bad("conv filters must be positive");
      if (c->kernel == 0 || c->kernel % 2 == 0) bad("conv kernel sizes must be odd, got " + std::to_string(c->kernel));
    }
  }
  for (const std::size_t h : head_dims) {
    if (h == 0) bad("head widths must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0, 1)");
  if (!(ln_eps >= 0.0)) bad("ln_eps must be non-negative");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"d_e", c.d_e},
          {"n_heads", c.n_heads},
          {"n_layers", c.n_layers},
          {"d_ff", c.ffn_width()},
          {"conv1", {{"filters", c.conv1.filters}, {"kernel", c.conv1.kernel}}},
          {"conv2", {{"filters", c.conv2.filters}, {"kernel", c.conv2.kernel}}},
          {"head_dims", c.head_dims},
          {"variant", variant_name(c.variant)},
          {"seed", c.seed},
          {"dropout", c.dropout},
          {"ln_eps", c.ln_eps}};
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig c) {
  if (!j.is_object()) fail(ErrorKind::kConfig, "model config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      const auto conv = [&](ConvSpec& spec) {
        for (const auto& [k, v] : value.items()) {
          if (k == "filters") {
            spec.filters = v.get<std::size_t>();
          } else if (k == "kernel") {
            spec.kernel = v.get<std::size_t>();
          } else {
            fail(ErrorKind::kConfig, "unknown key '" + key + "." + k + "' in model config");
          }
        }
      };
      if (key == "d_e") c.d_e = value.get<std::size_t>();
      else if (key == "n_heads") c.n_heads = value.get<std::size_t>();
      else if (key == "n_layers") c.n_layers = value.get<std::size_t>();
      else if (key == "d_ff") c.d_ff = value.get<std::size_t>();
      else if (key == "conv1") conv(c.conv1);
      else if (key == "conv2") conv(c.conv2);
      else if (key == "head_dims") c.head_dims = value.get<std::vector<std::size_t>>();
      else if (key == "variant") c.variant = parse_variant(value.get<std::string>());
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "dropout") c.dropout = value.get<double>();
      else if (key == "ln_eps") c.ln_eps = value.get<double>();
      else fail(ErrorKind::kConfig, "unknown key '" + key + "' in model config");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("model config: ") + e.what());
  }
  return c;
}

std::size_t parameter_count(const ModelConfig& c) {
  c.validate();
  std::size_t stream = 0;
  if (c.uses_transformer()) {
    const std::size_t d = c.d_e, f = c.ffn_width();
    const std::size_t attention = 3 * c.n_heads * d * c.d_k() + d * d;
    const std::size_t ffn = d * f + f + f * d + d;
    stream += c.n_layers * (attention + ffn + 4 * d);
  }
  if (c.uses_cnn()) {
    stream += c.conv1.kernel * c.d_e * c.conv1.filters + c.conv1.filters;
    stream += c.conv2.kernel * c.conv1.filters * c.conv2.filters + c.conv2.filters;
  }
  std::size_t head = 0;
  std::size_t in = c.fusion_width();
  for (const std::size_t h : c.head_dims) {
    head += in * h + h;
    in = h;
  }
  head += in + 1;
  return 2 * stream + head;
}

namespace {

template <typename T>
StreamParams<T> zero_stream(const ModelConfig& c) {
  StreamParams<T> s;
  if (c.uses_transformer()) {
    const std::size_t d = c.d_e, dk = c.d_k(), f = c.ffn_width();
    for (std::size_t l = 0; l < c.n_layers; ++l) {
      EncoderLayerParams<T> layer;
      for (std::size_t h = 0; h < c.n_heads; ++h) {
        layer.attn.wq.emplace_back(Shape{d, dk});
        layer.attn.wk.emplace_back(Shape{d, dk});
        layer.attn.wv.emplace_back(Shape{d, dk});
      }
      layer.attn.wo = Tensor<T>({d, d});
      layer.ln1_gamma = Tensor<T>::full({d}, T{1});
      layer.ln1_beta = Tensor<T>({d});
      layer.w1 = Tensor<T>({d, f});
      layer.b1 = Tensor<T>({f});
      layer.w2 = Tensor<T>({f, d});
      layer.b2 = Tensor<T>({d});
      layer.ln2_gamma = Tensor<T>::full({d}, T{1});
      layer.ln2_beta = Tensor<T>({d});
      s.layers.push_back(std::move(layer));
    }
  }
  if (c.uses_cnn()) {
    s.cnn.conv1_w = Tensor<T>({c.conv1.kernel, c.d_e, c.conv1.filters});
    s.cnn.conv1_b = Tensor<T>({c.conv1.filters});
    s.cnn.conv2_w = Tensor<T>({c.conv2.kernel, c.conv1.filters, c.conv2.filters});
    s.cnn.conv2_b = Tensor<T>({c.conv2.filters});
  }
  return s;
}

template <typename T, typename Stream, typename Fn>
void visit_stream(const std::string& prefix, Stream& s, Fn& fn) {
  for (std::size_t l = 0; l < s.layers.size(); ++l) {
    auto& layer = s.layers[l];
    const std::string lp = prefix + ".layer" + std::to_string(l);
    for (std::size_t h = 0; h < layer.attn.wq.size(); ++h) fn(lp + ".attn.wq.h" + std::to_string(h), layer.attn.wq[h]);
    for (std::size_t h = 0; h < layer.attn.wk.size(); ++h) fn(lp + ".attn.wk.h" + std::to_string(h), layer.attn.wk[h]);
    for (std::size_t h = 0; h < layer.attn.wv.size(); ++h) fn(lp + ".attn.wv.h" + std::to_string(h), layer.attn.wv[h]);
    fn(lp + ".attn.wo", layer.attn.wo);
    fn(lp + ".ln1.gamma", layer.ln1_gamma);
    fn(lp + ".ln1.beta", layer.ln1_beta);
    fn(lp + ".ffn.w1", layer.w1);
    fn(lp + ".ffn.b1", layer.b1);
    fn(lp + ".ffn.w2", layer.w2);
    fn(lp + ".ffn.b2", layer.b2);
    fn(lp + ".ln2.gamma", layer.ln2_gamma);
    fn(lp + ".ln2.beta", layer.ln2_beta);
  }
  if (!s.cnn.conv1_w.empty()) {
    fn(prefix + ".cnn.conv1.w", s.cnn.conv1_w);
    fn(prefix + ".cnn.conv1.b", s.cnn.conv1_b);
    fn(prefix + ".cnn.conv2.w", s.cnn.conv2_w);
    fn(prefix + ".cnn.conv2.b", s.cnn.conv2_b);
  }
}

template <typename T, typename Params, typename Fn>
void visit_all(Params& p, Fn& fn) {
  visit_stream<T>("antigen", p.antigen, fn);
  visit_stream<T>("antibody", p.antibody, fn);
  for (std::size_t i = 0; i < p.head.w.size(); ++i) {
    fn("head.dense" + std::to_string(i) + ".w", p.head.w[i]);
    fn("head.dense" + std::to_string(i) + ".b", p.head.b[i]);
  }
  fn("head.out.w", p.head.w_out);
  fn("head.out.b", p.head.b_out);
}

}  // namespace

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams<T> p;
  p.config = config;
  p.config.d_ff = config.ffn_width();
  p.antigen = zero_stream<T>(config);
  p.antibody = zero_stream<T>(config);
  std::size_t in = config.fusion_width();
  for (const std::size_t h : config.head_dims) {
    p.head.w.emplace_back(Shape{in, h});
    p.head.b.emplace_back(Shape{h});
    in = h;
  }
  p.head.w_out = Tensor<T>({in, 1});
  p.head.b_out = Tensor<T>({1});
  return p;
}

template <typename T>
void ModelParams<T>::visit(const std::function<void(const std::string&, Tensor<T>&)>& fn) {
  visit_all<T>(*this, fn);
}

template <typename T>
void ModelParams<T>::visit(const std::function<void(const std::string&, const Tensor<T>&)>& fn) const {
  visit_all<T>(*this, fn);
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Tensor<T>& t) { n += t.size(); });
  return n;
}

template <typename T>
void ModelParams<T>::set_requires_grad(bool on) {
  visit([&](const std::string&, Tensor<T>& t) { t.set_requires_grad(on); });
}

template <typename T>
void ModelParams<T>::zero_grad() {
  visit([](const std::string&, Tensor<T>& t) { t.zero_grad(); });
}

template <typename T>
bool ModelParams<T>::all_finite() const {
  bool ok = true;
  visit([&](const std::string&, const Tensor<T>& t) { ok = ok && t.all_finite(); });
  return ok;
}

template <typename T>
T ModelParams<T>::max_abs() const {
  T m{0};
  visit([&](const std::string&, const Tensor<T>& t) {
    for (const T v : t.data()) m = std::max(m, std::abs(v));
  });
  return m;
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  std::vector<const Tensor<T>*> src;
  visit([&](const std::string&, const Tensor<T>& t) { src.push_back(&t); });
  ModelParams<U> out = ModelParams<U>::zeros(config);
  std::size_t i = 0;
  out.visit([&](const std::string&, Tensor<U>& t) { t = src[i++]->template cast<U>(); });
  return out;
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& config) {
  ModelParams<T> p = ModelParams<T>::zeros(config);
  Rng rng(config.seed);
  p.visit([&](const std::string&, Tensor<T>& t) {
    if (t.rank() == 1) return;  // biases 0, gammas 1, betas 0
    std::size_t fan_in = 0, fan_out = 0;
    if (t.rank() == 2) {
      fan_in = t.dim(0);
      fan_out = t.dim(1);
    } else {
      fan_in = t.dim(0) * t.dim(1);
      fan_out = t.dim(0) * t.dim(2);
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (T& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  });
  return p;
}

template <typename T>
template <typename U>
StreamInput<T> StreamInput<T>::from(const Tensor<U>& embeddings, std::size_t padded_len) {
  if (embeddings.rank() != 2) {
    fail(ErrorKind::kDimension, "stream embeddings must be [L x d_e], got " + shape_string(embeddings.shape()));
  }
  const std::size_t len = embeddings.dim(0), d = embeddings.dim(1);
  const std::size_t total = std::max(len, padded_len);
  StreamInput<T> in;
  in.embeddings = Tensor<T>({total, d});
  in.mask = Tensor<T>({total});
  for (std::size_t i = 0; i < len * d; ++i) in.embeddings[i] = static_cast<T>(embeddings[i]);
  for (std::size_t r = 0; r < len; ++r) in.mask[r] = T{1};
  return in;
}

template <typename T>
Var<T> mhsa_forward(Tape<T>& tape, const Var<T>& x, const AttentionParams<T>& params, const Tensor<T>& mask,
                    const AttentionObserver<T>& observer) {
  const std::size_t heads = params.wq.size();
  if (heads == 0) fail(ErrorKind::kConfig, "attention has no heads");
  const std::size_t dk = params.wq.front().dim(1);
  const T inv_sqrt_dk = T{1} / std::sqrt(static_cast<T>(dk));
  std::vector<Var<T>> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Var<T> q = ops::matmul(x, tape.watch(params.wq[h]));
    const Var<T> k = ops::matmul(x, tape.watch(params.wk[h]));
    const Var<T> v = ops::matmul(x, tape.watch(params.wv[h]));
    const Var<T> scores = ops::scale(ops::matmul(q, ops::transpose(k)), inv_sqrt_dk);
    const Var<T> weights = ops::softmax_rows(ops::mask_keys(scores, mask));
    if (observer) observer(h, weights.value());
    outputs.push_back(ops::matmul(weights, v));
  }
  const Var<T> concat = heads == 1 ? outputs.front() : ops::concat_last(outputs);
  return ops::matmul(concat, tape.watch(params.wo));
}

template <typename T>
Var<T> ffn_forward(Tape<T>& tape, const Var<T>& x, const EncoderLayerParams<T>& p) {
  const Var<T> hidden = ops::relu(ops::add_bias(ops::matmul(x, tape.watch(p.w1)), tape.watch(p.b1)));
  return ops::add_bias(ops::matmul(hidden, tape.watch(p.w2)), tape.watch(p.b2));
}

template <typename T>
Var<T> encoder_layer_forward(Tape<T>& tape, const Var<T>& x, const EncoderLayerParams<T>& p, const Tensor<T>& mask,
                             T ln_eps) {
  const Var<T> attended = ops::layer_norm(ops::add(x, mhsa_forward(tape, x, p.attn, mask)), tape.watch(p.ln1_gamma),
                                          tape.watch(p.ln1_beta), ln_eps);
  return ops::layer_norm(ops::add(attended, ffn_forward(tape, attended, p)), tape.watch(p.ln2_gamma),
                         tape.watch(p.ln2_beta), ln_eps);
}

template <typename T>
Var<T> transformer_branch(Tape<T>& tape, const StreamInput<T>& input, const StreamParams<T>& params, T ln_eps) {
  Var<T> x = tape.constant(input.embeddings);
  for (const EncoderLayerParams<T>& layer : params.layers) {
    x = encoder_layer_forward(tape, x, layer, input.mask, ln_eps);
  }
  return ops::masked_mean_rows(x, input.mask);
}

template <typename T>
Var<T> cnn_branch(Tape<T>& tape, const StreamInput<T>& input, const StreamParams<T>& params) {
  const CnnParams<T>& c = params.cnn;
  if (c.conv1_w.empty()) fail(ErrorKind::kConfig, "CNN branch requested but the model has no CNN parameters");
  const Var<T> x = tape.constant(input.embeddings);
  const Var<T> h1 = ops::mask_rows(
      ops::relu(ops::conv1d_same(x, tape.watch(c.conv1_w), tape.watch(c.conv1_b))), input.mask);
  const Var<T> h2 = ops::mask_rows(
      ops::relu(ops::conv1d_same(h1, tape.watch(c.conv2_w), tape.watch(c.conv2_b))), input.mask);
  return ops::masked_mean_rows(h2, input.mask);
}

template <typename T>
Var<T> fuse_intra(const Var<T>& pooled_transformer, const Var<T>& pooled_cnn) {
  return ops::concat_last<T>({pooled_transformer, pooled_cnn});
}

template <typename T>
Var<T> fuse_inter(const Var<T>& antigen_features, const Var<T>& antibody_features) {
  return ops::concat_last<T>({antigen_features, antibody_features});
}

template <typename T>
Var<T> fused_features(Tape<T>& tape, const StreamInput<T>& antigen, const StreamInput<T>& antibody,
                      const ModelParams<T>& params) {
  const ModelConfig& c = params.config;
  for (const StreamInput<T>* in : {&antigen, &antibody}) {
    if (in->embeddings.rank() != 2 || in->embeddings.dim(1) != c.d_e) {
      fail(ErrorKind::kConfigMismatch, "stream embeddings have shape " + shape_string(in->embeddings.shape()) +
                                           ", model expects width " + std::to_string(c.d_e));
    }
  }
  const T eps = static_cast<T>(c.ln_eps);
  const auto stream = [&](const StreamInput<T>& in, const StreamParams<T>& p) -> Var<T> {
    switch (c.variant) {
      case Variant::kDuaDeep: return fuse_intra(transformer_branch(tape, in, p, eps), cnn_branch(tape, in, p));
      case Variant::kEsmT: return transformer_branch(tape, in, p, eps);
      case Variant::kEsmC: return cnn_branch(tape, in, p);
    }
    fail(ErrorKind::kConfig, "unknown variant");
  };
  const Var<T> a = stream(antigen, params.antigen);
  const Var<T> b = stream(antibody, params.antibody);
  return fuse_inter(a, b);
}

template <typename T>
Var<T> head_forward(Tape<T>& tape, const Var<T>& fused, const HeadParams<T>& params, const ForwardOptions& options,
                    double dropout) {
  if (params.w.empty() ? params.w_out.dim(0) != fused.size() : params.w.front().dim(0) != fused.size()) {
    fail(ErrorKind::kConfigMismatch, "fused vector of width " + std::to_string(fused.size()) +
                                         " does not match the prediction head input");
  }
  Var<T> x = ops::reshape(fused, {1, fused.size()});
  for (std::size_t i = 0; i < params.w.size(); ++i) {
    x = ops::relu(ops::add_bias(ops::matmul(x, tape.watch(params.w[i])), tape.watch(params.b[i])));
    x = ops::dropout(x, static_cast<T>(dropout), mix64(options.dropout_seed + i), options.training);
  }
  const Var<T> out = ops::add_bias(ops::matmul(x, tape.watch(params.w_out)), tape.watch(params.b_out));
  return ops::reshape(out, {1});
}

template <typename T>
Var<T> model_forward(Tape<T>& tape, const StreamInput<T>& antigen, const StreamInput<T>& antibody,
                     const ModelParams<T>& params, const ForwardOptions& options) {
  const Var<T> fused = fused_features(tape, antigen, antibody, params);
  return head_forward(tape, fused, params.head, options, params.config.dropout);
}

template <typename T>
T predict(const ModelParams<T>& params, const StreamInput<T>& antigen, const StreamInput<T>& antibody) {
  Tape<T> tape;
  return model_forward(tape, antigen, antibody, params).value().item();
}

#define DUADEEP_INSTANTIATE_MODEL(T)                                                                           \
  template struct ModelParams<T>;                                                                              \
  template ModelParams<T> init_params<T>(const ModelConfig&);                                                  \
  template StreamInput<T> StreamInput<T>::from<float>(const Tensor<float>&, std::size_t);                      \
  template StreamInput<T> StreamInput<T>::from<double>(const Tensor<double>&, std::size_t);                    \
  template Var<T> mhsa_forward(Tape<T>&, const Var<T>&, const AttentionParams<T>&, const Tensor<T>&,          \
                               const AttentionObserver<T>&);                                                   \
  template Var<T> ffn_forward(Tape<T>&, const Var<T>&, const EncoderLayerParams<T>&);                          \
  template Var<T> encoder_layer_forward(Tape<T>&, const Var<T>&, const EncoderLayerParams<T>&,                 \
                                        const Tensor<T>&, T);                                                  \
  template Var<T> transformer_branch(Tape<T>&, const StreamInput<T>&, const StreamParams<T>&, T);              \
  template Var<T> cnn_branch(Tape<T>&, const StreamInput<T>&, const StreamParams<T>&);                         \
  template Var<T> fuse_intra(const Var<T>&, const Var<T>&);                                                    \
  template Var<T> fuse_inter(const Var<T>&, const Var<T>&);                                                    \
  template Var<T> fused_features(Tape<T>&, const StreamInput<T>&, const StreamInput<T>&,                       \
                                 const ModelParams<T>&);                                                       \
  template Var<T> head_forward(Tape<T>&, const Var<T>&, const HeadParams<T>&, const ForwardOptions&, double);  \
  template Var<T> model_forward(Tape<T>&, const StreamInput<T>&, const StreamInput<T>&, const ModelParams<T>&, \
                                const ForwardOptions&);                                                        \
  template T predict(const ModelParams<T>&, const StreamInput<T>&, const StreamInput<T>&);

DUADEEP_INSTANTIATE_MODEL(float)
DUADEEP_INSTANTIATE_MODEL(double)
DUADEEP_INSTANTIATE_MODEL(long double)

template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<long double> ModelParams<double>::cast<long double>() const;
template ModelParams<long double> ModelParams<float>::cast<long double>() const;

#undef DUADEEP_INSTANTIATE_MODEL

}  // namespace duadeep::model
