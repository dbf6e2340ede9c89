// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <set>
#include <type_traits>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "duadeep/model.hpp"
#include "gtest_support.hpp"

namespace duadeep::model {
namespace {

using testing::expect_kind;
using testing::random_tensor;

ModelConfig small_config(Variant variant = Variant::kDuaDeep, std::size_t d_e = 16) {
  ModelConfig c;
  c.d_e = d_e;
  c.n_heads = 2;
  c.n_layers = 1;
  c.conv1 = {8, 3};
  c.conv2 = {6, 5};
  c.head_dims = {8};
  c.variant = variant;
  c.seed = 3;
  return c;
}

// Embedding rows with masked rows zero, as the model contract requires.
template <typename T>
StreamInput<T> random_input(Rng& rng, std::size_t len, std::size_t d_e, std::size_t padded = 0) {
  return StreamInput<T>::from(random_tensor({len, d_e}, rng), padded);
}

template <typename T>
Tensor<T> pooled_transformer(const ModelParams<T>& p, const StreamInput<T>& in) {
  Tape<T> tape;
  return transformer_branch(tape, in, p.antigen, static_cast<T>(p.config.ln_eps)).value();
}

template <typename T>
Tensor<T> pooled_cnn(const ModelParams<T>& p, const StreamInput<T>& in) {
  Tape<T> tape;
  return cnn_branch(tape, in, p.antigen).value();
}

template <typename T>
StreamInput<T> permute_rows(const StreamInput<T>& in, const std::vector<std::size_t>& perm) {
  StreamInput<T> out = in;
  const std::size_t d = in.embeddings.dim(1);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.mask[i] = in.mask[perm[i]];
    for (std::size_t k = 0; k < d; ++k) out.embeddings.at(i, k) = in.embeddings.at(perm[i], k);
  }
  return out;
}

double max_abs_diff(const Tensor<float>& a, const Tensor<float>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

// config -------------------------------------------------------------------

TEST(ModelConfig, FusionWidths) {
  ModelConfig c;
  c.d_e = 1280;
  EXPECT_EQ(c.fusion_width(), 2816u);
  c.variant = Variant::kEsmT;
  EXPECT_EQ(c.fusion_width(), 2560u);
  c.variant = Variant::kEsmC;
  EXPECT_EQ(c.fusion_width(), 256u);
  c.d_e = 32;
  EXPECT_EQ(c.fusion_width(), 256u);
  EXPECT_EQ(c.d_k(), 4u);
}

TEST(ModelConfig, InvalidConfigsRejected) {
  ModelConfig c = small_config();
  c.n_heads = 3;
  expect_kind(ErrorKind::kConfig, [&] { c.validate(); });
  c = small_config();
  c.conv2.kernel = 4;
  expect_kind(ErrorKind::kConfig, [&] { c.validate(); });
  c = small_config();
  c.head_dims = {8, 0};
  expect_kind(ErrorKind::kConfig, [&] { c.validate(); });
  c = small_config(Variant::kEsmC);
  c.n_heads = 3;  // unused by ESM-C
  EXPECT_NO_THROW(c.validate());
}

TEST(ModelConfig, JsonRoundTripAndUnknownKeys) {
  ModelConfig c = small_config(Variant::kEsmT);
  c.dropout = 0.25;
  const ModelConfig back = model_config_from_json(to_json(c));
  EXPECT_EQ(back.d_e, c.d_e);
  EXPECT_EQ(back.head_dims, c.head_dims);
  EXPECT_EQ(back.variant, Variant::kEsmT);
  EXPECT_EQ(back.dropout, 0.25);
  EXPECT_EQ(back.ffn_width(), c.ffn_width());
  expect_kind(ErrorKind::kConfig, [] { model_config_from_json({{"d_model", 3}}); });
  EXPECT_EQ(parse_variant("esm-c"), Variant::kEsmC);
  EXPECT_STREQ(variant_name(Variant::kDuaDeep), "duadeep");
  expect_kind(ErrorKind::kConfig, [] { parse_variant("bilstm"); });
}

// parameters ---------------------------------------------------------------

TEST(ModelParams, CountMatchesHandComputedShapeTable) {
  ModelConfig c;
  c.d_e = 32;
  c.n_heads = 2;
  c.n_layers = 1;
  c.head_dims = {64};
  // Per stream: attention 4*32*32, two layer norms 4*32, FFN 32*128+128+128*32+32,
  // conv1 3*32*256+256, conv2 5*256*128+128. Head: 320*64+64, 64+1.
  const std::size_t attention = 4 * 32 * 32, norms = 4 * 32, ffn = 32 * 128 + 128 + 128 * 32 + 32;
  const std::size_t cnn = 3 * 32 * 256 + 256 + 5 * 256 * 128 + 128;
  const std::size_t head = 320 * 64 + 64 + 64 + 1;
  const std::size_t expected = 2 * (attention + norms + ffn + cnn) + head;
  EXPECT_EQ(expected, 423361u);
  EXPECT_EQ(parameter_count(c), expected);
  EXPECT_EQ(init_params<float>(c).parameter_count(), expected);
}

TEST(ModelParams, CountIsPureFunctionOfConfigProperty) {
  for (const Variant v : {Variant::kDuaDeep, Variant::kEsmT, Variant::kEsmC}) {
    for (std::size_t layers = 0; layers < 3; ++layers) {
      ModelConfig c = small_config(v);
      c.n_layers = layers;
      c.head_dims = layers == 0 ? std::vector<std::size_t>{} : std::vector<std::size_t>{8, 4};
      const auto p = init_params<double>(c);
      std::size_t visited = 0;
      p.visit([&](const std::string&, const Tensor<double>& t) { visited += t.size(); });
      EXPECT_EQ(visited, parameter_count(c));
      EXPECT_EQ(p.parameter_count(), parameter_count(c));
    }
  }
}

TEST(ModelParams, StreamsHoldSeparateUniquelyNamedTensors) {
  const auto p = init_params<float>(small_config());
  std::set<std::string> names;
  std::set<const float*> storage;
  p.visit([&](const std::string& name, const Tensor<float>& t) {
    EXPECT_TRUE(names.insert(name).second) << name;
    EXPECT_TRUE(storage.insert(t.data().data()).second) << name;
  });
  EXPECT_TRUE(names.count("antigen.layer0.attn.wq.h1"));
  EXPECT_TRUE(names.count("antibody.cnn.conv2.w"));
  EXPECT_TRUE(names.count("head.out.b"));
  EXPECT_FALSE(p.antigen.layers[0].attn.wq[0] == p.antibody.layers[0].attn.wq[0]);
}

TEST(InitParams, DeterministicAndBounded) {
  const ModelConfig c = small_config();
  const auto a = init_params<float>(c), b = init_params<float>(c);
  std::vector<float> va, vb;
  a.visit([&](const std::string&, const Tensor<float>& t) { va.insert(va.end(), t.data().begin(), t.data().end()); });
  b.visit([&](const std::string&, const Tensor<float>& t) { vb.insert(vb.end(), t.data().begin(), t.data().end()); });
  EXPECT_EQ(va, vb);

  const auto d = init_params<double>(c);
  std::size_t idx = 0;
  d.visit([&](const std::string&, const Tensor<double>& t) {
    for (const double v : t.data()) EXPECT_EQ(static_cast<float>(v), va[idx++]);
  });

  const auto check_bound = [](const Tensor<float>& w, double fan_in, double fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (const float v : w.data()) EXPECT_LE(std::abs(v), bound);
  };
  const auto& layer = a.antigen.layers[0];
  check_bound(layer.attn.wq[0], 16, 8);
  check_bound(layer.w1, 16, 64);
  check_bound(a.antigen.cnn.conv1_w, 3 * 16, 3 * 8);
  for (const float v : layer.ln1_gamma.data()) EXPECT_EQ(v, 1.0f);
  for (const float v : layer.ln1_beta.data()) EXPECT_EQ(v, 0.0f);
  for (const float v : a.head.b_out.data()) EXPECT_EQ(v, 0.0f);
  EXPECT_TRUE(a.all_finite());

  ModelConfig other = c;
  other.seed = 4;
  EXPECT_FALSE(init_params<float>(other).head.w_out == a.head.w_out);
}

// attention ----------------------------------------------------------------

TEST(Mhsa, SinglePositionAttendsToItself) {
  const auto p = init_params<double>(small_config());
  const auto& attn = p.antigen.layers[0].attn;
  Rng rng(1);
  const Tensor<double> x = random_tensor({1, 16}, rng);
  Tape<double> tape;
  std::vector<Tensor<double>> weights;
  const auto out = mhsa_forward(tape, tape.constant(x), attn, Tensor<double>::full({1}, 1.0),
                                AttentionObserver<double>([&](std::size_t, const Tensor<double>& w) { weights.push_back(w); }))
                       .value();
  ASSERT_EQ(weights.size(), 2u);
  for (const auto& w : weights) EXPECT_EQ(w.item(), 1.0);

  // out = concat_h(x W_V,h) W_O computed by hand.
  std::vector<double> v;
  for (const auto& wv : attn.wv) {
    for (std::size_t j = 0; j < wv.dim(1); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 16; ++k) s += x[k] * wv.at(k, j);
      v.push_back(s);
    }
  }
  for (std::size_t j = 0; j < 16; ++j) {
    double s = 0;
    for (std::size_t k = 0; k < 16; ++k) s += v[k] * attn.wo.at(k, j);
    EXPECT_NEAR(out[j], s, 1e-14);
  }
}

TEST(Mhsa, ZeroValueWeightsGiveZeroOutput) {
  auto p = init_params<double>(small_config());
  auto& attn = p.antigen.layers[0].attn;
  for (auto& wv : attn.wv) wv = Tensor<double>(wv.shape());
  Rng rng(2);
  Tape<double> tape;
  const auto out = mhsa_forward(tape, tape.constant(random_tensor({5, 16}, rng)), attn, Tensor<double>::full({5}, 1.0));
  for (const double v : out.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Mhsa, MaskedKeysReceiveNoAttentionProperty) {
  const auto p = init_params<float>(small_config());
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t len = 2 + rng.below(8), real = 1 + rng.below(len - 1);
    const auto in = random_input<float>(rng, real, 16, len);
    Tape<float> tape;
    mhsa_forward(tape, tape.constant(in.embeddings), p.antigen.layers[0].attn, in.mask,
                 AttentionObserver<float>([&](std::size_t, const Tensor<float>& w) {
                   for (std::size_t i = 0; i < len; ++i) {
                     for (std::size_t j = real; j < len; ++j) EXPECT_LT(w.at(i, j), 1e-8f);
                   }
                 }));
  }
}

TEST(EncoderLayer, ShapePreservedAcrossLengths) {
  const auto p = init_params<float>(small_config());
  Rng rng(4);
  for (const std::size_t len : {1u, 5u, 512u}) {
    const auto in = random_input<float>(rng, len, 16);
    Tape<float> tape;
    const auto y = encoder_layer_forward(tape, tape.constant(in.embeddings), p.antigen.layers[0], in.mask);
    EXPECT_EQ(y.shape(), (Shape{len, 16}));
    EXPECT_TRUE(y.value().all_finite());
  }
}

TEST(EncoderLayer, PostNormResidualOrder) {
  // out = LN(h + FFN(h)) with h = LN(x + MHSA(x)), rebuilt from the sub-ops.
  const auto p = init_params<double>(small_config());
  const auto& layer = p.antigen.layers[0];
  Rng rng(5);
  const auto in = random_input<double>(rng, 6, 16);
  Tape<double> tape;
  const auto x = tape.constant(in.embeddings);
  const auto got = encoder_layer_forward(tape, x, layer, in.mask).value();
  const auto h = ops::layer_norm(ops::add(x, mhsa_forward(tape, x, layer.attn, in.mask)),
                                 tape.constant(layer.ln1_gamma), tape.constant(layer.ln1_beta));
  const auto want = ops::layer_norm(ops::add(h, ffn_forward(tape, h, layer)), tape.constant(layer.ln2_gamma),
                                    tape.constant(layer.ln2_beta))
                        .value();
  EXPECT_EQ(got, want);
}

TEST(EncoderLayer, OneLayerInputGradientAt32Bit) {
  const auto p64 = init_params<double>(small_config(Variant::kEsmT, 4));
  const auto p32 = p64.cast<float>();
  const auto p80 = p64.cast<long double>();
  Rng rng(6);
  const auto r = testing::check_op_gradients<float>(
      {random_tensor({3, 4}, rng)},
      [&](auto& tape, const auto& v) {
        using T = typename std::remove_cvref_t<decltype(v[0].value())>::value_type;
        const ModelParams<T>* params = nullptr;
        if constexpr (std::is_same_v<T, float>) {
          params = &p32;
        } else if constexpr (std::is_same_v<T, double>) {
          params = &p64;
        } else {
          params = &p80;
        }
        return encoder_layer_forward(tape, v[0], params->antigen.layers[0], Tensor<T>::full({3}, T(1)));
      },
      7, 1e-5, 1e-3);
  EXPECT_GT(r.compared, 0u);
  EXPECT_LT(r.max_rel_err, 1e-3);
}

// branches -----------------------------------------------------------------

TEST(TransformerBranch, PermutationInvariantProperty) {
  const auto p = init_params<float>(small_config());
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t len = 2 + rng.below(10);
    const auto in = random_input<float>(rng, len, 16, len + rng.below(3));
    std::vector<std::size_t> perm(in.length());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    EXPECT_LT(max_abs_diff(pooled_transformer(p, in), pooled_transformer(p, permute_rows(in, perm))), 1e-5);
  }
}

TEST(TransformerBranch, EmptyStackIsMeanOfEmbeddings) {
  ModelConfig c = small_config(Variant::kEsmT);
  c.n_layers = 0;
  const auto p = init_params<double>(c);
  Rng rng(8);
  const auto in = random_input<double>(rng, 4, 16, 6);
  const auto pooled = pooled_transformer(p, in);
  for (std::size_t k = 0; k < 16; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < 4; ++i) s += in.embeddings.at(i, k);
    EXPECT_NEAR(pooled[k], s / 4, 1e-15);
  }
}

TEST(TransformerBranch, SinglePositionPoolsToEncoderOutput) {
  const auto p = init_params<double>(small_config());
  Rng rng(9);
  const auto in = random_input<double>(rng, 1, 16);
  Tape<double> tape;
  const auto enc = encoder_layer_forward(tape, tape.constant(in.embeddings), p.antigen.layers[0], in.mask).value();
  EXPECT_EQ(pooled_transformer(p, in).storage(), enc.storage());
}

TEST(CnnBranch, OutputWidthIndependentOfLength) {
  ModelConfig c = small_config();
  c.conv1 = {256, 3};
  c.conv2 = {128, 5};
  const auto p = init_params<float>(c);
  Rng rng(10);
  for (const std::size_t len : {1u, 2u, 7u, 40u}) EXPECT_EQ(pooled_cnn(p, random_input<float>(rng, len, 16)).size(), 128u);
}

TEST(CnnBranch, ZeroInputZeroBiasGivesZero) {
  const auto p = init_params<double>(small_config());
  StreamInput<double> in = StreamInput<double>::from(Tensor<double>({5, 16}));
  const Tensor<double> pooled = pooled_cnn(p, in);
  for (const double v : pooled.data()) EXPECT_EQ(v, 0.0);
}

TEST(CnnBranch, PermutationSensitivityWitness) {
  const auto p = init_params<float>(small_config());
  Rng rng(11);
  const auto in = random_input<float>(rng, 8, 16);
  std::vector<std::size_t> rev(8);
  std::iota(rev.rbegin(), rev.rend(), 0);
  EXPECT_GT(max_abs_diff(pooled_cnn(p, in), pooled_cnn(p, permute_rows(in, rev))), 1e-6);
}

TEST(Branches, PaddingInvariantProperty) {
  const auto p = init_params<float>(small_config());
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t len = 1 + rng.below(10);
    const Tensor<double> e = random_tensor({len, 16}, rng);
    const auto plain = StreamInput<float>::from(e);
    const auto padded = StreamInput<float>::from(e, len + 1 + rng.below(6));
    EXPECT_LT(max_abs_diff(pooled_transformer(p, plain), pooled_transformer(p, padded)), 1e-6);
    EXPECT_LT(max_abs_diff(pooled_cnn(p, plain), pooled_cnn(p, padded)), 1e-6);
  }
}

// full model ---------------------------------------------------------------

TEST(ModelForward, FusionWidthPerVariant) {
  Rng rng(13);
  for (const Variant v : {Variant::kDuaDeep, Variant::kEsmT, Variant::kEsmC}) {
    const auto p = init_params<float>(small_config(v));
    const auto ag = random_input<float>(rng, 5, 16), ab = random_input<float>(rng, 7, 16);
    Tape<float> tape;
    EXPECT_EQ(fused_features(tape, ag, ab, p).size(), p.config.fusion_width());
    EXPECT_EQ(model_forward(tape, ag, ab, p).shape(), (Shape{1}));
  }
}

TEST(ModelForward, WidthMismatchIsConfigMismatch) {
  const auto p = init_params<float>(small_config());
  Rng rng(14);
  const auto bad = random_input<float>(rng, 5, 8);
  const auto good = random_input<float>(rng, 5, 16);
  expect_kind(ErrorKind::kConfigMismatch, [&] { predict(p, bad, good); });
  auto esmt = init_params<float>(small_config(Variant::kEsmT));
  esmt.config.variant = Variant::kDuaDeep;
  expect_kind(ErrorKind::kConfig, [&] { predict(esmt, good, good); });
}

TEST(ModelForward, StreamSwapChangesPrediction) {
  const auto p = init_params<double>(small_config());
  Rng rng(15);
  const auto ag = random_input<double>(rng, 5, 16), ab = random_input<double>(rng, 7, 16);
  EXPECT_GT(std::abs(predict(p, ag, ab) - predict(p, ab, ag)), 1e-9);
}

TEST(ModelForward, LinearInOutputLayer) {
  auto p = init_params<double>(small_config());
  p.head.b_out[0] = 0.375;
  Rng rng(16);
  const auto ag = random_input<double>(rng, 5, 16), ab = random_input<double>(rng, 7, 16);
  const double y = predict(p, ag, ab);
  for (double& w : p.head.w_out.data()) w *= 2;
  p.head.b_out[0] *= 2;
  EXPECT_EQ(predict(p, ag, ab), 2 * y);
}

TEST(ModelForward, FiniteForLargeInputs) {
  const auto p = init_params<float>(small_config());
  Rng rng(17);
  const auto ag = StreamInput<float>::from(random_tensor({6, 16}, rng, -1e3, 1e3));
  const auto ab = StreamInput<float>::from(random_tensor({4, 16}, rng, -1e3, 1e3));
  EXPECT_TRUE(std::isfinite(predict(p, ag, ab)));
}

TEST(ModelForward, DropoutOnlyWhileTraining) {
  ModelConfig c = small_config();
  c.dropout = 0.5;
  c.head_dims = {32};
  const auto p = init_params<double>(c);
  Rng rng(18);
  const auto ag = random_input<double>(rng, 5, 16), ab = random_input<double>(rng, 7, 16);
  Tape<double> t1, t2;
  const double eval = model_forward(t1, ag, ab, p).value().item();
  EXPECT_EQ(eval, predict(p, ag, ab));
  const double train = model_forward(t2, ag, ab, p, {true, 99}).value().item();
  EXPECT_NE(train, eval);
}

TEST(ModelParams, CastRoundTrip) {
  const auto f = init_params<float>(small_config());
  const auto back = f.cast<double>().cast<float>();
  EXPECT_EQ(back.head.w_out, f.head.w_out);
  EXPECT_EQ(back.antibody.cnn.conv1_w, f.antibody.cnn.conv1_w);
}

}  // namespace
}  // namespace duadeep::model
