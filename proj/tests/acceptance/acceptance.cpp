// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "duadeep/checkpoint.hpp"
#include "duadeep/dataio.hpp"
#include "duadeep/embedding.hpp"
#include "duadeep/gradcheck.hpp"
#include "duadeep/metrics.hpp"
#include "duadeep/model.hpp"
#include "duadeep/train.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace duadeep {
namespace {

using Clock = std::chrono::steady_clock;
using testing::TempDir;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// gradient correctness ------------------------------------------------------

Outcome gradient_correctness() {
  const gradcheck::ToyProblem problem = gradcheck::default_toy_problem(0);
  const gradcheck::Report report = gradcheck::run_model_gradcheck(problem);
  double worst = 0;
  std::size_t compared = 0;
  for (const auto& g : report.groups) {
    worst = std::max(worst, g.max_rel_err);
    compared += g.compared;
  }
  const bool passed = report.passed() && report.seconds < 60.0;
  return {passed, fmt("%zu groups, %zu elements compared, max rel err %.2e (< 1e-6), %.1f s (< 60 s)",
                      report.groups.size(), compared, worst, report.seconds)};
}

// architecture shape --------------------------------------------------------

Outcome architecture_shape() {
  Rng rng(1);
  std::string detail;
  bool passed = true;
  const std::pair<model::Variant, std::size_t> expected[] = {
      {model::Variant::kDuaDeep, 2816}, {model::Variant::kEsmT, 2560}, {model::Variant::kEsmC, 256}};
  for (const auto& [variant, width] : expected) {
    model::ModelConfig c;
    c.d_e = 1280;
    c.n_layers = 0;  // encoder layers do not change the pooled width
    c.variant = variant;
    const auto p = model::init_params<float>(c);
    const auto ag = model::StreamInput<float>::from(testing::random_tensor({4, 1280}, rng));
    const auto ab = model::StreamInput<float>::from(testing::random_tensor({6, 1280}, rng));
    Tape<float> tape;
    const std::size_t built = model::fused_features(tape, ag, ab, p).size();
    const bool ok = built == width && c.fusion_width() == width && p.head.w.front().dim(0) == width;
    passed = passed && ok;
    detail += fmt("%s %zu (want %zu)  ", model::variant_name(variant), built, width);
  }
  return {passed, detail};
}

// permutation and masking ---------------------------------------------------

template <typename F>
Tensor<float> branch_output(F&& branch) {
  Tape<float> tape;
  return branch(tape).value();
}

double max_abs_diff(const Tensor<float>& a, const Tensor<float>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

model::StreamInput<float> permute_rows(const model::StreamInput<float>& in, const std::vector<std::size_t>& perm) {
  model::StreamInput<float> out = in;
  const std::size_t d = in.embeddings.dim(1);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.mask[i] = in.mask[perm[i]];
    for (std::size_t k = 0; k < d; ++k) out.embeddings.at(i, k) = in.embeddings.at(perm[i], k);
  }
  return out;
}

Outcome permutation_and_masking() {
  model::ModelConfig c;
  c.d_e = 16;
  c.n_heads = 2;
  c.n_layers = 2;
  c.conv1 = {16, 3};
  c.conv2 = {8, 5};
  c.head_dims = {8};
  c.seed = 5;
  const auto p = model::init_params<float>(c);
  const auto eps = static_cast<float>(c.ln_eps);
  auto transformer = [&](const model::StreamInput<float>& in) {
    return branch_output([&](Tape<float>& t) { return model::transformer_branch(t, in, p.antigen, eps); });
  };
  auto cnn = [&](const model::StreamInput<float>& in) {
    return branch_output([&](Tape<float>& t) { return model::cnn_branch(t, in, p.antigen); });
  };

  Rng rng(6);
  double perm_err = 0, pad_err = 0, witness = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t len = 2 + rng.below(15);
    const Tensor<double> e = testing::random_tensor({len, 16}, rng);
    const auto plain = model::StreamInput<float>::from(e);
    const auto padded = model::StreamInput<float>::from(e, len + 1 + rng.below(8));
    std::vector<std::size_t> perm(padded.length());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    perm_err = std::max(perm_err, max_abs_diff(transformer(padded), transformer(permute_rows(padded, perm))));
    pad_err = std::max(pad_err, max_abs_diff(transformer(plain), transformer(padded)));
    pad_err = std::max(pad_err, max_abs_diff(cnn(plain), cnn(padded)));
    std::vector<std::size_t> reversed(len);
    std::iota(reversed.rbegin(), reversed.rend(), std::size_t{0});
    witness = std::max(witness, max_abs_diff(cnn(plain), cnn(permute_rows(plain, reversed))));
  }
  const bool passed = perm_err < 1e-5 && pad_err < 1e-6 && witness > 1e-6;
  return {passed, fmt("transformer permutation %.2e (< 1e-5), padding %.2e (< 1e-6), cnn witness %.2e (> 1e-6)",
                      perm_err, pad_err, witness)};
}

// overfit -------------------------------------------------------------------

Outcome overfit() {
  testing::SyntheticTask task = testing::synthetic_task(32, 0, 32, 6, 12, 11);
  // Standardize on the training split so the targets have unit variance.
  std::vector<double> pkds;
  for (const auto& r : task.dataset.train) pkds.push_back(r.pkd);
  const data::Scaler scaler = data::fit_scaler(pkds);
  for (auto& r : task.dataset.train) r.pkd_std = scaler.apply(r.pkd);

  model::ModelConfig mc;
  mc.d_e = 32;
  mc.seed = 3;
  train::TrainConfig tc;
  tc.batch_size = 8;
  tc.lr = 1e-3;
  tc.max_epochs = 500;
  tc.patience = 500;
  tc.target_train_mse = 1e-2;
  tc.seed = 5;

  const auto t0 = Clock::now();
  const auto result = train::train<float>(mc, tc, task.dataset, task.store);
  const double secs = seconds_since(t0);

  const std::vector<double> pred = train::predict_records(result.best, task.dataset.train, task.store);
  std::vector<double> target;
  for (const auto& r : task.dataset.train) target.push_back(r.pkd_std);
  const double mse = std::pow(metrics::rmse(pred, target), 2);
  const double r2 = metrics::r2(pred, target), pearson = metrics::pearson(pred, target);
  const bool passed =
      result.stop_reason == "target" && mse < 1e-2 && secs < 120.0 && r2 > 0.99 && pearson > 0.995;
  return {passed, fmt("train MSE %.4f (< 1e-2) after %zu epochs (<= 500), %.1f s (< 120 s), r2 %.4f (> 0.99), "
                      "pearson %.4f (> 0.995)",
                      mse, result.curve.size(), secs, r2, pearson)};
}

// variants ------------------------------------------------------------------

Outcome variants_train() {
  const testing::SyntheticTask task = testing::synthetic_task(32, 8, 16, 6, 12, 12);
  TempDir dir("acceptance");
  bool passed = true;
  std::string detail;
  for (const auto v : {model::Variant::kDuaDeep, model::Variant::kEsmT, model::Variant::kEsmC}) {
    model::ModelConfig mc;
    mc.d_e = 16;
    mc.n_heads = 4;
    mc.conv1 = {32, 3};
    mc.conv2 = {16, 5};
    mc.head_dims = {32, 8};
    mc.variant = v;
    mc.seed = 1;
    train::TrainConfig tc;
    tc.batch_size = 8;
    tc.max_epochs = 10;
    tc.patience = 10;
    tc.seed = 2;
    const auto result = train::train<float>(mc, tc, task.dataset, task.store);
    const std::string path = dir.file(std::string(model::variant_name(v)) + ".csv");
    train::write_curve_csv(path, result.curve);

    std::istringstream csv(testing::read_file(path));
    std::string line;
    std::getline(csv, line);
    bool ok = line == "epoch,train_rmse,val_rmse,seconds";
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
      std::size_t epoch = 0;
      double tr = 0, va = 0, s = 0;
      ok = ok && std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf", &epoch, &tr, &va, &s) == 4 && epoch == ++rows &&
           std::isfinite(tr) && std::isfinite(va);
    }
    ok = ok && rows == 10;
    passed = passed && ok;
    detail += fmt("%s %zu rows final train_rmse %.3f  ", model::variant_name(v), rows, result.curve.back().train_rmse);
  }
  return {passed, detail};
}

// metric oracles ------------------------------------------------------------

Outcome metric_oracles() {
  Rng rng(21);
  double worst[4] = {0, 0, 0, 0};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 100 + rng.below(101);
    const bool ties = trial % 2 == 0;
    const auto x = oracle::random_values(rng, n, ties), y = oracle::random_values(rng, n, ties);
    std::vector<std::uint8_t> labels(n);
    for (auto& l : labels) l = rng.below(2) ? 1 : 0;
    labels[0] = 0;
    labels[1] = 1;
    worst[0] = std::max(worst[0], std::abs(metrics::pearson(x, y) - oracle::pearson(x, y)));
    worst[1] = std::max(worst[1], std::abs(metrics::spearman(x, y) - oracle::spearman(x, y)));
    worst[2] = std::max(worst[2], std::abs(metrics::r2(x, y) - oracle::r2(x, y)));
    worst[3] = std::max(worst[3], std::abs(metrics::roc_auc(x, labels) - oracle::auc(x, labels)));
  }
  const bool passed = std::all_of(std::begin(worst), std::end(worst), [](double w) { return w <= 1e-12; });
  return {passed, fmt("max |diff| pearson %.1e spearman %.1e r2 %.1e auc %.1e (<= 1e-12, 100 instances each)",
                      worst[0], worst[1], worst[2], worst[3])};
}

// standardization consistency -----------------------------------------------

Outcome standardization_consistency() {
  Rng rng(22);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 100 + rng.below(101);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-2, 2);
      y[i] = rng.uniform(0.2, 2.0) * x[i] + rng.uniform(-1, 1);
    }
    const double my = oracle::mean(y);
    double var = 0;
    for (const double v : y) var += (v - my) * (v - my);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& v : y) v = (v - my) / sd;
    const double mx = oracle::mean(x);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxy += (x[i] - mx) * y[i];
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    std::vector<double> pred(n);
    for (std::size_t i = 0; i < n; ++i) pred[i] = sxy / sxx * (x[i] - mx);
    worst = std::max(worst, std::abs(metrics::rmse(pred, y) - std::sqrt(1 - metrics::r2(pred, y))));
  }
  return {worst <= 1e-6, fmt("max |rmse - sqrt(1 - r2)| %.1e (<= 1e-6, 100 affine fits)", worst)};
}

// preprocessing -------------------------------------------------------------

Outcome preprocessing_fidelity() {
  std::string detail;
  const double pkd_err = std::max({std::abs(data::kd_to_pkd(1.0) - 9.0), std::abs(data::kd_to_pkd(1e-3) - 12.0),
                                   std::abs(data::kd_to_pkd(1e9) - 0.0)});
  const bool boundaries = pkd_err <= 1e-12;
  detail += fmt("pkd boundaries err %.1e; ", pkd_err);

  const bool strict = !data::kd_in_range(1e-3) && !data::kd_in_range(1e9) && data::kd_in_range(1.0000001e-3) &&
                      data::kd_in_range(0.9999999e9) && !data::kd_in_range(std::nullopt);
  std::vector<data::AffinityRecord> edge(4);
  edge[0].kd_nm = 1e-3;
  edge[1].kd_nm = 1e9;
  edge[2].kd_nm = 5.0;
  edge[3].kd_nm = 2e-3;
  const bool filtered = data::filter_kd(edge).size() == 2;
  detail += fmt("strict filter %s; ", strict && filtered ? "ok" : "BAD");

  const auto corpus = testing::clustered_corpus(200, 20, 10, 31);
  bool disjoint = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const data::SplitDataset s = data::preprocess(corpus, seed).splits;
    const std::vector<data::CleanRecord>* parts[] = {&s.train, &s.val, &s.test};
    std::set<std::string> ag[3], ab[3];
    for (int k = 0; k < 3; ++k) {
      disjoint = disjoint && !parts[k]->empty();
      for (const auto& r : *parts[k]) {
        ag[k].insert(data::detokenize(r.antigen_tokens));
        ab[k].insert(data::detokenize(r.antibody_tokens));
      }
    }
    for (int x = 0; x < 3; ++x) {
      for (int y = x + 1; y < 3; ++y) {
        for (const auto& seq : ag[x]) disjoint = disjoint && ag[y].count(seq) == 0;
        for (const auto& seq : ab[x]) disjoint = disjoint && ab[y].count(seq) == 0;
      }
    }
  }
  detail += fmt("split disjointness over 10 seeds %s; ", disjoint ? "ok" : "BAD");

  TempDir a("acceptance"), b("acceptance");
  data::write_dataset(a.path().string(), data::preprocess(corpus, 17));
  data::write_dataset(b.path().string(), data::preprocess(corpus, 17));
  bool identical = true;
  for (const char* f : {"manifest.json", "train.rec", "val.rec", "test.rec"}) {
    identical = identical && testing::read_file(a.file(f)) == testing::read_file(b.file(f)) &&
                !testing::read_file(a.file(f)).empty();
  }
  detail += fmt("byte-identical dataset files %s", identical ? "ok" : "BAD");
  return {boundaries && strict && filtered && disjoint && identical, detail};
}

// serialization -------------------------------------------------------------

template <typename T>
std::vector<T> flatten(const model::ModelParams<T>& p) {
  std::vector<T> out;
  p.visit([&](const std::string&, const Tensor<T>& t) { out.insert(out.end(), t.data().begin(), t.data().end()); });
  return out;
}

Outcome serialization_round_trips() {
  TempDir dir("acceptance");
  const testing::SyntheticTask task = testing::synthetic_task(16, 4, 16, 4, 20, 41);

  const std::vector<embed::EmbeddingMatrix> records = task.store.records();
  embed::write_embedding_file(dir.file("e.bin"), records);
  const embed::EmbeddingStore loaded = embed::EmbeddingStore::read(dir.file("e.bin"));
  bool emb_ok = loaded.size() == records.size() && loaded.d_e() == 16;
  for (const auto& m : records) {
    const auto& back = loaded.at(m.seq_id);
    emb_ok = emb_ok && back.values.shape() == m.values.shape() &&
             std::memcmp(back.values.data().data(), m.values.data().data(), m.values.size() * sizeof(float)) == 0;
  }
  embed::write_embedding_file(dir.file("e2.bin"), loaded.records());
  emb_ok = emb_ok && testing::read_file(dir.file("e.bin")) == testing::read_file(dir.file("e2.bin"));

  bool ckpt_ok = true, pred_ok = true;
  for (const auto v : {model::Variant::kDuaDeep, model::Variant::kEsmT, model::Variant::kEsmC}) {
    model::ModelConfig c;
    c.d_e = 16;
    c.n_heads = 4;
    c.conv1 = {32, 3};
    c.conv2 = {16, 5};
    c.head_dims = {32, 8};
    c.variant = v;
    c.seed = 7;
    const auto p = model::init_params<float>(c);
    const std::string path = dir.file(std::string(model::variant_name(v)) + ".ckpt");
    model::write_checkpoint(path, p);
    const auto back = model::read_checkpoint<float>(path);
    const auto a = flatten(p), b = flatten(back.params);
    ckpt_ok = ckpt_ok && back.params.config == p.config && a.size() == b.size() &&
              std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
    const auto pa = train::predict_records(p, task.dataset.train, loaded);
    const auto pb = train::predict_records(back.params, task.dataset.train, loaded);
    pred_ok = pred_ok && std::memcmp(pa.data(), pb.data(), pa.size() * sizeof(double)) == 0;
  }
  return {emb_ok && ckpt_ok && pred_ok,
          fmt("embedding file %s, checkpoint %s, reloaded predictions %s", emb_ok ? "bit-exact" : "MISMATCH",
              ckpt_ok ? "bit-exact" : "MISMATCH", pred_ok ? "bitwise-equal" : "MISMATCH")};
}

}  // namespace
}  // namespace duadeep

int main() {
  using duadeep::Outcome;
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"gradient-correctness", duadeep::gradient_correctness},
      {"architecture-shape", duadeep::architecture_shape},
      {"permutation-masking", duadeep::permutation_and_masking},
      {"overfit", duadeep::overfit},
      {"variants-train", duadeep::variants_train},
      {"metric-oracles", duadeep::metric_oracles},
      {"standardization-consistency", duadeep::standardization_consistency},
      {"preprocessing-fidelity", duadeep::preprocessing_fidelity},
      {"serialization-round-trips", duadeep::serialization_round_trips},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.passed ? 0 : 1;
    std::printf("%s %s: %s\n", o.passed ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, std::size(criteria));
  return failed;
}
