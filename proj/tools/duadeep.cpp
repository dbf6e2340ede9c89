// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

// duadeep: preprocess -> embed -> train -> eval / predict, plus gradcheck.
//
// Exit codes: 0 success, 1 failed check or unexpected error, 2 usage error,
// 10..24 one per duadeep::ErrorKind (see include/duadeep/error.hpp).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "duadeep/checkpoint.hpp"
#include "duadeep/dataio.hpp"
#include "duadeep/embedding.hpp"
#include "duadeep/error.hpp"
#include "duadeep/gradcheck.hpp"
#include "duadeep/metrics.hpp"
#include "duadeep/model.hpp"
#include "duadeep/train.hpp"

namespace {

using duadeep::ErrorKind;
using duadeep::fail;
using duadeep::Tensor;
using nlohmann::json;
namespace data = duadeep::data;
namespace embed = duadeep::embed;
namespace model = duadeep::model;
namespace train = duadeep::train;
namespace metrics = duadeep::metrics;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::kIo, "failed writing " + path);
}

// Config file sections; anything else is rejected.
json config_section(const json& file, const std::string& name, std::initializer_list<const char*> allowed_sections) {
  if (file.is_null()) return json::object();
  if (!file.is_object()) fail(ErrorKind::kConfig, "config file must hold a JSON object");
  for (const auto& [key, _] : file.items()) {
    bool known = false;
    for (const char* s : allowed_sections) known = known || key == s;
    if (!known) fail(ErrorKind::kConfig, "unknown config section '" + key + "'");
  }
  return file.contains(name) ? file.at(name) : json::object();
}

template <typename T>
T get_key(const json& section, const char* key, T fallback) {
  if (!section.contains(key)) return fallback;
  try {
    return section.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& section, const char* name, std::initializer_list<const char*> keys) {
  for (const auto& [key, _] : section.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) fail(ErrorKind::kConfig, std::string("unknown key '") + key + "' in config section '" + name + "'");
  }
}

// ---------------------------------------------------------------- preprocess

struct PreprocessArgs {
  std::string input, out, config;
  std::uint64_t seed = 0;
  data::SplitFractions fractions;
  data::CsvColumns columns;
};

int cmd_preprocess(const PreprocessArgs& args, const CLI::App& sub) {
  const json file = args.config.empty() ? json() : read_json_file(args.config);
  const json sec = config_section(file, "preprocess", {"preprocess"});
  reject_unknown(sec, "preprocess", {"seed", "train", "val", "test", "antigen_col", "heavy_col", "light_col", "kd_col"});
  auto pick = [&](const char* flag, const char* key, auto value) {
    return sub.count(flag) > 0 ? value : get_key(sec, key, value);
  };
  const std::uint64_t seed = pick("--seed", "seed", args.seed);
  data::SplitFractions fr{pick("--train-frac", "train", args.fractions.train),
                          pick("--val-frac", "val", args.fractions.val),
                          pick("--test-frac", "test", args.fractions.test)};
  data::CsvColumns cols{pick("--antigen-col", "antigen_col", args.columns.antigen),
                        pick("--heavy-col", "heavy_col", args.columns.heavy),
                        pick("--light-col", "light_col", args.columns.light),
                        pick("--kd-col", "kd_col", args.columns.kd)};

  const std::vector<data::AffinityRecord> records = data::read_affinity_csv(args.input, cols);
  const data::PreparedDataset prepared = data::preprocess(records, seed, fr);
  data::write_dataset(args.out, prepared);

  write_json_file((std::filesystem::path(args.out) / "config.json").string(),
                  {{"command", "preprocess"},
                   {"input", args.input},
                   {"out", args.out},
                   {"preprocess",
                    {{"seed", seed},
                     {"train", fr.train},
                     {"val", fr.val},
                     {"test", fr.test},
                     {"antigen_col", cols.antigen},
                     {"heavy_col", cols.heavy},
                     {"light_col", cols.light},
                     {"kd_col", cols.kd}}}});

  const data::SplitDataset& s = prepared.splits;
  std::printf("input records:     %zu\n", prepared.input_records);
  std::printf("train / val / test: %zu / %zu / %zu\n", s.train.size(), s.val.size(), s.test.size());
  std::printf("dropped: invalid_kd=%zu kd_out_of_range=%zu rejected_sequence=%zu\n", prepared.dropped.invalid_kd,
              prepared.dropped.kd_out_of_range, prepared.dropped.rejected_sequence);
  std::printf("scaler: mean=%.17g std=%.17g\n", prepared.scaler.mean, prepared.scaler.std);
  return 0;
}

// --------------------------------------------------------------------- embed

struct EmbedArgs {
  std::string dataset, mode = "synthetic", out, from;
  std::size_t d_e = 0;
  std::uint64_t seed = 0;
};

int cmd_embed(const EmbedArgs& args) {
  const data::LoadedDataset ds = data::read_dataset(args.dataset);
  std::vector<embed::EmbeddingMatrix> records;
  std::size_t d_e = 0;
  if (args.mode == "synthetic") {
    if (args.d_e == 0) fail(ErrorKind::kConfig, "--mode synthetic requires --d-e > 0");
    d_e = args.d_e;
    records = embed::synthesize_for_dataset(ds.splits, d_e, args.seed).records();
  } else if (args.mode == "import") {
    if (args.from.empty()) fail(ErrorKind::kConfig, "--mode import requires --from");
    const embed::EmbeddingStore source = embed::EmbeddingStore::read(args.from);
    const std::vector<std::string> missing = embed::missing_ids(ds.splits, source);
    if (!missing.empty()) {
      std::string list;
      for (const std::string& id : missing) list += (list.empty() ? "" : ", ") + id;
      fail(ErrorKind::kMissingEmbedding,
           args.from + " lacks " + std::to_string(missing.size()) + " sequence id(s): " + list);
    }
    d_e = source.d_e();
    for (const data::SequenceEntry& e : data::unique_sequences(ds.splits)) {
      const embed::EmbeddingMatrix& m = source.at(e.id);
      if (m.length() != e.tokens.size()) {
        fail(ErrorKind::kFormat, e.id + ": " + std::to_string(m.length()) + " embedding rows for " +
                                     std::to_string(e.tokens.size()) + " tokens");
      }
      records.push_back(m);
    }
  } else {
    fail(ErrorKind::kConfig, "--mode must be 'synthetic' or 'import', got '" + args.mode + "'");
  }
  embed::write_embedding_file(args.out, records, static_cast<std::uint32_t>(d_e));
  json echo = {{"command", "embed"}, {"dataset", args.dataset}, {"mode", args.mode}, {"d_e", d_e}, {"out", args.out}};
  if (args.mode == "synthetic") echo["seed"] = args.seed;
  if (args.mode == "import") echo["from"] = args.from;
  write_json_file(args.out + ".config.json", echo);
  std::printf("wrote %zu embeddings (d_e=%zu) to %s\n", records.size(), d_e, args.out.c_str());
  return 0;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string dataset, embeddings, variant = "duadeep", config, out, curves;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  std::size_t batch_size = 32, max_epochs = 50, patience = 5, workers = 1;
  int precision = 32;
  bool no_timing = false;
};

template <typename T>
train::TrainResult<T> run_training(const model::ModelConfig& mc, const train::TrainConfig& tc,
                                   const data::SplitDataset& ds, const embed::EmbeddingStore& store) {
  return train::train<T>(mc, tc, ds, store, [](const train::EpochRecord& r) {
    std::printf("epoch %4zu  train_rmse %.6f  val_rmse %.6f  (%.2fs)\n", r.epoch, r.train_rmse, r.val_rmse, r.seconds);
    std::fflush(stdout);
  });
}

int cmd_train(const TrainArgs& args, const CLI::App& sub) {
  const json file = args.config.empty() ? json() : read_json_file(args.config);
  const json model_sec = config_section(file, "model", {"model", "train"});
  const json train_sec = config_section(file, "train", {"model", "train"});

  model::ModelConfig mc = model::model_config_from_json(model_sec);
  train::TrainConfig tc = train::train_config_from_json(train_sec);
  if (sub.count("--variant") > 0) mc.variant = model::parse_variant(args.variant);
  if (sub.count("--seed") > 0) {
    mc.seed = args.seed;
    tc.seed = args.seed;
  }
  if (sub.count("--lr") > 0) tc.lr = args.lr;
  if (sub.count("--batch-size") > 0) tc.batch_size = args.batch_size;
  if (sub.count("--max-epochs") > 0) tc.max_epochs = args.max_epochs;
  if (sub.count("--patience") > 0) tc.patience = args.patience;
  if (sub.count("--workers") > 0) tc.workers = args.workers;
  if (sub.count("--precision") > 0) {
    tc = train::train_config_from_json(json{{"precision", args.precision}}, tc);
  }
  mc.validate();
  tc.validate();

  const data::LoadedDataset ds = data::read_dataset(args.dataset);
  const embed::EmbeddingStore store = embed::EmbeddingStore::read(args.embeddings);
  if (store.d_e() != mc.d_e) {
    fail(ErrorKind::kConfigMismatch, "embeddings have d_e=" + std::to_string(store.d_e()) + " but the model config has d_e=" +
                                         std::to_string(mc.d_e));
  }

  const json effective = {{"command", "train"},
                          {"dataset", args.dataset},
                          {"embeddings", args.embeddings},
                          {"out", args.out},
                          {"curves", args.curves},
                          {"model", model::to_json(mc)},
                          {"train", train::to_json(tc)}};
  auto finish = [&](const auto& result) {
    json meta = {{"scaler", {{"mean", ds.scaler.mean}, {"std", ds.scaler.std}}},
                 {"embeddings", {{"path", args.embeddings}, {"d_e", store.d_e()}}},
                 {"train", train::to_json(tc)},
                 {"best_epoch", result.best_epoch},
                 {"best_val_rmse", result.best_val_rmse},
                 {"stop_reason", result.stop_reason}};
    model::write_checkpoint(args.out, result.best, meta);
    if (!args.curves.empty()) {
      train::write_curve_csv(args.curves, result.curve, !args.no_timing);
      write_json_file(args.curves + ".config.json", effective);
    }
    write_json_file(args.out + ".config.json", effective);
    std::printf("best epoch %zu, best val RMSE %.6f (%s after %zu epochs)\n", result.best_epoch, result.best_val_rmse,
                result.stop_reason.c_str(), result.curve.size());
  };
  if (tc.precision == train::Precision::kF64) {
    finish(run_training<double>(mc, tc, ds.splits, store));
  } else {
    finish(run_training<float>(mc, tc, ds.splits, store));
  }
  return 0;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint, dataset, split = "test", embeddings, auc_policy = "median", scale = "standardized", report;
};

data::Scaler scaler_from_meta(const json& meta, const std::string& path) {
  if (!meta.contains("scaler")) fail(ErrorKind::kFormat, path + ": checkpoint records no scaler");
  return {meta.at("scaler").at("mean").get<double>(), meta.at("scaler").at("std").get<double>()};
}

template <typename T>
std::vector<double> predict_split(const std::string& ckpt, std::span<const data::CleanRecord> records,
                                  const embed::EmbeddingStore& store) {
  const model::LoadedCheckpoint<T> loaded = model::read_checkpoint<T>(ckpt);
  return train::predict_records(loaded.params, records, store);
}

int cmd_eval(const EvalArgs& args) {
  const metrics::ThresholdPolicy policy = metrics::ThresholdPolicy::parse(args.auc_policy);
  const metrics::Scale scale = metrics::parse_scale(args.scale);
  const data::Split split = data::parse_split(args.split);
  const model::CheckpointInfo info = model::read_checkpoint_info(args.checkpoint);
  const embed::EmbeddingStore store = embed::EmbeddingStore::read(args.embeddings);
  if (store.d_e() != info.config.d_e) {
    fail(ErrorKind::kConfigMismatch, "embeddings have d_e=" + std::to_string(store.d_e()) +
                                         " but the checkpoint expects d_e=" + std::to_string(info.config.d_e));
  }
  const data::LoadedDataset ds = data::read_dataset(args.dataset);
  const std::vector<data::CleanRecord>& records = data::records_of(ds.splits, split);

  std::vector<double> pred = info.dtype == model::Dtype::kF64 ? predict_split<double>(args.checkpoint, records, store)
                                                               : predict_split<float>(args.checkpoint, records, store);
  std::vector<double> target, pkd;
  for (const data::CleanRecord& r : records) {
    target.push_back(r.pkd_std);
    pkd.push_back(r.pkd);
  }
  if (scale == metrics::Scale::kPkd) {
    const data::Scaler scaler = scaler_from_meta(info.meta, args.checkpoint);
    for (double& p : pred) p = scaler.invert(p);
    target = pkd;
  }
  const metrics::EvalReport report = metrics::evaluate(pred, target, pkd, policy, scale);
  const json j = metrics::to_json(report);
  std::printf("%s\n", j.dump(2).c_str());
  for (const std::string& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  const std::string out = args.report.empty() ? args.checkpoint + "." + args.split + ".eval.json" : args.report;
  write_json_file(out, j);
  write_json_file(out + ".config.json", {{"command", "eval"},
                                         {"checkpoint", args.checkpoint},
                                         {"dataset", args.dataset},
                                         {"split", args.split},
                                         {"embeddings", args.embeddings},
                                         {"auc_policy", report.auc_policy},
                                         {"scale", metrics::scale_name(scale)},
                                         {"report", out}});
  return 0;
}

// ------------------------------------------------------------------- predict

struct PredictArgs {
  std::string checkpoint, antigen, heavy, light, embeddings;
  bool synthetic = false;
  std::size_t d_e = 0;
  std::uint64_t seed = 0;
};

template <typename T>
double predict_pair(const std::string& ckpt, const Tensor<float>& antigen, const Tensor<float>& antibody) {
  const model::LoadedCheckpoint<T> loaded = model::read_checkpoint<T>(ckpt);
  return static_cast<double>(model::predict(loaded.params, model::StreamInput<T>::from(antigen),
                                            model::StreamInput<T>::from(antibody)));
}

int cmd_predict(const PredictArgs& args) {
  const model::CheckpointInfo info = model::read_checkpoint_info(args.checkpoint);
  const data::Scaler scaler = scaler_from_meta(info.meta, args.checkpoint);

  const std::vector<data::Token> ag = data::tokenize(data::clean_sequence(args.antigen));
  const std::vector<data::Token> ab = data::combine_antibody(data::tokenize(data::clean_sequence(args.heavy)),
                                                             data::tokenize(data::clean_sequence(args.light)));
  const std::string ag_id = data::sequence_id("ag-", ag), ab_id = data::sequence_id("ab-", ab);

  embed::EmbeddingMatrix ag_emb, ab_emb;
  if (args.synthetic) {
    if (args.d_e != info.config.d_e) {
      fail(ErrorKind::kConfigMismatch, "--d-e " + std::to_string(args.d_e) + " does not match the checkpoint's d_e=" +
                                           std::to_string(info.config.d_e));
    }
    ag_emb = embed::synthetic_embed(ag_id, ag, args.d_e, args.seed);
    ab_emb = embed::synthetic_embed(ab_id, ab, args.d_e, args.seed);
  } else {
    if (args.embeddings.empty()) fail(ErrorKind::kConfig, "predict needs --embeddings <file> or --synthetic");
    const embed::EmbeddingStore store = embed::EmbeddingStore::read(args.embeddings);
    if (store.d_e() != info.config.d_e) {
      fail(ErrorKind::kConfigMismatch, "embeddings have d_e=" + std::to_string(store.d_e()) +
                                           " but the checkpoint expects d_e=" + std::to_string(info.config.d_e));
    }
    ag_emb = store.at(ag_id);
    ab_emb = store.at(ab_id);
    if (ag_emb.length() != ag.size() || ab_emb.length() != ab.size()) {
      fail(ErrorKind::kFormat, "embedding row counts do not match the sequence lengths");
    }
  }

  const double score = info.dtype == model::Dtype::kF64
                           ? predict_pair<double>(args.checkpoint, ag_emb.values, ab_emb.values)
                           : predict_pair<float>(args.checkpoint, ag_emb.values, ab_emb.values);
  const double pkd = scaler.invert(score);
  const double kd_nm = std::pow(10.0, 9.0 - pkd);
  std::printf("standardized_score %.17g\n", score);
  std::printf("pkd %.17g\n", pkd);
  std::printf("kd_nm %.17g\n", kd_nm);
  return 0;
}

// ----------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::size_t d_e = 16;
  std::uint64_t seed = 0;
  int precision = 64;
  std::string variant = "duadeep";
  double step = duadeep::gradcheck::Options{}.step;
  double tolerance = duadeep::gradcheck::Options{}.tolerance;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  if (args.precision != 64) fail(ErrorKind::kConfig, "gradcheck runs at 64-bit precision only");
  auto problem = duadeep::gradcheck::default_toy_problem(args.seed, model::parse_variant(args.variant));
  problem.config.d_e = args.d_e;
  duadeep::gradcheck::Options opt;
  opt.step = args.step;
  opt.tolerance = args.tolerance;
  const auto report = duadeep::gradcheck::run_model_gradcheck(problem, opt);
  std::printf("%s", report.table().c_str());
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DuaDeep sequence affinity regressor"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  CLI::App* p = app.add_subcommand("preprocess", "Clean, filter, split and standardize an affinity CSV");
  p->add_option("--input", pre.input, "Input CSV")->required();
  p->add_option("--out", pre.out, "Output dataset directory")->required();
  p->add_option("--seed", pre.seed, "Split seed");
  p->add_option("--config", pre.config, "JSON config file");
  p->add_option("--train-frac", pre.fractions.train);
  p->add_option("--val-frac", pre.fractions.val);
  p->add_option("--test-frac", pre.fractions.test);
  p->add_option("--antigen-col", pre.columns.antigen);
  p->add_option("--heavy-col", pre.columns.heavy);
  p->add_option("--light-col", pre.columns.light);
  p->add_option("--kd-col", pre.columns.kd);

  EmbedArgs emb;
  CLI::App* e = app.add_subcommand("embed", "Write per-residue embeddings for every dataset sequence");
  e->add_option("--dataset", emb.dataset, "Dataset directory")->required();
  e->add_option("--mode", emb.mode, "synthetic | import");
  e->add_option("--d-e", emb.d_e, "Embedding width (synthetic mode)");
  e->add_option("--seed", emb.seed, "Synthetic embedder seed");
  e->add_option("--from", emb.from, "Embedding file to import from");
  e->add_option("--out", emb.out, "Output embedding file")->required();

  TrainArgs tr;
  CLI::App* t = app.add_subcommand("train", "Train a model variant");
  t->add_option("--dataset", tr.dataset, "Dataset directory")->required();
  t->add_option("--embeddings", tr.embeddings, "Embedding file")->required();
  t->add_option("--variant", tr.variant, "duadeep | esm-t | esm-c");
  t->add_option("--config", tr.config, "JSON config with 'model' and 'train' sections");
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--curves", tr.curves, "Learning-curve CSV path");
  t->add_option("--seed", tr.seed, "Seed for initialization and shuffling");
  t->add_option("--lr", tr.lr);
  t->add_option("--batch-size", tr.batch_size);
  t->add_option("--max-epochs", tr.max_epochs);
  t->add_option("--patience", tr.patience);
  t->add_option("--workers", tr.workers);
  t->add_option("--precision", tr.precision, "32 | 64");
  t->add_flag("--no-timing", tr.no_timing, "Write 0 in the curve seconds column");

  EvalArgs ev;
  CLI::App* v = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  v->add_option("--checkpoint", ev.checkpoint)->required();
  v->add_option("--dataset", ev.dataset)->required();
  v->add_option("--split", ev.split, "train | val | test");
  v->add_option("--embeddings", ev.embeddings)->required();
  v->add_option("--auc-policy", ev.auc_policy, "median | fixed:<pKd>");
  v->add_option("--scale", ev.scale, "standardized | pkd");
  v->add_option("--report", ev.report, "Report path (default <checkpoint>.<split>.eval.json)");

  PredictArgs pr;
  CLI::App* d = app.add_subcommand("predict", "Predict affinity for one antigen/antibody pair");
  d->add_option("--checkpoint", pr.checkpoint)->required();
  d->add_option("--antigen", pr.antigen)->required();
  d->add_option("--heavy", pr.heavy)->required();
  d->add_option("--light", pr.light)->required();
  d->add_option("--embeddings", pr.embeddings, "Embedding file holding both sequences");
  d->add_flag("--synthetic", pr.synthetic, "Embed with the synthetic embedder");
  d->add_option("--d-e", pr.d_e, "Synthetic embedding width");
  d->add_option("--seed", pr.seed, "Synthetic embedder seed");

  GradcheckArgs gc;
  CLI::App* g = app.add_subcommand("gradcheck", "Finite-difference check of every parameter group");
  g->add_option("--d-e", gc.d_e);
  g->add_option("--seed", gc.seed);
  g->add_option("--precision", gc.precision);
  g->add_option("--variant", gc.variant);
  g->add_option("--step", gc.step);
  g->add_option("--tolerance", gc.tolerance);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (p->parsed()) return cmd_preprocess(pre, *p);
    if (e->parsed()) return cmd_embed(emb);
    if (t->parsed()) return cmd_train(tr, *t);
    if (v->parsed()) return cmd_eval(ev);
    if (d->parsed()) return cmd_predict(pr);
    if (g->parsed()) return cmd_gradcheck(gc);
  } catch (const duadeep::Error& err) {
    std::fprintf(stderr, "error [%s]: %s\n", duadeep::to_string(err.kind()), err.what());
    return err.exit_code();
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 2;
}
