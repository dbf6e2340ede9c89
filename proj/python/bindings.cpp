// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "duadeep/checkpoint.hpp"
#include "duadeep/dataio.hpp"
#include "duadeep/embedding.hpp"
#include "duadeep/error.hpp"
#include "duadeep/gradcheck.hpp"
#include "duadeep/metrics.hpp"
#include "duadeep/model.hpp"
#include "duadeep/train.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace duadeep {
namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor<float> to_tensor(const FloatArray& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array of shape (length, d_e)");
  const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
  return Tensor<float>({rows, cols}, std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray to_array(const Tensor<float>& t) {
  FloatArray a({static_cast<py::ssize_t>(t.dim(0)), static_cast<py::ssize_t>(t.dim(1))});
  std::memcpy(a.mutable_data(), t.data().data(), t.size() * sizeof(float));
  return a;
}

std::vector<double> to_vector(const DoubleArray& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

/// f32 model handle. Checkpoints saved in f64 are narrowed on load.
class Model {
 public:
  explicit Model(model::ModelParams<float> params, json meta = json::object())
      : params_(std::move(params)), meta_(std::move(meta)) {}

  static Model create(const std::string& config_json) {
    return Model(model::init_params<float>(model::model_config_from_json(json::parse(config_json))));
  }
  static Model load(const std::string& path) {
    auto loaded = model::read_checkpoint<float>(path);
    return Model(std::move(loaded.params), std::move(loaded.meta));
  }

  void save(const std::string& path) const { model::write_checkpoint(path, params_, meta_); }

  double predict(const FloatArray& antigen, const FloatArray& antibody) const {
    return model::predict(params_, model::StreamInput<float>::from(to_tensor(antigen)),
                          model::StreamInput<float>::from(to_tensor(antibody)));
  }

  std::string config_json() const { return model::to_json(params_.config).dump(); }
  std::string meta_json() const { return meta_.dump(); }
  std::size_t parameter_count() const { return params_.parameter_count(); }
  std::size_t fusion_width() const { return params_.config.fusion_width(); }

  std::map<std::string, FloatArray> parameters() const {
    std::map<std::string, FloatArray> out;
    params_.visit([&](const std::string& name, const Tensor<float>& t) {
      FloatArray a(static_cast<py::ssize_t>(t.size()));
      std::memcpy(a.mutable_data(), t.data().data(), t.size() * sizeof(float));
      out.emplace(name, std::move(a));
    });
    return out;
  }

 private:
  model::ModelParams<float> params_;
  json meta_;
};

std::map<std::string, FloatArray> read_embeddings(const std::string& path) {
  std::map<std::string, FloatArray> out;
  for (const auto& m : embed::EmbeddingStore::read(path).records()) out.emplace(m.seq_id, to_array(m.values));
  return out;
}

void write_embeddings(const std::string& path, const std::vector<std::pair<std::string, FloatArray>>& records,
                      std::uint32_t d_e) {
  std::vector<embed::EmbeddingMatrix> ms;
  for (const auto& [id, a] : records) ms.push_back({id, to_tensor(a)});
  embed::write_embedding_file(path, ms, d_e);
}

py::dict embedding_header(const std::string& path) {
  const auto h = embed::read_embedding_header(path);
  py::dict d;
  d["version"] = h.version;
  d["d_e"] = h.d_e;
  d["count"] = h.count;
  d["dtype"] = h.dtype;
  return d;
}

FloatArray synthetic_embed(const std::string& sequence, std::size_t d_e, std::uint64_t seed) {
  const auto tokens = data::tokenize(data::clean_sequence(sequence));
  return to_array(embed::synthetic_embed("", tokens, d_e, seed).values);
}

py::dict preprocess_csv(const std::string& input, const std::string& out, std::uint64_t seed) {
  const auto prepared = data::preprocess(data::read_affinity_csv(input), seed);
  data::write_dataset(out, prepared);
  py::dict d;
  d["input_records"] = prepared.input_records;
  d["train"] = prepared.splits.train.size();
  d["val"] = prepared.splits.val.size();
  d["test"] = prepared.splits.test.size();
  d["scaler_mean"] = prepared.scaler.mean;
  d["scaler_std"] = prepared.scaler.std;
  return d;
}

void embed_dataset(const std::string& dataset, const std::string& out, std::size_t d_e, std::uint64_t seed) {
  const auto ds = data::read_dataset(dataset);
  embed::write_embedding_file(out, embed::synthesize_for_dataset(ds.splits, d_e, seed).records(),
                              static_cast<std::uint32_t>(d_e));
}

py::tuple train_model(const std::string& dataset, const std::string& embeddings, const std::string& model_json,
                      const std::string& train_json) {
  const auto ds = data::read_dataset(dataset);
  const auto store = embed::EmbeddingStore::read(embeddings);
  const auto mc = model::model_config_from_json(json::parse(model_json));
  const auto tc = train::train_config_from_json(json::parse(train_json));
  train::TrainResult<float> result;
  {
    py::gil_scoped_release release;
    result = train::train<float>(mc, tc, ds.splits, store);
  }
  json meta = {{"scaler", {{"mean", ds.scaler.mean}, {"std", ds.scaler.std}}},
               {"train", train::to_json(tc)},
               {"best_epoch", result.best_epoch},
               {"best_val_rmse", result.best_val_rmse},
               {"stop_reason", result.stop_reason}};
  py::list curve;
  for (const auto& e : result.curve) curve.append(py::make_tuple(e.epoch, e.train_rmse, e.val_rmse));
  return py::make_tuple(Model(std::move(result.best), std::move(meta)), curve);
}

py::tuple run_gradcheck(std::uint64_t seed, std::size_t d_e) {
  auto problem = gradcheck::default_toy_problem(seed);
  problem.config.d_e = d_e;
  gradcheck::Report report;
  {
    py::gil_scoped_release release;
    report = gradcheck::run_model_gradcheck(problem);
  }
  return py::make_tuple(report.passed(), report.table());
}

}  // namespace
}  // namespace duadeep

PYBIND11_MODULE(_core, m) {
  using namespace duadeep;
  m.doc() = "DuaDeep sequence affinity regressor: C++ core bindings.";

  static py::exception<Error> error(m, "DuaDeepError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("clean_sequence", [](const std::string& s) { return data::clean_sequence(s); });
  m.def("kd_to_pkd", &data::kd_to_pkd, py::arg("kd_nm"));
  m.def("kd_in_range", [](double kd) { return data::kd_in_range(kd); }, py::arg("kd_nm"));
  m.def("tokenize", [](const std::string& s) {
    const auto t = data::tokenize(s);
    return std::vector<int>(t.begin(), t.end());
  });
  m.def("sequence_id", [](const std::string& prefix, const std::string& sequence) {
    return data::sequence_id(prefix, data::tokenize(data::clean_sequence(sequence)));
  });

  m.def("pearson", [](const DoubleArray& x, const DoubleArray& y) { return metrics::pearson(to_vector(x), to_vector(y)); });
  m.def("spearman",
        [](const DoubleArray& x, const DoubleArray& y) { return metrics::spearman(to_vector(x), to_vector(y)); });
  m.def("r2", [](const DoubleArray& p, const DoubleArray& t) { return metrics::r2(to_vector(p), to_vector(t)); });
  m.def("rmse", [](const DoubleArray& p, const DoubleArray& t) { return metrics::rmse(to_vector(p), to_vector(t)); });
  m.def("mae", [](const DoubleArray& p, const DoubleArray& t) { return metrics::mae(to_vector(p), to_vector(t)); });
  m.def("roc_auc", [](const DoubleArray& scores, const std::vector<std::uint8_t>& labels) {
    return metrics::roc_auc(to_vector(scores), labels);
  });

  m.def("read_embeddings", &read_embeddings, py::arg("path"));
  m.def("write_embeddings", &write_embeddings, py::arg("path"), py::arg("records"), py::arg("d_e") = 0);
  m.def("embedding_header", &embedding_header, py::arg("path"));
  m.def("synthetic_embed", &synthetic_embed, py::arg("sequence"), py::arg("d_e"), py::arg("seed") = 0);

  m.def("preprocess_csv", &preprocess_csv, py::arg("input"), py::arg("out"), py::arg("seed") = 0);
  m.def("embed_dataset", &embed_dataset, py::arg("dataset"), py::arg("out"), py::arg("d_e"), py::arg("seed") = 0);
  m.def("train_model", &train_model, py::arg("dataset"), py::arg("embeddings"), py::arg("model_json"),
        py::arg("train_json"));
  m.def("gradcheck", &run_gradcheck, py::arg("seed") = 0, py::arg("d_e") = 16);

  py::class_<Model>(m, "Model")
      .def_static("create", &Model::create, py::arg("config_json"))
      .def_static("load", &Model::load, py::arg("path"))
      .def("save", &Model::save, py::arg("path"))
      .def("predict", &Model::predict, py::arg("antigen"), py::arg("antibody"))
      .def("parameters", &Model::parameters)
      .def_property_readonly("config_json", &Model::config_json)
      .def_property_readonly("meta_json", &Model::meta_json)
      .def_property_readonly("parameter_count", &Model::parameter_count)
      .def_property_readonly("fusion_width", &Model::fusion_width);
}
