// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "duadeep/checkpoint.hpp"

#include <type_traits>

#include "binary_io.hpp"

namespace duadeep::model {
namespace {

struct Header {
  Dtype dtype;
  nlohmann::json blob;
};

Header read_header(io::Reader& r) {
  if (r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) {
    fail(ErrorKind::kFormat, r.path() + ": not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorKind::kFormat, r.path() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint8_t dtype = r.u8();
  if (dtype > 1) fail(ErrorKind::kFormat, r.path() + ": unknown dtype " + std::to_string(dtype));
  const std::string text = r.bytes(r.u32());
  Header h{static_cast<Dtype>(dtype), {}};
  try {
    h.blob = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, r.path() + ": malformed config blob: " + e.what());
  }
  if (!h.blob.is_object() || !h.blob.contains("model")) {
    fail(ErrorKind::kFormat, r.path() + ": config blob lacks a model section");
  }
  return h;
}

}  // namespace

template <typename T>
void write_checkpoint(const std::string& path, const ModelParams<T>& params, const nlohmann::json& meta) {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  constexpr Dtype dtype = std::is_same_v<T, float> ? Dtype::kF32 : Dtype::kF64;
  if (!params.all_finite()) fail(ErrorKind::kNonFinite, "refusing to checkpoint non-finite parameters");
  const nlohmann::json blob = {{"model", to_json(params.config)}, {"meta", meta}};
  const std::string text = blob.dump();

  io::Writer w(path);
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(dtype));
  w.u32(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  std::uint64_t count = 0;
  params.visit([&](const std::string&, const Tensor<T>&) { ++count; });
  w.u64(count);
  params.visit([&](const std::string&, const Tensor<T>& t) {
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (const std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (const T v : t.data()) {
      if constexpr (dtype == Dtype::kF32) {
        w.f32(v);
      } else {
        w.f64(v);
      }
    }
  });
  w.finish();
}

CheckpointInfo read_checkpoint_info(const std::string& path) {
  io::Reader r(path);
  Header h = read_header(r);
  CheckpointInfo info;
  info.config = model_config_from_json(h.blob.at("model"));
  info.config.validate();
  info.meta = h.blob.value("meta", nlohmann::json::object());
  info.dtype = h.dtype;
  return info;
}

template <typename T>
LoadedCheckpoint<T> read_checkpoint(const std::string& path) {
  io::Reader r(path);
  Header h = read_header(r);
  LoadedCheckpoint<T> out;
  out.dtype = h.dtype;
  out.meta = h.blob.value("meta", nlohmann::json::object());
  out.params = ModelParams<T>::zeros(model_config_from_json(h.blob.at("model")));
  std::uint64_t expected = 0;
  out.params.visit([&](const std::string&, const Tensor<T>&) { ++expected; });
  const std::uint64_t count = r.u64();
  if (count != expected) {
    fail(ErrorKind::kFormat, path + ": holds " + std::to_string(count) + " tensors, config implies " +
                                 std::to_string(expected));
  }
  out.params.visit([&](const std::string& name, Tensor<T>& t) {
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (std::size_t& d : shape) d = r.u32();
    if (shape != t.shape()) {
      fail(ErrorKind::kFormat, path + ": tensor " + name + " has shape " + shape_string(shape) + ", expected " +
                                   shape_string(t.shape()));
    }
    for (T& v : t.data()) v = h.dtype == Dtype::kF32 ? static_cast<T>(r.f32()) : static_cast<T>(r.f64());
  });
  if (!r.at_end()) fail(ErrorKind::kFormat, path + ": trailing bytes after last tensor");
  if (!out.params.all_finite()) fail(ErrorKind::kFormat, path + ": non-finite parameter values");
  return out;
}

template void write_checkpoint(const std::string&, const ModelParams<float>&, const nlohmann::json&);
template void write_checkpoint(const std::string&, const ModelParams<double>&, const nlohmann::json&);
template LoadedCheckpoint<float> read_checkpoint<float>(const std::string&);
template LoadedCheckpoint<double> read_checkpoint<double>(const std::string&);

}  // namespace duadeep::model
