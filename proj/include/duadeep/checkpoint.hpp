// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "duadeep/model.hpp"

// Checkpoint layout, little-endian throughout:
//
//   "DDSEQCKP" | u32 version | u8 dtype (0 = f32, 1 = f64)
//   u32 blob_len | blob: UTF-8 JSON {"model": <ModelConfig>, "meta": {...}}
//   u64 tensor_count
//   per tensor, in ModelParams::visit order:
//     u32 rank | u32 dims[rank] | prod(dims) values of the stated dtype
namespace duadeep::model {

inline constexpr std::string_view kCheckpointMagic = "DDSEQCKP";
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class Dtype : std::uint8_t { kF32 = 0, kF64 = 1 };

struct CheckpointInfo {
  ModelConfig config;
  nlohmann::json meta;
  Dtype dtype = Dtype::kF32;
};

template <typename T>
struct LoadedCheckpoint {
  ModelParams<T> params;
  nlohmann::json meta;
  Dtype dtype = Dtype::kF32;
};

/// Stores float models as f32 and double models as f64.
template <typename T>
void write_checkpoint(const std::string& path, const ModelParams<T>& params, const nlohmann::json& meta = nlohmann::json::object());

/// Header and config only.
CheckpointInfo read_checkpoint_info(const std::string& path);

/// Values are converted when the stored dtype differs from T.
template <typename T>
LoadedCheckpoint<T> read_checkpoint(const std::string& path);

}  // namespace duadeep::model
