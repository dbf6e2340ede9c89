// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "duadeep/dataio.hpp"
#include "duadeep/tensor.hpp"

namespace duadeep::embed {

/// Per-residue embeddings of one sequence, [length x d_e].
struct EmbeddingMatrix {
  std::string seq_id;
  Tensor<float> values;

  std::size_t length() const { return values.dim(0); }
  std::size_t width() const { return values.dim(1); }
};

// Embedding file layout, little-endian throughout:
//   header:  "DDSEQEMB" | u32 version | u32 d_e | u64 count | u8 dtype (0 = f32)
//   record:  u32 id_len | id bytes | u32 L | L * d_e f32 values, row-major
inline constexpr std::string_view kEmbeddingMagic = "DDSEQEMB";
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 0;

struct EmbeddingFileHeader {
  std::uint32_t version = kEmbeddingVersion;
  std::uint32_t d_e = 0;
  std::uint64_t count = 0;
  std::uint8_t dtype = kDtypeF32;
};

/// Deterministic per-token stand-in for a pretrained model: entry (t, k) is
/// a hash of (seed, token id, k) mapped to uniform(-1, 1); PAD rows are zero.
EmbeddingMatrix synthetic_embed(std::string seq_id, std::span<const data::Token> tokens, std::size_t d_e,
                                std::uint64_t seed);

/// Writes records in the given order. `d_e` is required when `records` is
/// empty; otherwise it is inferred and must be uniform.
void write_embedding_file(const std::string& path, std::span<const EmbeddingMatrix> records, std::uint32_t d_e = 0);

EmbeddingFileHeader read_embedding_header(const std::string& path);

/// Immutable id -> embedding map loaded from an embedding file.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t d_e) : d_e_(d_e) {}

  static EmbeddingStore read(const std::string& path);

  /// Throws kFormat on width mismatch or a duplicate id.
  void insert(EmbeddingMatrix m);

  /// Throws kMissingEmbedding naming the id.
  const EmbeddingMatrix& at(const std::string& seq_id) const;
  bool contains(const std::string& seq_id) const { return by_id_.count(seq_id) != 0; }

  std::size_t d_e() const noexcept { return d_e_; }
  std::size_t size() const noexcept { return order_.size(); }

  /// Records in file order.
  std::vector<EmbeddingMatrix> records() const;

 private:
  std::size_t d_e_ = 0;
  std::vector<std::string> order_;
  std::map<std::string, EmbeddingMatrix> by_id_;
};

/// Synthesizes one record per unique sequence in `ds` (sorted by id).
EmbeddingStore synthesize_for_dataset(const data::SplitDataset& ds, std::size_t d_e, std::uint64_t seed);

/// Ids referenced by `ds` but absent from `store`, sorted.
std::vector<std::string> missing_ids(const data::SplitDataset& ds, const EmbeddingStore& store);

}  // namespace duadeep::embed
