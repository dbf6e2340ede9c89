// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "duadeep/embedding.hpp"

#include <set>

#include "binary_io.hpp"
#include "duadeep/rng.hpp"

namespace duadeep::embed {

EmbeddingMatrix synthetic_embed(std::string seq_id, std::span<const data::Token> tokens, std::size_t d_e,
                                std::uint64_t seed) {
  if (d_e == 0) fail(ErrorKind::kConfig, "synthetic embedding width must be at least 1");
  if (tokens.empty()) fail(ErrorKind::kEmptySequence, "cannot embed an empty sequence");
  Tensor<float> values({tokens.size(), d_e});
  const std::uint64_t seed_key = mix64(seed);
  for (std::size_t row = 0; row < tokens.size(); ++row) {
    const data::Token t = tokens[row];
    if (t == data::kPad) continue;
    const std::uint64_t token_key = mix64(seed_key ^ t);
    for (std::size_t k = 0; k < d_e; ++k) {
      const double u = unit_interval(mix64(token_key ^ mix64(k)));
      values.at(row, k) = static_cast<float>(2.0 * u - 1.0);
    }
  }
  return {std::move(seq_id), std::move(values)};
}

void write_embedding_file(const std::string& path, std::span<const EmbeddingMatrix> records, std::uint32_t d_e) {
  if (!records.empty()) {
    const std::size_t width = records.front().width();
    if (d_e != 0 && d_e != width) {
      fail(ErrorKind::kFormat, "embedding width " + std::to_string(width) + " does not match requested d_e " +
                                   std::to_string(d_e));
    }
    d_e = static_cast<std::uint32_t>(width);
    for (const EmbeddingMatrix& m : records) {
      if (m.values.rank() != 2 || m.width() != width) {
        fail(ErrorKind::kFormat, "inconsistent embedding width for '" + m.seq_id + "': expected " +
                                     std::to_string(width) + ", got shape " + shape_string(m.values.shape()));
      }
    }
  }
  if (d_e == 0) fail(ErrorKind::kFormat, "embedding file needs d_e > 0");

  io::Writer w(path);
  w.bytes(kEmbeddingMagic);
  w.u32(kEmbeddingVersion);
  w.u32(d_e);
  w.u64(records.size());
  w.u8(kDtypeF32);
  for (const EmbeddingMatrix& m : records) {
    w.u32(static_cast<std::uint32_t>(m.seq_id.size()));
    w.bytes(m.seq_id);
    w.u32(static_cast<std::uint32_t>(m.length()));
    for (const float v : m.values.data()) w.f32(v);
  }
  w.finish();
}

namespace {

EmbeddingFileHeader read_header(io::Reader& r) {
  if (r.bytes(kEmbeddingMagic.size()) != kEmbeddingMagic) {
    fail(ErrorKind::kFormat, r.path() + ": not an embedding file (bad magic)");
  }
  EmbeddingFileHeader h;
  h.version = r.u32();
  if (h.version != kEmbeddingVersion) {
    fail(ErrorKind::kFormat, r.path() + ": unsupported embedding file version " + std::to_string(h.version));
  }
  h.d_e = r.u32();
  if (h.d_e == 0) fail(ErrorKind::kFormat, r.path() + ": header d_e is 0");
  h.count = r.u64();
  h.dtype = r.u8();
  if (h.dtype != kDtypeF32) fail(ErrorKind::kFormat, r.path() + ": unsupported dtype " + std::to_string(h.dtype));
  return h;
}

}  // namespace

EmbeddingFileHeader read_embedding_header(const std::string& path) {
  io::Reader r(path);
  return read_header(r);
}

EmbeddingStore EmbeddingStore::read(const std::string& path) {
  io::Reader r(path);
  const EmbeddingFileHeader h = read_header(r);
  EmbeddingStore store(h.d_e);
  for (std::uint64_t i = 0; i < h.count; ++i) {
    std::string id = r.bytes(r.u32());
    const std::uint32_t len = r.u32();
    if (len == 0 || len > data::kMaxLength) {
      fail(ErrorKind::kFormat, path + ": record '" + id + "' has invalid length " + std::to_string(len));
    }
    std::vector<float> values(static_cast<std::size_t>(len) * h.d_e);
    for (float& v : values) v = r.f32();
    Tensor<float> t({len, h.d_e}, std::move(values));
    if (!t.all_finite()) fail(ErrorKind::kFormat, path + ": record '" + id + "' has non-finite values");
    store.insert({std::move(id), std::move(t)});
  }
  if (!r.at_end()) fail(ErrorKind::kFormat, path + ": trailing bytes after last record");
  return store;
}

void EmbeddingStore::insert(EmbeddingMatrix m) {
  if (m.values.rank() != 2 || m.width() != d_e_) {
    fail(ErrorKind::kFormat, "embedding '" + m.seq_id + "' has shape " + shape_string(m.values.shape()) +
                                 ", store width is " + std::to_string(d_e_));
  }
  const std::string id = m.seq_id;
  if (!by_id_.emplace(id, std::move(m)).second) fail(ErrorKind::kFormat, "duplicate embedding id '" + id + "'");
  order_.push_back(id);
}

const EmbeddingMatrix& EmbeddingStore::at(const std::string& seq_id) const {
  const auto it = by_id_.find(seq_id);
  if (it == by_id_.end()) fail(ErrorKind::kMissingEmbedding, "no embedding for sequence id '" + seq_id + "'");
  return it->second;
}

std::vector<EmbeddingMatrix> EmbeddingStore::records() const {
  std::vector<EmbeddingMatrix> out;
  out.reserve(order_.size());
  for (const std::string& id : order_) out.push_back(by_id_.at(id));
  return out;
}

EmbeddingStore synthesize_for_dataset(const data::SplitDataset& ds, std::size_t d_e, std::uint64_t seed) {
  EmbeddingStore store(d_e);
  for (const data::SequenceEntry& e : data::unique_sequences(ds)) {
    store.insert(synthetic_embed(e.id, e.tokens, d_e, seed));
  }
  return store;
}

std::vector<std::string> missing_ids(const data::SplitDataset& ds, const EmbeddingStore& store) {
  std::set<std::string> missing;
  for (const data::SequenceEntry& e : data::unique_sequences(ds)) {
    if (!store.contains(e.id)) missing.insert(e.id);
  }
  return {missing.begin(), missing.end()};
}

}  // namespace duadeep::embed
