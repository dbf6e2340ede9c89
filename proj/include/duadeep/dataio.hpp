// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace duadeep::data {

using Token = std::uint8_t;

inline constexpr std::size_t kMaxLength = 512;

// Vocabulary: PAD=0, the 20 canonical residues in alphabetical order
// (A=1 ... Y=20), X=21 for anything else, SEP=22 between antibody chains.
inline constexpr Token kPad = 0;
inline constexpr Token kUnknown = 21;
inline constexpr Token kSep = 22;
inline constexpr std::size_t kVocabSize = 23;
inline constexpr std::string_view kCanonicalResidues = "ACDEFGHIKLMNPQRSTVWY";

/// Printable symbol per token id ("<pad>", "A", ..., "X", "<sep>").
std::vector<std::string> vocabulary();

struct AffinityRecord {
  std::string antigen_seq;
  std::string heavy_seq;
  std::string light_seq;
  std::optional<double> kd_nm;  // nanomolar; empty when missing or unparsable
};

struct CleanRecord {
  std::string antigen_id;
  std::string antibody_id;
  std::vector<Token> antigen_tokens;
  std::vector<Token> antibody_tokens;
  double pkd = 0.0;
  double pkd_std = 0.0;

  friend bool operator==(const CleanRecord&, const CleanRecord&) = default;
};

struct Scaler {
  double mean = 0.0;
  double std = 1.0;

  double apply(double pkd) const { return (pkd - mean) / std; }
  double invert(double z) const { return z * std + mean; }
};

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct SplitDataset {
  std::vector<CleanRecord> train;
  std::vector<CleanRecord> val;
  std::vector<CleanRecord> test;
  std::uint64_t seed = 0;
  SplitFractions fractions;
};

enum class Split { kTrain, kVal, kTest };

Split parse_split(std::string_view name);
const char* split_name(Split split);
const std::vector<CleanRecord>& records_of(const SplitDataset& ds, Split split);

/// Uppercases, strips whitespace and replaces anything outside the 20
/// canonical residues with 'X'. Throws kRecordRejected on an empty result.
std::string clean_sequence(std::string_view raw);

/// 9 - log10(kd_nm). Throws kDomain for kd_nm <= 0 or non-finite input.
double kd_to_pkd(double kd_nm);

/// True for a finite K_d with 1e-3 < kd_nm < 1e9 (strict).
bool kd_in_range(std::optional<double> kd_nm);

std::vector<AffinityRecord> filter_kd(std::vector<AffinityRecord> records);

/// Mean and population standard deviation. Throws kDegenerate for fewer than
/// two values or a constant input.
Scaler fit_scaler(std::span<const double> train_pkds);

/// Table lookup, keeping at most `max_len` leading residues.
std::vector<Token> tokenize(std::string_view cleaned, std::size_t max_len = kMaxLength);

/// Inverse of tokenize; SEP renders as '/'. PAD is rejected.
std::string detokenize(std::span<const Token> tokens);

/// heavy ++ [SEP] ++ light, truncated to `max_len`.
std::vector<Token> combine_antibody(std::span<const Token> heavy, std::span<const Token> light,
                                    std::size_t max_len = kMaxLength);

/// Stable sequence identifier: prefix + 16 hex digits of FNV-1a over the
/// detokenized sequence.
std::string sequence_id(std::string_view prefix, std::span<const Token> tokens);

/// Assigns connected components of the antigen/antibody sharing graph whole
/// to one split. Components are shuffled under `seed`, then each goes to
/// train while it fits the train target, else to val while it fits, else to
/// test. Empty splits are then back-filled with the smallest component of the
/// split holding the most components.
SplitDataset group_split(std::vector<CleanRecord> records, std::uint64_t seed,
                         SplitFractions fractions = {});

struct CsvColumns {
  std::string antigen = "antigen_seq";
  std::string heavy = "heavy_seq";
  std::string light = "light_seq";
  std::string kd = "kd_nm";
};

/// UTF-8 CSV with a header row; quoted fields follow RFC 4180.
std::vector<AffinityRecord> read_affinity_csv(const std::string& path, const CsvColumns& columns = {});

struct DropTally {
  std::size_t invalid_kd = 0;       // missing, unparsable, non-positive
  std::size_t kd_out_of_range = 0;
  std::size_t rejected_sequence = 0;
};

struct PreparedDataset {
  SplitDataset splits;
  Scaler scaler;
  std::size_t input_records = 0;
  DropTally dropped;
};

/// Full cleaning pipeline: K_d filter, sequence cleaning, pK_d transform,
/// grouped split, train-only scaler fit applied to every split.
PreparedDataset preprocess(const std::vector<AffinityRecord>& records, std::uint64_t seed,
                           SplitFractions fractions = {});

struct SequenceEntry {
  std::string id;
  std::string kind;  // "antigen" | "antibody"
  std::vector<Token> tokens;
};

/// Unique sequences referenced by any split, sorted by id.
std::vector<SequenceEntry> unique_sequences(const SplitDataset& ds);

/// Writes train.rec, val.rec, test.rec and manifest.json into `dir`
/// (created if absent).
void write_dataset(const std::string& dir, const PreparedDataset& prepared);

struct LoadedDataset {
  SplitDataset splits;
  Scaler scaler;
};

LoadedDataset read_dataset(const std::string& dir);

void write_records(const std::string& path, std::span<const CleanRecord> records);
std::vector<CleanRecord> read_records(const std::string& path);

}  // namespace duadeep::data
