// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "duadeep/dataio.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "duadeep/error.hpp"
#include "duadeep/rng.hpp"

namespace duadeep::data {
namespace {

constexpr std::string_view kRecordMagic = "DDSEQREC";
constexpr std::uint32_t kRecordVersion = 1;
constexpr int kManifestVersion = 1;

constexpr std::array<Token, 256> build_token_table() {
  std::array<Token, 256> table{};
  for (std::size_t i = 0; i < kCanonicalResidues.size(); ++i) {
    table[static_cast<unsigned char>(kCanonicalResidues[i])] = static_cast<Token>(i + 1);
  }
  table[static_cast<unsigned char>('X')] = kUnknown;
  return table;
}

constexpr std::array<Token, 256> kTokenTable = build_token_table();

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  bool next(std::vector<std::string>& row) {
    row.clear();
    if (in_.peek() == std::char_traits<char>::eof()) return false;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (;;) {
      const int c = in_.get();
      if (c == std::char_traits<char>::eof()) {
        if (quoted) fail(ErrorKind::kFormat, "unterminated quoted CSV field on line " + std::to_string(line_));
        break;
      }
      any = true;
      if (quoted) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(static_cast<char>(c));
        }
        continue;
      }
      if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        row.push_back(std::move(field));
        field.clear();
      } else if (c == '\r') {
        if (in_.peek() == '\n') in_.get();
        break;
      } else if (c == '\n') {
        break;
      } else {
        field.push_back(static_cast<char>(c));
      }
    }
    ++line_;
    row.push_back(std::move(field));
    return any;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

std::optional<double> parse_kd(const std::string& field) {
  std::string s = field;
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  std::vector<std::size_t> parent;
};

void write_record_payload(io::Writer& w, const CleanRecord& r) {
  const auto put_string = [&](const std::string& s) {
    w.u32(static_cast<std::uint32_t>(s.size()));
    w.bytes(s);
  };
  const auto put_tokens = [&](const std::vector<Token>& t) {
    w.u32(static_cast<std::uint32_t>(t.size()));
    w.bytes(std::string_view(reinterpret_cast<const char*>(t.data()), t.size()));
  };
  put_string(r.antigen_id);
  put_string(r.antibody_id);
  put_tokens(r.antigen_tokens);
  put_tokens(r.antibody_tokens);
  w.f64(r.pkd);
  w.f64(r.pkd_std);
}

std::size_t payload_size(const CleanRecord& r) {
  return 4 + r.antigen_id.size() + 4 + r.antibody_id.size() + 4 + r.antigen_tokens.size() + 4 +
         r.antibody_tokens.size() + 8 + 8;
}

void check_tokens(const std::vector<Token>& tokens, const std::string& path) {
  if (tokens.empty() || tokens.size() > kMaxLength) fail(ErrorKind::kFormat, path + ": bad token sequence length");
  for (const Token t : tokens) {
    if (t == kPad || t >= kVocabSize) fail(ErrorKind::kFormat, path + ": token id out of vocabulary");
  }
}

}  // namespace

std::vector<std::string> vocabulary() {
  std::vector<std::string> vocab;
  vocab.emplace_back("<pad>");
  for (const char c : kCanonicalResidues) vocab.emplace_back(1, c);
  vocab.emplace_back("X");
  vocab.emplace_back("<sep>");
  return vocab;
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  fail(ErrorKind::kConfig, "unknown split '" + std::string(name) + "' (expected train, val or test)");
}

const char* split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

const std::vector<CleanRecord>& records_of(const SplitDataset& ds, Split split) {
  switch (split) {
    case Split::kTrain: return ds.train;
    case Split::kVal: return ds.val;
    case Split::kTest: return ds.test;
  }
  return ds.train;
}

std::string clean_sequence(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (const char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) continue;
    const char up = static_cast<char>(std::toupper(c));
    out.push_back(kCanonicalResidues.find(up) == std::string_view::npos ? 'X' : up);
  }
  if (out.empty()) fail(ErrorKind::kRecordRejected, "sequence is empty after cleaning");
  return out;
}

double kd_to_pkd(double kd_nm) {
  if (!(kd_nm > 0.0) || !std::isfinite(kd_nm)) {
    fail(ErrorKind::kDomain, "K_d must be positive and finite, got " + std::to_string(kd_nm));
  }
  return 9.0 - std::log10(kd_nm);
}

bool kd_in_range(std::optional<double> kd_nm) {
  return kd_nm.has_value() && std::isfinite(*kd_nm) && *kd_nm > 1e-3 && *kd_nm < 1e9;
}

std::vector<AffinityRecord> filter_kd(std::vector<AffinityRecord> records) {
  std::erase_if(records, [](const AffinityRecord& r) { return !kd_in_range(r.kd_nm); });
  return records;
}

Scaler fit_scaler(std::span<const double> train_pkds) {
  if (train_pkds.size() < 2) fail(ErrorKind::kDegenerate, "scaler needs at least two values");
  double mean = 0.0;
  for (const double v : train_pkds) mean += v;
  mean /= static_cast<double>(train_pkds.size());
  double var = 0.0;
  for (const double v : train_pkds) var += (v - mean) * (v - mean);
  var /= static_cast<double>(train_pkds.size());
  const double sd = std::sqrt(var);
  if (!(sd > 0.0) || !std::isfinite(sd)) fail(ErrorKind::kDegenerate, "scaler input is constant");
  return {mean, sd};
}

std::vector<Token> tokenize(std::string_view cleaned, std::size_t max_len) {
  std::vector<Token> tokens;
  tokens.reserve(std::min(cleaned.size(), max_len));
  for (const char ch : cleaned.substr(0, std::min(cleaned.size(), max_len))) {
    const Token t = kTokenTable[static_cast<unsigned char>(ch)];
    if (t == kPad) {
      fail(ErrorKind::kContract, std::string("tokenize: character '") + ch + "' is not in the vocabulary");
    }
    tokens.push_back(t);
  }
  return tokens;
}

std::string detokenize(std::span<const Token> tokens) {
  std::string out;
  out.reserve(tokens.size());
  for (const Token t : tokens) {
    if (t >= 1 && t <= kCanonicalResidues.size()) {
      out.push_back(kCanonicalResidues[t - 1]);
    } else if (t == kUnknown) {
      out.push_back('X');
    } else if (t == kSep) {
      out.push_back('/');
    } else {
      fail(ErrorKind::kContract, "detokenize: token id " + std::to_string(t) + " has no residue");
    }
  }
  return out;
}

std::vector<Token> combine_antibody(std::span<const Token> heavy, std::span<const Token> light,
                                    std::size_t max_len) {
  if (heavy.empty()) fail(ErrorKind::kRecordRejected, "antibody heavy chain is empty");
  if (light.empty()) fail(ErrorKind::kRecordRejected, "antibody light chain is empty");
  std::vector<Token> out(heavy.begin(), heavy.end());
  out.push_back(kSep);
  out.insert(out.end(), light.begin(), light.end());
  if (out.size() > max_len) out.resize(max_len);
  return out;
}

std::string sequence_id(std::string_view prefix, std::span<const Token> tokens) {
  return std::string(prefix) + hex16(fnv1a64(detokenize(tokens)));
}

SplitDataset group_split(std::vector<CleanRecord> records, std::uint64_t seed, SplitFractions fractions) {
  if (fractions.train <= 0.0 || fractions.val <= 0.0 || fractions.test <= 0.0 ||
      std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    fail(ErrorKind::kConfig, "split fractions must be positive and sum to 1");
  }
  const std::size_t n = records.size();
  UnionFind uf(n);
  std::map<std::string, std::size_t> first_antigen, first_antibody;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [ag, ag_new] = first_antigen.emplace(records[i].antigen_id, i);
    if (!ag_new) uf.unite(ag->second, i);
    const auto [ab, ab_new] = first_antibody.emplace(records[i].antibody_id, i);
    if (!ab_new) uf.unite(ab->second, i);
  }

  // Components keyed by their smallest record index, members in input order.
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> components;
  components.reserve(by_root.size());
  for (auto& [root, members] : by_root) components.push_back(std::move(members));
  if (components.size() < 3) {
    fail(ErrorKind::kSplitInfeasible, "need at least 3 independent antigen/antibody groups to split, found " +
                                          std::to_string(components.size()));
  }

  Rng rng(seed);
  rng.shuffle(components);

  const double train_target = fractions.train * static_cast<double>(n) + 1e-9;
  const double val_target = fractions.val * static_cast<double>(n) + 1e-9;
  std::array<std::vector<std::size_t>, 3> assigned;  // component indices per split
  std::array<std::size_t, 3> counts{};
  for (std::size_t c = 0; c < components.size(); ++c) {
    const std::size_t size = components[c].size();
    std::size_t target = 2;
    if (static_cast<double>(counts[0] + size) <= train_target) {
      target = 0;
    } else if (static_cast<double>(counts[1] + size) <= val_target) {
      target = 1;
    }
    assigned[target].push_back(c);
    counts[target] += size;
  }

  for (std::size_t s = 0; s < 3; ++s) {
    if (!assigned[s].empty()) continue;
    std::size_t donor = 0;
    for (std::size_t d = 1; d < 3; ++d) {
      if (assigned[d].size() > assigned[donor].size()) donor = d;
    }
    auto& pool = assigned[donor];
    auto smallest = std::min_element(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
      return components[a].size() < components[b].size();
    });
    assigned[s].push_back(*smallest);
    pool.erase(smallest);
  }

  SplitDataset out;
  out.seed = seed;
  out.fractions = fractions;
  std::array<std::vector<CleanRecord>*, 3> dest = {&out.train, &out.val, &out.test};
  for (std::size_t s = 0; s < 3; ++s) {
    for (const std::size_t c : assigned[s]) {
      for (const std::size_t i : components[c]) dest[s]->push_back(std::move(records[i]));
    }
  }
  return out;
}

std::vector<AffinityRecord> read_affinity_csv(const std::string& path, const CsvColumns& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path);
  // UTF-8 byte-order mark.
  if (in.peek() == 0xEF) {
    char bom[3];
    in.read(bom, 3);
    if (static_cast<unsigned char>(bom[1]) != 0xBB || static_cast<unsigned char>(bom[2]) != 0xBF) {
      in.seekg(0);
    }
  }
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) fail(ErrorKind::kFormat, path + ": missing header row");
  const auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorKind::kFormat, path + ": header has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ag = column(columns.antigen), hv = column(columns.heavy), lt = column(columns.light),
                    kd = column(columns.kd);
  std::vector<AffinityRecord> records;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    if (row.size() != header.size()) {
      fail(ErrorKind::kFormat, path + ": line " + std::to_string(reader.line() - 1) + " has " +
                                   std::to_string(row.size()) + " fields, header has " +
                                   std::to_string(header.size()));
    }
    records.push_back({row[ag], row[hv], row[lt], parse_kd(row[kd])});
  }
  return records;
}

PreparedDataset preprocess(const std::vector<AffinityRecord>& records, std::uint64_t seed,
                           SplitFractions fractions) {
  PreparedDataset out;
  out.input_records = records.size();
  std::vector<CleanRecord> clean;
  std::map<std::string, std::string> id_owner;  // id -> detokenized sequence
  const auto claim_id = [&](const std::string& id, const std::vector<Token>& tokens) {
    const std::string seq = detokenize(tokens);
    const auto [it, inserted] = id_owner.emplace(id, seq);
    if (!inserted && it->second != seq) fail(ErrorKind::kFormat, "sequence id collision on " + id);
  };
  for (const AffinityRecord& r : records) {
    if (!r.kd_nm.has_value() || !(*r.kd_nm > 0.0)) {
      ++out.dropped.invalid_kd;
      continue;
    }
    if (!kd_in_range(r.kd_nm)) {
      ++out.dropped.kd_out_of_range;
      continue;
    }
    CleanRecord c;
    try {
      c.antigen_tokens = tokenize(clean_sequence(r.antigen_seq));
      c.antibody_tokens = combine_antibody(tokenize(clean_sequence(r.heavy_seq)),
                                           tokenize(clean_sequence(r.light_seq)));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kRecordRejected) throw;
      ++out.dropped.rejected_sequence;
      continue;
    }
    c.antigen_id = sequence_id("ag-", c.antigen_tokens);
    c.antibody_id = sequence_id("ab-", c.antibody_tokens);
    claim_id(c.antigen_id, c.antigen_tokens);
    claim_id(c.antibody_id, c.antibody_tokens);
    c.pkd = kd_to_pkd(*r.kd_nm);
    clean.push_back(std::move(c));
  }
  if (clean.empty()) fail(ErrorKind::kNoRecords, "no records survived preprocessing");

  out.splits = group_split(std::move(clean), seed, fractions);
  std::vector<double> train_pkds;
  train_pkds.reserve(out.splits.train.size());
  for (const CleanRecord& r : out.splits.train) train_pkds.push_back(r.pkd);
  out.scaler = fit_scaler(train_pkds);
  for (auto* split : {&out.splits.train, &out.splits.val, &out.splits.test}) {
    for (CleanRecord& r : *split) r.pkd_std = out.scaler.apply(r.pkd);
  }
  return out;
}

std::vector<SequenceEntry> unique_sequences(const SplitDataset& ds) {
  std::map<std::string, SequenceEntry> seen;
  for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
    for (const CleanRecord& r : *split) {
      seen.try_emplace(r.antigen_id, SequenceEntry{r.antigen_id, "antigen", r.antigen_tokens});
      seen.try_emplace(r.antibody_id, SequenceEntry{r.antibody_id, "antibody", r.antibody_tokens});
    }
  }
  std::vector<SequenceEntry> out;
  out.reserve(seen.size());
  for (auto& [id, entry] : seen) out.push_back(std::move(entry));
  return out;
}

void write_records(const std::string& path, std::span<const CleanRecord> records) {
  io::Writer w(path);
  w.bytes(kRecordMagic);
  w.u32(kRecordVersion);
  w.u64(records.size());
  for (const CleanRecord& r : records) {
    w.u32(static_cast<std::uint32_t>(payload_size(r)));
    write_record_payload(w, r);
  }
  w.finish();
}

std::vector<CleanRecord> read_records(const std::string& path) {
  io::Reader r(path);
  if (r.bytes(kRecordMagic.size()) != kRecordMagic) fail(ErrorKind::kFormat, path + ": bad record file magic");
  const std::uint32_t version = r.u32();
  if (version != kRecordVersion) {
    fail(ErrorKind::kFormat, path + ": unsupported record file version " + std::to_string(version));
  }
  const std::uint64_t count = r.u64();
  std::vector<CleanRecord> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t length = r.u32();
    CleanRecord c;
    const auto get_string = [&] { return r.bytes(r.u32()); };
    const auto get_tokens = [&] {
      const std::string raw = r.bytes(r.u32());
      return std::vector<Token>(raw.begin(), raw.end());
    };
    c.antigen_id = get_string();
    c.antibody_id = get_string();
    c.antigen_tokens = get_tokens();
    c.antibody_tokens = get_tokens();
    c.pkd = r.f64();
    c.pkd_std = r.f64();
    if (payload_size(c) != length) fail(ErrorKind::kFormat, path + ": record length prefix mismatch");
    check_tokens(c.antigen_tokens, path);
    check_tokens(c.antibody_tokens, path);
    out.push_back(std::move(c));
  }
  if (!r.at_end()) fail(ErrorKind::kFormat, path + ": trailing bytes after last record");
  return out;
}

void write_dataset(const std::string& dir, const PreparedDataset& prepared) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create dataset directory " + dir + ": " + ec.message());
  const fs::path root(dir);
  const SplitDataset& s = prepared.splits;
  write_records((root / "train.rec").string(), s.train);
  write_records((root / "val.rec").string(), s.val);
  write_records((root / "test.rec").string(), s.test);

  nlohmann::json manifest;
  manifest["format"] = "duadeep-dataset";
  manifest["version"] = kManifestVersion;
  manifest["seed"] = s.seed;
  manifest["fractions"] = {{"train", s.fractions.train}, {"val", s.fractions.val}, {"test", s.fractions.test}};
  manifest["scaler"] = {{"mean", prepared.scaler.mean}, {"std", prepared.scaler.std}};
  manifest["max_length"] = kMaxLength;
  manifest["vocabulary"] = vocabulary();
  manifest["files"] = {{"train", "train.rec"}, {"val", "val.rec"}, {"test", "test.rec"}};
  manifest["counts"] = {{"input", prepared.input_records},
                        {"train", s.train.size()},
                        {"val", s.val.size()},
                        {"test", s.test.size()},
                        {"dropped",
                         {{"invalid_kd", prepared.dropped.invalid_kd},
                          {"kd_out_of_range", prepared.dropped.kd_out_of_range},
                          {"rejected_sequence", prepared.dropped.rejected_sequence}}}};
  nlohmann::json seqs = nlohmann::json::array();
  for (const SequenceEntry& e : unique_sequences(s)) {
    seqs.push_back({{"id", e.id}, {"kind", e.kind}, {"sequence", detokenize(e.tokens)}, {"length", e.tokens.size()}});
  }
  manifest["sequences"] = std::move(seqs);

  std::ofstream out(root / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write manifest in " + dir);
  out << manifest.dump(2) << '\n';
  if (!out) fail(ErrorKind::kIo, "cannot write manifest in " + dir);
}

LoadedDataset read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::ifstream in(root / "manifest.json");
  if (!in) fail(ErrorKind::kIo, "no manifest.json in " + dir);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, dir + "/manifest.json: " + e.what());
  }
  LoadedDataset out;
  try {
    if (manifest.at("format") != "duadeep-dataset") fail(ErrorKind::kFormat, dir + ": not a dataset manifest");
    out.scaler.mean = manifest.at("scaler").at("mean").get<double>();
    out.scaler.std = manifest.at("scaler").at("std").get<double>();
    out.splits.seed = manifest.at("seed").get<std::uint64_t>();
    const auto& fr = manifest.at("fractions");
    out.splits.fractions = {fr.at("train").get<double>(), fr.at("val").get<double>(), fr.at("test").get<double>()};
    const auto& files = manifest.at("files");
    out.splits.train = read_records((root / files.at("train").get<std::string>()).string());
    out.splits.val = read_records((root / files.at("val").get<std::string>()).string());
    out.splits.test = read_records((root / files.at("test").get<std::string>()).string());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, dir + "/manifest.json: " + e.what());
  }
  if (!(out.scaler.std > 0.0)) fail(ErrorKind::kFormat, dir + ": manifest scaler std must be positive");
  return out;
}

}  // namespace duadeep::data
