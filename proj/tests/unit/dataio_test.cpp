// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "duadeep/dataio.hpp"
#include "gtest_support.hpp"

namespace duadeep::data {
namespace {

using testing::clustered_corpus;
using testing::expect_kind;
using testing::random_protein;
using testing::TempDir;

// clean_sequence -----------------------------------------------------------

TEST(CleanSequence, CaseAndWhitespace) { EXPECT_EQ(clean_sequence("acd efg"), "ACDEFG"); }

TEST(CleanSequence, NonStandardBecomesX) {
  EXPECT_EQ(clean_sequence("AC*DZ"), "ACXDX");
  EXPECT_EQ(clean_sequence("BJOUZ"), "XXXXX");
}

TEST(CleanSequence, EmptyIsRejected) {
  expect_kind(ErrorKind::kRecordRejected, [] { clean_sequence(""); });
  expect_kind(ErrorKind::kRecordRejected, [] { clean_sequence(" \t\n"); });
}

TEST(CleanSequence, IdempotentProperty) {
  Rng rng(1);
  const std::string alphabet = "acdefghiklmnpqrstvwyACDEFGHIKLMNPQRSTVWYBJOUZX*-. \t1";
  for (int trial = 0; trial < 200; ++trial) {
    std::string raw = "a";
    for (std::size_t i = 0, n = rng.below(40); i < n; ++i) raw += alphabet[rng.below(alphabet.size())];
    const std::string once = clean_sequence(raw);
    EXPECT_EQ(clean_sequence(once), once);
    for (const char c : once) EXPECT_TRUE(kCanonicalResidues.find(c) != std::string_view::npos || c == 'X');
  }
}

// kd transform and filter --------------------------------------------------

TEST(KdToPkd, BoundaryValues) {
  EXPECT_EQ(kd_to_pkd(1.0), 9.0);
  EXPECT_EQ(kd_to_pkd(1e9), 0.0);
  EXPECT_EQ(kd_to_pkd(1e-3), 12.0);
}

TEST(KdToPkd, NonPositiveIsDomainError) {
  expect_kind(ErrorKind::kDomain, [] { kd_to_pkd(0.0); });
  expect_kind(ErrorKind::kDomain, [] { kd_to_pkd(-5.0); });
  expect_kind(ErrorKind::kDomain, [] { kd_to_pkd(std::nan("")); });
}

TEST(KdToPkd, StrictlyDecreasingProperty) {
  Rng rng(2);
  std::vector<double> kds;
  for (int i = 0; i < 500; ++i) kds.push_back(std::pow(10.0, rng.uniform(-2.9, 8.9)));
  std::sort(kds.begin(), kds.end());
  kds.erase(std::unique(kds.begin(), kds.end()), kds.end());
  for (std::size_t i = 1; i < kds.size(); ++i) EXPECT_GT(kd_to_pkd(kds[i - 1]), kd_to_pkd(kds[i]));
}

TEST(FilterKd, StrictRangeAndMissing) {
  const auto rec = [](std::optional<double> kd) { return AffinityRecord{"A", "C", "D", kd}; };
  const auto kept = filter_kd({rec(1e-3), rec(std::nullopt), rec(50.0), rec(1e9), rec(0.0), rec(1.0000001e-3),
                               rec(9.99e8), rec(-1.0), rec(std::numeric_limits<double>::infinity())});
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0].kd_nm, 50.0);
  EXPECT_EQ(kept[1].kd_nm, 1.0000001e-3);
  EXPECT_EQ(kept[2].kd_nm, 9.99e8);
}

// scaler -------------------------------------------------------------------

TEST(Scaler, PopulationStatistics) {
  const std::vector<double> v = {1, 3};
  const Scaler s = fit_scaler(v);
  EXPECT_EQ(s.mean, 2.0);
  EXPECT_EQ(s.std, 1.0);
  EXPECT_EQ(s.apply(3.0), 1.0);
}

TEST(Scaler, DegenerateInputs) {
  const std::vector<double> constant = {4, 4, 4}, single = {1};
  expect_kind(ErrorKind::kDegenerate, [&] { fit_scaler(constant); });
  expect_kind(ErrorKind::kDegenerate, [&] { fit_scaler(single); });
}

TEST(Scaler, RoundTripProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v;
    for (int i = 0; i < 20; ++i) v.push_back(rng.uniform(-5, 15));
    const Scaler s = fit_scaler(v);
    for (int i = 0; i < 20; ++i) {
      const double x = rng.uniform(-100, 100);
      EXPECT_NEAR(s.invert(s.apply(x)), x, 1e-9);
    }
  }
}

// tokenize -----------------------------------------------------------------

TEST(Tokenize, TableLookup) {
  EXPECT_EQ(tokenize("AC"), (std::vector<Token>{1, 2}));
  EXPECT_EQ(tokenize("X"), (std::vector<Token>{21}));
  EXPECT_EQ(tokenize("Y"), (std::vector<Token>{20}));
  const auto vocab = vocabulary();
  ASSERT_EQ(vocab.size(), kVocabSize);
  EXPECT_EQ(vocab[1], "A");
  EXPECT_EQ(vocab[kUnknown], "X");
}

TEST(Tokenize, TruncatesTailAt512) {
  Rng rng(4);
  const std::string s = random_protein(rng, 600);
  const auto t = tokenize(s);
  ASSERT_EQ(t.size(), 512u);
  EXPECT_EQ(detokenize(t), s.substr(0, 512));
}

TEST(Tokenize, OutOfVocabularyIsContractError) {
  expect_kind(ErrorKind::kContract, [] { tokenize("AZ"); });
}

TEST(Tokenize, DetokenizeRoundTripProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::string s = random_protein(rng, 1 + rng.below(512));
    if (rng.below(2) == 0) s[rng.below(s.size())] = 'X';
    EXPECT_EQ(detokenize(tokenize(s)), s);
  }
}

TEST(CombineAntibody, SeparatorAndCap) {
  const std::vector<Token> h = {1, 2}, l = {3};
  EXPECT_EQ(combine_antibody(h, l), (std::vector<Token>{1, 2, 22, 3}));
  const std::vector<Token> long_h(300, 4), long_l(300, 5);
  const auto c = combine_antibody(long_h, long_l);
  EXPECT_EQ(c.size(), 512u);
  EXPECT_EQ(c[300], kSep);
  const std::vector<Token> empty;
  expect_kind(ErrorKind::kRecordRejected, [&] { combine_antibody(h, empty); });
}

// group_split --------------------------------------------------------------

std::vector<CleanRecord> independent_records(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CleanRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    CleanRecord r;
    r.antigen_tokens = tokenize(random_protein(rng, 12));
    r.antibody_tokens = tokenize(random_protein(rng, 12));
    r.antigen_id = sequence_id("ag-", r.antigen_tokens);
    r.antibody_id = sequence_id("ab-", r.antibody_tokens);
    r.pkd = rng.uniform(5, 11);
    out.push_back(std::move(r));
  }
  return out;
}

void expect_disjoint(const SplitDataset& ds) {
  std::map<std::string, int> ag_owner, ab_owner;
  int s = 0;
  for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
    for (const CleanRecord& r : *split) {
      const auto [ag, ag_new] = ag_owner.emplace(detokenize(r.antigen_tokens), s);
      EXPECT_EQ(ag->second, s) << "antigen crosses splits";
      const auto [ab, ab_new] = ab_owner.emplace(detokenize(r.antibody_tokens), s);
      EXPECT_EQ(ab->second, s) << "antibody crosses splits";
    }
    ++s;
  }
}

TEST(GroupSplit, TenIndependentRecordsSplit811) {
  const auto ds = group_split(independent_records(10, 6), 42);
  EXPECT_EQ(ds.train.size(), 8u);
  EXPECT_EQ(ds.val.size(), 1u);
  EXPECT_EQ(ds.test.size(), 1u);
  expect_disjoint(ds);
}

TEST(GroupSplit, SharedAntigenStaysTogether) {
  auto recs = independent_records(10, 7);
  recs[1].antigen_tokens = recs[0].antigen_tokens;
  recs[1].antigen_id = recs[0].antigen_id;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ds = group_split(recs, seed);
    expect_disjoint(ds);
    EXPECT_EQ(ds.train.size() + ds.val.size() + ds.test.size(), 10u);
  }
}

TEST(GroupSplit, DeterministicUnderSeed) {
  const auto recs = independent_records(60, 8);
  EXPECT_EQ(group_split(recs, 5).train, group_split(recs, 5).train);
  bool any_differs = false;
  for (std::uint64_t seed = 6; seed < 10; ++seed) any_differs |= !(group_split(recs, seed).train == group_split(recs, 5).train);
  EXPECT_TRUE(any_differs);
}

TEST(GroupSplit, TooFewComponentsIsInfeasible) {
  auto recs = independent_records(4, 9);
  for (auto& r : recs) {
    r.antigen_id = recs[0].antigen_id;
    r.antigen_tokens = recs[0].antigen_tokens;
  }
  expect_kind(ErrorKind::kSplitInfeasible, [&] { group_split(recs, 1); });
}

TEST(GroupSplit, BadFractionsAreConfigError) {
  expect_kind(ErrorKind::kConfig, [] { group_split(independent_records(10, 1), 1, {0.5, 0.2, 0.2}); });
}

TEST(GroupSplit, DisjointAndNearTargetFractionsProperty) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto records = clustered_corpus(200, 100, 20, 100 + seed);
    const auto prepared = preprocess(records, seed);
    const SplitDataset& ds = prepared.splits;
    const double n = static_cast<double>(ds.train.size() + ds.val.size() + ds.test.size());
    EXPECT_EQ(n, 200.0);
    expect_disjoint(ds);
    EXPECT_NEAR(ds.train.size() / n, 0.8, 0.05);
    EXPECT_NEAR(ds.val.size() / n, 0.1, 0.05);
    EXPECT_NEAR(ds.test.size() / n, 0.1, 0.05);
  }
}

// preprocess pipeline ------------------------------------------------------

TEST(Preprocess, ScalerFitOnTrainOnly) {
  const auto prepared = preprocess(clustered_corpus(200, 100, 20, 11), 3);
  std::vector<double> train;
  for (const auto& r : prepared.splits.train) train.push_back(r.pkd);
  const Scaler s = fit_scaler(train);
  EXPECT_EQ(s.mean, prepared.scaler.mean);
  EXPECT_EQ(s.std, prepared.scaler.std);
  double val_mean = 0;
  for (const auto& r : prepared.splits.val) {
    EXPECT_EQ(r.pkd_std, prepared.scaler.apply(r.pkd));
    val_mean += r.pkd_std;
  }
  val_mean /= static_cast<double>(prepared.splits.val.size());
  EXPECT_GT(std::abs(val_mean), 1e-6);
}

TEST(Preprocess, DropTally) {
  auto records = clustered_corpus(30, 30, 0, 12);
  records[0].kd_nm.reset();
  records[1].kd_nm = -3.0;
  records[2].kd_nm = 1e-3;
  records[3].kd_nm = 2e9;
  records[4].light_seq = "  ";
  const auto prepared = preprocess(records, 1);
  EXPECT_EQ(prepared.input_records, 30u);
  EXPECT_EQ(prepared.dropped.invalid_kd, 2u);
  EXPECT_EQ(prepared.dropped.kd_out_of_range, 2u);
  EXPECT_EQ(prepared.dropped.rejected_sequence, 1u);
  const auto& s = prepared.splits;
  EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), 25u);
}

TEST(Preprocess, NothingSurvivesIsNoRecords) {
  std::vector<AffinityRecord> recs(3, AffinityRecord{"A", "C", "D", std::nullopt});
  expect_kind(ErrorKind::kNoRecords, [&] { preprocess(recs, 1); });
}

TEST(Preprocess, PkdMatchesTransform) {
  const auto records = clustered_corpus(50, 50, 0, 13);
  const auto prepared = preprocess(records, 1);
  std::multiset<double> expected, got;
  for (const auto& r : records) expected.insert(kd_to_pkd(*r.kd_nm));
  for (const auto* split : {&prepared.splits.train, &prepared.splits.val, &prepared.splits.test}) {
    for (const auto& r : *split) got.insert(r.pkd);
  }
  EXPECT_EQ(expected, got);
}

// CSV ----------------------------------------------------------------------

TEST(Csv, QuotedFieldsAndCustomColumns) {
  TempDir dir("csv");
  testing::write_file(dir.file("in.csv"),
                      "\xEF\xBB\xBFnote,ag,h,l,kd\n"
                      "\"a, b\",ACD,EFG,HIK,12.5\n"
                      "\"say \"\"hi\"\"\",LMN,PQR,STV,\n"
                      "x,WY,AC,DE,abc\r\n");
  CsvColumns cols{"ag", "h", "l", "kd"};
  const auto recs = read_affinity_csv(dir.file("in.csv"), cols);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].antigen_seq, "ACD");
  EXPECT_EQ(recs[0].kd_nm, 12.5);
  EXPECT_FALSE(recs[1].kd_nm.has_value());
  EXPECT_FALSE(recs[2].kd_nm.has_value());
  EXPECT_EQ(recs[2].light_seq, "DE");
}

TEST(Csv, MissingColumnAndRaggedRows) {
  TempDir dir("csv");
  testing::write_file(dir.file("a.csv"), "antigen_seq,heavy_seq,light_seq\nA,C,D\n");
  expect_kind(ErrorKind::kFormat, [&] { read_affinity_csv(dir.file("a.csv")); });
  testing::write_file(dir.file("b.csv"), "antigen_seq,heavy_seq,light_seq,kd_nm\nA,C,D\n");
  expect_kind(ErrorKind::kFormat, [&] { read_affinity_csv(dir.file("b.csv")); });
  expect_kind(ErrorKind::kIo, [&] { read_affinity_csv(dir.file("absent.csv")); });
}

// dataset files ------------------------------------------------------------

TEST(DatasetFiles, RoundTripAndManifest) {
  TempDir dir("ds");
  const auto prepared = preprocess(clustered_corpus(60, 40, 10, 14), 9);
  write_dataset(dir.path().string(), prepared);
  const LoadedDataset loaded = read_dataset(dir.path().string());
  EXPECT_EQ(loaded.splits.train, prepared.splits.train);
  EXPECT_EQ(loaded.splits.val, prepared.splits.val);
  EXPECT_EQ(loaded.splits.test, prepared.splits.test);
  EXPECT_EQ(loaded.scaler.mean, prepared.scaler.mean);
  EXPECT_EQ(loaded.scaler.std, prepared.scaler.std);
  EXPECT_EQ(loaded.splits.seed, 9u);

  const auto manifest = nlohmann::json::parse(testing::read_file(dir.file("manifest.json")));
  EXPECT_EQ(manifest.at("seed"), 9);
  EXPECT_EQ(manifest.at("scaler").at("mean").get<double>(), prepared.scaler.mean);
  EXPECT_EQ(manifest.at("vocabulary").size(), kVocabSize);
  EXPECT_EQ(manifest.at("counts").at("train"), prepared.splits.train.size());
}

TEST(DatasetFiles, ManifestByteIdenticalUnderSeed) {
  TempDir a("ds"), b("ds");
  const auto records = clustered_corpus(80, 50, 10, 15);
  write_dataset(a.path().string(), preprocess(records, 21));
  write_dataset(b.path().string(), preprocess(records, 21));
  for (const char* f : {"manifest.json", "train.rec", "val.rec", "test.rec"}) {
    EXPECT_EQ(testing::read_file(a.file(f)), testing::read_file(b.file(f))) << f;
  }
}

TEST(DatasetFiles, CorruptionIsFormatError) {
  TempDir dir("ds");
  std::vector<CleanRecord> recs = independent_records(3, 16);
  write_records(dir.file("r.rec"), recs);
  EXPECT_EQ(read_records(dir.file("r.rec")), recs);
  std::string bytes = testing::read_file(dir.file("r.rec"));
  testing::write_file(dir.file("trunc.rec"), bytes.substr(0, bytes.size() - 3));
  expect_kind(ErrorKind::kFormat, [&] { read_records(dir.file("trunc.rec")); });
  bytes[0] = 'Z';
  testing::write_file(dir.file("magic.rec"), bytes);
  expect_kind(ErrorKind::kFormat, [&] { read_records(dir.file("magic.rec")); });
}

TEST(SequenceIds, StableAndContentAddressed) {
  const auto a = tokenize("ACDEF");
  EXPECT_EQ(sequence_id("ag-", a), sequence_id("ag-", tokenize("ACDEF")));
  EXPECT_NE(sequence_id("ag-", a), sequence_id("ag-", tokenize("ACDEG")));
  EXPECT_EQ(sequence_id("ag-", a).size(), 3u + 16u);
}

TEST(SplitNames, ParseAndPrint) {
  EXPECT_EQ(parse_split("val"), Split::kVal);
  EXPECT_STREQ(split_name(Split::kTest), "test");
  expect_kind(ErrorKind::kConfig, [] { parse_split("holdout"); });
}

}  // namespace
}  // namespace duadeep::data
