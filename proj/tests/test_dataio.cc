// tests/test_dataio.cc

// Copyright 2026  The reid-risk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cstring>
#include <set>
#include <sstream>

#include "doctest.h"
#include "reid/dataio.h"
#include "reid/error.h"
#include "test_util.h"

using namespace reid;
using reid::testing::scratch_dir;
using reid::testing::slurp;
using reid::testing::spit;

namespace {

const char *kHeader = "recording_id,speaker_id,task,row_index\n";

std::size_t parse_error_line(const std::string &csv) {
  std::istringstream in(csv);
  try {
    read_manifest(in);
  } catch (const ParseError &e) {
    return e.line();
  }
  return 0;
}

EmbeddingMatrix random_matrix(std::size_t dim, std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  std::vector<float> data(dim * rows);
  for (auto &v : data) v = g(rng);
  return EmbeddingMatrix(dim, rows, std::move(data));
}

// Byte layout built by hand, independent of the writer.
std::string hand_encode(const EmbeddingMatrix &m) {
  std::string s = "VEMB";
  auto le = [&](std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  le(1, 2);
  le(m.dim(), 4);
  le(m.rows(), 8);
  for (float f : m.data()) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    le(u, 4);
  }
  return s;
}

}  // namespace

TEST_CASE("task names round-trip") {
  for (Task t : all_tasks()) CHECK(parse_task(task_name(t)) == t);
  CHECK(all_tasks().size() == 7);
  CHECK_FALSE(parse_task("Sentence").has_value());
  CHECK(task_name(Task::kSmr) == "smr");
}

TEST_CASE("header-only manifest is empty") {
  std::istringstream in(kHeader);
  CHECK(read_manifest(in).empty());
}

TEST_CASE("manifest parse errors carry line numbers") {
  std::string h = kHeader;
  CHECK(parse_error_line(h + "r1,s1,vowel,0\nr1,s2,vowel,1\n") == 3);
  CHECK(parse_error_line(h + "r1,s1,humming,0\n") == 2);
  CHECK(parse_error_line(h + "r1,s1,vowel,0\nr2,s1,vowel,-1\n") == 3);
  CHECK(parse_error_line(h + "r1,s1,vowel,1.5\n") == 2);
  CHECK(parse_error_line(h + "r1,s1,vowel,x\n") == 2);
  CHECK(parse_error_line(h + "r1,s1,vowel\n") == 2);
  CHECK(parse_error_line(h + "r1,s1,vowel,0,extra\n") == 2);
  CHECK(parse_error_line(h + ",s1,vowel,0\n") == 2);
  CHECK(parse_error_line(h + "r1,s1,vowel,0\nr2,s1,vowel,0\n") == 3);
  CHECK(parse_error_line(h + "\"r1,s1,vowel,0\n") == 2);
  CHECK(parse_error_line("id,speaker,task,row\n") == 1);
  CHECK(parse_error_line("") == 1);
}

TEST_CASE("manifest accepts quotes, CRLF, BOM and blank lines") {
  std::istringstream in("\xEF\xBB\xBFrecording_id,speaker_id,task,row_index\r\n"
                        "\"a,1\",\"s \"\"x\"\"\",sentence,0\r\n\r\nb,s2,unstructured,3\r\n");
  auto recs = read_manifest(in);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].recording_id == "a,1");
  CHECK(recs[0].speaker_id == "s \"x\"");
  CHECK(recs[0].task == Task::kSentence);
  CHECK(recs[1].row_index == 3);
}

TEST_CASE("manifest write/read round trip") {
  std::vector<RecordingRecord> recs = {{"r,1", "spk \"a\"", Task::kVowel, 2},
                                       {"r2", "spkb", Task::kAmr, 0},
                                       {"r3", "spkb", Task::kReading, 1}};
  std::ostringstream out;
  write_manifest(out, recs);
  std::istringstream in(out.str());
  CHECK(read_manifest(in) == recs);
}

TEST_CASE("load_manifest prefixes the path and keeps the line") {
  auto dir = scratch_dir("dataio_manifest");
  spit(dir / "m.csv", std::string(kHeader) + "r1,s1,vowel,0\nr1,s1,vowel,1\n");
  try {
    load_manifest(dir / "m.csv");
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("m.csv") != std::string::npos);
  }
  CHECK_THROWS_AS(load_manifest(dir / "missing.csv"), ValidationError);
}

TEST_CASE("vowel-task shaped manifest: 1734 rows over 812 speakers") {
  std::ostringstream csv;
  csv << kHeader;
  std::size_t row = 0;
  for (std::size_t s = 0; s < 812; ++s) {
    const std::size_t n = s < 110 ? 3 : 2;  // 110*3 + 702*2 = 1734
    for (std::size_t k = 0; k < n; ++k, ++row)
      csv << "rec" << row << ",spk" << s << ",vowel," << row << "\n";
  }
  std::istringstream in(csv.str());
  auto recs = read_manifest(in);
  CHECK(recs.size() == 1734);
  auto ds = assemble_dataset(recs, EmbeddingMatrix(4, 1734, std::vector<float>(4 * 1734, 0.f)));
  CHECK(ds.dataset.speakers().size() == 812);
  CHECK(ds.warnings.empty());
}

TEST_CASE("embedding matrix validation") {
  CHECK_THROWS_AS(EmbeddingMatrix(0, 0, {}), ValidationError);
  CHECK_THROWS_AS(EmbeddingMatrix(2, 2, {1, 2, 3}), ValidationError);
  CHECK_THROWS_AS(EmbeddingMatrix(1, 1, {std::numeric_limits<float>::quiet_NaN()}),
                  ValidationError);
  CHECK_THROWS_AS(EmbeddingMatrix(1, 1, {std::numeric_limits<float>::infinity()}),
                  ValidationError);
  EmbeddingMatrix m(2, 2, {1, 2, 3, 4});
  CHECK(m.row(1)[0] == 3.f);
  CHECK(m.row_vector(0)(1) == 2.0);
}

TEST_CASE("empty embedding file of width 192") {
  EmbeddingMatrix m(192, 0, {});
  std::stringstream buf;
  write_embeddings(buf, m);
  CHECK(buf.str().size() == 18);
  auto back = read_embeddings(buf);
  CHECK(back.dim() == 192);
  CHECK(back.rows() == 0);
}

TEST_CASE("embedding file layout and bit-exact round trip") {
  auto m = random_matrix(192, 2, 11);
  std::stringstream buf;
  write_embeddings(buf, m);
  CHECK(buf.str() == hand_encode(m));
  auto back = read_embeddings(buf);
  REQUIRE(back.data().size() == m.data().size());
  CHECK(std::memcmp(back.data().data(), m.data().data(), m.data().size() * 4) == 0);

  auto dir = scratch_dir("dataio_emb");
  write_embeddings(dir / "e.vemb", m);
  CHECK(slurp(dir / "e.vemb") == hand_encode(m));
  CHECK(load_embeddings(dir / "e.vemb") == m);
}

TEST_CASE("round trip property over shapes") {
  for (std::size_t dim : {1u, 3u, 17u})
    for (std::size_t rows : {0u, 1u, 5u}) {
      auto m = random_matrix(dim, rows, dim * 100 + rows);
      std::stringstream buf;
      write_embeddings(buf, m);
      CHECK(read_embeddings(buf) == m);
    }
}

TEST_CASE("malformed embedding files") {
  auto m = random_matrix(4, 3, 5);
  const std::string good = hand_encode(m);

  std::istringstream short_payload(good.substr(0, good.size() - 4));
  try {
    read_embeddings(short_payload);
    FAIL("expected truncation error");
  } catch (const ValidationError &e) {
    const std::string msg = e.what();
    CHECK(msg.find("truncated") != std::string::npos);
    CHECK(msg.find("expected 48 bytes, got 44") != std::string::npos);
  }

  std::istringstream trailing(good + "x");
  CHECK_THROWS_WITH_AS(read_embeddings(trailing), doctest::Contains("trailing"), ValidationError);

  std::string bad = good;
  bad[0] = 'X';
  std::istringstream bad_magic(bad);
  CHECK_THROWS_WITH_AS(read_embeddings(bad_magic), doctest::Contains("magic"), ValidationError);

  bad = good;
  bad[4] = 2;
  std::istringstream bad_version(bad);
  CHECK_THROWS_WITH_AS(read_embeddings(bad_version), doctest::Contains("version"),
                       ValidationError);

  std::istringstream header_only(good.substr(0, 10));
  CHECK_THROWS_AS(read_embeddings(header_only), ValidationError);

  bad = good;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bad.data() + 18, &nan, 4);
  std::istringstream non_finite(bad);
  CHECK_THROWS_WITH_AS(read_embeddings(non_finite), doctest::Contains("non-finite"),
                       ValidationError);

  // A huge declared row count must not allocate.
  bad = good;
  for (int i = 10; i < 18; ++i) bad[static_cast<std::size_t>(i)] = '\xff';
  std::istringstream huge(bad);
  CHECK_THROWS_AS(read_embeddings(huge), ValidationError);
}

TEST_CASE("assemble_dataset cross-references") {
  std::vector<RecordingRecord> three = {{"a", "s1", Task::kVowel, 0},
                                        {"b", "s1", Task::kWord, 1},
                                        {"c", "s2", Task::kVowel, 2}};
  auto ok = assemble_dataset(three, EmbeddingMatrix(2, 3, {0, 1, 2, 3, 4, 5}));
  CHECK(ok.dataset.size() == 3);
  CHECK(ok.warnings.empty());
  CHECK(ok.dataset.find("c") == 2u);
  CHECK_FALSE(ok.dataset.find("zz").has_value());
  CHECK(ok.dataset.embedding(2)(1) == 5.0);
  CHECK(ok.dataset.speakers().at("s1") == std::vector<std::size_t>{0, 1});

  auto bad = three;
  bad[2].row_index = 5;
  CHECK_THROWS_WITH_AS(assemble_dataset(bad, EmbeddingMatrix(2, 3, std::vector<float>(6))),
                       doctest::Contains("row_index 5"), ValidationError);

  std::vector<RecordingRecord> two = {{"a", "s1", Task::kVowel, 3}, {"b", "s2", Task::kVowel, 1}};
  auto orphan = assemble_dataset(two, EmbeddingMatrix(1, 4, {0, 1, 2, 3}));
  CHECK(orphan.orphan_rows == std::vector<std::size_t>{0, 2});
  REQUIRE(orphan.warnings.size() == 1);
  CHECK(orphan.warnings[0].find("2 matrix row") != std::string::npos);
  CHECK(orphan.dataset.embedding(0)(0) == 3.0);
}

TEST_CASE("speaker map partitions the manifest") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<RecordingRecord> recs;
    for (std::size_t i = 0; i < n; ++i)
      recs.push_back({"r" + std::to_string(i), "s" + std::to_string(rng() % 7),
                      all_tasks()[rng() % 7], n - 1 - i});
    auto ds = assemble_dataset(recs, EmbeddingMatrix(1, n, std::vector<float>(n))).dataset;
    CHECK(ds.size() == n);
    std::multiset<std::size_t> seen;
    for (const auto &[spk, idx] : ds.speakers()) {
      CHECK_FALSE(idx.empty());
      for (std::size_t i : idx) {
        CHECK(ds.record(i).speaker_id == spk);
        seen.insert(i);
      }
    }
    CHECK(seen.size() == n);
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == n);
  }
}

TEST_CASE("load_dataset from files") {
  auto dir = scratch_dir("dataio_load");
  std::vector<RecordingRecord> recs = {{"a", "s1", Task::kVowel, 1}, {"b", "s2", Task::kVowel, 0}};
  write_manifest(dir / "m.csv", recs);
  write_embeddings(dir / "e.vemb", EmbeddingMatrix(2, 2, {1, 2, 3, 4}));
  auto ds = load_dataset(dir / "m.csv", dir / "e.vemb");
  CHECK(ds.dataset.embedding(0)(0) == 3.0);
  CHECK(load_manifest(dir / "m.csv") == recs);
  std::error_code ec;
  for (const auto &entry : std::filesystem::directory_iterator(dir, ec))
    CHECK(entry.path().extension() != ".tmp");
}
