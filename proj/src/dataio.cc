// src/dataio.cc

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

#include "reid/dataio.h"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "reid/error.h"
#include "byte_io.h"

namespace reid {

using internal::get_le;
using internal::put_le;

namespace {

constexpr std::array<Task, 7> kAllTasks = {
    Task::kSentence, Task::kReading, Task::kWord,        Task::kSmr,
    Task::kAmr,      Task::kVowel,   Task::kUnstructured};

constexpr std::string_view kManifestHeader =
    "recording_id,speaker_id,task,row_index";
constexpr char kEmbeddingMagic[4] = {'V', 'E', 'M', 'B'};
constexpr std::uint16_t kEmbeddingVersion = 1;
constexpr std::size_t kEmbeddingHeaderBytes = 4 + 2 + 4 + 8;

// Splits one CSV line.  Supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line,
                                        std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false, field_was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      if (!cur.empty() || field_was_quoted)
        throw ParseError(line_no, "stray quote inside unquoted field");
      quoted = field_was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      field_was_quoted = false;
    } else {
      if (field_was_quoted)
        throw ParseError(line_no, "text after closing quote");
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos)
    return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void strip_cr(std::string &line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::ifstream open_input(const std::filesystem::path &path,
                         std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kSentence: return "sentence";
    case Task::kReading: return "reading";
    case Task::kWord: return "word";
    case Task::kSmr: return "smr";
    case Task::kAmr: return "amr";
    case Task::kVowel: return "vowel";
    case Task::kUnstructured: return "unstructured";
  }
  return "unstructured";
}

std::optional<Task> parse_task(std::string_view name) {
  for (Task t : kAllTasks)
    if (task_name(t) == name) return t;
  return std::nullopt;
}

std::span<const Task> all_tasks() { return kAllTasks; }

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim, std::size_t rows,
                                 std::vector<float> data)
    : dim_(dim), rows_(rows), data_(std::move(data)) {
  if (dim_ == 0) throw ValidationError("embedding dim must be positive");
  if (data_.size() != dim_ * rows_)
    throw ValidationError("embedding data length " +
                          std::to_string(data_.size()) + " != dim*rows = " +
                          std::to_string(dim_ * rows_));
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (!std::isfinite(data_[i]))
      throw ValidationError("non-finite embedding value at row " +
                            std::to_string(i / dim_) + ", column " +
                            std::to_string(i % dim_));
}

std::span<const float> EmbeddingMatrix::row(std::size_t i) const {
  if (i >= rows_)
    throw std::out_of_range("embedding row " + std::to_string(i) +
                            " out of range");
  return std::span<const float>(data_).subspan(i * dim_, dim_);
}

Eigen::VectorXd EmbeddingMatrix::row_vector(std::size_t i) const {
  auto r = row(i);
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim_));
  for (std::size_t k = 0; k < dim_; ++k) v[k] = r[k];
  return v;
}

std::vector<RecordingRecord> read_manifest(std::istream &in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing manifest header");
  strip_cr(line);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
    line.erase(0, 3);
  if (line != kManifestHeader)
    throw ParseError(1, "expected header '" + std::string(kManifestHeader) +
                            "', got '" + line + "'");

  std::vector<RecordingRecord> records;
  std::unordered_set<std::string> ids;
  std::unordered_set<std::size_t> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_csv_line(line, line_no);
    if (fields.size() != 4)
      throw ParseError(line_no, "expected 4 fields, got " +
                                    std::to_string(fields.size()));
    RecordingRecord rec;
    rec.recording_id = std::move(fields[0]);
    rec.speaker_id = std::move(fields[1]);
    if (rec.recording_id.empty())
      throw ParseError(line_no, "missing recording_id");
    if (rec.speaker_id.empty()) throw ParseError(line_no, "missing speaker_id");
    auto task = parse_task(fields[2]);
    if (!task) throw ParseError(line_no, "unknown task label '" + fields[2] + "'");
    rec.task = *task;

    const std::string &ri = fields[3];
    if (!ri.empty() && ri[0] == '-')
      throw ParseError(line_no, "negative row_index '" + ri + "'");
    std::uint64_t row = 0;
    auto [ptr, ec] = std::from_chars(ri.data(), ri.data() + ri.size(), row);
    if (ri.empty() || ec != std::errc() || ptr != ri.data() + ri.size())
      throw ParseError(line_no, "row_index '" + ri + "' is not a non-negative integer");
    rec.row_index = static_cast<std::size_t>(row);

    if (!ids.insert(rec.recording_id).second)
      throw ParseError(line_no, "duplicate recording_id '" + rec.recording_id + "'");
    if (!rows.insert(rec.row_index).second)
      throw ParseError(line_no, "duplicate row_index " + ri);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<RecordingRecord> load_manifest(const std::filesystem::path &path) {
  auto in = open_input(path);
  try {
    return read_manifest(in);
  } catch (const ParseError &e) {
    throw ParseError(e.line(), path.string() + ": " + e.detail());
  }
}

void write_manifest(std::ostream &out, std::span<const RecordingRecord> records) {
  out << kManifestHeader << '\n';
  for (const auto &r : records)
    out << csv_escape(r.recording_id) << ',' << csv_escape(r.speaker_id) << ','
        << task_name(r.task) << ',' << r.row_index << '\n';
}

void write_manifest(const std::filesystem::path &path,
                    std::span<const RecordingRecord> records) {
  std::ostringstream os;
  write_manifest(os, records);
  write_file_atomic(path, os.str());
}

EmbeddingMatrix read_embeddings(std::istream &in) {
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < kEmbeddingHeaderBytes)
    throw ValidationError("embedding file truncated: header needs " +
                          std::to_string(kEmbeddingHeaderBytes) +
                          " bytes, got " + std::to_string(bytes.size()));
  if (std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0)
    throw ValidationError("bad magic in embedding file (expected VEMB)");
  auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  auto version = get_le<std::uint16_t>(p + 4);
  if (version != kEmbeddingVersion)
    throw ValidationError("unsupported embedding file version " +
                          std::to_string(version));
  auto dim = get_le<std::uint32_t>(p + 6);
  auto rows = get_le<std::uint64_t>(p + 10);
  if (dim == 0) throw ValidationError("embedding file declares dim 0");

  const std::uint64_t payload = bytes.size() - kEmbeddingHeaderBytes;
  if (rows > payload / 4 / dim + 1 ||
      payload != static_cast<std::uint64_t>(dim) * rows * 4)
    throw ValidationError(
        (payload < static_cast<std::uint64_t>(dim) * rows * 4
             ? std::string("embedding payload truncated")
             : std::string("embedding payload has trailing bytes")) +
        ": expected " + std::to_string(static_cast<std::uint64_t>(dim) * rows * 4) +
        " bytes, got " + std::to_string(payload));

  std::vector<float> data(static_cast<std::size_t>(dim * rows));
  const unsigned char *q = p + kEmbeddingHeaderBytes;
  for (std::size_t i = 0; i < data.size(); ++i, q += 4)
    data[i] = std::bit_cast<float>(get_le<std::uint32_t>(q));
  return EmbeddingMatrix(dim, static_cast<std::size_t>(rows), std::move(data));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path &path) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  try {
    return read_embeddings(in);
  } catch (const ValidationError &e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

namespace {
std::string encode_embeddings(const EmbeddingMatrix &m) {
  std::string buf;
  buf.reserve(kEmbeddingHeaderBytes + m.data().size() * 4);
  buf.append(kEmbeddingMagic, 4);
  put_le<std::uint16_t>(buf, kEmbeddingVersion);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(m.dim()));
  put_le<std::uint64_t>(buf, m.rows());
  for (float f : m.data()) put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(f));
  return buf;
}
}  // namespace

void write_embeddings(std::ostream &out, const EmbeddingMatrix &matrix) {
  auto buf = encode_embeddings(matrix);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_embeddings(const std::filesystem::path &path,
                      const EmbeddingMatrix &matrix) {
  write_file_atomic(path, encode_embeddings(matrix));
}

std::optional<std::size_t> EmbeddingDataset::find(
    std::string_view recording_id) const {
  auto it = by_id_.find(std::string(recording_id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd EmbeddingDataset::embedding(std::size_t i) const {
  return matrix_.row_vector(records_.at(i).row_index);
}

struct DatasetAssembler {
  static AssembledDataset run(std::vector<RecordingRecord> manifest,
                              EmbeddingMatrix matrix) {
    AssembledDataset out;
    EmbeddingDataset &ds = out.dataset;
    std::vector<bool> used(matrix.rows(), false);
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      const auto &r = manifest[i];
      if (r.row_index >= matrix.rows())
        throw ValidationError("recording '" + r.recording_id + "' has row_index " +
                              std::to_string(r.row_index) + " but matrix has " +
                              std::to_string(matrix.rows()) + " rows");
      if (used[r.row_index])
        throw ValidationError("row_index " + std::to_string(r.row_index) +
                              " referenced twice");
      used[r.row_index] = true;
      if (!ds.by_id_.emplace(r.recording_id, i).second)
        throw ValidationError("duplicate recording_id '" + r.recording_id + "'");
      ds.speakers_[r.speaker_id].push_back(i);
    }
    for (std::size_t row = 0; row < used.size(); ++row)
      if (!used[row]) out.orphan_rows.push_back(row);
    if (!out.orphan_rows.empty()) {
      std::string msg = std::to_string(out.orphan_rows.size()) +
                        " matrix row(s) not referenced by the manifest:";
      std::size_t shown = 0;
      for (std::size_t row : out.orphan_rows) {
        if (++shown > 20) {
          msg += " ...";
          break;
        }
        msg += " " + std::to_string(row);
      }
      out.warnings.push_back(std::move(msg));
    }
    ds.records_ = std::move(manifest);
    ds.matrix_ = std::move(matrix);
    return out;
  }
};

AssembledDataset assemble_dataset(std::vector<RecordingRecord> manifest,
                                  EmbeddingMatrix matrix) {
  return DatasetAssembler::run(std::move(manifest), std::move(matrix));
}

AssembledDataset load_dataset(const std::filesystem::path &manifest_path,
                              const std::filesystem::path &embeddings_path) {
  return assemble_dataset(load_manifest(manifest_path),
                          load_embeddings(embeddings_path));
}

void write_file_atomic(const std::filesystem::path &path,
                       std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::out | std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " +
                             path.string() + ": " + ec.message());
  }
}

}  // namespace reid
