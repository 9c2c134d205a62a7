// include/reid/dataio.h

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

#ifndef REID_DATAIO_H_
#define REID_DATAIO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace reid {

// Elicited speech task of a recording.  `kUnstructured` covers
// interview-style data with no elicited prompt.
enum class Task { kSentence, kReading, kWord, kSmr, kAmr, kVowel, kUnstructured };

std::string_view task_name(Task task);
std::optional<Task> parse_task(std::string_view name);
// All tasks in declaration order.
std::span<const Task> all_tasks();

struct RecordingRecord {
  std::string recording_id;
  std::string speaker_id;
  Task task = Task::kUnstructured;
  std::size_t row_index = 0;

  bool operator==(const RecordingRecord &) const = default;
};

/// Row-major float32 matrix of embeddings, one row per recording.  All
/// values are finite; dim is positive.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t dim, std::size_t rows, std::vector<float> data);

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return rows_; }
  std::span<const float> row(std::size_t i) const;
  Eigen::VectorXd row_vector(std::size_t i) const;
  const std::vector<float> &data() const { return data_; }

  bool operator==(const EmbeddingMatrix &) const = default;

 private:
  std::size_t dim_ = 0;
  std::size_t rows_ = 0;
  std::vector<float> data_;
};

// Manifest CSV with header `recording_id,speaker_id,task,row_index`.
std::vector<RecordingRecord> read_manifest(std::istream &in);
std::vector<RecordingRecord> load_manifest(const std::filesystem::path &path);
void write_manifest(std::ostream &out, std::span<const RecordingRecord> records);
void write_manifest(const std::filesystem::path &path,
                    std::span<const RecordingRecord> records);

// Binary embedding file, little-endian:
//   "VEMB" | u16 version (=1) | u32 dim | u64 rows | rows*dim f32
EmbeddingMatrix read_embeddings(std::istream &in);
EmbeddingMatrix load_embeddings(const std::filesystem::path &path);
void write_embeddings(std::ostream &out, const EmbeddingMatrix &matrix);
void write_embeddings(const std::filesystem::path &path,
                      const EmbeddingMatrix &matrix);

/// Manifest plus matrix with cross-references validated.  Immutable once
/// built; `speakers()` maps each speaker to the manifest indices of its
/// recordings, in manifest order.
class EmbeddingDataset {
 public:
  EmbeddingDataset() = default;

  const std::vector<RecordingRecord> &records() const { return records_; }
  const RecordingRecord &record(std::size_t i) const { return records_.at(i); }
  const EmbeddingMatrix &matrix() const { return matrix_; }
  const std::map<std::string, std::vector<std::size_t>> &speakers() const {
    return speakers_;
  }
  std::size_t size() const { return records_.size(); }
  std::size_t dim() const { return matrix_.dim(); }

  std::optional<std::size_t> find(std::string_view recording_id) const;
  // Embedding of manifest entry i, widened to double.
  Eigen::VectorXd embedding(std::size_t i) const;

 private:
  friend struct DatasetAssembler;
  std::vector<RecordingRecord> records_;
  EmbeddingMatrix matrix_;
  std::map<std::string, std::vector<std::size_t>> speakers_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct AssembledDataset {
  EmbeddingDataset dataset;
  // Matrix rows no record points at.  Allowed so one matrix can back
  // several task-filtered manifests.
  std::vector<std::size_t> orphan_rows;
  std::vector<std::string> warnings;
};

AssembledDataset assemble_dataset(std::vector<RecordingRecord> manifest,
                                  EmbeddingMatrix matrix);

// Convenience: load both files and assemble.
AssembledDataset load_dataset(const std::filesystem::path &manifest_path,
                              const std::filesystem::path &embeddings_path);

// Writes `contents` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path &path,
                       std::string_view contents);

}  // namespace reid

#endif  // REID_DATAIO_H_
