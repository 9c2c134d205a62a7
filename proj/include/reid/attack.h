// include/reid/attack.h

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

#ifndef REID_ATTACK_H_
#define REID_ATTACK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reid/dataio.h"
#include "reid/metrics.h"
#include "reid/plda.h"
#include "reid/rng.h"
#include "reid/thresholding.h"

namespace reid {

struct SplitSpec {
  std::size_t n_known = 0;
  std::size_t n_unknown = 0;
  std::size_t n_overlap = 0;
  // Unset filter: every task is eligible.
  std::optional<std::set<Task>> known_task_filter;
  std::optional<std::set<Task>> unknown_task_filter;
  // Each unknown speaker contributes the average of all its
  // unknown-eligible recordings instead of one random recording.
  bool pool_unknown_tasks = false;
  // Pins the unknown-only population to these speakers; only the overlap
  // and known-only members are sampled.  Requires
  // n_unknown == pool size + n_overlap.
  std::optional<std::vector<std::string>> fixed_unknown_pool;
  std::uint64_t seed = 0;

  void validate() const;
};

// One de-identified probe: a single recording, or (pooled) the average of
// several recordings of the same speaker.
struct Probe {
  std::string speaker_id;
  std::vector<std::size_t> records;  // manifest indices
  bool pooled = false;
};

struct ExperimentSplit {
  // Known speakers, sorted by id, with every eligible recording minus any
  // withheld probe recordings.
  std::vector<std::pair<std::string, std::vector<std::size_t>>> known;
  // Exactly one probe per unknown speaker, sorted by speaker id.
  std::vector<Probe> unknown;
  std::set<std::string> overlap_ids;

  // Throws std::logic_error if a structural invariant does not hold:
  // unknown-only speakers absent from the known set, overlap = known ∩
  // unknown, withheld probe recordings absent from the enrollment lists.
  void check_invariants() const;
};

// Overlap speakers are drawn first, then known-only, then unknown-only
// speakers, each uniformly among the eligible candidates.  Probe
// recordings are uniform among a speaker's eligible recordings.
ExperimentSplit sample_split(const EmbeddingDataset &dataset, const SplitSpec &spec, Rng &rng);
ExperimentSplit sample_split(const EmbeddingDataset &dataset, const SplitSpec &spec);

struct AttackVariant {
  enum class Kind { kAll, kRank1, kTopN };
  Kind kind = Kind::kAll;
  std::size_t n = 0;  // kTopN only

  static AttackVariant all() { return {}; }
  static AttackVariant rank1() { return {Kind::kRank1, 0}; }
  static AttackVariant top_n(std::size_t n) { return {Kind::kTopN, n}; }
  // "all", "rank1" or "topn:N".
  static AttackVariant parse(std::string_view text);
  std::string name() const;

  bool operator==(const AttackVariant &) const = default;
};

struct MatchRecord {
  std::size_t probe_index = 0;
  std::size_t known_index = 0;
  std::string probe_speaker;
  std::string matched_known_speaker;
  double score = 0.0;
  bool is_true = false;
};

struct AttackResult {
  std::vector<MatchRecord> matches;
  std::size_t n_known = 0;
  std::size_t n_unknown = 0;
  std::size_t n_overlap = 0;
  std::size_t n_comparisons = 0;
  double threshold = 0.0;
  AttackVariant variant;
};

// Full known x probe score matrix of a split.
struct AttackScores {
  std::vector<std::string> known_ids;
  std::vector<std::string> probe_ids;
  Eigen::MatrixXd scores;  // known x probe
  std::size_t n_overlap = 0;
};

// Enrolls every known speaker on its known recordings, preprocesses every
// probe (pooled probes average the preprocessed recordings) and scores all
// pairs.
AttackScores score_split(const EmbeddingDataset &dataset, const PldaModel &model,
                         const PreprocessParams &preprocess, const ExperimentSplit &split,
                         unsigned threads = 1);

// Accepts every pair with score >= threshold, then applies the variant:
// rank1 keeps the best accepted match per probe, topN(n) the n best accepted
// matches overall.  Ties go to the lower (probe, known) index.  all and
// rank1 results are ordered by (probe, known); topN by descending score.
AttackResult select_matches(const AttackScores &scores, double threshold, AttackVariant variant);

AttackResult run_attack(const EmbeddingDataset &dataset, const PldaModel &model,
                        const PreprocessParams &preprocess, double threshold,
                        const ExperimentSplit &split, AttackVariant variant,
                        unsigned threads = 1);

struct TrialCounts {
  std::size_t ta = 0;
  std::size_t fa = 0;
  std::size_t n_target_comparisons = 0;
  std::size_t n_nontarget_comparisons = 0;
};

TrialCounts count_outcomes(const AttackResult &result);

// --- sweeps ---------------------------------------------------------------

enum class SweepAxis { kKnown, kUnknown, kBoth };
std::string_view sweep_axis_name(SweepAxis axis);
std::optional<SweepAxis> parse_sweep_axis(std::string_view name);

struct SweepPoint {
  std::size_t n_known = 0;
  std::size_t n_unknown = 0;
};

// kKnown varies n_known over `sizes` with the template's n_unknown; kUnknown
// the reverse; kBoth sets both to each size.
std::vector<SweepPoint> make_sweep_points(SweepAxis axis, std::span<const std::size_t> sizes,
                                          const SplitSpec &split_template);

struct SweepConfig {
  SplitSpec split_template;  // overlap, filters, pooling, fixed pool
  std::vector<SweepPoint> points;
  // Overlap follows the unknown set size at every point.
  bool full_overlap = false;
  std::size_t n_splits = 1;
  ThresholdProtocol protocol;
  DcfConfig dcf = DcfConfig::strict_preset();
  PldaConfig plda;
  bool length_normalize = true;
  AttackVariant variant;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;

  void validate() const;
};

// Everything one run of a sweep is built from.
struct PreparedRun {
  SweepPoint point;
  std::size_t point_index = 0;
  std::size_t split_index = 0;
  std::uint64_t seed = 0;
  SplitSpec spec;
  ExperimentSplit split;
  PreprocessParams preprocess;
  PldaModel model;
  ThresholdEstimate threshold;
};

// Samples the split for `spec` (seeded with spec.seed), fits preprocessing
// and PLDA on the known recordings and calibrates the averaged threshold on
// the known set.
PreparedRun prepare_run(const EmbeddingDataset &dataset, const SplitSpec &spec,
                        const SweepConfig &config);

// Seed of run (point, split) under a master seed.
std::uint64_t run_seed(std::uint64_t master_seed, std::size_t point, std::size_t split);

using RunObserver =
    std::function<void(const PreparedRun &, const AttackScores &, const AttackResult &)>;

// One row per (point, split) in that order.  Rows are deterministic given
// config.master_seed regardless of config.threads.  The observer, if any,
// sees each run once; with threads > 1 calls are serialized but unordered.
std::vector<RunRow> run_sweep(const EmbeddingDataset &dataset, const SweepConfig &config,
                              const RunObserver &observer = {});

}  // namespace reid

#endif  // REID_ATTACK_H_
