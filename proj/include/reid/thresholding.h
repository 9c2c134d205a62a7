// include/reid/thresholding.h

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

#ifndef REID_THRESHOLDING_H_
#define REID_THRESHOLDING_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "reid/dataio.h"
#include "reid/plda.h"
#include "reid/rng.h"

namespace reid {

struct DcfConfig {
  double c_fa = 1.0;
  double c_fr = 1.0;
  double prior_target = 0.01;

  // C_FA = 1, C_FR = 1, prior = 0.01.
  static DcfConfig default_preset() { return {1.0, 1.0, 0.01}; }
  // C_FA = 10, C_FR = 0.1, prior = 0.001: penalizes false acceptances.
  static DcfConfig strict_preset() { return {10.0, 0.1, 0.001}; }

  void validate() const;
  bool operator==(const DcfConfig &) const = default;
};

struct TrialScores {
  std::vector<double> target;
  std::vector<double> nontarget;
};

struct ErrorRates {
  double far = 0.0;
  double frr = 0.0;
};

struct ThresholdEstimate {
  double threshold = 0.0;
  double criterion_value = 0.0;
  std::size_t n_runs_used = 1;
  // Per-run thresholds, in attempt order (averaged protocol only).
  std::vector<double> run_thresholds;
};

// Accept rule: score >= threshold.  An empty class contributes a rate of 0.
ErrorRates rates_at(const TrialScores &scores, double threshold);

// c_fr * frr * prior + c_fa * far * (1 - prior), unnormalized.
double dcf(double far, double frr, const DcfConfig &config);

// Candidate cutoffs in ascending order: one sentinel below the smallest
// score, the midpoints of consecutive distinct sorted scores, and one
// sentinel above the largest.
std::vector<double> candidate_thresholds(const TrialScores &scores);

// Global minimum of dcf over the candidates; ties go to the larger cutoff.
ThresholdEstimate min_dcf_threshold(const TrialScores &scores, const DcfConfig &config);

// Candidate minimizing |far - frr|; criterion is (far + frr) / 2 there.
// Ties go to the larger cutoff.
ThresholdEstimate eer_threshold(const TrialScores &scores);

struct ThresholdProtocol {
  std::size_t subset_size = 100;
  std::size_t n_runs = 100;
  // Cap on total attempts when none of the first n_runs attempts is usable;
  // 0 means 10 * n_runs.
  std::size_t max_attempts = 0;

  void validate() const;
};

// Draws the two speaker subsets of one run as indices into [0, n_speakers).
using SubsetSampler = std::function<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>(
    std::size_t n_speakers, std::size_t subset_size, Rng &rng)>;

// Two independent uniform draws without replacement.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> uniform_subsets(
    std::size_t n_speakers, std::size_t subset_size, Rng &rng);

/// Subset-averaged minDCF threshold.
///
/// Each attempt draws two subsets of `subset_size` speakers, picks one
/// recording per speaker per subset (two distinct recordings when a shared
/// speaker has more than one), scores every cross-subset pair and labels it
/// target iff the speakers match.  Attempts whose subsets share no speaker
/// are discarded.  n_runs attempts are made; if none was usable, attempting
/// continues up to max_attempts before failing with CalibrationError.  The
/// result is the mean of the per-run minDCF thresholds.  Attempt i draws
/// from its own substream of `seed`, so results do not depend on the order
/// runs are evaluated in.
ThresholdEstimate averaged_threshold(const GroupedVectors &known, const PldaModel &model,
                                     const DcfConfig &config, const ThresholdProtocol &protocol,
                                     std::uint64_t seed,
                                     const SubsetSampler &sampler = uniform_subsets);

// Same protocol over every speaker of a dataset; raw embeddings are
// preprocessed with `params` first.
ThresholdEstimate averaged_threshold(const EmbeddingDataset &known, const PldaModel &model,
                                     const PreprocessParams &params, const DcfConfig &config,
                                     const ThresholdProtocol &protocol, std::uint64_t seed,
                                     const SubsetSampler &sampler = uniform_subsets);

// Order-independent arithmetic mean (sums in sorted order).
double stable_mean(std::vector<double> values);

}  // namespace reid

#endif  // REID_THRESHOLDING_H_
