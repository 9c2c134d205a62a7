// src/thresholding.cc

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

#include "reid/thresholding.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "reid/error.h"

namespace reid {

namespace {

void check_finite(const std::vector<double> &v, const char *what) {
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError(std::string(what) + " contains non-finite scores");
}

// Sorted copies plus the shared candidate list.
struct SweepInput {
  std::vector<double> target, nontarget, candidates;
};

SweepInput prepare(const TrialScores &scores) {
  if (scores.target.empty() || scores.nontarget.empty())
    throw ValidationError("threshold selection needs nonempty target and nontarget scores");
  check_finite(scores.target, "target");
  check_finite(scores.nontarget, "nontarget");
  SweepInput in{scores.target, scores.nontarget, candidate_thresholds(scores)};
  std::sort(in.target.begin(), in.target.end());
  std::sort(in.nontarget.begin(), in.nontarget.end());
  return in;
}

// Calls fn(threshold, far, frr) for each candidate in ascending order.
template <typename Fn>
void sweep(const SweepInput &in, Fn &&fn) {
  const double n_t = static_cast<double>(in.target.size());
  const double n_n = static_cast<double>(in.nontarget.size());
  std::size_t t_below = 0, n_below = 0;
  for (double thr : in.candidates) {
    while (t_below < in.target.size() && in.target[t_below] < thr) ++t_below;
    while (n_below < in.nontarget.size() && in.nontarget[n_below] < thr) ++n_below;
    const double far = static_cast<double>(in.nontarget.size() - n_below) / n_n;
    const double frr = static_cast<double>(t_below) / n_t;
    fn(thr, far, frr);
  }
}

}  // namespace

void DcfConfig::validate() const {
  if (!(c_fa > 0.0) || !std::isfinite(c_fa)) throw ValidationError("c_fa must be positive");
  if (!(c_fr > 0.0) || !std::isfinite(c_fr)) throw ValidationError("c_fr must be positive");
  if (!(prior_target > 0.0 && prior_target < 1.0))
    throw ValidationError("prior_target must lie in (0, 1)");
}

void ThresholdProtocol::validate() const {
  if (subset_size == 0) throw ValidationError("subset_size must be positive");
  if (n_runs == 0) throw ValidationError("n_runs must be positive");
  if (max_attempts != 0 && max_attempts < n_runs)
    throw ValidationError("max_attempts must be >= n_runs");
}

ErrorRates rates_at(const TrialScores &scores, double threshold) {
  if (scores.target.empty() && scores.nontarget.empty())
    throw ValidationError("rates_at needs at least one score");
  ErrorRates r;
  if (!scores.nontarget.empty()) {
    auto fa = std::count_if(scores.nontarget.begin(), scores.nontarget.end(),
                            [&](double s) { return s >= threshold; });
    r.far = static_cast<double>(fa) / static_cast<double>(scores.nontarget.size());
  }
  if (!scores.target.empty()) {
    auto fr = std::count_if(scores.target.begin(), scores.target.end(),
                            [&](double s) { return s < threshold; });
    r.frr = static_cast<double>(fr) / static_cast<double>(scores.target.size());
  }
  return r;
}

double dcf(double far, double frr, const DcfConfig &config) {
  return config.c_fr * frr * config.prior_target +
         config.c_fa * far * (1.0 - config.prior_target);
}

std::vector<double> candidate_thresholds(const TrialScores &scores) {
  std::vector<double> all;
  all.reserve(scores.target.size() + scores.nontarget.size());
  all.insert(all.end(), scores.target.begin(), scores.target.end());
  all.insert(all.end(), scores.nontarget.begin(), scores.nontarget.end());
  if (all.empty()) return {};
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> cand;
  cand.reserve(all.size() + 1);
  cand.push_back(all.front() - (1.0 + std::abs(all.front())));
  for (std::size_t i = 0; i + 1 < all.size(); ++i) cand.push_back(0.5 * (all[i] + all[i + 1]));
  cand.push_back(all.back() + (1.0 + std::abs(all.back())));
  return cand;
}

ThresholdEstimate min_dcf_threshold(const TrialScores &scores, const DcfConfig &config) {
  config.validate();
  const SweepInput in = prepare(scores);
  ThresholdEstimate best;
  best.criterion_value = std::numeric_limits<double>::infinity();
  sweep(in, [&](double thr, double far, double frr) {
    const double c = dcf(far, frr, config);
    if (c <= best.criterion_value) {
      best.criterion_value = c;
      best.threshold = thr;
    }
  });
  return best;
}

ThresholdEstimate eer_threshold(const TrialScores &scores) {
  const SweepInput in = prepare(scores);
  ThresholdEstimate best;
  double best_gap = std::numeric_limits<double>::infinity();
  sweep(in, [&](double thr, double far, double frr) {
    const double gap = std::abs(far - frr);
    if (gap <= best_gap) {
      best_gap = gap;
      best.threshold = thr;
      best.criterion_value = 0.5 * (far + frr);
    }
  });
  return best;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> uniform_subsets(
    std::size_t n_speakers, std::size_t subset_size, Rng &rng) {
  if (subset_size > n_speakers)
    throw ValidationError("subset_size " + std::to_string(subset_size) + " exceeds " +
                          std::to_string(n_speakers) + " known speakers");
  auto draw = [&] {
    std::vector<std::size_t> idx(n_speakers);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < subset_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n_speakers - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(subset_size);
    return idx;
  };
  auto a = draw();
  auto b = draw();
  return {std::move(a), std::move(b)};
}

double stable_mean(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

ThresholdEstimate averaged_threshold(const GroupedVectors &known, const PldaModel &model,
                                     const DcfConfig &config, const ThresholdProtocol &protocol,
                                     std::uint64_t seed, const SubsetSampler &sampler) {
  config.validate();
  protocol.validate();
  const std::size_t n_spk = known.size();
  if (n_spk < protocol.subset_size)
    throw ValidationError("known set has " + std::to_string(n_spk) +
                          " speakers, fewer than subset_size " +
                          std::to_string(protocol.subset_size));

  // Scoring terms for every known recording, computed once.
  std::vector<std::vector<PldaModel::Side>> sides(n_spk);
  for (std::size_t s = 0; s < n_spk; ++s) {
    if (known[s].vectors.empty())
      throw ValidationError("known speaker '" + known[s].speaker_id + "' has no recordings");
    sides[s].reserve(known[s].vectors.size());
    for (const auto &v : known[s].vectors) sides[s].push_back(model.side(v));
  }

  const std::size_t max_attempts =
      protocol.max_attempts == 0 ? 10 * protocol.n_runs : protocol.max_attempts;
  std::vector<double> thresholds, criteria;
  TrialScores trials;
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    if (attempt >= protocol.n_runs && !thresholds.empty()) break;
    Rng rng = make_rng(seed, {attempt});
    auto [a, b] = sampler(n_spk, protocol.subset_size, rng);
    for (const auto *subset : {&a, &b})
      for (std::size_t s : *subset)
        if (s >= n_spk) throw ValidationError("subset sampler returned an out-of-range speaker");

    std::vector<std::size_t> pick_of(n_spk, std::numeric_limits<std::size_t>::max());
    std::vector<std::size_t> pick_a(a.size()), pick_b(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::uniform_int_distribution<std::size_t> u(0, sides[a[i]].size() - 1);
      pick_a[i] = u(rng);
      pick_of[a[i]] = pick_a[i];
    }
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::size_t n_rec = sides[b[j]].size();
      const std::size_t taken = pick_of[b[j]];
      if (taken != std::numeric_limits<std::size_t>::max() && n_rec >= 2) {
        std::uniform_int_distribution<std::size_t> u(0, n_rec - 2);
        std::size_t k = u(rng);
        pick_b[j] = k >= taken ? k + 1 : k;
      } else {
        std::uniform_int_distribution<std::size_t> u(0, n_rec - 1);
        pick_b[j] = u(rng);
      }
    }

    trials.target.clear();
    trials.nontarget.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto &left = sides[a[i]][pick_a[i]];
      for (std::size_t j = 0; j < b.size(); ++j) {
        const double s = model.combine(left, sides[b[j]][pick_b[j]]);
        (a[i] == b[j] ? trials.target : trials.nontarget).push_back(s);
      }
    }
    if (trials.target.empty() || trials.nontarget.empty()) continue;
    const ThresholdEstimate run = min_dcf_threshold(trials, config);
    thresholds.push_back(run.threshold);
    criteria.push_back(run.criterion_value);
  }
  if (thresholds.empty())
    throw CalibrationError("threshold calibration failed: no usable run in " +
                           std::to_string(max_attempts) +
                           " attempts (subsets never shared a speaker)");
  ThresholdEstimate est;
  est.threshold = stable_mean(thresholds);
  est.criterion_value = stable_mean(criteria);
  est.n_runs_used = thresholds.size();
  est.run_thresholds = std::move(thresholds);
  return est;
}

ThresholdEstimate averaged_threshold(const EmbeddingDataset &known, const PldaModel &model,
                                     const PreprocessParams &params, const DcfConfig &config,
                                     const ThresholdProtocol &protocol, std::uint64_t seed,
                                     const SubsetSampler &sampler) {
  GroupedVectors grouped;
  grouped.reserve(known.speakers().size());
  for (const auto &[spk, recs] : known.speakers()) {
    SpeakerGroup g{spk, {}};
    g.vectors.reserve(recs.size());
    for (std::size_t r : recs) g.vectors.push_back(apply_preprocess(params, known.embedding(r)));
    grouped.push_back(std::move(g));
  }
  return averaged_threshold(grouped, model, config, protocol, seed, sampler);
}

}  // namespace reid
