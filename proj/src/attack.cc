// src/attack.cc

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

#include "reid/attack.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "reid/error.h"

namespace reid {

namespace {

bool passes(const std::optional<std::set<Task>> &filter, Task t) {
  return !filter || filter->count(t) > 0;
}

template <typename T>
void shuffle_in_place(std::vector<T> &v, Rng &rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

std::size_t pick_index(std::size_t n, Rng &rng) {
  std::uniform_int_distribution<std::size_t> u(0, n - 1);
  return u(rng);
}

std::string geometry(const SplitSpec &s) {
  return "n_known=" + std::to_string(s.n_known) + " n_unknown=" + std::to_string(s.n_unknown) +
         " n_overlap=" + std::to_string(s.n_overlap);
}

struct Eligibility {
  std::string speaker;
  std::vector<std::size_t> known;    // manifest indices passing the known filter
  std::vector<std::size_t> unknown;  // ... the unknown filter
};

// Recordings left for enrollment once `withheld` is removed.
std::vector<std::size_t> minus(const std::vector<std::size_t> &all,
                               const std::vector<std::size_t> &withheld) {
  std::vector<std::size_t> out;
  for (std::size_t r : all)
    if (std::find(withheld.begin(), withheld.end(), r) == withheld.end()) out.push_back(r);
  return out;
}

}  // namespace

void SplitSpec::validate() const {
  if (n_known == 0) throw ValidationError("n_known must be positive");
  if (n_unknown == 0) throw ValidationError("n_unknown must be positive");
  if (n_overlap > std::min(n_known, n_unknown))
    throw ValidationError("n_overlap exceeds min(n_known, n_unknown): " + geometry(*this));
  for (const auto *f : {&known_task_filter, &unknown_task_filter})
    if (*f && (*f)->empty()) throw ValidationError("task filter is empty");
  if (fixed_unknown_pool && fixed_unknown_pool->size() + n_overlap != n_unknown)
    throw ValidationError("fixed unknown pool of " + std::to_string(fixed_unknown_pool->size()) +
                          " speakers plus n_overlap must equal n_unknown (" +
                          geometry(*this) + ")");
}

void ExperimentSplit::check_invariants() const {
  std::map<std::string, const std::vector<std::size_t> *> known_map;
  for (const auto &[spk, recs] : known) {
    if (recs.empty()) throw std::logic_error("known speaker " + spk + " has no recordings");
    if (!known_map.emplace(spk, &recs).second)
      throw std::logic_error("known speaker " + spk + " listed twice");
  }
  std::set<std::string> probe_speakers;
  for (const auto &p : unknown) {
    if (!probe_speakers.insert(p.speaker_id).second)
      throw std::logic_error("more than one probe for speaker " + p.speaker_id);
    if (p.records.empty()) throw std::logic_error("empty probe for " + p.speaker_id);
    auto it = known_map.find(p.speaker_id);
    const bool in_known = it != known_map.end();
    if (in_known != (overlap_ids.count(p.speaker_id) > 0))
      throw std::logic_error("speaker " + p.speaker_id + " overlap labelling inconsistent");
    if (in_known)
      for (std::size_t r : p.records)
        if (std::find(it->second->begin(), it->second->end(), r) != it->second->end())
          throw std::logic_error("probe recording of " + p.speaker_id +
                                 " not withheld from the known set");
  }
  for (const auto &o : overlap_ids)
    if (!known_map.count(o) || !probe_speakers.count(o))
      throw std::logic_error("overlap speaker " + o + " missing from known or unknown set");
}

ExperimentSplit sample_split(const EmbeddingDataset &dataset, const SplitSpec &spec, Rng &rng) {
  spec.validate();

  std::set<std::string> pool;
  if (spec.fixed_unknown_pool) {
    for (const auto &s : *spec.fixed_unknown_pool) {
      if (!dataset.speakers().count(s))
        throw ValidationError("fixed unknown pool speaker '" + s + "' not in dataset");
      if (!pool.insert(s).second)
        throw ValidationError("fixed unknown pool lists '" + s + "' twice");
    }
  }

  std::vector<Eligibility> elig;
  elig.reserve(dataset.speakers().size());
  for (const auto &[spk, recs] : dataset.speakers()) {
    Eligibility e{spk, {}, {}};
    for (std::size_t r : recs) {
      const Task t = dataset.record(r).task;
      if (passes(spec.known_task_filter, t)) e.known.push_back(r);
      if (passes(spec.unknown_task_filter, t)) e.unknown.push_back(r);
    }
    if (pool.count(spk) && e.unknown.empty())
      throw ValidationError("fixed unknown pool speaker '" + spk +
                            "' has no recording passing the unknown task filter");
    elig.push_back(std::move(e));
  }

  // Overlap candidates need a probe plus at least one other known recording.
  auto overlap_ok = [&](const Eligibility &e) {
    if (e.unknown.empty() || e.known.empty()) return false;
    if (spec.pool_unknown_tasks) return !minus(e.known, e.unknown).empty();
    if (e.known.size() >= 2) return true;
    for (std::size_t r : e.unknown)
      if (r != e.known.front()) return true;
    return false;
  };

  std::vector<std::size_t> overlap_cand;
  for (std::size_t i = 0; i < elig.size(); ++i)
    if (!pool.count(elig[i].speaker) && overlap_ok(elig[i])) overlap_cand.push_back(i);
  if (overlap_cand.size() < spec.n_overlap)
    throw ValidationError("only " + std::to_string(overlap_cand.size()) +
                          " speakers can serve as overlap (need a withheld probe and a "
                          "remaining known recording); requested " + geometry(spec));
  shuffle_in_place(overlap_cand, rng);
  overlap_cand.resize(spec.n_overlap);
  std::vector<bool> taken(elig.size(), false);
  for (std::size_t i : overlap_cand) taken[i] = true;

  const std::size_t need_known = spec.n_known - spec.n_overlap;
  const std::size_t need_unknown = spec.fixed_unknown_pool ? 0 : spec.n_unknown - spec.n_overlap;

  // Speakers eligible for both roles are shared out so that whichever role
  // has fewer exclusive candidates can still be filled.
  std::vector<std::size_t> known_cand;
  std::size_t only_unknown = 0, both = 0;
  for (std::size_t i = 0; i < elig.size(); ++i) {
    if (taken[i] || pool.count(elig[i].speaker)) continue;
    const bool k = !elig[i].known.empty(), u = !elig[i].unknown.empty();
    if (k) known_cand.push_back(i);
    if (k && u) ++both;
    if (!k && u) ++only_unknown;
  }
  const std::size_t both_reserved =
      need_unknown > only_unknown ? std::min(both, need_unknown - only_unknown) : 0;
  const std::size_t both_for_known = both - both_reserved;
  shuffle_in_place(known_cand, rng);
  std::vector<std::size_t> known_only;
  std::size_t both_used = 0;
  for (std::size_t i : known_cand) {
    if (known_only.size() == need_known) break;
    if (!elig[i].unknown.empty()) {
      if (both_used == both_for_known) continue;
      ++both_used;
    }
    known_only.push_back(i);
  }
  if (known_only.size() < need_known)
    throw ValidationError("insufficient known-eligible speakers: found " +
                          std::to_string(known_only.size() + spec.n_overlap) +
                          ", requested " + geometry(spec));
  for (std::size_t i : known_only) taken[i] = true;

  std::vector<std::size_t> unknown_only;
  if (spec.fixed_unknown_pool) {
    for (std::size_t i = 0; i < elig.size(); ++i)
      if (pool.count(elig[i].speaker)) unknown_only.push_back(i);
  } else {
    for (std::size_t i = 0; i < elig.size(); ++i)
      if (!taken[i] && !elig[i].unknown.empty()) unknown_only.push_back(i);
    if (unknown_only.size() < need_unknown)
      throw ValidationError("insufficient unknown-eligible speakers: found " +
                            std::to_string(unknown_only.size()) + " unknown-only candidates, " +
                            "requested " + geometry(spec));
    shuffle_in_place(unknown_only, rng);
    unknown_only.resize(need_unknown);
  }

  ExperimentSplit split;
  std::map<std::string, std::vector<std::size_t>> known;
  std::map<std::string, Probe> probes;

  auto make_probe = [&](const Eligibility &e, bool overlap) {
    Probe p{e.speaker, {}, spec.pool_unknown_tasks};
    if (spec.pool_unknown_tasks) {
      p.records = e.unknown;
    } else if (!overlap) {
      p.records = {e.unknown[pick_index(e.unknown.size(), rng)]};
    } else {
      std::vector<std::size_t> ok;
      for (std::size_t r : e.unknown)
        if (e.known.size() >= 2 || r != e.known.front()) ok.push_back(r);
      p.records = {ok[pick_index(ok.size(), rng)]};
    }
    return p;
  };

  std::sort(overlap_cand.begin(), overlap_cand.end());
  for (std::size_t i : overlap_cand) {
    Probe p = make_probe(elig[i], true);
    known[elig[i].speaker] = minus(elig[i].known, p.records);
    split.overlap_ids.insert(elig[i].speaker);
    probes.emplace(elig[i].speaker, std::move(p));
  }
  for (std::size_t i : known_only) known[elig[i].speaker] = elig[i].known;
  std::sort(unknown_only.begin(), unknown_only.end());
  for (std::size_t i : unknown_only) probes.emplace(elig[i].speaker, make_probe(elig[i], false));

  split.known.assign(known.begin(), known.end());
  for (auto &[spk, p] : probes) split.unknown.push_back(std::move(p));
  split.check_invariants();
  return split;
}

ExperimentSplit sample_split(const EmbeddingDataset &dataset, const SplitSpec &spec) {
  Rng rng = make_rng(spec.seed);
  return sample_split(dataset, spec, rng);
}

AttackVariant AttackVariant::parse(std::string_view text) {
  if (text == "all") return all();
  if (text == "rank1") return rank1();
  if (text.rfind("topn:", 0) == 0) {
    std::string_view num = text.substr(5);
    std::size_t n = 0;
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
    if (num.empty() || ec != std::errc() || p != num.data() + num.size() || n == 0)
      throw ValidationError("bad top-N variant '" + std::string(text) + "'");
    return top_n(n);
  }
  throw ValidationError("unknown variant '" + std::string(text) + "' (all|rank1|topn:N)");
}

std::string AttackVariant::name() const {
  switch (kind) {
    case Kind::kAll: return "all";
    case Kind::kRank1: return "rank1";
    case Kind::kTopN: return "topn:" + std::to_string(n);
  }
  return "all";
}

AttackScores score_split(const EmbeddingDataset &dataset, const PldaModel &model,
                         const PreprocessParams &preprocess, const ExperimentSplit &split,
                         unsigned threads) {
  if (split.known.empty() || split.unknown.empty())
    throw ValidationError("attack needs nonempty known and unknown sets");
  if (dataset.dim() != model.dim() || preprocess.dim() != model.dim())
    throw ValidationError("dimension mismatch between dataset, preprocessing and model");
  AttackScores out;
  out.n_overlap = split.overlap_ids.size();
  std::vector<Eigen::VectorXd> enroll, probes;
  enroll.reserve(split.known.size());
  for (const auto &[spk, recs] : split.known) {
    std::vector<Eigen::VectorXd> raw;
    raw.reserve(recs.size());
    for (std::size_t r : recs) raw.push_back(dataset.embedding(r));
    enroll.push_back(enroll_speaker(preprocess, spk, raw).vector);
    out.known_ids.push_back(spk);
  }
  probes.reserve(split.unknown.size());
  for (const auto &p : split.unknown) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.dim()));
    for (std::size_t r : p.records) v += apply_preprocess(preprocess, dataset.embedding(r));
    v /= static_cast<double>(p.records.size());
    probes.push_back(std::move(v));
    out.probe_ids.push_back(p.speaker_id);
  }
  out.scores = score_matrix(model, enroll, probes, threads);
  return out;
}

AttackResult select_matches(const AttackScores &scores, double threshold, AttackVariant variant) {
  if (variant.kind == AttackVariant::Kind::kTopN && variant.n == 0)
    throw ValidationError("top-N variant needs N > 0");
  AttackResult res;
  res.n_known = scores.known_ids.size();
  res.n_unknown = scores.probe_ids.size();
  res.n_overlap = scores.n_overlap;
  res.n_comparisons = res.n_known * res.n_unknown;
  res.threshold = threshold;
  res.variant = variant;

  auto make = [&](std::size_t k, std::size_t p) {
    return MatchRecord{p, k, scores.probe_ids[p], scores.known_ids[k], scores.scores(k, p),
                       scores.probe_ids[p] == scores.known_ids[k]};
  };
  const auto n_k = static_cast<Eigen::Index>(res.n_known);
  const auto n_p = static_cast<Eigen::Index>(res.n_unknown);
  for (Eigen::Index p = 0; p < n_p; ++p) {
    if (variant.kind == AttackVariant::Kind::kRank1) {
      Eigen::Index best = -1;
      for (Eigen::Index k = 0; k < n_k; ++k)
        if (scores.scores(k, p) >= threshold && (best < 0 || scores.scores(k, p) > scores.scores(best, p)))
          best = k;
      if (best >= 0) res.matches.push_back(make(best, p));
    } else {
      for (Eigen::Index k = 0; k < n_k; ++k)
        if (scores.scores(k, p) >= threshold) res.matches.push_back(make(k, p));
    }
  }
  if (variant.kind == AttackVariant::Kind::kTopN) {
    std::stable_sort(res.matches.begin(), res.matches.end(),
                     [](const MatchRecord &a, const MatchRecord &b) { return a.score > b.score; });
    if (res.matches.size() > variant.n) res.matches.resize(variant.n);
  }
  return res;
}

AttackResult run_attack(const EmbeddingDataset &dataset, const PldaModel &model,
                        const PreprocessParams &preprocess, double threshold,
                        const ExperimentSplit &split, AttackVariant variant, unsigned threads) {
  return select_matches(score_split(dataset, model, preprocess, split, threads), threshold,
                        variant);
}

TrialCounts count_outcomes(const AttackResult &result) {
  TrialCounts c;
  for (const auto &m : result.matches) (m.is_true ? c.ta : c.fa) += 1;
  c.n_target_comparisons = result.n_overlap;
  c.n_nontarget_comparisons = result.n_comparisons - result.n_overlap;
  return c;
}

std::string_view sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kKnown: return "known";
    case SweepAxis::kUnknown: return "unknown";
    case SweepAxis::kBoth: return "both";
  }
  return "known";
}

std::optional<SweepAxis> parse_sweep_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::kKnown, SweepAxis::kUnknown, SweepAxis::kBoth})
    if (sweep_axis_name(a) == name) return a;
  return std::nullopt;
}

std::vector<SweepPoint> make_sweep_points(SweepAxis axis, std::span<const std::size_t> sizes,
                                          const SplitSpec &tmpl) {
  std::vector<SweepPoint> pts;
  for (std::size_t s : sizes) {
    switch (axis) {
      case SweepAxis::kKnown: pts.push_back({s, tmpl.n_unknown}); break;
      case SweepAxis::kUnknown: pts.push_back({tmpl.n_known, s}); break;
      case SweepAxis::kBoth: pts.push_back({s, s}); break;
    }
  }
  return pts;
}

void SweepConfig::validate() const {
  if (points.empty()) throw ValidationError("sweep needs at least one point");
  if (n_splits == 0) throw ValidationError("sweep needs at least one split per point");
  protocol.validate();
  dcf.validate();
  if (plda.max_iters < 0) throw ValidationError("max_iters must be >= 0");
}

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t point, std::size_t split) {
  return derive_seed(master_seed, {point, split});
}

PreparedRun prepare_run(const EmbeddingDataset &dataset, const SplitSpec &spec,
                        const SweepConfig &config) {
  Rng rng = make_rng(spec.seed, {0});
  ExperimentSplit split = sample_split(dataset, spec, rng);

  std::size_t n_rec = 0;
  for (const auto &[spk, recs] : split.known) n_rec += recs.size();
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(n_rec), static_cast<Eigen::Index>(dataset.dim()));
  Eigen::Index row = 0;
  for (const auto &[spk, recs] : split.known)
    for (std::size_t r : recs) raw.row(row++) = dataset.embedding(r).transpose();
  PreprocessParams pre = fit_preprocess(raw, config.length_normalize);

  GroupedVectors grouped;
  grouped.reserve(split.known.size());
  row = 0;
  for (const auto &[spk, recs] : split.known) {
    SpeakerGroup g{spk, {}};
    g.vectors.reserve(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i)
      g.vectors.push_back(apply_preprocess(pre, raw.row(row++).transpose()));
    grouped.push_back(std::move(g));
  }
  PldaModel model = train_plda(grouped, config.plda);
  ThresholdEstimate thr = averaged_threshold(grouped, model, config.dcf, config.protocol,
                                             derive_seed(spec.seed, {1}));
  return PreparedRun{{spec.n_known, spec.n_unknown}, 0, 0, spec.seed, spec, std::move(split),
                     std::move(pre), std::move(model), std::move(thr)};
}

std::vector<RunRow> run_sweep(const EmbeddingDataset &dataset, const SweepConfig &config,
                              const RunObserver &observer) {
  config.validate();
  struct Job {
    std::size_t point, split;
    SplitSpec spec;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < config.points.size(); ++p) {
    SplitSpec spec = config.split_template;
    spec.n_known = config.points[p].n_known;
    spec.n_unknown = config.points[p].n_unknown;
    if (config.full_overlap) spec.n_overlap = spec.n_unknown;
    // Geometry check up front so an infeasible point fails before any work.
    try {
      spec.seed = run_seed(config.master_seed, p, 0);
      Rng probe_rng = make_rng(spec.seed, {0});
      (void)sample_split(dataset, spec, probe_rng);
      if (spec.n_known < config.protocol.subset_size)
        throw ValidationError("n_known below threshold subset_size " +
                              std::to_string(config.protocol.subset_size));
    } catch (const ValidationError &e) {
      throw ValidationError("sweep point " + std::to_string(p) + " (" + geometry(spec) +
                            ") is infeasible: " + e.what());
    }
    for (std::size_t s = 0; s < config.n_splits; ++s) {
      spec.seed = run_seed(config.master_seed, p, s);
      jobs.push_back({p, s, spec});
    }
  }

  std::vector<RunRow> rows(jobs.size());
  std::mutex observer_mu;
  auto execute = [&](std::size_t j) {
    const Job &job = jobs[j];
    PreparedRun run = prepare_run(dataset, job.spec, config);
    run.point_index = job.point;
    run.split_index = job.split;
    AttackScores scores = score_split(dataset, run.model, run.preprocess, run.split);
    AttackResult res = select_matches(scores, run.threshold.threshold, config.variant);
    const TrialCounts c = count_outcomes(res);
    RunRow &r = rows[j];
    r.point = job.point;
    r.split = job.split;
    r.n_known = res.n_known;
    r.n_unknown = res.n_unknown;
    r.n_overlap = res.n_overlap;
    r.n_comparisons = res.n_comparisons;
    r.ta = c.ta;
    r.fa = c.fa;
    r.threshold = run.threshold.threshold;
    r.seed = job.spec.seed;
    r.variant = config.variant.name();
    if (observer) {
      std::lock_guard<std::mutex> lock(observer_mu);
      observer(run, scores, res);
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(config.threads,
                                                           static_cast<unsigned>(jobs.size())));
  if (threads == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) execute(j);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
          try {
            execute(j);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
            next = jobs.size();
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace reid
