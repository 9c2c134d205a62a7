// tests/test_attack.cc

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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "doctest.h"
#include "reid/attack.h"
#include "reid/error.h"
#include "reid/synth.h"
#include "test_util.h"

using namespace reid;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

World make_world(std::size_t n_spk, std::size_t per, double b, double w, std::uint64_t seed,
                 std::size_t dim = 4) {
  return sample_world(WorldParams::isotropic(dim, n_spk, per, b, w, seed));
}

World task_world(std::size_t n_spk, std::uint64_t seed) {
  WorldParams p = WorldParams::isotropic(4, n_spk, 0, 4.0, 1.0, seed);
  p.recordings_per_task = {{Task::kSentence, 2}, {Task::kVowel, 2}};
  return sample_world(p);
}

std::map<std::string, std::vector<std::size_t>> known_map(const ExperimentSplit &s) {
  return {s.known.begin(), s.known.end()};
}

std::set<std::string> unknown_ids(const ExperimentSplit &s) {
  std::set<std::string> out;
  for (const auto &p : s.unknown) out.insert(p.speaker_id);
  return out;
}

struct Fit {
  PreprocessParams pre;
  PldaModel model;
};

Fit fit_on(const EmbeddingDataset &ds, const ExperimentSplit &split, bool norm = false) {
  std::size_t n = 0;
  for (const auto &[spk, recs] : split.known) n += recs.size();
  MatrixXd raw(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ds.dim()));
  Eigen::Index row = 0;
  for (const auto &[spk, recs] : split.known)
    for (std::size_t r : recs) raw.row(row++) = ds.embedding(r).transpose();
  PreprocessParams pre = fit_preprocess(raw, norm);
  GroupedVectors g;
  for (const auto &[spk, recs] : split.known) {
    SpeakerGroup sg{spk, {}};
    for (std::size_t r : recs) sg.vectors.push_back(apply_preprocess(pre, ds.embedding(r)));
    g.push_back(std::move(sg));
  }
  return {pre, train_plda(g)};
}

AttackScores synthetic_scores(std::size_t n_known, std::size_t n_probe, std::uint64_t seed,
                              bool ties) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  AttackScores s;
  for (std::size_t k = 0; k < n_known; ++k) s.known_ids.push_back("k" + std::to_string(k));
  for (std::size_t p = 0; p < n_probe; ++p)
    s.probe_ids.push_back(p % 3 == 0 ? "k" + std::to_string(p % n_known) : "u" + std::to_string(p));
  s.scores.resize(static_cast<Eigen::Index>(n_known), static_cast<Eigen::Index>(n_probe));
  for (Eigen::Index i = 0; i < s.scores.rows(); ++i)
    for (Eigen::Index j = 0; j < s.scores.cols(); ++j)
      s.scores(i, j) = ties ? std::round(g(rng) * 2) / 2 : g(rng);
  s.n_overlap = 0;
  for (const auto &p : s.probe_ids)
    if (p[0] == 'k') ++s.n_overlap;
  return s;
}

}  // namespace

TEST_CASE("split spec validation") {
  SplitSpec s;
  s.n_known = 5;
  s.n_unknown = 3;
  s.n_overlap = 4;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.n_overlap = 3;
  CHECK_NOTHROW(s.validate());
  s.n_known = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.n_known = 5;
  s.known_task_filter = std::set<Task>{};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.known_task_filter.reset();
  s.fixed_unknown_pool = std::vector<std::string>{"a"};
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("realistic geometry with withheld probes") {
  auto w = make_world(1300, 3, 1.0, 1.0, 1);
  SplitSpec spec{1000, 163, 5};
  spec.seed = 4;
  auto split = sample_split(w.dataset, spec);
  CHECK(split.known.size() == 1000);
  CHECK(split.unknown.size() == 163);
  CHECK(split.overlap_ids.size() == 5);
  auto km = known_map(split);
  auto uid = unknown_ids(split);
  for (const auto &p : split.unknown) {
    REQUIRE(p.records.size() == 1);
    CHECK(w.dataset.record(p.records[0]).speaker_id == p.speaker_id);
    auto it = km.find(p.speaker_id);
    CHECK((it != km.end()) == (split.overlap_ids.count(p.speaker_id) == 1));
    if (it != km.end()) {
      CHECK(std::find(it->second.begin(), it->second.end(), p.records[0]) == it->second.end());
      CHECK(it->second.size() == 2);
    }
  }
  for (const auto &[spk, recs] : split.known)
    if (!split.overlap_ids.count(spk)) CHECK(recs.size() == 3);
  CHECK(std::is_sorted(split.known.begin(), split.known.end()));
  CHECK_NOTHROW(split.check_invariants());
}

TEST_CASE("zero and full overlap") {
  auto w = make_world(700, 2, 1.0, 1.0, 2);
  SplitSpec none{300, 163, 0};
  auto s0 = sample_split(w.dataset, none);
  auto km = known_map(s0);
  for (const auto &id : unknown_ids(s0)) CHECK_FALSE(km.count(id));
  CHECK(s0.overlap_ids.empty());

  SplitSpec full{400, 163, 163};
  auto s1 = sample_split(w.dataset, full);
  CHECK(s1.overlap_ids.size() == 163);
  auto km1 = known_map(s1);
  for (const auto &p : s1.unknown) {
    REQUIRE(km1.count(p.speaker_id));
    CHECK(std::find(km1[p.speaker_id].begin(), km1[p.speaker_id].end(), p.records[0]) ==
          km1[p.speaker_id].end());
  }
}

TEST_CASE("infeasible geometry") {
  auto w = make_world(50, 2, 1.0, 1.0, 3);
  CHECK_THROWS_WITH_AS(sample_split(w.dataset, SplitSpec{45, 10, 2}),
                       doctest::Contains("n_known=45"), ValidationError);
  auto single = make_world(50, 1, 1.0, 1.0, 3);
  CHECK_THROWS_WITH_AS(sample_split(single.dataset, SplitSpec{20, 10, 1}),
                       doctest::Contains("overlap"), ValidationError);
  CHECK_NOTHROW(sample_split(single.dataset, SplitSpec{20, 10, 0}));
  // Both roles draw from the same speakers; the known side must leave enough
  // for the unknown side.
  CHECK_NOTHROW(sample_split(w.dataset, SplitSpec{30, 22, 2}));
  CHECK_THROWS_AS(sample_split(w.dataset, SplitSpec{30, 23, 2}), ValidationError);
}

TEST_CASE("split sampling is deterministic and seed dependent") {
  auto w = make_world(200, 3, 1.0, 1.0, 5);
  SplitSpec spec{80, 40, 5};
  spec.seed = 17;
  auto a = sample_split(w.dataset, spec), b = sample_split(w.dataset, spec);
  CHECK(a.known == b.known);
  CHECK(a.overlap_ids == b.overlap_ids);
  spec.seed = 18;
  auto c = sample_split(w.dataset, spec);
  CHECK_FALSE(c.overlap_ids == a.overlap_ids);
}

TEST_CASE("probe recordings are uniform") {
  auto w = make_world(30, 4, 1.0, 1.0, 6);
  std::map<std::size_t, int> counts;
  const int trials = 4000;
  SplitSpec spec{30, 1, 1};
  for (int t = 0; t < trials; ++t) {
    spec.seed = static_cast<std::uint64_t>(t);
    auto s = sample_split(w.dataset, spec);
    const auto &p = s.unknown[0];
    const auto &recs = w.dataset.speakers().at(p.speaker_id);
    counts[static_cast<std::size_t>(std::find(recs.begin(), recs.end(), p.records[0]) -
                                    recs.begin())]++;
  }
  double chi2 = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double e = trials / 4.0;
    chi2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  CHECK(chi2 < 16.27);  // chi-square, 3 dof, p = 0.001
}

TEST_CASE("task filters steer known and probe recordings") {
  auto w = task_world(120, 7);
  SplitSpec spec{60, 30, 5};
  spec.known_task_filter = std::set<Task>{Task::kSentence};
  spec.unknown_task_filter = std::set<Task>{Task::kVowel};
  auto s = sample_split(w.dataset, spec);
  for (const auto &[spk, recs] : s.known) {
    CHECK(recs.size() == 2);
    for (std::size_t r : recs) CHECK(w.dataset.record(r).task == Task::kSentence);
  }
  for (const auto &p : s.unknown) CHECK(w.dataset.record(p.records[0]).task == Task::kVowel);

  // Same task on both sides: the overlap probe is withheld from one list.
  SplitSpec same{60, 30, 5};
  same.known_task_filter = same.unknown_task_filter = std::set<Task>{Task::kVowel};
  auto s2 = sample_split(w.dataset, same);
  for (const auto &[spk, recs] : s2.known)
    CHECK(recs.size() == (s2.overlap_ids.count(spk) ? 1u : 2u));
}

TEST_CASE("pooled probes average every eligible recording") {
  auto w = task_world(120, 8);
  SplitSpec spec{60, 30, 5};
  spec.unknown_task_filter = std::set<Task>{Task::kVowel};
  spec.pool_unknown_tasks = true;
  auto s = sample_split(w.dataset, spec);
  auto km = known_map(s);
  for (const auto &p : s.unknown) {
    CHECK(p.pooled);
    CHECK(p.records.size() == 2);
    for (std::size_t r : p.records) CHECK(w.dataset.record(r).task == Task::kVowel);
    if (s.overlap_ids.count(p.speaker_id)) {
      CHECK(km[p.speaker_id].size() == 2);
      for (std::size_t r : km[p.speaker_id]) CHECK(w.dataset.record(r).task == Task::kSentence);
    }
  }
  // Pooling across everything leaves nothing for an overlap speaker.
  SplitSpec all{60, 30, 5};
  all.pool_unknown_tasks = true;
  CHECK_THROWS_AS(sample_split(w.dataset, all), ValidationError);

  Fit fit = fit_on(w.dataset, s);
  auto scores = score_split(w.dataset, fit.model, fit.pre, s);
  const auto &p0 = s.unknown[0];
  VectorXd avg = VectorXd::Zero(4);
  for (std::size_t r : p0.records) avg += apply_preprocess(fit.pre, w.dataset.embedding(r));
  avg /= 2.0;
  std::vector<VectorXd> raw;
  for (std::size_t r : s.known[0].second) raw.push_back(w.dataset.embedding(r));
  auto e = enroll_speaker(fit.pre, s.known[0].first, raw);
  CHECK(scores.scores(0, 0) == doctest::Approx(score_pair(fit.model, e.vector, avg)).epsilon(1e-12));
}

TEST_CASE("fixed unknown pool") {
  auto w = make_world(100, 2, 1.0, 1.0, 9);
  std::vector<std::string> pool(w.speaker_ids.begin(), w.speaker_ids.begin() + 20);
  SplitSpec spec{50, 23, 3};
  spec.fixed_unknown_pool = pool;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    spec.seed = seed;
    auto s = sample_split(w.dataset, spec);
    auto km = known_map(s);
    std::set<std::string> unknown_only;
    for (const auto &id : unknown_ids(s))
      if (!s.overlap_ids.count(id)) unknown_only.insert(id);
    CHECK(unknown_only == std::set<std::string>(pool.begin(), pool.end()));
    for (const auto &id : pool) CHECK_FALSE(km.count(id));
  }
  spec.fixed_unknown_pool->push_back("nobody");
  spec.n_unknown = 24;
  CHECK_THROWS_AS(sample_split(w.dataset, spec), ValidationError);
}

TEST_CASE("check_invariants catches broken splits") {
  ExperimentSplit s;
  s.known = {{"a", {0, 1}}, {"b", {2}}};
  s.unknown = {{"a", {1}, false}};
  s.overlap_ids = {"a"};
  CHECK_THROWS_AS(s.check_invariants(), std::logic_error);
  s.unknown = {{"a", {3}, false}};
  CHECK_NOTHROW(s.check_invariants());
  s.overlap_ids.clear();
  CHECK_THROWS_AS(s.check_invariants(), std::logic_error);
  s.unknown = {{"c", {3}, false}, {"c", {4}, false}};
  CHECK_THROWS_AS(s.check_invariants(), std::logic_error);
}

TEST_CASE("variant names") {
  CHECK(AttackVariant::parse("all") == AttackVariant::all());
  CHECK(AttackVariant::parse("rank1") == AttackVariant::rank1());
  CHECK(AttackVariant::parse("topn:5") == AttackVariant::top_n(5));
  CHECK(AttackVariant::top_n(12).name() == "topn:12");
  for (const char *bad : {"top", "topn:", "topn:0", "topn:x", "topn:3x", "rank2"})
    CHECK_THROWS_AS(AttackVariant::parse(bad), ValidationError);
}

TEST_CASE("threshold sentinels") {
  auto w = make_world(300, 3, 2.0, 1.0, 10);
  auto split = sample_split(w.dataset, SplitSpec{100, 40, 5});
  Fit fit = fit_on(w.dataset, split);
  const double inf = std::numeric_limits<double>::infinity();
  auto none = run_attack(w.dataset, fit.model, fit.pre, inf, split, AttackVariant::all());
  CHECK(none.matches.empty());
  auto c = count_outcomes(none);
  CHECK(c.ta == 0);
  CHECK(c.fa == 0);
  auto every = run_attack(w.dataset, fit.model, fit.pre, -inf, split, AttackVariant::rank1());
  CHECK(every.matches.size() == 40);
  auto all = run_attack(w.dataset, fit.model, fit.pre, -inf, split, AttackVariant::all(), 3);
  CHECK(all.matches.size() == 4000);
  CHECK(all.n_comparisons == 4000);
  CHECK(count_outcomes(all).ta == 5);
}

TEST_CASE("well separated world is fully re-identified") {
  const std::size_t dim = 16;
  auto w = make_world(1300, 3, 100.0, 1.0, 11, dim);
  SweepConfig cfg;
  cfg.protocol = {100, 20, 0};
  SplitSpec spec{1000, 163, 5};
  spec.seed = 21;
  PreparedRun run = prepare_run(w.dataset, spec, cfg);
  auto res = run_attack(w.dataset, run.model, run.preprocess, run.threshold.threshold, run.split,
                        AttackVariant::all());
  auto c = count_outcomes(res);
  CHECK(c.ta == 5);
  CHECK(c.fa == 0);

  // Each overlap probe's nearest enrollment, by brute-force Euclidean
  // distance in preprocessed space, is its own speaker.
  const auto &split = run.split;
  for (const auto &p : split.unknown) {
    if (!split.overlap_ids.count(p.speaker_id)) continue;
    const VectorXd probe = apply_preprocess(run.preprocess, w.dataset.embedding(p.records[0]));
    double best = INFINITY;
    std::string who;
    for (const auto &[spk, recs] : split.known) {
      VectorXd m = VectorXd::Zero(dim);
      for (std::size_t r : recs) m += apply_preprocess(run.preprocess, w.dataset.embedding(r));
      m /= static_cast<double>(recs.size());
      const double d = (m - probe).squaredNorm();
      if (d < best) {
        best = d;
        who = spk;
      }
    }
    CHECK(who == p.speaker_id);
  }
}

TEST_CASE("rank1 and topN are score-maximal subsets of all matches") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto s = synthetic_scores(12, 9, seed, seed % 2 == 1);
    const double thr = 0.3;
    auto all = select_matches(s, thr, AttackVariant::all());
    for (const auto &m : all.matches) CHECK(m.score >= thr);
    std::size_t expect_all = 0;
    for (Eigen::Index i = 0; i < s.scores.rows(); ++i)
      for (Eigen::Index j = 0; j < s.scores.cols(); ++j) expect_all += s.scores(i, j) >= thr;
    CHECK(all.matches.size() == expect_all);

    auto key = [](const MatchRecord &m) { return std::pair(m.probe_index, m.known_index); };
    std::set<std::pair<std::size_t, std::size_t>> all_set;
    for (const auto &m : all.matches) all_set.insert(key(m));

    auto r1 = select_matches(s, thr, AttackVariant::rank1());
    std::set<std::size_t> probes;
    for (const auto &m : r1.matches) {
      CHECK(probes.insert(m.probe_index).second);
      CHECK(all_set.count(key(m)));
      for (const auto &o : all.matches)
        if (o.probe_index == m.probe_index) CHECK(o.score <= m.score);
    }
    for (const auto &o : all.matches) CHECK(probes.count(o.probe_index));

    for (std::size_t n : {1u, 5u, 200u}) {
      auto top = select_matches(s, thr, AttackVariant::top_n(n));
      CHECK(top.matches.size() == std::min(n, all.matches.size()));
      std::vector<double> sorted;
      for (const auto &m : all.matches) sorted.push_back(m.score);
      std::sort(sorted.rbegin(), sorted.rend());
      for (std::size_t i = 0; i < top.matches.size(); ++i) {
        CHECK(all_set.count(key(top.matches[i])));
        CHECK(top.matches[i].score == sorted[i]);
      }
    }
  }
}

TEST_CASE("ties go to the lower index") {
  AttackScores s;
  s.known_ids = {"a", "b", "c"};
  s.probe_ids = {"b", "x"};
  s.scores.resize(3, 2);
  s.scores << 1, 2, 1, 2, 0, 2;
  auto r1 = select_matches(s, 0.5, AttackVariant::rank1());
  REQUIRE(r1.matches.size() == 2);
  CHECK(r1.matches[0].known_index == 0);
  CHECK(r1.matches[1].known_index == 0);
  auto top = select_matches(s, 0.5, AttackVariant::top_n(2));
  REQUIRE(top.matches.size() == 2);
  CHECK(top.matches[0].probe_index == 1);
  CHECK(top.matches[0].known_index == 0);
  CHECK(top.matches[1].known_index == 1);
  CHECK(top.matches[1].probe_index == 1);
  CHECK(r1.matches[0].is_true == false);
}

TEST_CASE("count_outcomes arithmetic") {
  AttackResult r;
  r.n_known = 6000;
  r.n_unknown = 1000;
  r.n_overlap = 5;
  r.n_comparisons = 6000 * 1000;
  auto c = count_outcomes(r);
  CHECK(c.ta == 0);
  CHECK(c.n_nontarget_comparisons == 5999995);
  CHECK(c.n_target_comparisons == 5);

  auto w = make_world(400, 2, 2.0, 1.0, 12);
  auto split = sample_split(w.dataset, SplitSpec{200, 163, 163});
  Fit fit = fit_on(w.dataset, split);
  auto res = run_attack(w.dataset, fit.model, fit.pre, 0.0, split, AttackVariant::all());
  auto fc = count_outcomes(res);
  CHECK(fc.n_target_comparisons == 163);
  CHECK(fc.n_nontarget_comparisons == 163 * 200 - 163);
  CHECK(fc.ta + fc.fa == res.matches.size());
  for (const auto &m : res.matches) CHECK(m.is_true == (m.probe_speaker == m.matched_known_speaker));
}

TEST_CASE("zero-overlap matches are all false") {
  auto w = make_world(300, 2, 0.5, 1.0, 13);
  auto split = sample_split(w.dataset, SplitSpec{150, 100, 0});
  Fit fit = fit_on(w.dataset, split);
  auto res = run_attack(w.dataset, fit.model, fit.pre, -1.0, split, AttackVariant::all());
  REQUIRE_FALSE(res.matches.empty());
  auto km = known_map(split);
  for (const auto &m : res.matches) {
    CHECK_FALSE(m.is_true);
    CHECK_FALSE(km.count(m.probe_speaker));
  }
}

TEST_CASE("sweep points") {
  SplitSpec t{100, 50, 5};
  std::vector<std::size_t> sizes = {10, 20};
  auto k = make_sweep_points(SweepAxis::kKnown, sizes, t);
  CHECK(k[1].n_known == 20);
  CHECK(k[1].n_unknown == 50);
  auto u = make_sweep_points(SweepAxis::kUnknown, sizes, t);
  CHECK(u[0].n_known == 100);
  CHECK(u[0].n_unknown == 10);
  auto b = make_sweep_points(SweepAxis::kBoth, sizes, t);
  CHECK(b[1].n_known == 20);
  CHECK(b[1].n_unknown == 20);
  CHECK(parse_sweep_axis("unknown") == SweepAxis::kUnknown);
  CHECK_FALSE(parse_sweep_axis("sideways").has_value());
}

TEST_CASE("run_sweep rows and determinism") {
  auto w = make_world(400, 3, 2.0, 1.0, 14);
  SweepConfig cfg;
  cfg.split_template = SplitSpec{0, 40, 3};
  std::vector<std::size_t> sizes = {60, 120, 200};
  cfg.points = make_sweep_points(SweepAxis::kKnown, sizes, cfg.split_template);
  cfg.n_splits = 3;
  cfg.protocol = {40, 10, 0};
  cfg.master_seed = 99;
  auto rows = run_sweep(w.dataset, cfg);
  REQUIRE(rows.size() == 9);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].point == i / 3);
    CHECK(rows[i].split == i % 3);
    CHECK(rows[i].n_known == sizes[i / 3]);
    CHECK(rows[i].n_comparisons == sizes[i / 3] * 40);
    CHECK(rows[i].seed == run_seed(99, i / 3, i % 3));
    CHECK_NOTHROW(rows[i].validate());
  }
  cfg.threads = 3;
  CHECK(run_sweep(w.dataset, cfg) == rows);

  // One run equals the manual chain.
  SplitSpec spec = cfg.split_template;
  spec.n_known = 120;
  spec.seed = run_seed(99, 1, 2);
  PreparedRun run = prepare_run(w.dataset, spec, cfg);
  auto res = run_attack(w.dataset, run.model, run.preprocess, run.threshold.threshold, run.split,
                        cfg.variant);
  auto c = count_outcomes(res);
  CHECK(rows[5].ta == c.ta);
  CHECK(rows[5].fa == c.fa);
  CHECK(rows[5].threshold == run.threshold.threshold);

  std::size_t observed = 0;
  cfg.threads = 1;
  run_sweep(w.dataset, cfg, [&](const PreparedRun &p, const AttackScores &s, const AttackResult &r) {
    ++observed;
    CHECK(s.scores.rows() == static_cast<Eigen::Index>(p.point.n_known));
    CHECK(r.threshold == p.threshold.threshold);
  });
  CHECK(observed == 9);
}

TEST_CASE("run_sweep names an infeasible point") {
  auto w = make_world(150, 2, 2.0, 1.0, 15);
  SweepConfig cfg;
  cfg.split_template = SplitSpec{0, 40, 3};
  std::vector<std::size_t> sizes = {60, 500};
  cfg.points = make_sweep_points(SweepAxis::kKnown, sizes, cfg.split_template);
  cfg.protocol = {40, 5, 0};
  CHECK_THROWS_WITH_AS(run_sweep(w.dataset, cfg), doctest::Contains("sweep point 1"),
                       ValidationError);
  cfg.points = {{30, 20}};
  CHECK_THROWS_WITH_AS(run_sweep(w.dataset, cfg), doctest::Contains("subset_size"),
                       ValidationError);
}

TEST_CASE("full overlap sweeps track the unknown set") {
  auto w = make_world(300, 3, 2.0, 1.0, 16);
  SweepConfig cfg;
  cfg.split_template = SplitSpec{120, 0, 0};
  std::vector<std::size_t> sizes = {20, 40};
  cfg.points = make_sweep_points(SweepAxis::kUnknown, sizes, cfg.split_template);
  cfg.full_overlap = true;
  cfg.protocol = {50, 5, 0};
  auto rows = run_sweep(w.dataset, cfg);
  CHECK(rows[0].n_overlap == 20);
  CHECK(rows[1].n_overlap == 40);
}

TEST_CASE("false acceptances come from non-overlap probes") {
  auto w = make_world(800, 3, 6.0, 1.0, 17, 12);
  SweepConfig cfg;
  cfg.split_template = SplitSpec{0, 100, 5};
  std::vector<std::size_t> sizes = {200, 400, 600};
  cfg.points = make_sweep_points(SweepAxis::kKnown, sizes, cfg.split_template);
  cfg.n_splits = 4;
  cfg.protocol = {100, 20, 0};
  std::size_t checked = 0, fas = 0;
  run_sweep(w.dataset, cfg, [&](const PreparedRun &p, const AttackScores &s, const AttackResult &r) {
    for (std::size_t j = 0; j < s.probe_ids.size(); ++j) {
      if (!p.split.overlap_ids.count(s.probe_ids[j])) continue;
      auto it = std::find(s.known_ids.begin(), s.known_ids.end(), s.probe_ids[j]);
      const auto k = static_cast<Eigen::Index>(it - s.known_ids.begin());
      if (s.scores(k, static_cast<Eigen::Index>(j)) < r.threshold) return;
    }
    ++checked;
    for (const auto &m : r.matches)
      if (!m.is_true) {
        ++fas;
        CHECK_FALSE(p.split.overlap_ids.count(m.probe_speaker));
      }
  });
  CHECK(checked > 0);
  CHECK(fas > 0);
}
