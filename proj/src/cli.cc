// src/cli.cc

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

#include "reid/cli.h"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "reid/attack.h"
#include "reid/dataio.h"
#include "reid/error.h"
#include "reid/metrics.h"
#include "reid/plda.h"
#include "reid/synth.h"
#include "reid/thresholding.h"

namespace reid {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split_commas(const std::string &text) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ','))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

std::optional<std::set<Task>> parse_task_list(const std::string &text, const std::string &flag) {
  if (text.empty() || text == "any") return std::nullopt;
  std::set<Task> tasks;
  for (const auto &name : split_commas(text)) {
    auto t = parse_task(name);
    if (!t) throw ValidationError(flag + ": unknown task '" + name + "'");
    tasks.insert(*t);
  }
  if (tasks.empty()) throw ValidationError(flag + ": empty task list");
  return tasks;
}

json tasks_to_json(const std::optional<std::set<Task>> &tasks) {
  if (!tasks) return "any";
  json a = json::array();
  for (Task t : *tasks) a.push_back(std::string(task_name(t)));
  return a;
}

std::size_t parse_size(const std::string &text, const std::string &flag) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || p != text.data() + text.size())
    throw ValidationError(flag + ": bad count '" + text + "'");
  return v;
}

void write_json(const fs::path &path, const json &j) { write_file_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path &path, const std::string &flag) {
  std::ifstream in(path);
  if (!in) throw ValidationError(flag + ": cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw ValidationError(flag + ": " + path.string() + ": " + e.what());
  }
}

fs::path prepare_out(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("--out: cannot create " + dir + ": " + ec.message());
  return fs::path(dir);
}

EmbeddingDataset open_dataset(const std::string &manifest, const std::string &embeddings,
                              std::ostream &err) {
  AssembledDataset a = load_dataset(manifest, embeddings);
  for (const auto &w : a.warnings) err << "warning: " << w << "\n";
  return std::move(a.dataset);
}

json dcf_to_json(const DcfConfig &c) {
  return {{"c_fa", c.c_fa}, {"c_fr", c.c_fr}, {"prior_target", c.prior_target}};
}

json protocol_to_json(const ThresholdProtocol &p) {
  return {{"subset_size", p.subset_size}, {"n_runs", p.n_runs}, {"max_attempts", p.max_attempts}};
}

struct DcfOptions {
  std::string preset = "default";
  double c_fa = 0, c_fr = 0, prior = 0;
  CLI::Option *c_fa_opt = nullptr, *c_fr_opt = nullptr, *prior_opt = nullptr;

  void add(CLI::App *app) {
    app->add_option("--config", preset, "DCF preset")
        ->check(CLI::IsMember({"default", "strict"}))
        ->capture_default_str();
    c_fa_opt = app->add_option("--c-fa", c_fa, "false acceptance cost (overrides preset)");
    c_fr_opt = app->add_option("--c-fr", c_fr, "false rejection cost (overrides preset)");
    prior_opt = app->add_option("--prior", prior, "target prior (overrides preset)");
  }
  DcfConfig resolve() const {
    DcfConfig c = preset == "strict" ? DcfConfig::strict_preset() : DcfConfig::default_preset();
    if (c_fa_opt->count()) c.c_fa = c_fa;
    if (c_fr_opt->count()) c.c_fr = c_fr;
    if (prior_opt->count()) c.prior_target = prior;
    c.validate();
    return c;
  }
};

struct ProtocolOptions {
  ThresholdProtocol p;
  void add(CLI::App *app) {
    app->add_option("--subset-size", p.subset_size, "speakers per calibration subset")
        ->capture_default_str();
    app->add_option("--runs", p.n_runs, "calibration runs")->capture_default_str();
    app->add_option("--max-attempts", p.max_attempts, "attempt cap (0: 10 x runs)")
        ->capture_default_str();
  }
  ThresholdProtocol resolve() const {
    p.validate();
    return p;
  }
};

struct SplitOptions {
  std::size_t n_known = 0, n_unknown = 0, n_overlap = 0;
  std::string known_task, unknown_task;
  bool pool = false;

  void add(CLI::App *app, bool sizes_required) {
    auto *k = app->add_option("--n-known", n_known, "known set size");
    auto *u = app->add_option("--n-unknown", n_unknown, "unknown set size");
    if (sizes_required) {
      k->required();
      u->required();
    }
    app->add_option("--n-overlap", n_overlap, "overlap set size")->capture_default_str();
    app->add_option("--known-task", known_task, "comma-separated tasks eligible for the known set");
    app->add_option("--unknown-task", unknown_task,
                    "comma-separated tasks eligible for unknown probes");
    app->add_flag("--pool", pool, "average each unknown speaker's eligible recordings");
  }
  SplitSpec resolve() const {
    SplitSpec s;
    s.n_known = n_known;
    s.n_unknown = n_unknown;
    s.n_overlap = n_overlap;
    s.known_task_filter = parse_task_list(known_task, "--known-task");
    s.unknown_task_filter = parse_task_list(unknown_task, "--unknown-task");
    s.pool_unknown_tasks = pool;
    return s;
  }
};

json split_to_json(const SplitSpec &s) {
  json j = {{"n_known", s.n_known},
            {"n_unknown", s.n_unknown},
            {"n_overlap", s.n_overlap},
            {"known_task", tasks_to_json(s.known_task_filter)},
            {"unknown_task", tasks_to_json(s.unknown_task_filter)},
            {"pool", s.pool_unknown_tasks}};
  if (s.fixed_unknown_pool) j["fixed_unknown_pool"] = *s.fixed_unknown_pool;
  return j;
}

double threshold_from_file(const std::string &path) {
  json j = read_json(path, "--threshold-file");
  if (!j.contains("threshold") || !j["threshold"].is_number())
    throw ValidationError("--threshold-file: " + path + " has no numeric 'threshold'");
  return j["threshold"].get<double>();
}

std::vector<std::string> read_id_list(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("--fixed-unknown-pool: cannot open " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] != '#') ids.push_back(line);
  }
  return ids;
}

// --- subcommands ---------------------------------------------------------

struct GenArgs {
  std::string world, out;
  std::uint64_t seed = 0;
  CLI::Option *seed_opt = nullptr;
};

int cmd_gen(const GenArgs &a, std::ostream &out) {
  WorldParams params = WorldParams::from_json(read_json(a.world, "--world"));
  if (a.seed_opt->count()) params.seed = a.seed;
  World world = sample_world(params);
  const fs::path dir = prepare_out(a.out);
  write_manifest(dir / "manifest.csv", world.dataset.records());
  write_embeddings(dir / "embeddings.vemb", world.dataset.matrix());
  write_json(dir / "world.json", params.to_json());
  out << "wrote " << world.dataset.size() << " recordings of " << world.speaker_ids.size()
      << " speakers to " << dir.string() << "\n";
  return 0;
}

struct TrainArgs {
  std::string manifest, embeddings, out, task;
  bool no_length_norm = false;
  PldaConfig plda;
};

int cmd_train(const TrainArgs &a, std::ostream &out, std::ostream &err) {
  const auto filter = parse_task_list(a.task, "--task");
  EmbeddingDataset ds = open_dataset(a.manifest, a.embeddings, err);
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  std::size_t n_rows = 0;
  for (const auto &[spk, recs] : ds.speakers()) {
    std::vector<std::size_t> keep;
    for (std::size_t r : recs)
      if (!filter || filter->count(ds.record(r).task)) keep.push_back(r);
    if (keep.empty()) continue;
    n_rows += keep.size();
    groups.emplace_back(spk, std::move(keep));
  }
  if (n_rows == 0) throw ValidationError("--task: no recordings match");
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(ds.dim()));
  Eigen::Index row = 0;
  for (const auto &[spk, recs] : groups)
    for (std::size_t r : recs) raw.row(row++) = ds.embedding(r).transpose();
  PreprocessParams pre = fit_preprocess(raw, !a.no_length_norm);
  GroupedVectors grouped;
  row = 0;
  for (const auto &[spk, recs] : groups) {
    SpeakerGroup g{spk, {}};
    for (std::size_t i = 0; i < recs.size(); ++i)
      g.vectors.push_back(apply_preprocess(pre, raw.row(row++).transpose()));
    grouped.push_back(std::move(g));
  }
  PldaTrainingStats stats;
  PldaModel model = train_plda(grouped, a.plda, &stats);
  json config = {{"command", "train"},
                 {"manifest", a.manifest},
                 {"embeddings", a.embeddings},
                 {"task", tasks_to_json(filter)},
                 {"length_normalize", !a.no_length_norm},
                 {"max_iters", a.plda.max_iters},
                 {"min_speakers", a.plda.min_speakers},
                 {"n_speakers", grouped.size()},
                 {"n_recordings", n_rows}};
  const fs::path dir = prepare_out(a.out);
  write_model(dir / "model.bin", pre, model, config.dump());
  out << "trained on " << grouped.size() << " speakers, " << n_rows
      << " recordings; log-likelihood " << stats.log_likelihood.back() << "\n";
  return 0;
}

struct ThresholdArgs {
  std::string manifest, embeddings, model, out;
  std::uint64_t seed = 0;
  DcfOptions dcf;
  ProtocolOptions protocol;
};

int cmd_threshold(const ThresholdArgs &a, std::ostream &out, std::ostream &err) {
  const DcfConfig dcf = a.dcf.resolve();
  const ThresholdProtocol protocol = a.protocol.resolve();
  EmbeddingDataset ds = open_dataset(a.manifest, a.embeddings, err);
  StoredModel stored = read_model(a.model);
  ThresholdEstimate est = averaged_threshold(ds, stored.model, stored.preprocess, dcf, protocol,
                                             a.seed);
  json config = {{"command", "threshold"}, {"manifest", a.manifest}, {"embeddings", a.embeddings},
                 {"model", a.model},       {"dcf", dcf_to_json(dcf)},
                 {"protocol", protocol_to_json(protocol)}, {"seed", a.seed}};
  json j = {{"config", config},
            {"threshold", est.threshold},
            {"criterion_value", est.criterion_value},
            {"n_runs_used", est.n_runs_used},
            {"run_thresholds", est.run_thresholds}};
  write_json(prepare_out(a.out) / "threshold.json", j);
  out << "threshold " << est.threshold << "\ncriterion_value " << est.criterion_value
      << "\nn_runs_used " << est.n_runs_used << "\n";
  return 0;
}

struct AttackArgs {
  std::string manifest, embeddings, model, threshold_file, variant = "all", out;
  double threshold = 0;
  CLI::Option *threshold_opt = nullptr;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  SplitOptions split;
};

int cmd_attack(const AttackArgs &a, std::ostream &out, std::ostream &err) {
  SplitSpec spec = a.split.resolve();
  spec.seed = a.seed;
  spec.validate();
  const AttackVariant variant = AttackVariant::parse(a.variant);
  if (a.threshold_file.empty() == (a.threshold_opt->count() == 0))
    throw ValidationError("give exactly one of --threshold-file and --threshold");
  const double threshold = a.threshold_file.empty() ? a.threshold : threshold_from_file(a.threshold_file);
  EmbeddingDataset ds = open_dataset(a.manifest, a.embeddings, err);
  StoredModel stored = read_model(a.model);
  ExperimentSplit split = sample_split(ds, spec);
  AttackResult res = run_attack(ds, stored.model, stored.preprocess, threshold, split, variant,
                                a.threads);
  const TrialCounts c = count_outcomes(res);

  json config = {{"command", "attack"},     {"manifest", a.manifest},
                 {"embeddings", a.embeddings}, {"model", a.model},
                 {"threshold_file", a.threshold_file}, {"threshold", threshold},
                 {"split", split_to_json(spec)},  {"variant", variant.name()},
                 {"seed", a.seed}};
  json matches = json::array();
  for (const auto &m : res.matches)
    matches.push_back({{"probe_speaker", m.probe_speaker},
                       {"matched_known_speaker", m.matched_known_speaker},
                       {"score", m.score},
                       {"is_true", m.is_true}});
  const auto prec = precision(c.ta, c.fa);
  json j = {{"config", config},
            {"n_known", res.n_known},
            {"n_unknown", res.n_unknown},
            {"n_overlap", res.n_overlap},
            {"n_comparisons", res.n_comparisons},
            {"ta", c.ta},
            {"fa", c.fa},
            {"precision", prec ? json(*prec) : json(nullptr)},
            {"far", c.n_nontarget_comparisons ? json(far(static_cast<double>(c.fa),
                                                          static_cast<double>(c.n_nontarget_comparisons)))
                                              : json(nullptr)},
            {"overlap_ids", split.overlap_ids},
            {"matches", matches}};
  write_json(prepare_out(a.out) / "attack.json", j);
  out << "ta " << c.ta << "\nfa " << c.fa << "\nn_comparisons " << res.n_comparisons << "\n";
  return 0;
}

struct SweepArgs {
  std::string manifest, embeddings, axis = "known", points, fixed_pool, variant = "all",
      group_by = "n_comparisons", out;
  std::size_t n_splits = 1;
  bool full_overlap = false, no_length_norm = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  PldaConfig plda;
  SplitOptions split;
  DcfOptions dcf;
  ProtocolOptions protocol;
};

int cmd_sweep(const SweepArgs &a, std::ostream &out, std::ostream &err) {
  SweepConfig cfg;
  cfg.split_template = a.split.resolve();
  if (!a.fixed_pool.empty()) cfg.split_template.fixed_unknown_pool = read_id_list(a.fixed_pool);
  auto axis = parse_sweep_axis(a.axis);
  if (!axis) throw ValidationError("--axis: expected known, unknown or both");
  std::vector<std::size_t> sizes;
  for (const auto &tok : split_commas(a.points)) {
    auto x = tok.find('x');
    if (x == std::string::npos) {
      sizes.push_back(parse_size(tok, "--points"));
      for (const auto &p : make_sweep_points(*axis, std::span(&sizes.back(), 1), cfg.split_template))
        cfg.points.push_back(p);
    } else {
      cfg.points.push_back({parse_size(tok.substr(0, x), "--points"),
                            parse_size(tok.substr(x + 1), "--points")});
    }
  }
  if (cfg.points.empty()) throw ValidationError("--points: no sweep points");
  for (const auto &p : cfg.points)
    if (p.n_known == 0 || p.n_unknown == 0)
      throw ValidationError("--points: a point has a zero set size (set --n-known/--n-unknown "
                            "for the fixed side)");
  cfg.full_overlap = a.full_overlap;
  cfg.n_splits = a.n_splits;
  cfg.protocol = a.protocol.resolve();
  cfg.dcf = a.dcf.resolve();
  cfg.plda = a.plda;
  cfg.length_normalize = !a.no_length_norm;
  cfg.variant = AttackVariant::parse(a.variant);
  cfg.master_seed = a.seed;
  cfg.threads = a.threads;
  auto group_by = parse_group_by(a.group_by);
  if (!group_by) throw ValidationError("--group-by: expected n_known, n_unknown or n_comparisons");
  cfg.validate();

  EmbeddingDataset ds = open_dataset(a.manifest, a.embeddings, err);
  Report report;
  json points = json::array();
  for (const auto &p : cfg.points) points.push_back({p.n_known, p.n_unknown});
  report.config = {{"command", "sweep"},
                   {"manifest", a.manifest},
                   {"embeddings", a.embeddings},
                   {"axis", a.axis},
                   {"points", points},
                   {"split", split_to_json(cfg.split_template)},
                   {"full_overlap", cfg.full_overlap},
                   {"n_splits", cfg.n_splits},
                   {"dcf", dcf_to_json(cfg.dcf)},
                   {"protocol", protocol_to_json(cfg.protocol)},
                   {"max_iters", cfg.plda.max_iters},
                   {"min_speakers", cfg.plda.min_speakers},
                   {"length_normalize", cfg.length_normalize},
                   {"variant", cfg.variant.name()},
                   {"group_by", a.group_by},
                   {"seed", cfg.master_seed}};
  report.group_by = *group_by;
  report.runs = run_sweep(ds, cfg);
  report.summary = aggregate(report.runs, report.group_by);
  const fs::path dir = prepare_out(a.out);
  emit_report(report, ReportFormat::kCsv, dir);
  emit_report(report, ReportFormat::kJson, dir);
  out << "wrote " << report.runs.size() << " runs to " << dir.string() << "\n";
  return 0;
}

struct ReportArgs {
  std::string runs_csv, group_by = "n_comparisons", out;
};

int cmd_report(const ReportArgs &a, std::ostream &out) {
  auto group_by = parse_group_by(a.group_by);
  if (!group_by) throw ValidationError("--group-by: expected n_known, n_unknown or n_comparisons");
  Report report;
  report.config = {{"command", "report"}, {"runs_csv", a.runs_csv}, {"group_by", a.group_by}};
  report.group_by = *group_by;
  report.runs = read_runs_csv(a.runs_csv);
  if (report.runs.empty()) throw ValidationError("--runs-csv: no runs in " + a.runs_csv);
  report.summary = aggregate(report.runs, report.group_by);
  const fs::path dir = prepare_out(a.out);
  std::ostringstream csv;
  write_summary_csv(csv, report.summary, &report.config);
  write_file_atomic(dir / "summary.csv", csv.str());
  write_json(dir / "summary.json", report_to_json(report));
  for (const auto &row : report.summary) {
    out << row.group << " mean_fa " << row.mean_fa << " mean_precision ";
    if (row.mean_precision)
      out << *row.mean_precision;
    else
      out << "NA";
    out << "\n";
  }
  return 0;
}

void add_dataset_opts(CLI::App *app, std::string &manifest, std::string &embeddings) {
  app->add_option("--manifest", manifest, "manifest CSV")->required();
  app->add_option("--embeddings", embeddings, "embedding file")->required();
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Speaker re-identification risk toolkit", "reid-risk"};
  app.require_subcommand(1);

  GenArgs gen;
  auto *gen_cmd = app.add_subcommand("gen", "sample a synthetic dataset");
  gen_cmd->add_option("--world", gen.world, "world parameters (JSON)")->required();
  gen.seed_opt = gen_cmd->add_option("--seed", gen.seed, "override the world seed");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();

  TrainArgs train;
  auto *train_cmd = app.add_subcommand("train", "fit preprocessing and PLDA");
  add_dataset_opts(train_cmd, train.manifest, train.embeddings);
  train_cmd->add_option("--task", train.task, "comma-separated tasks to train on");
  train_cmd->add_flag("--no-length-norm", train.no_length_norm, "skip length normalization");
  train_cmd->add_option("--max-iters", train.plda.max_iters, "EM iterations")
      ->capture_default_str();
  train_cmd->add_option("--min-speakers", train.plda.min_speakers, "minimum training speakers")
      ->capture_default_str();
  train_cmd->add_option("--out", train.out, "output directory")->required();

  ThresholdArgs thr;
  auto *thr_cmd = app.add_subcommand("threshold", "calibrate the averaged minDCF threshold");
  add_dataset_opts(thr_cmd, thr.manifest, thr.embeddings);
  thr_cmd->add_option("--model", thr.model, "model file")->required();
  thr.dcf.add(thr_cmd);
  thr.protocol.add(thr_cmd);
  thr_cmd->add_option("--seed", thr.seed, "random seed")->capture_default_str();
  thr_cmd->add_option("--out", thr.out, "output directory")->required();

  AttackArgs att;
  auto *att_cmd = app.add_subcommand("attack", "run one marketer attack");
  add_dataset_opts(att_cmd, att.manifest, att.embeddings);
  att_cmd->add_option("--model", att.model, "model file")->required();
  att_cmd->add_option("--threshold-file", att.threshold_file, "threshold.json");
  att.threshold_opt = att_cmd->add_option("--threshold", att.threshold, "explicit threshold");
  att.split.add(att_cmd, true);
  att_cmd->add_option("--variant", att.variant, "all, rank1 or topn:N")->capture_default_str();
  att_cmd->add_option("--seed", att.seed, "random seed")->capture_default_str();
  att_cmd->add_option("--threads", att.threads, "scoring threads")->capture_default_str();
  att_cmd->add_option("--out", att.out, "output directory")->required();

  SweepArgs sw;
  auto *sw_cmd = app.add_subcommand("sweep", "repeat attacks over a range of set sizes");
  add_dataset_opts(sw_cmd, sw.manifest, sw.embeddings);
  sw.split.add(sw_cmd, false);
  sw_cmd->add_option("--axis", sw.axis, "known, unknown or both")->capture_default_str();
  sw_cmd->add_option("--points", sw.points, "comma-separated sizes, or KxU pairs")->required();
  sw_cmd->add_option("--splits", sw.n_splits, "splits per point")->capture_default_str();
  sw_cmd->add_flag("--full-overlap", sw.full_overlap, "overlap equals the unknown set");
  sw_cmd->add_option("--fixed-unknown-pool", sw.fixed_pool,
                     "file of unknown-only speaker ids (one per line)");
  sw.dcf.add(sw_cmd);
  sw.protocol.add(sw_cmd);
  sw_cmd->add_option("--variant", sw.variant, "all, rank1 or topn:N")->capture_default_str();
  sw_cmd->add_option("--max-iters", sw.plda.max_iters, "EM iterations")->capture_default_str();
  sw_cmd->add_flag("--no-length-norm", sw.no_length_norm, "skip length normalization");
  sw_cmd->add_option("--group-by", sw.group_by, "summary grouping column")
      ->capture_default_str();
  sw_cmd->add_option("--seed", sw.seed, "master seed")->capture_default_str();
  sw_cmd->add_option("--threads", sw.threads, "worker threads")->capture_default_str();
  sw_cmd->add_option("--out", sw.out, "output directory")->required();

  ReportArgs rep;
  auto *rep_cmd = app.add_subcommand("report", "aggregate an existing runs.csv");
  rep_cmd->add_option("--runs-csv", rep.runs_csv, "per-run CSV")->required();
  rep_cmd->add_option("--group-by", rep.group_by, "grouping column")->capture_default_str();
  rep_cmd->add_option("--out", rep.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*train_cmd) return cmd_train(train, out, err);
    if (*thr_cmd) return cmd_threshold(thr, out, err);
    if (*att_cmd) return cmd_attack(att, out, err);
    if (*sw_cmd) return cmd_sweep(sw, out, err);
    if (*rep_cmd) return cmd_report(rep, out);
  } catch (const ValidationError &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace reid
