// include/reid/metrics.h

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

#ifndef REID_METRICS_H_
#define REID_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace reid {

// One attack run of a sweep.
struct RunRow {
  std::size_t point = 0;        // index of the sweep point
  std::size_t split = 0;        // split index within the point
  std::size_t n_known = 0;
  std::size_t n_unknown = 0;
  std::size_t n_overlap = 0;
  std::size_t n_comparisons = 0;
  std::size_t ta = 0;
  std::size_t fa = 0;
  double threshold = 0.0;
  std::uint64_t seed = 0;
  std::string variant = "all";

  std::size_t n_nontarget() const { return n_comparisons - n_overlap; }
  void validate() const;
  bool operator==(const RunRow &) const = default;
};

// TA / (TA + FA); nullopt when nothing was accepted.
std::optional<double> precision(std::size_t ta, std::size_t fa);

// fa / n_nontarget_comparisons.  `fa` may be a mean over runs.
double far(double fa, double n_nontarget_comparisons);

double pearson_r(std::span<const double> xs, std::span<const double> ys);

struct StatResult {
  double r = 0.0;
  double t = 0.0;
  std::size_t df = 0;
  double p = 1.0;  // two-sided
  bool saturated = false;  // |r| == 1: t is infinite, p is 0
};

// t = r sqrt(n-2) / sqrt(1-r^2) against Student's t with n-2 degrees of
// freedom.
StatResult t_test_r(double r, std::size_t n);

// Two-sided tail probability P(|T| >= |t|) for Student's t.
double student_t_two_sided_p(double t, double df);

enum class GroupBy { kNKnown, kNUnknown, kNComparisons };
std::string_view group_by_name(GroupBy g);
std::optional<GroupBy> parse_group_by(std::string_view name);

struct SummaryRow {
  std::string group;
  double mean_ta = 0.0;
  double mean_fa = 0.0;
  std::optional<double> mean_precision;  // over runs with a defined precision
  std::size_t n_precision_undefined = 0;
  double mean_far = 0.0;                 // mean of per-run FARs
  std::size_t n_runs = 0;

  bool operator==(const SummaryRow &) const = default;
};

// Groups ordered by ascending numeric key.  Means are summed in sorted order
// so the result does not depend on row order.
std::vector<SummaryRow> aggregate(std::span<const RunRow> rows, GroupBy group_by);

// Pearson r and t-test of FA counts against the chosen size column.
StatResult fa_correlation(std::span<const RunRow> rows, GroupBy against);

// Per-run table columns:
//   point,split,n_known,n_unknown,n_overlap,n_comparisons,ta,fa,precision,far,threshold,seed,variant
// Summary columns: group,mean_ta,mean_fa,mean_precision,mean_far,n_runs
// Undefined values are written as NA.  A configuration, when given, is
// prepended as a single `# config: {...}` comment line.
void write_runs_csv(std::ostream &out, std::span<const RunRow> rows,
                    const nlohmann::json *config = nullptr);
void write_summary_csv(std::ostream &out, std::span<const SummaryRow> rows,
                       const nlohmann::json *config = nullptr);
std::vector<RunRow> read_runs_csv(std::istream &in);
std::vector<RunRow> read_runs_csv(const std::filesystem::path &path);

struct Report {
  nlohmann::json config = nlohmann::json::object();
  GroupBy group_by = GroupBy::kNComparisons;
  std::vector<RunRow> runs;
  std::vector<SummaryRow> summary;
};

enum class ReportFormat { kCsv, kJson };

// kCsv writes runs.csv and summary.csv into `dir`; kJson writes
// summary.json (configuration, summary, correlation and per-run rows).
// Files are written atomically.
std::vector<std::filesystem::path> emit_report(const Report &report, ReportFormat format,
                                               const std::filesystem::path &dir);

nlohmann::json report_to_json(const Report &report);
Report report_from_json(const nlohmann::json &j);

}  // namespace reid

#endif  // REID_METRICS_H_
