// src/metrics.cc

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

#include "reid/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "reid/dataio.h"
#include "reid/error.h"

namespace reid {

namespace {

double sorted_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_optional(const std::optional<double> &v) { return v ? fmt_double(*v) : "NA"; }

std::size_t group_key(const RunRow &r, GroupBy g) {
  switch (g) {
    case GroupBy::kNKnown: return r.n_known;
    case GroupBy::kNUnknown: return r.n_unknown;
    case GroupBy::kNComparisons: return r.n_comparisons;
  }
  return r.n_comparisons;
}

void write_config_line(std::ostream &out, const nlohmann::json *config) {
  if (config) out << "# config: " << config->dump() << '\n';
}

std::vector<std::string> split_commas(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

template <typename T>
T parse_number(const std::string &s, std::size_t line, const std::string &column) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw ParseError(line, "bad value '" + s + "' in column " + column);
  return v;
}

double parse_real(const std::string &s, std::size_t line, const std::string &column) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw ParseError(line, "bad value '" + s + "' in column " + column);
  }
}

constexpr const char *kRunColumns[] = {"point", "split", "n_known", "n_unknown", "n_overlap",
                                       "n_comparisons", "ta", "fa", "precision", "far",
                                       "threshold", "seed", "variant"};
constexpr const char *kSummaryColumns[] = {"group", "mean_ta", "mean_fa", "mean_precision",
                                           "mean_far", "n_runs"};

template <std::size_t N>
void write_header(std::ostream &out, const char *const (&cols)[N]) {
  for (std::size_t i = 0; i < N; ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

}  // namespace

void RunRow::validate() const {
  if (n_comparisons != n_known * n_unknown)
    throw ValidationError("run row: n_comparisons != n_known * n_unknown");
  if (n_overlap > std::min(n_known, n_unknown))
    throw ValidationError("run row: n_overlap exceeds set sizes");
}

std::optional<double> precision(std::size_t ta, std::size_t fa) {
  if (ta + fa == 0) return std::nullopt;
  return static_cast<double>(ta) / static_cast<double>(ta + fa);
}

double far(double fa, double n_nontarget_comparisons) {
  if (!(n_nontarget_comparisons > 0.0))
    throw ValidationError("FAR needs a positive number of non-target comparisons");
  if (fa < 0.0) throw ValidationError("FA count must be non-negative");
  return fa / n_nontarget_comparisons;
}

double pearson_r(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw ValidationError("pearson_r: length mismatch (" + std::to_string(xs.size()) + " vs " +
                          std::to_string(ys.size()) + ")");
  if (xs.size() < 3) throw ValidationError("pearson_r needs at least 3 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw ValidationError("pearson_r: constant input, correlation undefined");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw ValidationError("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(boost::math::ibeta(0.5 * df, 0.5, x), 0.0, 1.0);
}

StatResult t_test_r(double r, std::size_t n) {
  if (n < 3) throw ValidationError("t_test_r needs n >= 3");
  if (!(std::abs(r) <= 1.0)) throw ValidationError("correlation must lie in [-1, 1]");
  StatResult s;
  s.r = r;
  s.df = n - 2;
  if (std::abs(r) == 1.0) {
    s.saturated = true;
    s.t = std::copysign(std::numeric_limits<double>::infinity(), r);
    s.p = 0.0;
    return s;
  }
  s.t = r * std::sqrt(static_cast<double>(s.df)) / std::sqrt(1.0 - r * r);
  s.p = student_t_two_sided_p(s.t, static_cast<double>(s.df));
  return s;
}

std::string_view group_by_name(GroupBy g) {
  switch (g) {
    case GroupBy::kNKnown: return "n_known";
    case GroupBy::kNUnknown: return "n_unknown";
    case GroupBy::kNComparisons: return "n_comparisons";
  }
  return "n_comparisons";
}

std::optional<GroupBy> parse_group_by(std::string_view name) {
  for (GroupBy g : {GroupBy::kNKnown, GroupBy::kNUnknown, GroupBy::kNComparisons})
    if (group_by_name(g) == name) return g;
  if (name == "known") return GroupBy::kNKnown;
  if (name == "unknown") return GroupBy::kNUnknown;
  if (name == "comparisons") return GroupBy::kNComparisons;
  return std::nullopt;
}

std::vector<SummaryRow> aggregate(std::span<const RunRow> rows, GroupBy group_by) {
  if (rows.empty()) throw ValidationError("aggregate: no rows");
  std::map<std::size_t, std::vector<const RunRow *>> groups;
  for (const auto &r : rows) {
    r.validate();
    groups[group_key(r, group_by)].push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const auto &[key, members] : groups) {
    SummaryRow s;
    s.group = std::to_string(key);
    s.n_runs = members.size();
    std::vector<double> ta, fa, prec, fars;
    for (const RunRow *r : members) {
      ta.push_back(static_cast<double>(r->ta));
      fa.push_back(static_cast<double>(r->fa));
      fars.push_back(far(static_cast<double>(r->fa), static_cast<double>(r->n_nontarget())));
      if (auto p = precision(r->ta, r->fa))
        prec.push_back(*p);
      else
        ++s.n_precision_undefined;
    }
    s.mean_ta = sorted_mean(ta);
    s.mean_fa = sorted_mean(fa);
    s.mean_far = sorted_mean(fars);
    if (!prec.empty()) s.mean_precision = sorted_mean(prec);
    out.push_back(std::move(s));
  }
  return out;
}

StatResult fa_correlation(std::span<const RunRow> rows, GroupBy against) {
  std::vector<double> xs, ys;
  for (const auto &r : rows) {
    xs.push_back(static_cast<double>(group_key(r, against)));
    ys.push_back(static_cast<double>(r.fa));
  }
  return t_test_r(pearson_r(xs, ys), rows.size());
}

void write_runs_csv(std::ostream &out, std::span<const RunRow> rows,
                    const nlohmann::json *config) {
  write_config_line(out, config);
  write_header(out, kRunColumns);
  for (const auto &r : rows) {
    const std::size_t nn = r.n_nontarget();
    out << r.point << ',' << r.split << ',' << r.n_known << ',' << r.n_unknown << ','
        << r.n_overlap << ',' << r.n_comparisons << ',' << r.ta << ',' << r.fa << ','
        << fmt_optional(precision(r.ta, r.fa)) << ','
        << (nn > 0 ? fmt_double(far(static_cast<double>(r.fa), static_cast<double>(nn)))
                   : std::string("NA"))
        << ',' << fmt_double(r.threshold) << ',' << r.seed << ',' << r.variant << '\n';
  }
}

void write_summary_csv(std::ostream &out, std::span<const SummaryRow> rows,
                       const nlohmann::json *config) {
  write_config_line(out, config);
  write_header(out, kSummaryColumns);
  for (const auto &s : rows)
    out << s.group << ',' << fmt_double(s.mean_ta) << ',' << fmt_double(s.mean_fa) << ','
        << fmt_optional(s.mean_precision) << ',' << fmt_double(s.mean_far) << ',' << s.n_runs
        << '\n';
}

std::vector<RunRow> read_runs_csv(std::istream &in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    header = split_commas(line);
    break;
  }
  if (header.empty()) throw ParseError(line_no, "missing runs CSV header");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char *name : kRunColumns)
    if (!col.count(name)) throw ParseError(line_no, std::string("missing column ") + name);

  std::vector<RunRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = split_commas(line);
    if (f.size() != header.size())
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields");
    auto get = [&](const char *name) -> const std::string & { return f[col[name]]; };
    auto uint = [&](const char *name) {
      return parse_number<std::size_t>(get(name), line_no, name);
    };
    RunRow r;
    r.point = uint("point");
    r.split = uint("split");
    r.n_known = uint("n_known");
    r.n_unknown = uint("n_unknown");
    r.n_overlap = uint("n_overlap");
    r.n_comparisons = uint("n_comparisons");
    r.ta = uint("ta");
    r.fa = uint("fa");
    r.threshold = parse_real(get("threshold"), line_no, "threshold");
    r.seed = parse_number<std::uint64_t>(get("seed"), line_no, "seed");
    r.variant = get("variant");
    try {
      r.validate();
    } catch (const ValidationError &e) {
      throw ParseError(line_no, e.what());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RunRow> read_runs_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return read_runs_csv(in);
  } catch (const ParseError &e) {
    throw ParseError(e.line(), path.string() + ": " + e.detail());
  }
}

namespace {

nlohmann::json optional_json(const std::optional<double> &v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json stat_json(const StatResult &s) {
  nlohmann::json j;
  j["r"] = s.r;
  j["t"] = s.saturated ? nlohmann::json("inf") : nlohmann::json(s.t);
  j["df"] = s.df;
  j["p"] = s.p;
  j["saturated"] = s.saturated;
  return j;
}

}  // namespace

nlohmann::json report_to_json(const Report &report) {
  nlohmann::json j;
  j["config"] = report.config;
  j["group_by"] = std::string(group_by_name(report.group_by));
  auto &summary = j["summary"] = nlohmann::json::array();
  for (const auto &s : report.summary) {
    summary.push_back({{"group", s.group},
                       {"mean_ta", s.mean_ta},
                       {"mean_fa", s.mean_fa},
                       {"mean_precision", optional_json(s.mean_precision)},
                       {"n_precision_undefined", s.n_precision_undefined},
                       {"mean_far", s.mean_far},
                       {"n_runs", s.n_runs}});
  }
  auto &runs = j["runs"] = nlohmann::json::array();
  for (const auto &r : report.runs) {
    const std::size_t nn = r.n_nontarget();
    runs.push_back({{"point", r.point},
                    {"split", r.split},
                    {"n_known", r.n_known},
                    {"n_unknown", r.n_unknown},
                    {"n_overlap", r.n_overlap},
                    {"n_comparisons", r.n_comparisons},
                    {"ta", r.ta},
                    {"fa", r.fa},
                    {"precision", optional_json(precision(r.ta, r.fa))},
                    {"far", nn > 0 ? nlohmann::json(far(static_cast<double>(r.fa),
                                                        static_cast<double>(nn)))
                                   : nlohmann::json(nullptr)},
                    {"threshold", r.threshold},
                    {"seed", r.seed},
                    {"variant", r.variant}});
  }
  // Correlation of FAs with the grouping column, when it is defined.
  try {
    if (report.runs.size() >= 3)
      j["fa_correlation"] = stat_json(fa_correlation(report.runs, report.group_by));
  } catch (const ValidationError &) {
    j["fa_correlation"] = nullptr;
  }
  return j;
}

Report report_from_json(const nlohmann::json &j) {
  Report rep;
  rep.config = j.value("config", nlohmann::json::object());
  auto g = parse_group_by(j.at("group_by").get<std::string>());
  if (!g) throw ValidationError("report JSON: unknown group_by");
  rep.group_by = *g;
  for (const auto &s : j.at("summary")) {
    SummaryRow row;
    row.group = s.at("group").get<std::string>();
    row.mean_ta = s.at("mean_ta").get<double>();
    row.mean_fa = s.at("mean_fa").get<double>();
    if (!s.at("mean_precision").is_null()) row.mean_precision = s.at("mean_precision").get<double>();
    row.n_precision_undefined = s.value("n_precision_undefined", std::size_t{0});
    row.mean_far = s.at("mean_far").get<double>();
    row.n_runs = s.at("n_runs").get<std::size_t>();
    rep.summary.push_back(std::move(row));
  }
  for (const auto &r : j.value("runs", nlohmann::json::array())) {
    RunRow row;
    row.point = r.at("point").get<std::size_t>();
    row.split = r.at("split").get<std::size_t>();
    row.n_known = r.at("n_known").get<std::size_t>();
    row.n_unknown = r.at("n_unknown").get<std::size_t>();
    row.n_overlap = r.at("n_overlap").get<std::size_t>();
    row.n_comparisons = r.at("n_comparisons").get<std::size_t>();
    row.ta = r.at("ta").get<std::size_t>();
    row.fa = r.at("fa").get<std::size_t>();
    row.threshold = r.at("threshold").get<double>();
    row.seed = r.at("seed").get<std::uint64_t>();
    row.variant = r.at("variant").get<std::string>();
    rep.runs.push_back(std::move(row));
  }
  return rep;
}

std::vector<std::filesystem::path> emit_report(const Report &report, ReportFormat format,
                                               const std::filesystem::path &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  const nlohmann::json *cfg = report.config.empty() ? nullptr : &report.config;
  if (format == ReportFormat::kCsv) {
    std::ostringstream runs, summary;
    write_runs_csv(runs, report.runs, cfg);
    write_summary_csv(summary, report.summary, cfg);
    written.push_back(dir / "runs.csv");
    write_file_atomic(written.back(), runs.str());
    written.push_back(dir / "summary.csv");
    write_file_atomic(written.back(), summary.str());
  } else {
    written.push_back(dir / "summary.json");
    write_file_atomic(written.back(), report_to_json(report).dump(2) + "\n");
  }
  return written;
}

}  // namespace reid
