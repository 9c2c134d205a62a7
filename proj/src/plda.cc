// src/plda.cc

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

#include "reid/plda.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <thread>

#include "reid/dataio.h"
#include "reid/error.h"
#include "byte_io.h"

namespace reid {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

MatrixXd symmetrized(const MatrixXd &m) { return 0.5 * (m + m.transpose()); }

double log_det_pd(const Eigen::LLT<MatrixXd> &llt) {
  const MatrixXd &l = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

// Plain sequential loops: the reduction order is fixed regardless of
// alignment or vectorization of the operands.
double dot_fixed(const VectorXd &a, const VectorXd &b) {
  double s = 0.0;
  const Eigen::Index n = a.size();
  for (Eigen::Index k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

VectorXd matvec_fixed(const MatrixXd &m, const VectorXd &v) {
  VectorXd out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < m.cols(); ++k) s += m(i, k) * v[k];
    out[i] = s;
  }
  return out;
}

double ridge_for(const MatrixXd &phi_w) {
  return 1e-6 * phi_w.trace() / static_cast<double>(phi_w.rows());
}

void check_finite(const VectorXd &v, const char *what) {
  if (!v.allFinite())
    throw ValidationError(std::string(what) + " contains non-finite values");
}

// Sufficient statistics of grouped data for EM and likelihood evaluation.
struct GroupStats {
  std::size_t dim = 0;
  std::size_t n_total = 0;
  // Speaker means minus mu, bucketed by recording count.
  std::map<std::size_t, MatrixXd> means_by_count;
  MatrixXd within_scatter;
  VectorXd mu;
  double log_count_sum = 0.0;  // sum_k log n_k
  std::size_t n_speakers = 0;
};

GroupStats collect_stats(const GroupedVectors &grouped) {
  GroupStats st;
  if (grouped.empty()) throw ValidationError("no speakers to train on");
  st.dim = static_cast<std::size_t>(grouped.front().vectors.empty()
                                        ? 0
                                        : grouped.front().vectors.front().size());
  const auto d = static_cast<Eigen::Index>(st.dim);
  st.within_scatter = MatrixXd::Zero(d, d);
  st.mu = VectorXd::Zero(d);
  std::vector<VectorXd> means;
  std::vector<std::size_t> counts;
  means.reserve(grouped.size());
  std::set<std::string> seen;
  for (const auto &g : grouped) {
    if (!seen.insert(g.speaker_id).second)
      throw ValidationError("speaker '" + g.speaker_id + "' appears twice");
    if (g.vectors.empty())
      throw ValidationError("speaker '" + g.speaker_id + "' has no recordings");
    VectorXd mean = VectorXd::Zero(d);
    for (const auto &v : g.vectors) {
      if (v.size() != d)
        throw ValidationError("dimension mismatch in speaker '" + g.speaker_id + "'");
      check_finite(v, "training vector");
      mean += v;
    }
    mean /= static_cast<double>(g.vectors.size());
    for (const auto &v : g.vectors) {
      VectorXd c = v - mean;
      st.within_scatter.selfadjointView<Eigen::Lower>().rankUpdate(c);
    }
    means.push_back(std::move(mean));
    counts.push_back(g.vectors.size());
    st.n_total += g.vectors.size();
    st.log_count_sum += std::log(static_cast<double>(g.vectors.size()));
  }
  st.within_scatter = st.within_scatter.selfadjointView<Eigen::Lower>();
  st.n_speakers = means.size();
  for (const auto &m : means) st.mu += m;
  st.mu /= static_cast<double>(means.size());

  std::map<std::size_t, std::size_t> per_count;
  for (std::size_t c : counts) ++per_count[c];
  for (auto [c, k] : per_count)
    st.means_by_count[c].resize(d, static_cast<Eigen::Index>(k));
  std::map<std::size_t, Eigen::Index> fill;
  for (std::size_t i = 0; i < means.size(); ++i) {
    Eigen::Index &col = fill[counts[i]];
    st.means_by_count[counts[i]].col(col++) = means[i] - st.mu;
  }
  return st;
}

double log_likelihood(const GroupStats &st, const MatrixXd &phi_b,
                      const MatrixXd &phi_w) {
  const double d = static_cast<double>(st.dim);
  Eigen::LLT<MatrixXd> w_llt(phi_w);
  if (w_llt.info() != Eigen::Success)
    throw NumericalError("within-class covariance is not positive definite");
  const double n_within =
      static_cast<double>(st.n_total) - static_cast<double>(st.n_speakers);
  double ll = -0.5 * (n_within * (log_det_pd(w_llt) + d * kLog2Pi) +
                      w_llt.solve(st.within_scatter).trace());
  ll -= 0.5 * d * st.log_count_sum;
  for (const auto &[n, means] : st.means_by_count) {
    MatrixXd c = phi_b + phi_w / static_cast<double>(n);
    Eigen::LLT<MatrixXd> c_llt(c);
    if (c_llt.info() != Eigen::Success)
      throw NumericalError("class-mean covariance is not positive definite");
    const double ld = log_det_pd(c_llt);
    MatrixXd sol = c_llt.solve(means);
    const double quad = means.cwiseProduct(sol).sum();
    ll += -0.5 * (static_cast<double>(means.cols()) * (ld + d * kLog2Pi) + quad);
  }
  return ll;
}

}  // namespace

PreprocessParams fit_preprocess(const MatrixXd &rows, bool length_normalize) {
  if (rows.rows() == 0 || rows.cols() == 0)
    throw ValidationError("fit_preprocess needs at least one row");
  if (!rows.allFinite()) throw ValidationError("non-finite embedding values");
  PreprocessParams p;
  p.global_mean = rows.colwise().mean().transpose();
  p.length_normalize = length_normalize;
  return p;
}

VectorXd apply_preprocess(const PreprocessParams &params, const VectorXd &x) {
  if (x.size() != params.global_mean.size())
    throw ValidationError("preprocess dimension mismatch: got " +
                          std::to_string(x.size()) + ", expected " +
                          std::to_string(params.global_mean.size()));
  VectorXd c = x - params.global_mean;
  if (params.length_normalize) {
    const double n = c.norm();
    if (n > 0.0) c /= n;
  }
  return c;
}

EnrollmentVector enroll_speaker(const PreprocessParams &params,
                                std::string speaker_id,
                                std::span<const VectorXd> raw_recordings) {
  if (raw_recordings.empty())
    throw ValidationError("cannot enroll speaker '" + speaker_id +
                          "' with no recordings");
  VectorXd sum = VectorXd::Zero(params.global_mean.size());
  for (const auto &r : raw_recordings) sum += apply_preprocess(params, r);
  EnrollmentVector e;
  e.speaker_id = std::move(speaker_id);
  e.n_recordings = raw_recordings.size();
  e.vector = sum / static_cast<double>(raw_recordings.size());
  return e;
}

PldaModel::PldaModel(VectorXd mu, MatrixXd phi_b, MatrixXd phi_w)
    : mu_(std::move(mu)), phi_b_(std::move(phi_b)), phi_w_(std::move(phi_w)) {
  const auto d = mu_.size();
  if (d == 0) throw ValidationError("PLDA model needs dim > 0");
  if (phi_b_.rows() != d || phi_b_.cols() != d || phi_w_.rows() != d ||
      phi_w_.cols() != d)
    throw ValidationError("PLDA covariance shapes do not match mu");
  if (!mu_.allFinite() || !phi_b_.allFinite() || !phi_w_.allFinite())
    throw ValidationError("PLDA parameters must be finite");
  for (const MatrixXd *m : {&phi_b_, &phi_w_}) {
    const double scale = std::max(1.0, m->cwiseAbs().maxCoeff());
    if ((*m - m->transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
      throw ValidationError("PLDA covariance is not symmetric");
  }
  phi_b_ = symmetrized(phi_b_);
  phi_w_ = symmetrized(phi_w_);

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig_w(phi_w_, Eigen::EigenvaluesOnly);
  if (eig_w.eigenvalues().minCoeff() <= 0.0)
    throw ValidationError("within-class covariance is not positive definite");
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig_b(phi_b_, Eigen::EigenvaluesOnly);
  const double b_scale = std::max(1e-300, eig_b.eigenvalues().cwiseAbs().maxCoeff());
  if (eig_b.eigenvalues().minCoeff() < -1e-10 * b_scale)
    throw ValidationError("between-class covariance is not positive semi-definite");

  // total = phi_b + phi_w, schur = total - phi_b total^-1 phi_b.  With
  // Q = total^-1 - schur^-1 and P = total^-1 phi_b schur^-1,
  //   llr(a, b) = offset + 0.5 a'Qa + 0.5 b'Qb + a'Pb
  // on mu-centered vectors, offset = 0.5 (logdet total - logdet schur).
  const MatrixXd eye = MatrixXd::Identity(d, d);
  const MatrixXd total = phi_b_ + phi_w_;
  Eigen::LLT<MatrixXd> t_llt(total);
  if (t_llt.info() != Eigen::Success)
    throw NumericalError("total covariance is not positive definite");
  const MatrixXd total_inv = symmetrized(t_llt.solve(eye));
  const MatrixXd schur = symmetrized(total - phi_b_ * total_inv * phi_b_);
  Eigen::LLT<MatrixXd> s_llt(schur);
  if (s_llt.info() != Eigen::Success)
    throw NumericalError("same-speaker covariance is singular");
  const MatrixXd schur_inv = symmetrized(s_llt.solve(eye));
  q_ = total_inv - schur_inv;
  p_ = symmetrized(total_inv * phi_b_ * schur_inv);
  offset_ = 0.5 * (log_det_pd(t_llt) - log_det_pd(s_llt));
}

PldaModel::Side PldaModel::side(const VectorXd &v) const {
  if (v.size() != mu_.size())
    throw ValidationError("score dimension mismatch: got " + std::to_string(v.size()) +
                          ", model has " + std::to_string(mu_.size()));
  check_finite(v, "scored vector");
  Side s;
  s.centered = v - mu_;
  s.transformed = matvec_fixed(p_, s.centered);
  s.quad = 0.5 * dot_fixed(s.centered, matvec_fixed(q_, s.centered));
  return s;
}

double PldaModel::combine(const Side &a, const Side &b) const {
  const double cross =
      0.5 * (dot_fixed(a.transformed, b.centered) + dot_fixed(b.transformed, a.centered));
  return offset_ + (a.quad + b.quad) + cross;
}

double score_pair(const PldaModel &model, const VectorXd &a, const VectorXd &b) {
  return model.combine(model.side(a), model.side(b));
}

MatrixXd score_matrix(const PldaModel &model, std::span<const VectorXd> enrollments,
                      std::span<const VectorXd> tests, unsigned threads) {
  if (enrollments.empty() || tests.empty())
    throw ValidationError("score_matrix needs nonempty enrollment and test lists");
  std::vector<PldaModel::Side> left, right;
  left.reserve(enrollments.size());
  right.reserve(tests.size());
  for (const auto &e : enrollments) left.push_back(model.side(e));
  for (const auto &t : tests) right.push_back(model.side(t));

  const auto n_rows = static_cast<Eigen::Index>(left.size());
  const auto n_cols = static_cast<Eigen::Index>(right.size());
  MatrixXd out(n_rows, n_cols);
  auto fill_rows = [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i)
      for (Eigen::Index j = 0; j < n_cols; ++j)
        out(i, j) = model.combine(left[i], right[j]);
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_rows)));
  if (threads == 1) {
    fill_rows(0, n_rows);
  } else {
    std::vector<std::jthread> pool;
    const Eigen::Index chunk = (n_rows + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const Eigen::Index b = t * chunk, e = std::min(n_rows, b + chunk);
      if (b < e) pool.emplace_back(fill_rows, b, e);
    }
  }
  return out;
}

MatrixXd score_matrix(const PldaModel &model, std::span<const EnrollmentVector> enrollments,
                      std::span<const VectorXd> tests, unsigned threads) {
  std::vector<VectorXd> vecs;
  vecs.reserve(enrollments.size());
  for (const auto &e : enrollments) vecs.push_back(e.vector);
  return score_matrix(model, vecs, tests, threads);
}

double plda_log_likelihood(const GroupedVectors &grouped, const VectorXd &mu,
                           const MatrixXd &phi_b, const MatrixXd &phi_w) {
  GroupStats st = collect_stats(grouped);
  // collect_stats centers on the mean of speaker means; recenter on mu.
  const VectorXd shift = st.mu - mu;
  for (auto &[n, means] : st.means_by_count) means.colwise() += shift;
  return log_likelihood(st, phi_b, phi_w);
}

PldaModel train_plda(const GroupedVectors &grouped, const PldaConfig &config,
                     PldaTrainingStats *stats) {
  if (config.max_iters < 0) throw ValidationError("max_iters must be >= 0");
  const std::size_t min_speakers = std::max<std::size_t>(config.min_speakers, 2);
  if (grouped.size() < min_speakers)
    throw ValidationError("PLDA training needs at least " +
                          std::to_string(min_speakers) + " speakers, got " +
                          std::to_string(grouped.size()));
  std::size_t multi = 0;
  for (const auto &g : grouped)
    if (g.vectors.size() >= 2) ++multi;
  if (multi < 2)
    throw ValidationError("PLDA training needs at least 2 speakers with >= 2 recordings");

  const GroupStats st = collect_stats(grouped);
  if (st.dim == 0) throw ValidationError("training vectors have dimension 0");
  const auto d = static_cast<Eigen::Index>(st.dim);
  const double n_total = static_cast<double>(st.n_total);
  const double n_spk = static_cast<double>(st.n_speakers);

  MatrixXd phi_w = st.within_scatter / (n_total - n_spk);
  MatrixXd phi_b = MatrixXd::Zero(d, d);
  for (const auto &[n, means] : st.means_by_count) phi_b.noalias() += means * means.transpose();
  phi_b = symmetrized(phi_b / n_spk);
  phi_w = symmetrized(phi_w);
  phi_w.diagonal().array() += ridge_for(phi_w);

  std::vector<double> ll_history;
  ll_history.push_back(log_likelihood(st, phi_b, phi_w));

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    MatrixXd b_acc = MatrixXd::Zero(d, d);
    MatrixXd w_acc = st.within_scatter;
    for (const auto &[n, means] : st.means_by_count) {
      const double nd = static_cast<double>(n);
      const double k = static_cast<double>(means.cols());
      // Posterior of the speaker offset given a mean of n recordings:
      //   gain = phi_b (phi_b + phi_w/n)^-1, E = gain m, Cov = phi_b - gain phi_b
      Eigen::LLT<MatrixXd> c_llt(phi_b + phi_w / nd);
      if (c_llt.info() != Eigen::Success)
        throw NumericalError("class-mean covariance not positive definite at EM iteration " +
                             std::to_string(iter));
      const MatrixXd gain = c_llt.solve(phi_b).transpose();
      const MatrixXd post_cov = symmetrized(phi_b - gain * phi_b);
      const MatrixXd post_mean = gain * means;
      const MatrixXd resid = means - post_mean;
      b_acc.noalias() += post_mean * post_mean.transpose();
      b_acc += k * post_cov;
      w_acc.noalias() += nd * (resid * resid.transpose());
      w_acc += (nd * k) * post_cov;
    }
    phi_b = symmetrized(b_acc / n_spk);
    phi_w = symmetrized(w_acc / n_total);
    phi_w.diagonal().array() += ridge_for(phi_w);
    Eigen::LLT<MatrixXd> w_llt(phi_w);
    if (w_llt.info() != Eigen::Success || !phi_w.allFinite())
      throw NumericalError("within-class covariance not positive definite after "
                           "regularization at EM iteration " + std::to_string(iter));
    ll_history.push_back(log_likelihood(st, phi_b, phi_w));
  }
  if (stats) stats->log_likelihood = std::move(ll_history);
  return PldaModel(st.mu, phi_b, phi_w);
}

namespace {
constexpr char kModelMagic[4] = {'P', 'L', 'D', 'A'};
constexpr std::uint16_t kModelVersion = 1;

void put_vector(std::string &buf, const VectorXd &v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) internal::put_f64(buf, v[i]);
}
void put_matrix(std::string &buf, const MatrixXd &m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) internal::put_f64(buf, m(i, j));
}
}  // namespace

void write_model(const std::filesystem::path &path, const PreprocessParams &pre,
                 const PldaModel &model, const std::string &config_json) {
  if (pre.dim() != model.dim())
    throw ValidationError("preprocess and PLDA dimensions differ");
  std::string buf(kModelMagic, 4);
  internal::put_le<std::uint16_t>(buf, kModelVersion);
  internal::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(model.dim()));
  buf.push_back(pre.length_normalize ? 1 : 0);
  put_vector(buf, pre.global_mean);
  put_vector(buf, model.mu());
  put_matrix(buf, model.phi_b());
  put_matrix(buf, model.phi_w());
  internal::put_le<std::uint64_t>(buf, config_json.size());
  buf += config_json;
  write_file_atomic(path, buf);
}

StoredModel read_model(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::in | std::ios::binary);
  if (!in) throw ValidationError("cannot open model " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  internal::ByteReader r(bytes);
  auto fail = [&](const std::string &why) {
    return ValidationError(path.string() + ": " + why);
  };
  if (!r.has(11) || bytes.compare(0, 4, kModelMagic, 4) != 0)
    throw fail("not a PLDA model file");
  r.read_string(4);
  if (auto v = r.read<std::uint16_t>(); v != kModelVersion)
    throw fail("unsupported model version " + std::to_string(v));
  const std::size_t dim = r.read<std::uint32_t>();
  const bool norm = r.read<std::uint8_t>() != 0;
  const std::size_t n_doubles = 2 * dim + 2 * dim * dim;
  if (dim == 0 || !r.has(n_doubles * 8 + 8)) throw fail("model file truncated");
  const auto d = static_cast<Eigen::Index>(dim);
  auto read_vec = [&] {
    VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = r.read_f64();
    return v;
  };
  auto read_mat = [&] {
    MatrixXd m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) m(i, j) = r.read_f64();
    return m;
  };
  PreprocessParams pre{read_vec(), norm};
  VectorXd mu = read_vec();
  MatrixXd phi_b = read_mat();
  MatrixXd phi_w = read_mat();
  const std::uint64_t cfg_len = r.read<std::uint64_t>();
  if (r.remaining() != cfg_len) throw fail("model file has inconsistent trailer");
  std::string cfg = r.read_string(static_cast<std::size_t>(cfg_len));
  return StoredModel{std::move(pre), PldaModel(std::move(mu), std::move(phi_b), std::move(phi_w)),
                     std::move(cfg)};
}

}  // namespace reid
