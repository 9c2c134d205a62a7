// src/synth.cc

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

#include "reid/synth.h"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "reid/error.h"
#include "reid/rng.h"

namespace reid {

namespace {

constexpr std::size_t kMaxOracleDim = 16;

bool is_symmetric(const Eigen::MatrixXd &m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale;
}

// Symmetric square root of a PSD matrix.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd &m, const std::string &name) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw ValidationError(name + ": eigendecomposition failed");
  const double tol = 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -tol)
    throw ValidationError(name + " is not positive semi-definite");
  Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd cov_from_json(const nlohmann::json &j, std::size_t dim, const std::string &name) {
  const auto d = static_cast<Eigen::Index>(dim);
  if (j.is_number()) return j.get<double>() * Eigen::MatrixXd::Identity(d, d);
  if (!j.is_array() || j.size() != dim)
    throw ValidationError(name + ": expected a scalar or a " + std::to_string(dim) + "x" +
                          std::to_string(dim) + " array");
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const auto &row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != dim)
      throw ValidationError(name + ": row " + std::to_string(r) + " has wrong length");
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd vec_from_json(const nlohmann::json &j, std::size_t dim, const std::string &name) {
  const auto d = static_cast<Eigen::Index>(dim);
  if (j.is_number()) return Eigen::VectorXd::Constant(d, j.get<double>());
  if (!j.is_array() || j.size() != dim)
    throw ValidationError(name + ": expected a scalar or " + std::to_string(dim) + " values");
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

nlohmann::json cov_to_json(const Eigen::MatrixXd &m) {
  const auto d = m.rows();
  if (d > 0 && (m - m(0, 0) * Eigen::MatrixXd::Identity(d, d)).isZero(0.0))
    return m(0, 0);
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < d; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < d; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json vec_to_json(const Eigen::VectorXd &v) {
  if (v.size() > 0 && (v.array() == v(0)).all()) return v(0);
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd standard_normal(Eigen::Index n, Rng &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = g(rng);
  return z;
}

std::string speaker_name(std::size_t s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "spk%05zu", s);
  return buf;
}

}  // namespace

WorldParams WorldParams::isotropic(std::size_t dim, std::size_t n_speakers,
                                   std::size_t recordings_per_speaker, double b, double w,
                                   std::uint64_t seed) {
  WorldParams p;
  const auto d = static_cast<Eigen::Index>(dim);
  p.dim = dim;
  p.n_speakers = n_speakers;
  p.recordings_per_speaker = recordings_per_speaker;
  p.phi_b = b * Eigen::MatrixXd::Identity(d, d);
  p.phi_w = w * Eigen::MatrixXd::Identity(d, d);
  p.seed = seed;
  return p;
}

void WorldParams::validate() const {
  if (dim == 0) throw ValidationError("world dim must be positive");
  if (n_speakers == 0) throw ValidationError("world needs at least one speaker");
  const auto d = static_cast<Eigen::Index>(dim);
  std::size_t per_speaker = recordings_per_speaker;
  if (!recordings_per_task.empty()) {
    per_speaker = 0;
    for (const auto &[t, n] : recordings_per_task) per_speaker += n;
  }
  if (per_speaker == 0) throw ValidationError("world needs at least one recording per speaker");
  if (n_speakers * per_speaker > 100000000)
    throw ValidationError("world too large");
  if (phi_b.rows() != d || phi_b.cols() != d) throw ValidationError("phi_b dimension mismatch");
  if (phi_w.rows() != d || phi_w.cols() != d) throw ValidationError("phi_w dimension mismatch");
  if (!phi_b.allFinite() || !phi_w.allFinite())
    throw ValidationError("world covariances must be finite");
  if (!is_symmetric(phi_b)) throw ValidationError("phi_b is not symmetric");
  if (!is_symmetric(phi_w)) throw ValidationError("phi_w is not symmetric");
  (void)sqrt_psd(phi_b, "phi_b");
  for (const auto &[t, e] : task_effects) {
    const std::string name = "task_effects." + std::string(task_name(t));
    if (e.offset.size() != d) throw ValidationError(name + ".offset dimension mismatch");
    if (e.extra_cov.rows() != d || e.extra_cov.cols() != d)
      throw ValidationError(name + ".extra_cov dimension mismatch");
    if (!e.offset.allFinite() || !e.extra_cov.allFinite())
      throw ValidationError(name + " must be finite");
    if (!is_symmetric(e.extra_cov)) throw ValidationError(name + ".extra_cov is not symmetric");
    (void)sqrt_psd(e.extra_cov, name + ".extra_cov");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(phi_w);
  if (llt.info() != Eigen::Success) throw ValidationError("phi_w is not positive definite");
}

WorldParams WorldParams::from_json(const nlohmann::json &j) {
  if (!j.is_object()) throw ValidationError("world config must be a JSON object");
  static const char *kKeys[] = {"dim",   "n_speakers",   "recordings_per_speaker",
                                "recordings_per_task", "phi_b", "phi_w",
                                "task_effects", "seed"};
  for (const auto &[key, value] : j.items()) {
    bool known = false;
    for (const char *k : kKeys) known = known || key == k;
    if (!known) throw ValidationError("world config: unknown key '" + key + "'");
  }
  WorldParams p;
  try {
    p.dim = j.at("dim").get<std::size_t>();
    p.n_speakers = j.at("n_speakers").get<std::size_t>();
    p.recordings_per_speaker = j.value("recordings_per_speaker", std::size_t{0});
    if (j.contains("recordings_per_task")) {
      for (const auto &[name, n] : j.at("recordings_per_task").items()) {
        auto t = parse_task(name);
        if (!t) throw ValidationError("world config: unknown task '" + name + "'");
        p.recordings_per_task[*t] = n.get<std::size_t>();
      }
    }
    p.phi_b = cov_from_json(j.at("phi_b"), p.dim, "phi_b");
    p.phi_w = cov_from_json(j.at("phi_w"), p.dim, "phi_w");
    if (j.contains("task_effects")) {
      for (const auto &[name, e] : j.at("task_effects").items()) {
        auto t = parse_task(name);
        if (!t) throw ValidationError("world config: unknown task '" + name + "'");
        const auto d = static_cast<Eigen::Index>(p.dim);
        TaskEffect eff{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
        if (e.contains("offset")) eff.offset = vec_from_json(e.at("offset"), p.dim, name + ".offset");
        if (e.contains("extra_cov"))
          eff.extra_cov = cov_from_json(e.at("extra_cov"), p.dim, name + ".extra_cov");
        p.task_effects[*t] = std::move(eff);
      }
    }
    p.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("world config: ") + e.what());
  }
  p.validate();
  return p;
}

nlohmann::json WorldParams::to_json() const {
  nlohmann::json j;
  j["dim"] = dim;
  j["n_speakers"] = n_speakers;
  j["recordings_per_speaker"] = recordings_per_speaker;
  nlohmann::json per_task = nlohmann::json::object();
  for (const auto &[t, n] : recordings_per_task) per_task[std::string(task_name(t))] = n;
  j["recordings_per_task"] = per_task;
  j["phi_b"] = cov_to_json(phi_b);
  j["phi_w"] = cov_to_json(phi_w);
  nlohmann::json effects = nlohmann::json::object();
  for (const auto &[t, e] : task_effects)
    effects[std::string(task_name(t))] = {{"offset", vec_to_json(e.offset)},
                                          {"extra_cov", cov_to_json(e.extra_cov)}};
  j["task_effects"] = effects;
  j["seed"] = seed;
  return j;
}

World sample_world(const WorldParams &params) {
  params.validate();
  const auto d = static_cast<Eigen::Index>(params.dim);

  std::map<Task, std::size_t> per_task = params.recordings_per_task;
  if (per_task.empty()) per_task[Task::kUnstructured] = params.recordings_per_speaker;

  const Eigen::MatrixXd b_root = sqrt_psd(params.phi_b, "phi_b");
  std::map<Task, Eigen::MatrixXd> w_chol;
  for (const auto &[t, n] : per_task) {
    Eigen::MatrixXd cov = params.phi_w;
    auto it = params.task_effects.find(t);
    if (it != params.task_effects.end()) cov += it->second.extra_cov;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw ValidationError("within covariance of task " + std::string(task_name(t)) +
                            " is not positive definite");
    w_chol[t] = llt.matrixL();
  }

  std::size_t per_speaker = 0;
  for (const auto &[t, n] : per_task) per_speaker += n;
  const std::size_t n_rows = params.n_speakers * per_speaker;

  World world;
  world.latents.resize(static_cast<Eigen::Index>(params.n_speakers), d);
  std::vector<RecordingRecord> manifest;
  manifest.reserve(n_rows);
  std::vector<float> data;
  data.reserve(n_rows * params.dim);

  for (std::size_t s = 0; s < params.n_speakers; ++s) {
    Rng rng = make_rng(params.seed, {s});
    const std::string spk = speaker_name(s);
    world.speaker_ids.push_back(spk);
    const Eigen::VectorXd y = b_root * standard_normal(d, rng);
    world.latents.row(static_cast<Eigen::Index>(s)) = y.transpose();
    for (const auto &[t, n] : per_task) {
      Eigen::VectorXd mean = y;
      auto it = params.task_effects.find(t);
      if (it != params.task_effects.end()) mean += it->second.offset;
      const Eigen::MatrixXd &l = w_chol[t];
      for (std::size_t k = 0; k < n; ++k) {
        const Eigen::VectorXd x = mean + l * standard_normal(d, rng);
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "-%02zu", k);
        manifest.push_back({spk + "-" + std::string(task_name(t)) + suffix, spk, t,
                            manifest.size()});
        for (Eigen::Index i = 0; i < d; ++i) data.push_back(static_cast<float>(x(i)));
      }
    }
  }
  EmbeddingMatrix matrix(params.dim, n_rows, std::move(data));
  world.dataset = assemble_dataset(std::move(manifest), std::move(matrix)).dataset;
  return world;
}

double mvn_log_pdf(const Eigen::VectorXd &x, const Eigen::VectorXd &mean,
                   const Eigen::MatrixXd &cov) {
  if (x.size() != mean.size() || cov.rows() != x.size() || cov.cols() != x.size())
    throw ValidationError("mvn_log_pdf: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("mvn_log_pdf: covariance is singular");
  const Eigen::VectorXd z = llt.matrixL().solve(x - mean);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
  logdet *= 2.0;
  const double n = static_cast<double>(x.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + logdet + z.squaredNorm());
}

double oracle_llr(const Eigen::VectorXd &mu, const Eigen::MatrixXd &phi_b,
                  const Eigen::MatrixXd &phi_w, const Eigen::VectorXd &a,
                  const Eigen::VectorXd &b) {
  const Eigen::Index d = mu.size();
  if (d == 0 || static_cast<std::size_t>(d) > kMaxOracleDim)
    throw ValidationError("oracle_llr supports 1 <= dim <= 16");
  if (a.size() != d || b.size() != d || phi_b.rows() != d || phi_w.rows() != d)
    throw ValidationError("oracle_llr: dimension mismatch");
  const Eigen::MatrixXd total = phi_b + phi_w;
  Eigen::MatrixXd same(2 * d, 2 * d), diff = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  same << total, phi_b, phi_b, total;
  diff.topLeftCorner(d, d) = total;
  diff.bottomRightCorner(d, d) = total;
  Eigen::VectorXd x(2 * d), m(2 * d);
  x << a, b;
  m << mu, mu;
  return mvn_log_pdf(x, m, same) - mvn_log_pdf(x, m, diff);
}

double oracle_llr(const PldaModel &model, const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  return oracle_llr(model.mu(), model.phi_b(), model.phi_w(), a, b);
}

double oracle_llr(const WorldParams &params, const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  return oracle_llr(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.dim)), params.phi_b,
                    params.phi_w, a, b);
}

}  // namespace reid
