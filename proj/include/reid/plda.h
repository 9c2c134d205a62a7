// include/reid/plda.h

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

#ifndef REID_PLDA_H_
#define REID_PLDA_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace reid {

// Centering and optional length normalization applied to every embedding
// before it reaches the PLDA model.  Fit on the known set only.
struct PreprocessParams {
  Eigen::VectorXd global_mean;
  bool length_normalize = true;

  std::size_t dim() const { return static_cast<std::size_t>(global_mean.size()); }
};

// `rows` holds one raw embedding per row.
PreprocessParams fit_preprocess(const Eigen::MatrixXd &rows,
                                bool length_normalize = true);

// (x - mean), scaled to unit norm when enabled.  A vector that centers to
// exactly zero is returned as the zero vector.
Eigen::VectorXd apply_preprocess(const PreprocessParams &params,
                                 const Eigen::VectorXd &x);

struct EnrollmentVector {
  std::string speaker_id;
  Eigen::VectorXd vector;  // preprocessed space
  std::size_t n_recordings = 0;
};

// Averages the preprocessed recordings of one speaker.
EnrollmentVector enroll_speaker(const PreprocessParams &params,
                                std::string speaker_id,
                                std::span<const Eigen::VectorXd> raw_recordings);

/// Two-covariance PLDA model
///
///   speaker latent  y ~ N(mu, phi_b)
///   recording       x ~ N(y, phi_w)
///
/// Pairs are scored with the log-likelihood ratio of the same-speaker joint
/// Gaussian (cross-covariance phi_b) against the different-speaker joint
/// Gaussian (cross-covariance 0).  The quadratic-form matrices of that ratio
/// are precomputed at construction, so scoring is O(dim^2) per pair.
class PldaModel {
 public:
  // Validates symmetry, phi_w positive definite and phi_b positive
  // semi-definite; throws ValidationError otherwise.
  PldaModel(Eigen::VectorXd mu, Eigen::MatrixXd phi_b, Eigen::MatrixXd phi_w);

  std::size_t dim() const { return static_cast<std::size_t>(mu_.size()); }
  const Eigen::VectorXd &mu() const { return mu_; }
  const Eigen::MatrixXd &phi_b() const { return phi_b_; }
  const Eigen::MatrixXd &phi_w() const { return phi_w_; }

  // Per-vector scoring terms; score(a, b) is assembled from these so that a
  // precomputed matrix and direct pair calls agree bit for bit.
  struct Side {
    Eigen::VectorXd centered;     // v - mu
    Eigen::VectorXd transformed;  // P (v - mu)
    double quad = 0.0;            // 0.5 (v - mu)' Q (v - mu)
  };
  Side side(const Eigen::VectorXd &v) const;
  double combine(const Side &a, const Side &b) const;

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd phi_b_, phi_w_;
  Eigen::MatrixXd q_, p_;
  double offset_ = 0.0;
};

struct PldaConfig {
  int max_iters = 20;
  std::size_t min_speakers = 10;
};

struct SpeakerGroup {
  std::string speaker_id;
  std::vector<Eigen::VectorXd> vectors;  // preprocessed
};
using GroupedVectors = std::vector<SpeakerGroup>;

struct PldaTrainingStats {
  // Training-data log-likelihood at the initial point and after each EM
  // iteration (size max_iters + 1).
  std::vector<double> log_likelihood;
};

// EM estimation of phi_b and phi_w with mu fixed to the mean of the speaker
// means.  Initialized from the between/within class scatter.
PldaModel train_plda(const GroupedVectors &grouped, const PldaConfig &config = {},
                     PldaTrainingStats *stats = nullptr);

// Exact marginal log-likelihood of the grouped data under the model
// parameters (speaker latents integrated out).
double plda_log_likelihood(const GroupedVectors &grouped,
                           const Eigen::VectorXd &mu,
                           const Eigen::MatrixXd &phi_b,
                           const Eigen::MatrixXd &phi_w);

// log p(a, b | same) - log p(a, b | different).  Symmetric in (a, b) bit
// for bit.
double score_pair(const PldaModel &model, const Eigen::VectorXd &a,
                  const Eigen::VectorXd &b);

// Entry (i, j) equals score_pair(model, enrollments[i], tests[j]) exactly.
// Rows are split across `threads` workers; each entry is evaluated with a
// fixed operation order so the result does not depend on the split.
Eigen::MatrixXd score_matrix(const PldaModel &model,
                             std::span<const Eigen::VectorXd> enrollments,
                             std::span<const Eigen::VectorXd> tests,
                             unsigned threads = 1);
Eigen::MatrixXd score_matrix(const PldaModel &model,
                             std::span<const EnrollmentVector> enrollments,
                             std::span<const Eigen::VectorXd> tests,
                             unsigned threads = 1);

// Binary model file holding the preprocessing parameters, the PLDA
// parameters at full double precision, and an opaque configuration string
// (JSON in practice).
void write_model(const std::filesystem::path &path, const PreprocessParams &pre,
                 const PldaModel &model, const std::string &config_json = "{}");
struct StoredModel {
  PreprocessParams preprocess;
  PldaModel model;
  std::string config_json;
};
StoredModel read_model(const std::filesystem::path &path);

}  // namespace reid

#endif  // REID_PLDA_H_
