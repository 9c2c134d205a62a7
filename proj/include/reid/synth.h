// include/reid/synth.h

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

#ifndef REID_SYNTH_H_
#define REID_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "reid/dataio.h"
#include "reid/plda.h"

namespace reid {

// Additive perturbation applied to every recording of one task.
struct TaskEffect {
  Eigen::VectorXd offset;     // added to the mean
  Eigen::MatrixXd extra_cov;  // added to phi_w
};

struct WorldParams {
  std::size_t dim = 0;
  std::size_t n_speakers = 0;
  // Used when recordings_per_task is empty; those recordings are
  // labelled unstructured.
  std::size_t recordings_per_speaker = 0;
  std::map<Task, std::size_t> recordings_per_task;
  Eigen::MatrixXd phi_b;
  Eigen::MatrixXd phi_w;
  std::map<Task, TaskEffect> task_effects;
  std::uint64_t seed = 0;

  // Isotropic covariances phi_b = b I, phi_w = w I.
  static WorldParams isotropic(std::size_t dim, std::size_t n_speakers,
                               std::size_t recordings_per_speaker, double b, double w,
                               std::uint64_t seed);

  void validate() const;

  // Covariances may be given as a scalar (times identity) or a nested
  // array; offsets as a scalar (every coordinate) or an array.
  static WorldParams from_json(const nlohmann::json &j);
  nlohmann::json to_json() const;
};

struct World {
  EmbeddingDataset dataset;
  std::vector<std::string> speaker_ids;  // sorted; row s of latents
  Eigen::MatrixXd latents;               // n_speakers x dim
};

// y_s ~ N(0, phi_b) per speaker, x ~ N(y_s + offset_t, phi_w + extra_t)
// per recording.  Speaker s draws from its own substream of params.seed.
World sample_world(const WorldParams &params);

// Cholesky-based multivariate normal log density.
double mvn_log_pdf(const Eigen::VectorXd &x, const Eigen::VectorXd &mean,
                   const Eigen::MatrixXd &cov);

// Same-speaker minus different-speaker log density of the stacked pair
// [a; b], each a dense 2*dim Gaussian.  dim <= 16.
double oracle_llr(const Eigen::VectorXd &mu, const Eigen::MatrixXd &phi_b,
                  const Eigen::MatrixXd &phi_w, const Eigen::VectorXd &a,
                  const Eigen::VectorXd &b);
double oracle_llr(const PldaModel &model, const Eigen::VectorXd &a, const Eigen::VectorXd &b);
// Latent mean is zero in a sampled world.
double oracle_llr(const WorldParams &params, const Eigen::VectorXd &a, const Eigen::VectorXd &b);

}  // namespace reid

#endif  // REID_SYNTH_H_
