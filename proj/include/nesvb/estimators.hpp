/* Copyright 2026 The nesvb Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nesvb/model.hpp"

namespace nesvb {

struct GradientEstimate {
  Eigen::VectorXd grad;
  int evaluations_used = 0;
  std::string estimator_name;
};

enum class EstimatorKind { Nesvb, Sgvb, Reinforce, Rws, StGumbel };

std::string_view estimator_name(EstimatorKind kind);
/// Accepts "nesvb", "sgvb", "reinforce", "rws", "st-gumbel" / "st_gumbel".
EstimatorKind parse_estimator(std::string_view name);
const std::vector<std::string>& valid_estimator_names();

struct NesConfig {
  double sigma = 0.1;
  /// Mirrored pairs; each pair costs two ELBO evaluations.
  int n_pairs = 25;
  /// Replace raw F values by centered ranks in [-0.5, 0.5].
  bool fitness_shaping = false;
  /// Reuse one inner stream for both members of a pair.
  bool common_random_numbers = false;
  int threads = 1;
};

void validate(const NesConfig& cfg);

/// Mirrored natural-evolution-strategies estimate of the gradient of the
/// Gaussian-smoothed ELBO, E_eps[F(params + sigma * eps)]:
///
///   g = 1 / (2 n sigma) * sum_i (F(params + sigma eps_i) - F(params - sigma eps_i)) eps_i
///
/// Perturbations eps_i are drawn from rng in pair order. Every F evaluation
/// gets its own inner stream derived from rng (or one per pair under common
/// random numbers), so the result does not depend on cfg.threads.
GradientEstimate nesvb_gradient(const Model& model, const ParamVector& params, RngStream& rng, const NesConfig& cfg);

/// Same estimator with caller-supplied perturbations, one column per pair.
GradientEstimate nesvb_gradient(const Model& model, const ParamVector& params, const Eigen::MatrixXd& perturbations,
                                RngStream& rng, const NesConfig& cfg);

/// Centered ranks: smallest value -> -0.5, largest -> +0.5, ties share the
/// mean of their ranks.
Eigen::VectorXd centered_ranks(std::span<const double> values);

/// Pathwise estimate averaged over `samples` draws.
GradientEstimate sgvb_gradient(const Model& model, const ParamVector& params, RngStream& rng, int samples = 1);

/// Running-mean baseline for the score-function estimator.
struct ReinforceBaseline {
  double value = 0.0;
  long count = 0;
  void update(double log_weight) {
    ++count;
    value += (log_weight - value) / static_cast<double>(count);
  }
};

/// (ln p(x,z) - ln q(z) - b) * grad ln q(z), averaged over `samples`
/// draws. b is 0 unless a baseline is supplied; the baseline is read before
/// and updated after the batch.
GradientEstimate reinforce_gradient(const Model& model, const ParamVector& params, RngStream& rng, int samples = 1,
                                    ReinforceBaseline* baseline = nullptr);

/// Wake-phase reweighted wake-sleep update for q from k particles.
/// `normalized_weights`, when given, receives the self-normalized weights.
GradientEstimate rws_gradient(const Model& model, const ParamVector& params, RngStream& rng, int n_particles = 5,
                              Eigen::VectorXd* normalized_weights = nullptr);

GradientEstimate st_gumbel_gradient(const Model& model, const ParamVector& params, RngStream& rng,
                                    double temperature = 1.0, int samples = 1);

/// Everything needed to pick and configure one estimator.
struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::Nesvb;
  NesConfig nes;
  double temperature = 1.0;
  int particles = 5;
  bool control_variate = false;
  /// Draws averaged per estimate by the single-evaluation estimators.
  int samples = 1;
};

/// Per-run mutable state some estimators carry between calls.
struct EstimatorState {
  ReinforceBaseline baseline;
};

GradientEstimate estimate_gradient(const Model& model, const ParamVector& params, RngStream& rng,
                                   const EstimatorConfig& cfg, EstimatorState& state);

/// ELBO evaluations one call of `estimate_gradient` spends.
int evaluation_budget(const EstimatorConfig& cfg);

}  // namespace nesvb
