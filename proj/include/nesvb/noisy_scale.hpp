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

#include "nesvb/model.hpp"
#include "nesvb/stats.hpp"

namespace nesvb {

struct NoisyScaleHyper {
  double prior_mean = 8.5;
  double prior_std = 1.0;
  double obs_noise_std = 0.75;
  double observation = 9.5;
};

/// Scale measurement with a Gaussian prior on the true weight and a single
/// noisy reading:
///
///   weight  ~ N(8.5, 1.0)
///   reading ~ N(weight, 0.75),  observed reading = 9.5
///
/// The approximate posterior is N(mean, exp(0.5 * log_var)) with params
/// laid out as slices "mean" and "log_var".
///
/// In DeterministicMean mode the posterior draw is replaced by the
/// posterior mean itself (z = mean, no sampling), which turns the ELBO into
/// a deterministic function that is unbounded above in log_var.
class NoisyScaleModel final : public Model {
 public:
  enum class Mode { Stochastic, DeterministicMean };

  using Hyper = NoisyScaleHyper;

  explicit NoisyScaleModel(Mode mode = Mode::Stochastic) : NoisyScaleModel(mode, Hyper{}) {}
  NoisyScaleModel(Mode mode, Hyper hyper);

  std::string_view name() const override;
  const std::shared_ptr<const ParamLayout>& layout() const override { return layout_; }
  Mode mode() const { return mode_; }
  const Hyper& hyper() const { return hyper_; }

  ParamVector make_params(double mean, double log_var) const;
  /// The stated proposal: mean 8.5, std 1.0.
  ParamVector initial_params() const { return make_params(8.5, 0.0); }

  double log_joint(double weight) const;

  /// Integrand at z = mean + std * u. DeterministicMean mode ignores u.
  double integrand(const ParamVector& params, double u) const;
  /// Total derivative of integrand(params, u) w.r.t. (mean, log_var), u held fixed.
  Eigen::VectorXd reparam_gradient_at(const ParamVector& params, double u) const;
  ScoreSample score_at(const ParamVector& params, double u) const;

  double elbo_integrand(const ParamVector& params, RngStream& rng) const override;
  bool has_reparam_gradient() const override { return true; }
  Eigen::VectorXd reparam_gradient(const ParamVector& params, RngStream& rng) const override;
  bool has_score_function() const override { return true; }
  ScoreSample score_sample(const ParamVector& params, RngStream& rng) const override;

  /// Conjugate posterior over the weight given the reading.
  Gaussian1D exact_posterior() const;
  /// ln p(reading), the ceiling of every ELBO.
  double log_evidence() const;
  /// Closed-form E_q[integrand] for the stochastic model.
  double exact_elbo(const ParamVector& params) const;

 private:
  double draw_noise(RngStream& rng) const;

  Mode mode_;
  Hyper hyper_;
  std::shared_ptr<const ParamLayout> layout_;
};

double noisy_scale_elbo(const ParamVector& params, RngStream& rng);
double noisy_scale_elbo_deterministic(const ParamVector& params);

}  // namespace nesvb
