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

#include <memory>
#include <string_view>

#include "nesvb/params.hpp"
#include "nesvb/rng.hpp"

namespace nesvb {

/// Monte Carlo estimate of E_q[ln p(x,z) - ln q(z)] in nats. Higher is better.
struct ElboEstimate {
  double value;
  int n_inner_samples;
};

/// One draw z ~ q for score-function estimators.
struct ScoreSample {
  double log_weight;      ///< ln p(x,z) - ln q(z)
  Eigen::VectorXd score;  ///< gradient of ln q(z) w.r.t. params
};

/// Straight-through draw: the forward value uses the hard sample, the
/// gradient is that of the temperature-relaxed objective.
struct RelaxedSample {
  double hard_value;
  Eigen::VectorXd gradient;
};

/// A fixed generative model paired with a parameterized approximate
/// posterior. The only required capability is a single-draw ELBO
/// integrand; analytic gradient hooks are optional and advertised by the
/// has_* queries. Implementations are immutable and safe to share between
/// threads as long as each thread brings its own RngStream.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string_view name() const = 0;
  virtual const std::shared_ptr<const ParamLayout>& layout() const = 0;

  /// ln p(x,z) - ln q(z; params) for a single z ~ q drawn from rng.
  virtual double elbo_integrand(const ParamVector& params, RngStream& rng) const = 0;

  virtual bool has_reparam_gradient() const { return false; }
  /// Pathwise gradient of the integrand for one reparameterized draw.
  virtual Eigen::VectorXd reparam_gradient(const ParamVector& params, RngStream& rng) const;

  virtual bool has_score_function() const { return false; }
  virtual ScoreSample score_sample(const ParamVector& params, RngStream& rng) const;

  virtual bool has_relaxed_gradient() const { return false; }
  virtual RelaxedSample straight_through_sample(const ParamVector& params, RngStream& rng,
                                                double temperature) const;
};

ElboEstimate elbo_single_sample(const Model& model, const ParamVector& params, RngStream& rng);

/// Mean of n sequential single-sample estimates drawn from rng.
ElboEstimate elbo_mean(const Model& model, const ParamVector& params, RngStream& rng, int n);

}  // namespace nesvb
