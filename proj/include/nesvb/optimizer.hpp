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

#include <optional>
#include <string_view>

#include "nesvb/estimators.hpp"
#include "nesvb/params.hpp"

namespace nesvb {

enum class OptimizerKind { Sgd, Adam };

OptimizerKind parse_optimizer(std::string_view name);
std::string_view optimizer_name(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 0.01;
  /// Rescale gradients whose L2 norm exceeds this value.
  std::optional<double> clip_norm;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void validate(const OptimizerConfig& cfg);

/// Gradient-ascent optimizer (the ELBO is maximized).
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, Eigen::Index dim);

  /// Throws NonFiniteError carrying the 1-based step index if the update
  /// produces NaN or infinity.
  ParamVector step(const ParamVector& params, const GradientEstimate& g);

  long steps_taken() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }

 private:
  OptimizerConfig cfg_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

Eigen::VectorXd clip_to_norm(const Eigen::VectorXd& g, double max_norm);

}  // namespace nesvb
