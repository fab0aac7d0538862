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

#include "nesvb/optimizer.hpp"

#include <cmath>

#include "nesvb/errors.hpp"

namespace nesvb {

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgd") return OptimizerKind::Sgd;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'; valid: sgd, adam");
}

std::string_view optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::Adam ? "adam" : "sgd"; }

void validate(const OptimizerConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
    throw ConfigError("optimizer: lr must be > 0");
  if (cfg.clip_norm && !(*cfg.clip_norm > 0.0)) throw ConfigError("optimizer: clip_norm must be > 0");
}

Eigen::VectorXd clip_to_norm(const Eigen::VectorXd& g, double max_norm) {
  const double n = g.norm();
  if (n <= max_norm) return g;
  return g * (max_norm / n);
}

Optimizer::Optimizer(OptimizerConfig cfg, Eigen::Index dim)
    : cfg_(cfg), m_(Eigen::VectorXd::Zero(dim)), v_(Eigen::VectorXd::Zero(dim)) {
  validate(cfg_);
}

ParamVector Optimizer::step(const ParamVector& params, const GradientEstimate& g) {
  if (params.size() != m_.size() || g.grad.size() != m_.size())
    throw LayoutError("optimizer: gradient/params length does not match optimizer state");
  ++t_;
  if (!g.grad.allFinite()) throw NonFiniteError("optimizer: non-finite gradient at step", static_cast<std::size_t>(t_));
  const Eigen::VectorXd grad = cfg_.clip_norm ? clip_to_norm(g.grad, *cfg_.clip_norm) : g.grad;

  Eigen::VectorXd next;
  if (cfg_.kind == OptimizerKind::Sgd) {
    next = params.values() + cfg_.learning_rate * grad;
  } else {
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    next = params.values() +
           (cfg_.learning_rate * (m_ / bc1).array() / ((v_ / bc2).array().sqrt() + cfg_.epsilon)).matrix();
  }
  if (!next.allFinite()) throw NonFiniteError("optimizer: non-finite parameters at step", static_cast<std::size_t>(t_));
  return params.with_values(std::move(next));
}

}  // namespace nesvb
