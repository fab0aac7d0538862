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

#include "nesvb/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nesvb/errors.hpp"
#include "nesvb/parallel.hpp"
#include "nesvb/stats.hpp"

namespace nesvb {

namespace {

void require_finite(const GradientEstimate& g) {
  for (Eigen::Index k = 0; k < g.grad.size(); ++k)
    if (!std::isfinite(g.grad(k))) throw NonFiniteError(g.estimator_name + ": non-finite gradient coordinate", k);
}

void require_positive(int n, const char* what) {
  if (n < 1) throw std::invalid_argument(std::string(what) + " must be >= 1");
}

}  // namespace

std::string_view estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Nesvb: return "nesvb";
    case EstimatorKind::Sgvb: return "sgvb";
    case EstimatorKind::Reinforce: return "reinforce";
    case EstimatorKind::Rws: return "rws";
    case EstimatorKind::StGumbel: return "st_gumbel";
  }
  return "unknown";
}

const std::vector<std::string>& valid_estimator_names() {
  static const std::vector<std::string> names{"nesvb", "sgvb", "reinforce", "rws", "st-gumbel"};
  return names;
}

EstimatorKind parse_estimator(std::string_view name) {
  if (name == "nesvb") return EstimatorKind::Nesvb;
  if (name == "sgvb") return EstimatorKind::Sgvb;
  if (name == "reinforce") return EstimatorKind::Reinforce;
  if (name == "rws") return EstimatorKind::Rws;
  if (name == "st-gumbel" || name == "st_gumbel") return EstimatorKind::StGumbel;
  std::string valid;
  for (const auto& n : valid_estimator_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown estimator '" + std::string(name) + "'; valid: " + valid);
}

void validate(const NesConfig& cfg) {
  if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma)) throw ConfigError("nesvb: sigma must be > 0");
  if (cfg.n_pairs < 1) throw ConfigError("nesvb: n_pairs must be >= 1");
}

Eigen::VectorXd centered_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  if (n == 1) {
    out(0) = 0.0;
    return out;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo;
    while (hi + 1 < n && values[order[hi + 1]] == values[order[lo]]) ++hi;
    const double rank = 0.5 * static_cast<double>(lo + hi);
    for (std::size_t k = lo; k <= hi; ++k)
      out(static_cast<Eigen::Index>(order[k])) = rank / static_cast<double>(n - 1) - 0.5;
    lo = hi + 1;
  }
  return out;
}

GradientEstimate nesvb_gradient(const Model& model, const ParamVector& params, const Eigen::MatrixXd& perturbations,
                                RngStream& rng, const NesConfig& cfg) {
  validate(cfg);
  require_layout(params, *model.layout(), "nesvb");
  if (perturbations.rows() != params.size() || perturbations.cols() < 1)
    throw std::invalid_argument("nesvb: perturbations must have one row per parameter and at least one column");

  const Eigen::Index pairs = perturbations.cols();
  const RngStream base = rng.derive(rng.next_u64());
  std::vector<double> fitness(static_cast<std::size_t>(2 * pairs));

  parallel_for(fitness.size(), cfg.threads, [&](std::size_t k) {
    const Eigen::Index pair = static_cast<Eigen::Index>(k / 2);
    const bool plus = k % 2 == 0;
    RngStream inner = base.derive(cfg.common_random_numbers ? static_cast<std::uint64_t>(pair) : k);
    const double sign = plus ? 1.0 : -1.0;
    const ParamVector probe = params.with_values(params.values() + sign * cfg.sigma * perturbations.col(pair));
    const double f = model.elbo_integrand(probe, inner);
    if (!std::isfinite(f)) throw NonFiniteError("nesvb: non-finite ELBO at perturbation", k);
    fitness[k] = f;
  });

  Eigen::VectorXd score = Eigen::Map<const Eigen::VectorXd>(fitness.data(), static_cast<Eigen::Index>(fitness.size()));
  if (cfg.fitness_shaping) score = centered_ranks(fitness);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  for (Eigen::Index i = 0; i < pairs; ++i) grad += (score(2 * i) - score(2 * i + 1)) * perturbations.col(i);
  grad /= 2.0 * static_cast<double>(pairs) * cfg.sigma;

  GradientEstimate out{std::move(grad), static_cast<int>(2 * pairs), "nesvb"};
  require_finite(out);
  return out;
}

GradientEstimate nesvb_gradient(const Model& model, const ParamVector& params, RngStream& rng, const NesConfig& cfg) {
  validate(cfg);
  Eigen::MatrixXd eps(params.size(), cfg.n_pairs);
  for (Eigen::Index j = 0; j < eps.cols(); ++j)
    for (Eigen::Index i = 0; i < eps.rows(); ++i) eps(i, j) = rng.normal();
  return nesvb_gradient(model, params, eps, rng, cfg);
}

GradientEstimate sgvb_gradient(const Model& model, const ParamVector& params, RngStream& rng, int samples) {
  require_positive(samples, "sgvb: samples");
  if (!model.has_reparam_gradient())
    throw MissingHookError("sgvb: model '" + std::string(model.name()) + "' has no reparameterized gradient");
  require_layout(params, *model.layout(), "sgvb");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  for (int s = 0; s < samples; ++s) grad += model.reparam_gradient(params, rng);
  GradientEstimate out{grad / samples, samples, "sgvb"};
  require_finite(out);
  return out;
}

GradientEstimate reinforce_gradient(const Model& model, const ParamVector& params, RngStream& rng, int samples,
                                    ReinforceBaseline* baseline) {
  require_positive(samples, "reinforce: samples");
  if (!model.has_score_function())
    throw MissingHookError("reinforce: model '" + std::string(model.name()) + "' has no score-function hook");
  require_layout(params, *model.layout(), "reinforce");
  const double b = baseline != nullptr ? baseline->value : 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  std::vector<double> seen;
  seen.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    ScoreSample draw = model.score_sample(params, rng);
    grad += (draw.log_weight - b) * draw.score;
    seen.push_back(draw.log_weight);
  }
  if (baseline != nullptr)
    for (double lw : seen) baseline->update(lw);
  GradientEstimate out{grad / samples, samples, "reinforce"};
  require_finite(out);
  return out;
}

GradientEstimate rws_gradient(const Model& model, const ParamVector& params, RngStream& rng, int n_particles,
                              Eigen::VectorXd* normalized_weights) {
  if (n_particles < 2) throw std::invalid_argument("rws: n_particles must be >= 2");
  if (!model.has_score_function())
    throw MissingHookError("rws: model '" + std::string(model.name()) + "' has no score-function hook");
  require_layout(params, *model.layout(), "rws");
  Eigen::VectorXd log_w(n_particles);
  Eigen::MatrixXd scores(params.size(), n_particles);
  for (int k = 0; k < n_particles; ++k) {
    ScoreSample draw = model.score_sample(params, rng);
    log_w(k) = draw.log_weight;
    scores.col(k) = draw.score;
  }
  const Eigen::VectorXd w = (log_w.array() - log_sum_exp(log_w)).exp().matrix();
  if (normalized_weights != nullptr) *normalized_weights = w;
  GradientEstimate out{scores * w, n_particles, "rws"};
  require_finite(out);
  return out;
}

GradientEstimate st_gumbel_gradient(const Model& model, const ParamVector& params, RngStream& rng, double temperature,
                                    int samples) {
  if (!(temperature > 0.0)) throw std::invalid_argument("st_gumbel: temperature must be > 0");
  require_positive(samples, "st_gumbel: samples");
  if (!model.has_relaxed_gradient())
    throw MissingHookError("st_gumbel: model '" + std::string(model.name()) + "' has no relaxed-gradient hook");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  for (int s = 0; s < samples; ++s) grad += model.straight_through_sample(params, rng, temperature).gradient;
  GradientEstimate out{grad / samples, samples, "st_gumbel"};
  require_finite(out);
  return out;
}

GradientEstimate estimate_gradient(const Model& model, const ParamVector& params, RngStream& rng,
                                   const EstimatorConfig& cfg, EstimatorState& state) {
  switch (cfg.kind) {
    case EstimatorKind::Nesvb: return nesvb_gradient(model, params, rng, cfg.nes);
    case EstimatorKind::Sgvb: return sgvb_gradient(model, params, rng, cfg.samples);
    case EstimatorKind::Reinforce:
      return reinforce_gradient(model, params, rng, cfg.samples, cfg.control_variate ? &state.baseline : nullptr);
    case EstimatorKind::Rws: return rws_gradient(model, params, rng, cfg.particles);
    case EstimatorKind::StGumbel: return st_gumbel_gradient(model, params, rng, cfg.temperature, cfg.samples);
  }
  throw std::logic_error("estimate_gradient: unhandled estimator");
}

int evaluation_budget(const EstimatorConfig& cfg) {
  switch (cfg.kind) {
    case EstimatorKind::Nesvb: return 2 * cfg.nes.n_pairs;
    case EstimatorKind::Rws: return cfg.particles;
    default: return cfg.samples;
  }
}

}  // namespace nesvb
