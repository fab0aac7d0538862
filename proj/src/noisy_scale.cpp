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

#include "nesvb/noisy_scale.hpp"

#include <cmath>

namespace nesvb {

NoisyScaleModel::NoisyScaleModel(Mode mode, Hyper hyper)
    : mode_(mode),
      hyper_(hyper),
      layout_(std::make_shared<const ParamLayout>(
          std::vector<std::pair<std::string, Eigen::Index>>{{"mean", 1}, {"log_var", 1}})) {}

std::string_view NoisyScaleModel::name() const {
  return mode_ == Mode::Stochastic ? "noisy_scale" : "noisy_scale_ablation";
}

ParamVector NoisyScaleModel::make_params(double mean, double log_var) const {
  return ParamVector(layout_, Eigen::Vector2d(mean, log_var));
}

double NoisyScaleModel::log_joint(double weight) const {
  return gaussian_logpdf(hyper_.observation, weight, hyper_.obs_noise_std) +
         gaussian_logpdf(weight, hyper_.prior_mean, hyper_.prior_std);
}

double NoisyScaleModel::integrand(const ParamVector& params, double u) const {
  if (mode_ == Mode::DeterministicMean) u = 0.0;
  const double mean = params["mean"];
  const double std_dev = std::exp(0.5 * params["log_var"]);
  const double z = mean + std_dev * u;
  return log_joint(z) - gaussian_logpdf(z, mean, std_dev);
}

Eigen::VectorXd NoisyScaleModel::reparam_gradient_at(const ParamVector& params, double u) const {
  if (mode_ == Mode::DeterministicMean) u = 0.0;
  const double mean = params["mean"];
  const double std_dev = std::exp(0.5 * params["log_var"]);
  const double z = mean + std_dev * u;
  const double obs_var = hyper_.obs_noise_std * hyper_.obs_noise_std;
  const double prior_var = hyper_.prior_std * hyper_.prior_std;
  // d/dz of ln p(reading, z); the ln q term contributes u/std along the path
  // and cancels against its direct dependence on mean.
  const double joint_slope = (hyper_.observation - z) / obs_var + (hyper_.prior_mean - z) / prior_var;
  Eigen::VectorXd g(2);
  g(0) = joint_slope;
  g(1) = 0.5 * joint_slope * std_dev * u + 0.5;
  return g;
}

ScoreSample NoisyScaleModel::score_at(const ParamVector& params, double u) const {
  if (mode_ == Mode::DeterministicMean) u = 0.0;
  const double std_dev = std::exp(0.5 * params["log_var"]);
  Eigen::VectorXd score(2);
  score(0) = u / std_dev;
  score(1) = 0.5 * (u * u - 1.0);
  return {integrand(params, u), std::move(score)};
}

double NoisyScaleModel::draw_noise(RngStream& rng) const {
  return mode_ == Mode::Stochastic ? rng.normal() : 0.0;
}

double NoisyScaleModel::elbo_integrand(const ParamVector& params, RngStream& rng) const {
  return integrand(params, draw_noise(rng));
}

Eigen::VectorXd NoisyScaleModel::reparam_gradient(const ParamVector& params, RngStream& rng) const {
  require_layout(params, *layout_, "noisy_scale");
  return reparam_gradient_at(params, draw_noise(rng));
}

ScoreSample NoisyScaleModel::score_sample(const ParamVector& params, RngStream& rng) const {
  require_layout(params, *layout_, "noisy_scale");
  return score_at(params, draw_noise(rng));
}

Gaussian1D NoisyScaleModel::exact_posterior() const {
  const double prior_prec = 1.0 / (hyper_.prior_std * hyper_.prior_std);
  const double obs_prec = 1.0 / (hyper_.obs_noise_std * hyper_.obs_noise_std);
  const double prec = prior_prec + obs_prec;
  return Gaussian1D((hyper_.prior_mean * prior_prec + hyper_.observation * obs_prec) / prec, 1.0 / std::sqrt(prec));
}

double NoisyScaleModel::log_evidence() const {
  const double marginal_std = std::hypot(hyper_.prior_std, hyper_.obs_noise_std);
  return gaussian_logpdf(hyper_.observation, hyper_.prior_mean, marginal_std);
}

double NoisyScaleModel::exact_elbo(const ParamVector& params) const {
  const Gaussian1D post = exact_posterior();
  const double mean = params["mean"];
  const double var = std::exp(params["log_var"]);
  const double post_var = post.std_dev() * post.std_dev();
  const double d = mean - post.mean();
  const double kl = 0.5 * (std::log(post_var) - params["log_var"]) + (var + d * d) / (2.0 * post_var) - 0.5;
  return log_evidence() - kl;
}

double noisy_scale_elbo(const ParamVector& params, RngStream& rng) {
  static const NoisyScaleModel model;
  return elbo_single_sample(model, params, rng).value;
}

double noisy_scale_elbo_deterministic(const ParamVector& params) {
  static const NoisyScaleModel model(NoisyScaleModel::Mode::DeterministicMean);
  RngStream unused(0, 0);
  return elbo_single_sample(model, params, unused).value;
}

}  // namespace nesvb
