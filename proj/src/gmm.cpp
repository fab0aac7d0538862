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

#include "nesvb/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nesvb {

namespace {

int argmax_lowest(const GmmLogits& v) {
  int best = 0;
  for (int c = 1; c < kGmmComponents; ++c)
    if (v(c) > v(best)) best = c;
  return best;
}

}  // namespace

std::array<Gaussian1D, kGmmComponents> default_gmm_components() {
  return {Gaussian1D(-1.0, 0.5), Gaussian1D(3.0, 0.25), Gaussian1D(-5.0, 0.45)};
}

GmmDataset gmm_generate_dataset(int n_per_component, const std::function<double()>& standard_normal,
                                const std::array<Gaussian1D, kGmmComponents>& components) {
  if (n_per_component < 1) throw std::invalid_argument("gmm_generate_dataset: n_per_component must be >= 1");
  GmmDataset out;
  out.points.resize(kGmmComponents * n_per_component, 2);
  out.labels.reserve(out.points.rows());
  Eigen::Index row = 0;
  for (int c = 0; c < kGmmComponents; ++c) {
    for (int i = 0; i < n_per_component; ++i, ++row) {
      out.points(row, 0) = gaussian_transform(components[c], standard_normal());
      out.points(row, 1) = gaussian_transform(components[c], standard_normal());
      out.labels.push_back(c);
    }
  }
  return out;
}

GmmDataset gmm_generate_dataset(int n_per_component, RngStream& rng,
                                const std::array<Gaussian1D, kGmmComponents>& components) {
  return gmm_generate_dataset(n_per_component, [&rng] { return rng.normal(); }, components);
}

GmmModel::GmmModel(GmmDataset data, std::array<Gaussian1D, kGmmComponents> components,
                   Eigen::Vector3d mixture_weights)
    : data_(std::move(data)),
      components_(components),
      mixture_weights_(mixture_weights),
      layout_(std::make_shared<const ParamLayout>(
          std::vector<std::pair<std::string, Eigen::Index>>{{"weights", 6}, {"bias", 3}})) {
  if (data_.labels.size() != static_cast<std::size_t>(data_.points.rows()))
    throw std::invalid_argument("GmmModel: one label per point required");
  if ((mixture_weights_.array() <= 0.0).any() || std::abs(mixture_weights_.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("GmmModel: mixture weights must be positive and sum to 1");
  log_joint_.resize(data_.size(), kGmmComponents);
  for (Eigen::Index i = 0; i < data_.size(); ++i)
    for (int c = 0; c < kGmmComponents; ++c)
      log_joint_(i, c) = gaussian_logpdf(data_.points(i, 0), components_[c]) +
                         gaussian_logpdf(data_.points(i, 1), components_[c]) + std::log(mixture_weights_(c));
}

ParamVector GmmModel::make_params(const GmmWeights& weights, const GmmLogits& bias) const {
  ParamVector p(layout_);
  p.segment("weights") = Eigen::Map<const Eigen::Matrix<double, 6, 1>>(
      Eigen::Matrix<double, kGmmComponents, 2, Eigen::RowMajor>(weights).data());
  p.segment("bias") = bias;
  return p;
}

GmmWeights GmmModel::weight_matrix(const ParamVector& params) {
  const auto w = params.segment("weights");
  return Eigen::Map<const Eigen::Matrix<double, kGmmComponents, 2, Eigen::RowMajor>>(w.data());
}

GmmLogits GmmModel::logits(const ParamVector& params, Eigen::Index point) const {
  return weight_matrix(params) * data_.points.row(point).transpose() + params.segment("bias");
}

GmmLogits GmmModel::forward(const ParamVector& params, const Eigen::Vector2d& x) const {
  return softmax(GmmLogits(weight_matrix(params) * x + params.segment("bias")));
}

double GmmModel::integrand_at(const ParamVector& params, const Eigen::VectorXd& uniforms) const {
  require_layout(params, *layout_, "gmm");
  const GmmWeights w = weight_matrix(params);
  const GmmLogits b = params.segment("bias");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < data_.size(); ++i) {
    const GmmLogits l = w * data_.points.row(i).transpose() + b;
    const GmmLogits q = softmax(l);
    const Eigen::Index c = categorical_from_uniform(q, uniforms(i));
    // ln q_c straight from the logits stays finite when q_c underflows.
    const double log_q = l(c) - log_sum_exp(l);
    sum += log_joint_(i, c) - log_q;
  }
  return sum / static_cast<double>(data_.size());
}

double GmmModel::elbo_integrand(const ParamVector& params, RngStream& rng) const {
  Eigen::VectorXd u(data_.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = rng.uniform_open();
  return integrand_at(params, u);
}

double GmmModel::relaxed_objective(const ParamVector& params, const Eigen::MatrixXd& gumbel, double temperature) const {
  if (!(temperature > 0.0)) throw std::invalid_argument("relaxed objective: temperature must be > 0");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < data_.size(); ++i) {
    const GmmLogits l = logits(params, i);
    const GmmLogits log_q = l.array() - log_sum_exp(l);
    const GmmLogits y = softmax(GmmLogits((l + gumbel.row(i).transpose()) / temperature));
    sum += y.dot(log_joint_.row(i).transpose() - log_q);
  }
  return sum / static_cast<double>(data_.size());
}

Eigen::VectorXd GmmModel::relaxed_gradient(const ParamVector& params, const Eigen::MatrixXd& gumbel,
                                           double temperature) const {
  if (!(temperature > 0.0)) throw std::invalid_argument("relaxed gradient: temperature must be > 0");
  Eigen::Matrix<double, kGmmComponents, 2> grad_w = Eigen::Matrix<double, kGmmComponents, 2>::Zero();
  GmmLogits grad_b = GmmLogits::Zero();
  for (Eigen::Index i = 0; i < data_.size(); ++i) {
    const GmmLogits l = logits(params, i);
    const GmmLogits q = softmax(l);
    const GmmLogits log_q = l.array() - log_sum_exp(l);
    const GmmLogits y = softmax(GmmLogits((l + gumbel.row(i).transpose()) / temperature));
    const GmmLogits payoff = log_joint_.row(i).transpose() - log_q;
    // d/dl of y.(J - ln q): softmax Jacobian on y, plus the direct ln q term.
    const GmmLogits dl = (y.cwiseProduct(payoff) - y * y.dot(payoff)) / temperature - (y - q);
    grad_w += dl * data_.points.row(i);
    grad_b += dl;
  }
  const double n = static_cast<double>(data_.size());
  Eigen::VectorXd g(9);
  g.head<6>() = Eigen::Map<const Eigen::Matrix<double, 6, 1>>(
      Eigen::Matrix<double, kGmmComponents, 2, Eigen::RowMajor>(grad_w).data());
  g.tail<3>() = grad_b;
  return g / n;
}

double GmmModel::hard_objective(const ParamVector& params, const Eigen::MatrixXd& gumbel) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < data_.size(); ++i) {
    const GmmLogits l = logits(params, i);
    const int h = argmax_lowest(GmmLogits(l + gumbel.row(i).transpose()));
    sum += log_joint_(i, h) - (l(h) - log_sum_exp(l));
  }
  return sum / static_cast<double>(data_.size());
}

RelaxedSample GmmModel::straight_through_sample(const ParamVector& params, RngStream& rng, double temperature) const {
  require_layout(params, *layout_, "gmm");
  if (!(temperature > 0.0)) throw std::invalid_argument("straight-through: temperature must be > 0");
  Eigen::MatrixXd g(data_.size(), kGmmComponents);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (int c = 0; c < kGmmComponents; ++c) g(i, c) = gumbel_sample(rng);
  return {hard_objective(params, g), relaxed_gradient(params, g, temperature)};
}

std::vector<int> GmmModel::assign(const ParamVector& params) const {
  require_layout(params, *layout_, "gmm");
  std::vector<int> out(data_.size());
  for (Eigen::Index i = 0; i < data_.size(); ++i) out[i] = argmax_lowest(logits(params, i));
  return out;
}

double gmm_elbo(const GmmModel& model, const ParamVector& params, RngStream& rng) {
  return elbo_single_sample(model, params, rng).value;
}

std::vector<int> gmm_assign(const GmmModel& model, const ParamVector& params) { return model.assign(params); }

double adjusted_accuracy(const std::vector<int>& assigned, const std::vector<int>& truth) {
  if (assigned.size() != truth.size() || truth.empty())
    throw std::invalid_argument("adjusted_accuracy: label vectors must be non-empty and equal length");
  std::array<int, kGmmComponents> perm{0, 1, 2};
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (perm[assigned[i]] == truth[i]) ++hits;
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

}  // namespace nesvb
