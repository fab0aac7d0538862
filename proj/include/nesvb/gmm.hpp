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

#include <array>
#include <functional>
#include <vector>

#include "nesvb/model.hpp"
#include "nesvb/stats.hpp"

namespace nesvb {

inline constexpr int kGmmComponents = 3;

using GmmPoints = Eigen::Matrix<double, Eigen::Dynamic, 2>;
using GmmWeights = Eigen::Matrix<double, kGmmComponents, 2>;
using GmmLogits = Eigen::Matrix<double, kGmmComponents, 1>;

struct GmmDataset {
  GmmPoints points;
  std::vector<int> labels;

  Eigen::Index size() const { return points.rows(); }
};

/// N(-1, 0.5), N(3, 0.25), N(-5, 0.45); second argument is a std dev.
std::array<Gaussian1D, kGmmComponents> default_gmm_components();

/// Both coordinates of every point come from the same component. Points are
/// ordered by component, then by index within the component.
GmmDataset gmm_generate_dataset(int n_per_component, RngStream& rng,
                                const std::array<Gaussian1D, kGmmComponents>& components = default_gmm_components());
/// Same, with standard-normal draws from a caller-supplied source.
GmmDataset gmm_generate_dataset(int n_per_component, const std::function<double()>& standard_normal,
                                const std::array<Gaussian1D, kGmmComponents>& components = default_gmm_components());

/// Fixed 3-component mixture over 2-D points with a linear-softmax
/// inference network q(c | x) = softmax(W x + b). Params: slice "weights"
/// holds W row-major (3x2), slice "bias" holds b. The ELBO is averaged over
/// points, full batch.
class GmmModel final : public Model {
 public:
  explicit GmmModel(GmmDataset data,
                    std::array<Gaussian1D, kGmmComponents> components = default_gmm_components(),
                    Eigen::Vector3d mixture_weights = Eigen::Vector3d::Constant(1.0 / 3.0));

  std::string_view name() const override { return "gmm"; }
  const std::shared_ptr<const ParamLayout>& layout() const override { return layout_; }

  const GmmDataset& data() const { return data_; }
  const std::array<Gaussian1D, kGmmComponents>& components() const { return components_; }
  const Eigen::Vector3d& mixture_weights() const { return mixture_weights_; }
  /// ln N(x1; c) + ln N(x2; c) + ln pi_c, one row per point.
  const Eigen::Matrix<double, Eigen::Dynamic, kGmmComponents>& log_joint_table() const { return log_joint_; }

  ParamVector make_params(const GmmWeights& weights, const GmmLogits& bias) const;
  ParamVector zero_params() const { return ParamVector(layout_); }
  static GmmWeights weight_matrix(const ParamVector& params);

  GmmLogits logits(const ParamVector& params, Eigen::Index point) const;
  GmmLogits forward(const ParamVector& params, const Eigen::Vector2d& x) const;

  /// Integrand with one uniform per point driving the inverse-CDF draw.
  double integrand_at(const ParamVector& params, const Eigen::VectorXd& uniforms) const;
  double elbo_integrand(const ParamVector& params, RngStream& rng) const override;

  /// Mean over points of sum_c y_c (J_c - ln q_c) with
  /// y = softmax((logits + gumbel) / temperature). `gumbel` is points x 3.
  double relaxed_objective(const ParamVector& params, const Eigen::MatrixXd& gumbel, double temperature) const;
  Eigen::VectorXd relaxed_gradient(const ParamVector& params, const Eigen::MatrixXd& gumbel, double temperature) const;
  /// Same perturbation, hard argmax selection: mean of J_h - ln q_h.
  double hard_objective(const ParamVector& params, const Eigen::MatrixXd& gumbel) const;

  bool has_relaxed_gradient() const override { return true; }
  RelaxedSample straight_through_sample(const ParamVector& params, RngStream& rng, double temperature) const override;

  /// argmax_c q(c | x) per point, ties to the lowest index.
  std::vector<int> assign(const ParamVector& params) const;

 private:
  GmmDataset data_;
  std::array<Gaussian1D, kGmmComponents> components_;
  Eigen::Vector3d mixture_weights_;
  Eigen::Matrix<double, Eigen::Dynamic, kGmmComponents> log_joint_;
  std::shared_ptr<const ParamLayout> layout_;
};

double gmm_elbo(const GmmModel& model, const ParamVector& params, RngStream& rng);
std::vector<int> gmm_assign(const GmmModel& model, const ParamVector& params);

/// Fraction of matching labels, maximized over all 3! relabelings of `assigned`.
double adjusted_accuracy(const std::vector<int>& assigned, const std::vector<int>& truth);

}  // namespace nesvb
