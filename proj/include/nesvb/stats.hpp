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

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>

#include "nesvb/rng.hpp"

namespace nesvb {

template <typename Scalar>
inline constexpr Scalar kHalfLog2Pi = Scalar(0.91893853320467274178032973640561764L);

/// Univariate normal parameterized by mean and standard deviation.
template <typename Scalar>
class BasicGaussian1D {
 public:
  BasicGaussian1D(Scalar mean, Scalar std_dev) : mean_(mean), std_dev_(std_dev) {
    if (!(std_dev > Scalar(0))) throw std::invalid_argument("Gaussian1D: std_dev must be > 0");
  }
  Scalar mean() const { return mean_; }
  Scalar std_dev() const { return std_dev_; }

 private:
  Scalar mean_;
  Scalar std_dev_;
};

using Gaussian1D = BasicGaussian1D<double>;

/// mean + std_dev * u for a supplied standard-normal draw u.
template <typename Scalar>
Scalar gaussian_transform(const BasicGaussian1D<Scalar>& d, Scalar u) {
  return d.mean() + d.std_dev() * u;
}

inline double gaussian_sample(const Gaussian1D& d, RngStream& rng) {
  return gaussian_transform(d, rng.normal());
}

template <typename Scalar>
Scalar gaussian_logpdf(Scalar x, Scalar mean, Scalar std_dev) {
  using std::log;
  const Scalar z = (x - mean) / std_dev;
  return -log(std_dev) - kHalfLog2Pi<Scalar> - Scalar(0.5) * z * z;
}

template <typename Scalar>
Scalar gaussian_logpdf(Scalar x, const BasicGaussian1D<Scalar>& d) {
  return gaussian_logpdf(x, d.mean(), d.std_dev());
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.size() == 0) throw std::invalid_argument("log_sum_exp: empty vector");
  if (v.size() == 1) return v(0);
  const Scalar m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

/// Max-subtracted softmax; shifting every logit by a constant leaves the
/// result bitwise unchanged.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

/// Inverse-CDF categorical draw given a uniform u in (0, 1).
template <typename Derived>
Eigen::Index categorical_from_uniform(const Eigen::MatrixBase<Derived>& p, typename Derived::Scalar u) {
  using Scalar = typename Derived::Scalar;
  if ((p.array() < Scalar(0)).any()) throw std::invalid_argument("categorical: negative probability");
  Scalar cumulative = 0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > Scalar(0)) last_positive = i;
    cumulative += p(i);
    if (u < cumulative && p(i) > Scalar(0)) return i;
  }
  // u landed beyond the rounded total.
  return last_positive;
}

template <typename Derived>
Eigen::Index categorical_sample(const Eigen::MatrixBase<Derived>& p, RngStream& rng) {
  if (std::abs(p.sum() - 1.0) > 1e-9) throw std::invalid_argument("categorical: probabilities must sum to 1");
  return categorical_from_uniform(p, rng.uniform_open());
}

template <typename Scalar>
Scalar gumbel_from_uniform(Scalar u) {
  using std::log;
  return -log(-log(u));
}

inline double gumbel_sample(RngStream& rng) { return gumbel_from_uniform(rng.uniform_open()); }

}  // namespace nesvb
