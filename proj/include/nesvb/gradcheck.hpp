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

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nesvb/estimators.hpp"
#include "nesvb/model.hpp"

namespace nesvb {

using ScalarField = std::function<double(const Eigen::VectorXd&)>;

/// Central differences, one coordinate at a time. With `relative` the step
/// for coordinate k is h * max(1, |x_k|).
Eigen::VectorXd finite_diff(const ScalarField& f, const Eigen::VectorXd& at, double h = 1e-5, bool relative = true);

/// Monte Carlo estimate of E_eps[F(params + sigma eps)] with n_outer
/// perturbations, each scored by the mean of n_inner ELBO draws. A pure
/// function of the rng state it is given (rng is taken by value).
double smoothed_objective(const Model& model, const ParamVector& params, double sigma, int n_outer, int n_inner,
                          RngStream rng);

/// Objective that is a mean over independent draws; draw j sees its own
/// stream, identical across every point it is evaluated at.
using PerDrawObjective = std::function<double(const Eigen::VectorXd&, RngStream&)>;

struct MonteCarloGradient {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_error;
};

/// Finite differences of a Monte Carlo objective under common random
/// numbers. The difference of a sample mean is the mean of per-draw
/// differences, which also yields a standard error for the oracle itself.
MonteCarloGradient finite_diff_monte_carlo(const PerDrawObjective& f, const Eigen::VectorXd& at, RngStream rng,
                                           int n_draws, double h = 1e-5);

/// Per-draw ELBO integrand, for finite_diff_monte_carlo.
PerDrawObjective elbo_draw(const Model& model);
/// Per-draw smoothed objective: one perturbation, one inner ELBO draw.
PerDrawObjective smoothed_draw(const Model& model, double sigma);

/// Empirical mean and per-coordinate variance of repeated estimates.
struct EstimatorMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  ///< unbiased (n-1) sample variance; zeros when n == 1
  int n_trials = 0;

  double trace_variance() const { return variance.sum(); }
  Eigen::VectorXd std_error() const;
};

/// Gradient estimates at fixed params over n_trials independent streams
/// derived from rng.
EstimatorMoments measure_estimator_variance(const Model& model, const ParamVector& params,
                                            const EstimatorConfig& cfg, int n_trials, RngStream rng);

/// Largest |a - b| / max(abs_tol, rel_tol * |b|) over coordinates; <= 1 passes.
double scaled_max_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double abs_tol = 1e-5, double rel_tol = 1e-3);

/// Largest |a - b| in units of combined standard error; <= 3 passes.
double max_z_score(const Eigen::VectorXd& a, const Eigen::VectorXd& se_a, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& se_b);

struct CheckResult {
  std::string name;
  bool passed = false;
  double statistic = 0.0;  ///< scaled error or z-score, depending on the check
  double threshold = 0.0;
  std::string detail;
};

struct Check {
  std::string name;
  std::function<CheckResult()> run;
};

/// One frozen-noise instance of a hook: a deterministic objective, its
/// claimed analytic gradient, and the point to compare them at.
struct HookProbe {
  Eigen::VectorXd at;
  ScalarField objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

/// Analytic gradient against central differences at each probe; passes when
/// every coordinate agrees within max(1e-5, 1e-3 |grad|).
Check make_hook_check(std::string name, int n_probes, std::function<HookProbe(int)> make_probe);

/// Built-in suite: every analytic hook of both models, plus the
/// unbiasedness of NESVB, SGVB and REINFORCE. `quick` trims trial counts.
std::vector<Check> default_verification_suite(bool quick);

/// Runs the checks, prints a table, returns 0 iff every check passed.
int run_verification(const std::vector<Check>& suite, std::ostream& out);

}  // namespace nesvb
