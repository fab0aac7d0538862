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

#include "nesvb/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "nesvb/errors.hpp"
#include "nesvb/gmm.hpp"
#include "nesvb/noisy_scale.hpp"

namespace nesvb {

Eigen::VectorXd finite_diff(const ScalarField& f, const Eigen::VectorXd& at, double h, bool relative) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff: h must be > 0");
  Eigen::VectorXd grad(at.size());
  Eigen::VectorXd x = at;
  for (Eigen::Index k = 0; k < at.size(); ++k) {
    const double step = relative ? h * std::max(1.0, std::abs(at(k))) : h;
    x(k) = at(k) + step;
    const double up = f(x);
    x(k) = at(k) - step;
    const double down = f(x);
    x(k) = at(k);
    if (!std::isfinite(up) || !std::isfinite(down)) throw NonFiniteError("finite_diff: non-finite objective", k);
    grad(k) = (up - down) / (2.0 * step);
  }
  return grad;
}

double smoothed_objective(const Model& model, const ParamVector& params, double sigma, int n_outer, int n_inner,
                          RngStream rng) {
  if (n_outer < 1 || n_inner < 1) throw std::invalid_argument("smoothed_objective: budgets must be >= 1");
  double sum = 0.0;
  Eigen::VectorXd eps(params.size());
  for (int j = 0; j < n_outer; ++j) {
    RngStream draw = rng.derive(static_cast<std::uint64_t>(j));
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps(k) = draw.normal();
    const ParamVector probe = params.with_values(params.values() + sigma * eps);
    sum += elbo_mean(model, probe, draw, n_inner).value;
  }
  return sum / n_outer;
}

MonteCarloGradient finite_diff_monte_carlo(const PerDrawObjective& f, const Eigen::VectorXd& at, RngStream rng,
                                           int n_draws, double h) {
  if (n_draws < 2) throw std::invalid_argument("finite_diff_monte_carlo: need at least 2 draws");
  const Eigen::Index d = at.size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd x = at;
  for (int j = 0; j < n_draws; ++j) {
    const RngStream draw = rng.derive(static_cast<std::uint64_t>(j));
    for (Eigen::Index k = 0; k < d; ++k) {
      const double step = h * std::max(1.0, std::abs(at(k)));
      RngStream up_rng = draw;
      RngStream down_rng = draw;
      x(k) = at(k) + step;
      const double up = f(x, up_rng);
      x(k) = at(k) - step;
      const double down = f(x, down_rng);
      x(k) = at(k);
      const double g = (up - down) / (2.0 * step);
      const double delta = g - mean(k);
      mean(k) += delta / (j + 1);
      m2(k) += delta * (g - mean(k));
    }
  }
  const Eigen::VectorXd var = m2 / (n_draws - 1);
  return {mean, (var / n_draws).cwiseSqrt()};
}

PerDrawObjective elbo_draw(const Model& model) {
  return [&model](const Eigen::VectorXd& v, RngStream& rng) {
    return model.elbo_integrand(ParamVector(model.layout(), v), rng);
  };
}

PerDrawObjective smoothed_draw(const Model& model, double sigma) {
  return [&model, sigma](const Eigen::VectorXd& v, RngStream& rng) {
    Eigen::VectorXd eps(v.size());
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps(k) = rng.normal();
    return model.elbo_integrand(ParamVector(model.layout(), v + sigma * eps), rng);
  };
}

Eigen::VectorXd EstimatorMoments::std_error() const { return (variance / std::max(n_trials, 1)).cwiseSqrt(); }

EstimatorMoments measure_estimator_variance(const Model& model, const ParamVector& params, const EstimatorConfig& cfg,
                                            int n_trials, RngStream rng) {
  if (n_trials < 1) throw std::invalid_argument("measure_estimator_variance: n_trials must be >= 1");
  const Eigen::Index d = params.size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(d);
  for (int t = 0; t < n_trials; ++t) {
    RngStream trial = rng.derive(static_cast<std::uint64_t>(t));
    EstimatorState state;
    const Eigen::VectorXd g = estimate_gradient(model, params, trial, cfg, state).grad;
    const Eigen::VectorXd delta = g - mean;
    mean += delta / (t + 1);
    m2 += delta.cwiseProduct(g - mean);
  }
  EstimatorMoments out;
  out.mean = mean;
  out.variance = n_trials > 1 ? Eigen::VectorXd(m2 / (n_trials - 1)) : Eigen::VectorXd::Zero(d);
  out.n_trials = n_trials;
  return out;
}

double scaled_max_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double abs_tol, double rel_tol) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double tol = std::max(abs_tol, rel_tol * std::abs(b(k)));
    worst = std::max(worst, std::abs(a(k) - b(k)) / tol);
  }
  return worst;
}

double max_z_score(const Eigen::VectorXd& a, const Eigen::VectorXd& se_a, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& se_b) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double se = std::hypot(se_a(k), se_b(k));
    const double diff = std::abs(a(k) - b(k));
    worst = std::max(worst, se > 0.0 ? diff / se : (diff > 0.0 ? INFINITY : 0.0));
  }
  return worst;
}

Check make_hook_check(std::string name, int n_probes, std::function<HookProbe(int)> make_probe) {
  return Check{name, [name, n_probes, make_probe] {
                 double worst = 0.0;
                 int worst_probe = 0;
                 for (int i = 0; i < n_probes; ++i) {
                   const HookProbe p = make_probe(i);
                   const double err = scaled_max_error(p.gradient(p.at), finite_diff(p.objective, p.at));
                   if (!(err <= worst)) {
                     worst = err;
                     worst_probe = i;
                   }
                 }
                 return CheckResult{name, worst <= 1.0, worst, 1.0,
                                    "worst probe " + std::to_string(worst_probe) + " of " + std::to_string(n_probes)};
               }};
}

namespace {

double uniform_in(RngStream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform_open(); }

std::vector<Check> hook_checks() {
  constexpr int kProbes = 20;
  std::vector<Check> out;
  for (auto mode : {NoisyScaleModel::Mode::Stochastic, NoisyScaleModel::Mode::DeterministicMean}) {
    auto model = std::make_shared<NoisyScaleModel>(mode);
    out.push_back(make_hook_check(std::string(model->name()) + ".reparam_gradient", kProbes, [model](int i) {
      RngStream rng(0x5eed, static_cast<std::uint64_t>(i));
      Eigen::VectorXd at(2);
      at << uniform_in(rng, 6.0, 11.0), uniform_in(rng, -3.0, 2.0);
      const double u = rng.normal();
      return HookProbe{at, [model, u](const Eigen::VectorXd& v) { return model->integrand(ParamVector(model->layout(), v), u); },
                       [model, u](const Eigen::VectorXd& v) { return model->reparam_gradient_at(ParamVector(model->layout(), v), u); }};
    }));
  }
  auto model = std::make_shared<NoisyScaleModel>();
  out.push_back(make_hook_check("noisy_scale.score_function", kProbes, [model](int i) {
    RngStream rng(0x5c0e, static_cast<std::uint64_t>(i));
    Eigen::VectorXd at(2);
    at << uniform_in(rng, 6.0, 11.0), uniform_in(rng, -3.0, 2.0);
    const double z = at(0) + std::exp(0.5 * at(1)) * rng.normal();
    return HookProbe{at, [z](const Eigen::VectorXd& v) { return gaussian_logpdf(z, v(0), std::exp(0.5 * v(1))); },
                     [model, z](const Eigen::VectorXd& v) {
                       const double u = (z - v(0)) / std::exp(0.5 * v(1));
                       return model->score_at(ParamVector(model->layout(), v), u).score;
                     }};
  }));
  RngStream data_rng(0xda7a, 0);
  auto gmm = std::make_shared<GmmModel>(gmm_generate_dataset(5, data_rng));
  out.push_back(make_hook_check("gmm.relaxed_gradient", kProbes, [gmm](int i) {
    RngStream rng(0x6a55, static_cast<std::uint64_t>(i));
    Eigen::VectorXd at(9);
    for (Eigen::Index k = 0; k < at.size(); ++k) at(k) = rng.normal();
    Eigen::MatrixXd g(gmm->data().size(), kGmmComponents);
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      for (int c = 0; c < kGmmComponents; ++c) g(r, c) = gumbel_sample(rng);
    const double tau = uniform_in(rng, 0.5, 2.0);
    return HookProbe{at, [gmm, g, tau](const Eigen::VectorXd& v) { return gmm->relaxed_objective(ParamVector(gmm->layout(), v), g, tau); },
                     [gmm, g, tau](const Eigen::VectorXd& v) { return gmm->relaxed_gradient(ParamVector(gmm->layout(), v), g, tau); }};
  }));
  return out;
}

Check unbiasedness_check(std::string name, EstimatorConfig cfg, bool smoothed, int trials, int oracle_draws,
                         int n_probes) {
  return Check{name, [=] {
                 const NoisyScaleModel model;
                 const std::vector<Eigen::Vector2d> probes{{8.5, 0.0}, {9.1356, std::log(0.36)}, {6.0, 0.0},
                                                           {10.0, -1.0}, {8.0, 0.5}};
                 const PerDrawObjective target = smoothed ? smoothed_draw(model, cfg.nes.sigma) : elbo_draw(model);
                 double worst = 0.0;
                 for (int i = 0; i < n_probes; ++i) {
                   const ParamVector params = model.make_params(probes[i](0), probes[i](1));
                   const auto est = measure_estimator_variance(model, params, cfg, trials,
                                                               RngStream(0xe57, static_cast<std::uint64_t>(i)));
                   const auto oracle = finite_diff_monte_carlo(target, params.values(),
                                                               RngStream(0x0AC1E, static_cast<std::uint64_t>(i)),
                                                               oracle_draws);
                   worst = std::max(worst, max_z_score(est.mean, est.std_error(), oracle.mean, oracle.std_error));
                 }
                 return CheckResult{name, worst <= 3.0, worst, 3.0,
                                    std::to_string(n_probes) + " probes, " + std::to_string(trials) + " trials"};
               }};
}

}  // namespace

std::vector<Check> default_verification_suite(bool quick) {
  std::vector<Check> suite = hook_checks();
  const int trials = quick ? 2000 : 10000;
  const int probes = quick ? 2 : 5;
  EstimatorConfig nes;
  nes.kind = EstimatorKind::Nesvb;
  suite.push_back(unbiasedness_check("nesvb.unbiased_vs_smoothed_fd", nes, true, trials, quick ? 100000 : 1000000, probes));
  EstimatorConfig sgvb;
  sgvb.kind = EstimatorKind::Sgvb;
  suite.push_back(unbiasedness_check("sgvb.unbiased_vs_elbo_fd", sgvb, false, trials, quick ? 20000 : 100000, probes));
  EstimatorConfig reinforce;
  reinforce.kind = EstimatorKind::Reinforce;
  suite.push_back(unbiasedness_check("reinforce.unbiased_vs_elbo_fd", reinforce, false, trials, quick ? 20000 : 100000, probes));
  return suite;
}

int run_verification(const std::vector<Check>& suite, std::ostream& out) {
  bool all = true;
  char line[256];
  std::snprintf(line, sizeof line, "%-40s %-6s %12s %10s  %s\n", "check", "result", "statistic", "threshold", "detail");
  out << line;
  for (const auto& check : suite) {
    CheckResult r;
    try {
      r = check.run();
    } catch (const std::exception& e) {
      r = CheckResult{check.name, false, INFINITY, 0.0, std::string("error: ") + e.what()};
    }
    all = all && r.passed;
    std::snprintf(line, sizeof line, "%-40s %-6s %12.4g %10.4g  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
                  r.statistic, r.threshold, r.detail.c_str());
    out << line;
  }
  out << (all ? "all checks passed\n" : "some checks FAILED\n");
  return all ? 0 : 1;
}

}  // namespace nesvb
