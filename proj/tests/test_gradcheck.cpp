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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nesvb/gradcheck.hpp"
#include "nesvb/noisy_scale.hpp"
#include "nesvb/stats.hpp"

using namespace nesvb;

namespace {

class QuadraticModel final : public Model {
 public:
  QuadraticModel()
      : layout_(std::make_shared<const ParamLayout>(std::vector<std::pair<std::string, Eigen::Index>>{{"v", 4}})) {}
  std::string_view name() const override { return "quadratic"; }
  const std::shared_ptr<const ParamLayout>& layout() const override { return layout_; }
  double elbo_integrand(const ParamVector& p, RngStream&) const override { return -p.values().squaredNorm(); }

 private:
  std::shared_ptr<const ParamLayout> layout_;
};

}  // namespace

TEST_CASE("finite differences of simple functions") {
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 3.0);
  CHECK(std::abs(finite_diff([](const Eigen::VectorXd& v) { return v(0) * v(0); }, x)(0) - 6.0) < 1e-8);
  CHECK(finite_diff([](const Eigen::VectorXd&) { return 5.0; }, Eigen::Vector3d(1, -2, 1e6)).cwiseAbs().maxCoeff() == 0.0);
  // d/dx ln N(x; mu, s) = (mu - x) / s^2 = 1.7778 at x = 8.5, mu = 9.3, s = 0.6.
  const auto score = finite_diff(
      [](const Eigen::VectorXd& v) { return gaussian_logpdf(v(0), Gaussian1D(9.3, 0.6)); }, Eigen::VectorXd::Constant(1, 8.5));
  CHECK(score(0) == doctest::Approx(0.8 / 0.36).epsilon(1e-8));
  const auto abs_step = finite_diff([](const Eigen::VectorXd& v) { return std::sin(v(0)); }, Eigen::VectorXd::Constant(1, 0.3),
                                    1e-5, false);
  CHECK(abs_step(0) == doctest::Approx(std::cos(0.3)).epsilon(1e-9));
}

TEST_CASE("smoothed objective of a quadratic") {
  const QuadraticModel model;
  const Eigen::Vector4d centre(1.0, -0.5, 2.0, 0.25);
  const ParamVector p(model.layout(), centre);
  const double sigma = 0.3;
  const int n = 20000;
  const double value = smoothed_objective(model, p, sigma, n, 1, RngStream(1, 0));
  const double exact = -centre.squaredNorm() - sigma * sigma * 4.0;
  const double se = std::sqrt((4 * sigma * sigma * centre.squaredNorm() + 2 * std::pow(sigma, 4) * 4.0) / n);
  CHECK(std::abs(value - exact) < 3 * se);
  CHECK(smoothed_objective(model, p, sigma, 50, 3, RngStream(1, 1)) ==
        smoothed_objective(model, p, sigma, 50, 3, RngStream(1, 1)));
  CHECK_THROWS_AS(smoothed_objective(model, p, sigma, 0, 1, RngStream(1, 2)), std::invalid_argument);
}

TEST_CASE("tiny smoothing reduces to the plain ELBO") {
  const NoisyScaleModel model;
  const ParamVector p = model.make_params(8.0, -0.5);
  const int n = 100000;
  const double value = smoothed_objective(model, p, 1e-8, n, 1, RngStream(2, 0));
  // Per-draw ELBO variance at this point is below 25.
  CHECK(std::abs(value - model.exact_elbo(p)) < 3 * std::sqrt(25.0 / n));
}

TEST_CASE("monte carlo finite differences report their own standard error") {
  const NoisyScaleModel model;
  const ParamVector p = model.make_params(9.0, 0.0);
  const auto oracle = finite_diff_monte_carlo(elbo_draw(model), p.values(), RngStream(3, 0), 50000);
  const Eigen::VectorXd exact =
      finite_diff([&](const Eigen::VectorXd& v) { return model.exact_elbo(ParamVector(model.layout(), v)); }, p.values());
  CHECK(max_z_score(oracle.mean, oracle.std_error, exact, Eigen::Vector2d::Zero()) < 3.0);
  CHECK(oracle.std_error.minCoeff() > 0.0);
  const auto repeat = finite_diff_monte_carlo(elbo_draw(model), p.values(), RngStream(3, 0), 50000);
  CHECK(repeat.mean == oracle.mean);
  CHECK_THROWS_AS(finite_diff_monte_carlo(elbo_draw(model), p.values(), RngStream(3, 0), 1), std::invalid_argument);
}

TEST_CASE("estimator moments") {
  const NoisyScaleModel model;
  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::Sgvb;
  const auto one = measure_estimator_variance(model, model.initial_params(), cfg, 1, RngStream(4, 0));
  CHECK(one.variance.cwiseAbs().maxCoeff() == 0.0);
  CHECK(one.n_trials == 1);
  const auto a = measure_estimator_variance(model, model.initial_params(), cfg, 300, RngStream(4, 1));
  const auto b = measure_estimator_variance(model, model.initial_params(), cfg, 300, RngStream(4, 1));
  CHECK(a.mean == b.mean);
  CHECK(a.variance == b.variance);
  CHECK(a.trace_variance() == doctest::Approx(a.variance.sum()));
  CHECK(a.std_error()(0) == doctest::Approx(std::sqrt(a.variance(0) / 300)));
  CHECK_THROWS_AS(measure_estimator_variance(model, model.initial_params(), cfg, 0, RngStream(4, 2)),
                  std::invalid_argument);
}

TEST_CASE("scaled error and z-score") {
  CHECK(scaled_max_error(Eigen::Vector2d(1.0, 100.05), Eigen::Vector2d(1.0, 100.0)) == doctest::Approx(0.5));
  CHECK(scaled_max_error(Eigen::Vector2d(2e-6, 0.0), Eigen::Vector2d(0.0, 0.0)) == doctest::Approx(0.2));
  CHECK(max_z_score(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.3, 1.0), Eigen::Vector2d(0.0, 0.0),
                    Eigen::Vector2d(0.4, 1.0)) == doctest::Approx(2.0));
  CHECK(std::isinf(max_z_score(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1),
                               Eigen::VectorXd::Zero(1))));
  CHECK(max_z_score(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1),
                    Eigen::VectorXd::Zero(1)) == 0.0);
}

TEST_CASE("hook checks catch a corrupted gradient") {
  const auto make = [](double scale) {
    return make_hook_check("cubic", 5, [scale](int i) {
      Eigen::VectorXd at = Eigen::VectorXd::Constant(1, 0.5 + i);
      return HookProbe{at, [](const Eigen::VectorXd& v) { return v(0) * v(0) * v(0); },
                       [scale](const Eigen::VectorXd& v) { return Eigen::VectorXd::Constant(1, scale * 3 * v(0) * v(0)); }};
    });
  };
  CHECK(make(1.0).run().passed);
  const CheckResult bad = make(1.01).run();
  CHECK_FALSE(bad.passed);
  CHECK(bad.statistic == doctest::Approx(10.0).epsilon(1e-3));
  CHECK(bad.detail.find("of 5") != std::string::npos);

  std::ostringstream out;
  CHECK(run_verification({make(1.0)}, out) == 0);
  CHECK(out.str().find("all checks passed") != std::string::npos);
  std::ostringstream out_bad;
  const Check throwing{"throws", [] () -> CheckResult { throw std::runtime_error("boom"); }};
  CHECK(run_verification({make(1.0), make(1.01), throwing}, out_bad) == 1);
  CHECK(out_bad.str().find("FAIL") != std::string::npos);
  CHECK(out_bad.str().find("error: boom") != std::string::npos);
}

TEST_CASE("quick verification suite passes") {
  std::ostringstream out;
  const auto suite = default_verification_suite(true);
  CHECK(suite.size() == 7);
  CHECK(run_verification(suite, out) == 0);
  INFO(out.str());
}
