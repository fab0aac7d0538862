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

#include "nesvb/model.hpp"

#include <stdexcept>
#include <string>

#include "nesvb/errors.hpp"

namespace nesvb {

namespace {
[[noreturn]] void missing(const Model& m, const char* hook) {
  throw MissingHookError("model '" + std::string(m.name()) + "' provides no " + hook + " hook");
}
}  // namespace

Eigen::VectorXd Model::reparam_gradient(const ParamVector&, RngStream&) const { missing(*this, "reparameterized-gradient"); }

ScoreSample Model::score_sample(const ParamVector&, RngStream&) const { missing(*this, "score-function"); }

RelaxedSample Model::straight_through_sample(const ParamVector&, RngStream&, double) const {
  missing(*this, "relaxed-gradient");
}

ElboEstimate elbo_single_sample(const Model& model, const ParamVector& params, RngStream& rng) {
  require_layout(params, *model.layout(), "elbo");
  return {model.elbo_integrand(params, rng), 1};
}

ElboEstimate elbo_mean(const Model& model, const ParamVector& params, RngStream& rng, int n) {
  if (n < 1) throw std::invalid_argument("elbo_mean: n must be >= 1");
  require_layout(params, *model.layout(), "elbo");
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += model.elbo_integrand(params, rng);
  return {sum / n, n};
}

}  // namespace nesvb
