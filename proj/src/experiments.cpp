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

#include "nesvb/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <sstream>

#include "nesvb/errors.hpp"
#include "nesvb/io.hpp"
#include "nesvb/noisy_scale.hpp"
#include "nesvb/parallel.hpp"

namespace nesvb {

namespace {

enum Purpose : std::uint64_t { kGradient = 0, kTrace = 1 };
constexpr std::uint64_t kDatasetStream = 0xda7a5e7ULL;

std::string join_names(const std::vector<EstimatorKind>& kinds) {
  std::string s;
  for (auto k : kinds) s += (s.empty() ? "" : ", ") + std::string(estimator_name(k));
  return s;
}

/// How one experiment plugs into the shared optimization loop.
struct Problem {
  std::shared_ptr<const Model> model;
  ParamVector init;
  std::function<std::vector<double>(const ParamVector&)> columns;
  bool watch_log_var = false;
};

SeedResult optimize_seed(const RunConfig& cfg, const Problem& problem, int seed, const RngStream& seed_rng,
                         int inner_threads) {
  SeedResult out;
  out.seed = seed;
  EstimatorConfig est = cfg.estimator;
  est.nes.threads = inner_threads;
  Optimizer opt(cfg.optimizer, problem.init.size());
  EstimatorState state;
  ParamVector params = problem.init;

  auto record = [&](int step) {
    RngStream trace_rng = seed_rng.derive(static_cast<std::uint64_t>(step)).derive(kTrace);
    const double elbo = elbo_mean(*problem.model, params, trace_rng, cfg.trace_samples).value;
    out.trace.push_back({step, seed, elbo, problem.columns(params)});
    if (problem.watch_log_var && !out.diverged && std::abs(params["log_var"]) > cfg.divergence_bound) {
      out.diverged = true;
      out.diverged_step = step;
      out.divergence_reason = "log_var left [-bound, bound]";
    }
  };

  record(0);
  for (int step = 1; step <= cfg.steps; ++step) {
    RngStream grad_rng = seed_rng.derive(static_cast<std::uint64_t>(step)).derive(kGradient);
    try {
      const GradientEstimate g = estimate_gradient(*problem.model, params, grad_rng, est, state);
      params = opt.step(params, g);
      record(step);
    } catch (const NonFiniteError& e) {
      if (!out.diverged) {
        out.diverged = true;
        out.diverged_step = step;
        out.divergence_reason = e.what();
      }
      break;
    }
  }
  out.final_params = params.values();
  return out;
}

RunResult run_seeds(const RunConfig& cfg, std::vector<std::string> columns,
                    const std::function<Problem(int, const RngStream&)>& make_problem,
                    const std::function<void(SeedResult&, const Problem&)>& finish = {}) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.config = cfg;
  result.param_columns = std::move(columns);
  result.seeds.resize(static_cast<std::size_t>(cfg.n_seeds));

  const int outer = std::min(cfg.threads, cfg.n_seeds);
  const int inner = std::max(1, cfg.threads / std::max(outer, 1));
  const RngStream root(cfg.master_seed, 0);
  parallel_for(result.seeds.size(), outer, [&](std::size_t k) {
    const RngStream seed_rng = root.derive(k);
    const Problem problem = make_problem(static_cast<int>(k), seed_rng);
    result.seeds[k] = optimize_seed(cfg, problem, static_cast<int>(k), seed_rng, inner);
    if (finish) finish(result.seeds[k], problem);
  });

  result.mean_trace = mean_trace(result.seeds);
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

RunResult run_noisy(const RunConfig& cfg, NoisyScaleModel::Mode mode) {
  auto model = std::make_shared<const NoisyScaleModel>(mode);
  return run_seeds(cfg, {"mean", "log_var", "std"}, [&](int, const RngStream&) {
    return Problem{model, model->initial_params(),
                   [](const ParamVector& p) {
                     return std::vector<double>{p["mean"], p["log_var"], std::exp(0.5 * p["log_var"])};
                   },
                   mode == NoisyScaleModel::Mode::DeterministicMean};
  });
}

void require_experiment(const RunConfig& cfg, Experiment e) {
  if (cfg.experiment != e)
    throw ConfigError("run config is for experiment '" + std::string(experiment_id(cfg.experiment)) + "', expected '" +
                      std::string(experiment_id(e)) + "'");
}

}  // namespace

Experiment parse_experiment(std::string_view name) {
  if (name == "noisy-scale" || name == "noisy_scale") return Experiment::NoisyScale;
  if (name == "noisy-scale-ablation" || name == "noisy_scale_ablation") return Experiment::NoisyScaleAblation;
  if (name == "gmm") return Experiment::Gmm;
  throw ConfigError("unknown experiment '" + std::string(name) + "'; valid: noisy-scale, noisy-scale-ablation, gmm");
}

std::string_view experiment_id(Experiment e) {
  switch (e) {
    case Experiment::NoisyScale: return "noisy_scale";
    case Experiment::NoisyScaleAblation: return "noisy_scale_ablation";
    case Experiment::Gmm: return "gmm";
  }
  return "unknown";
}

std::vector<EstimatorKind> supported_estimators(Experiment e) {
  switch (e) {
    case Experiment::NoisyScale:
      return {EstimatorKind::Nesvb, EstimatorKind::Sgvb, EstimatorKind::Reinforce, EstimatorKind::Rws};
    case Experiment::NoisyScaleAblation: return {EstimatorKind::Nesvb, EstimatorKind::Sgvb, EstimatorKind::Rws};
    case Experiment::Gmm: return {EstimatorKind::Nesvb, EstimatorKind::StGumbel};
  }
  return {};
}

RunConfig default_run_config(Experiment e) {
  RunConfig cfg;
  cfg.experiment = e;
  cfg.threads = default_thread_count();
  if (e == Experiment::Gmm) {
    cfg.steps = 500;
    cfg.estimator.nes.sigma = 0.05;
    cfg.trace_samples = 1;
  }
  return cfg;
}

void validate(const RunConfig& cfg) {
  if (cfg.steps < 0) throw ConfigError("steps must be >= 0");
  if (cfg.n_seeds < 1) throw ConfigError("seeds must be >= 1");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  if (cfg.trace_samples < 1) throw ConfigError("trace_samples must be >= 1");
  if (cfg.gmm_points_per_component < 1) throw ConfigError("gmm points per component must be >= 1");
  if (!(cfg.divergence_bound > 0.0)) throw ConfigError("divergence bound must be > 0");
  const auto ok = supported_estimators(cfg.experiment);
  if (std::find(ok.begin(), ok.end(), cfg.estimator.kind) == ok.end())
    throw ConfigError("estimator '" + std::string(estimator_name(cfg.estimator.kind)) + "' is not available for " +
                      std::string(experiment_id(cfg.experiment)) + "; valid: " + join_names(ok));
  validate(cfg.estimator.nes);
  if (!(cfg.estimator.temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (cfg.estimator.particles < 2) throw ConfigError("particles must be >= 2");
  if (cfg.estimator.samples < 1) throw ConfigError("samples must be >= 1");
  validate(cfg.optimizer);
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = experiment_id(cfg.experiment);
  j["estimator"] = estimator_name(cfg.estimator.kind);
  j["steps"] = cfg.steps;
  j["seeds"] = cfg.n_seeds;
  j["master_seed"] = cfg.master_seed;
  j["sigma"] = cfg.estimator.nes.sigma;
  j["pairs"] = cfg.estimator.nes.n_pairs;
  j["fitness_shaping"] = cfg.estimator.nes.fitness_shaping;
  j["common_random_numbers"] = cfg.estimator.nes.common_random_numbers;
  j["temperature"] = cfg.estimator.temperature;
  j["particles"] = cfg.estimator.particles;
  j["control_variate"] = cfg.estimator.control_variate;
  j["samples"] = cfg.estimator.samples;
  j["optimizer"] = optimizer_name(cfg.optimizer.kind);
  j["lr"] = cfg.optimizer.learning_rate;
  j["clip_norm"] = cfg.optimizer.clip_norm ? nlohmann::json(*cfg.optimizer.clip_norm) : nlohmann::json(nullptr);
  j["trace_samples"] = cfg.trace_samples;
  j["points_per_component"] = cfg.gmm_points_per_component;
  j["divergence_bound"] = cfg.divergence_bound;
  return j;
}

bool RunResult::any_diverged() const { return diverged_count() > 0; }

int RunResult::diverged_count() const {
  return static_cast<int>(std::count_if(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.diverged; }));
}

Eigen::VectorXd RunResult::mean_final_params() const {
  Eigen::VectorXd sum;
  int n = 0;
  for (const auto& s : seeds) {
    if (!s.final_params.allFinite()) continue;
    sum = n == 0 ? s.final_params : Eigen::VectorXd(sum + s.final_params);
    ++n;
  }
  return n == 0 ? Eigen::VectorXd() : Eigen::VectorXd(sum / n);
}

std::optional<double> RunResult::mean_accuracy() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : seeds)
    if (s.accuracy) {
      sum += *s.accuracy;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::vector<MeanTraceRow> mean_trace(const std::vector<SeedResult>& seeds) {
  std::size_t longest = 0;
  for (const auto& s : seeds) longest = std::max(longest, s.trace.size());
  std::vector<MeanTraceRow> rows;
  rows.reserve(longest);
  for (std::size_t i = 0; i < longest; ++i) {
    MeanTraceRow row{0, 0, 0.0, {}};
    for (const auto& s : seeds) {
      if (i >= s.trace.size()) continue;
      const TraceRecord& r = s.trace[i];
      if (row.seeds == 0) {
        row.step = r.step;
        row.params.assign(r.params.size(), 0.0);
      }
      ++row.seeds;
      row.elbo += r.elbo;
      for (std::size_t k = 0; k < r.params.size(); ++k) row.params[k] += r.params[k];
    }
    row.elbo /= row.seeds;
    for (double& p : row.params) p /= row.seeds;
    rows.push_back(std::move(row));
  }
  return rows;
}

RunResult run_noisy_scale(const RunConfig& cfg) {
  require_experiment(cfg, Experiment::NoisyScale);
  return run_noisy(cfg, NoisyScaleModel::Mode::Stochastic);
}

RunResult run_noisy_scale_ablation(const RunConfig& cfg) {
  require_experiment(cfg, Experiment::NoisyScaleAblation);
  return run_noisy(cfg, NoisyScaleModel::Mode::DeterministicMean);
}

GmmDataset gmm_dataset_for_seed(std::uint64_t master_seed, int seed_index, int n_per_component) {
  RngStream data_rng = RngStream(master_seed, 0).derive(static_cast<std::uint64_t>(seed_index)).derive(kDatasetStream);
  return gmm_generate_dataset(n_per_component, data_rng);
}

RunResult run_gmm(const RunConfig& cfg) {
  require_experiment(cfg, Experiment::Gmm);
  return run_seeds(
      cfg, {"weight_norm", "bias_norm"},
      [&](int k, const RngStream&) {
        auto model = std::make_shared<const GmmModel>(
            gmm_dataset_for_seed(cfg.master_seed, k, cfg.gmm_points_per_component));
        return Problem{model, model->zero_params(), [](const ParamVector& p) {
                         return std::vector<double>{p.segment("weights").norm(), p.segment("bias").norm()};
                       }};
      },
      [](SeedResult& seed, const Problem& problem) {
        const auto& gmm = static_cast<const GmmModel&>(*problem.model);
        seed.dataset = gmm.data();
        if (!seed.final_params.allFinite()) return;
        seed.assignments = gmm.assign(ParamVector(gmm.layout(), seed.final_params));
        seed.accuracy = adjusted_accuracy(seed.assignments, gmm.data().labels);
      });
}

RunResult run_experiment(const RunConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::NoisyScale: return run_noisy_scale(cfg);
    case Experiment::NoisyScaleAblation: return run_noisy_scale_ablation(cfg);
    case Experiment::Gmm: return run_gmm(cfg);
  }
  throw std::logic_error("run_experiment: unhandled experiment");
}

std::filesystem::path run_directory(const std::filesystem::path& out, const RunConfig& cfg) {
  return out / (std::string(experiment_id(cfg.experiment)) + "_" + std::string(estimator_name(cfg.estimator.kind)));
}

nlohmann::json summary_json(const RunResult& result, const nlohmann::json& config_file) {
  nlohmann::json j;
  j["experiment"] = experiment_id(result.config.experiment);
  j["estimator"] = estimator_name(result.config.estimator.kind);
  j["config"] = to_json(result.config);
  if (!config_file.is_null()) j["config_file"] = config_file;
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : result.seeds) {
    nlohmann::json js;
    js["seed"] = s.seed;
    nlohmann::json finals = nlohmann::json::object();
    const auto& last = s.trace.empty() ? std::vector<double>{} : s.trace.back().params;
    for (std::size_t k = 0; k < result.param_columns.size() && k < last.size(); ++k)
      finals[result.param_columns[k]] = round_to_written(last[k]);
    js["final_params"] = finals;
    js["final_elbo"] = s.trace.empty() ? nlohmann::json(nullptr) : nlohmann::json(round_to_written(s.trace.back().elbo));
    js["steps_recorded"] = s.trace.empty() ? 0 : s.trace.back().step;
    js["diverged"] = s.diverged;
    js["diverged_step"] = s.diverged_step ? nlohmann::json(*s.diverged_step) : nlohmann::json(nullptr);
    if (s.diverged) js["divergence_reason"] = s.divergence_reason;
    if (s.accuracy) js["accuracy"] = round_to_written(*s.accuracy);
    seeds.push_back(js);
  }
  j["seeds"] = seeds;
  if (!result.mean_trace.empty()) {
    const auto& last = result.mean_trace.back();
    nlohmann::json finals = nlohmann::json::object();
    for (std::size_t k = 0; k < result.param_columns.size(); ++k)
      finals[result.param_columns[k]] = round_to_written(last.params[k]);
    j["mean_final_params"] = finals;
    j["mean_final_elbo"] = round_to_written(last.elbo);
  }
  if (auto acc = result.mean_accuracy()) j["mean_accuracy"] = round_to_written(*acc);
  j["diverged_seeds"] = result.diverged_count();
  return j;
}

std::string trace_csv(const RunResult& result, const SeedResult& seed) {
  std::ostringstream out;
  out << "step,seed,elbo";
  for (const auto& c : result.param_columns) out << ',' << c;
  out << '\n';
  for (const auto& r : seed.trace) {
    out << r.step << ',' << r.seed << ',' << format_real(r.elbo);
    for (double p : r.params) out << ',' << format_real(p);
    out << '\n';
  }
  return out.str();
}

std::string mean_trace_csv(const RunResult& result) {
  std::ostringstream out;
  out << "step,seeds,elbo";
  for (const auto& c : result.param_columns) out << ',' << c;
  out << '\n';
  for (const auto& r : result.mean_trace) {
    out << r.step << ',' << r.seeds << ',' << format_real(r.elbo);
    for (double p : r.params) out << ',' << format_real(p);
    out << '\n';
  }
  return out.str();
}

std::filesystem::path write_run(const RunResult& result, const std::filesystem::path& out,
                                const nlohmann::json& config_file) {
  const auto dir = run_directory(out, result.config);
  std::filesystem::create_directories(dir);
  for (const auto& s : result.seeds) {
    write_file_atomic(dir / ("trace_seed" + std::to_string(s.seed) + ".csv"), trace_csv(result, s));
    if (s.dataset) {
      // All points get label 0 when the run produced no usable parameters.
      const std::vector<int> assigned =
          s.assignments.empty() ? std::vector<int>(s.dataset->labels.size(), 0) : s.assignments;
      write_file_atomic(dir / ("assignments_seed" + std::to_string(s.seed) + ".csv"),
                        assignments_csv(*s.dataset, assigned));
    }
  }
  write_file_atomic(dir / "mean_trace.csv", mean_trace_csv(result));
  write_file_atomic(dir / "summary.json", summary_json(result, config_file).dump(2) + "\n");
  nlohmann::json timing;
  timing["wall_clock_seconds"] = result.wall_seconds;
  write_file_atomic(dir / "timing.json", timing.dump(2) + "\n");
  return dir;
}

}  // namespace nesvb
