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

#include "nesvb/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "nesvb/errors.hpp"
#include "nesvb/experiments.hpp"
#include "nesvb/io.hpp"
#include "nesvb/noisy_scale.hpp"
#include "nesvb/parallel.hpp"
#include "nesvb/version.hpp"

namespace nesvb::cli {

namespace {

using nlohmann::json;

struct RunFlags {
  std::string experiment;
  std::optional<std::string> estimator;
  std::optional<int> steps, seeds, pairs, particles, threads, trace_samples, samples, points_per_component;
  std::optional<double> sigma, lr, temperature, clip_norm;
  std::optional<std::string> optimizer, out, config;
  std::optional<std::uint64_t> master_seed;
  bool ablation = false;
  bool fitness_shaping = false;
  bool common_random_numbers = false;
  bool control_variate = false;
};

const std::vector<std::string> kConfigKeys{
    "experiment", "estimator", "steps",   "seeds",     "sigma",         "pairs",
    "lr",         "temperature", "particles", "ablation", "out",         "master_seed",
    "optimizer",  "clip_norm", "threads", "fitness_shaping", "common_random_numbers", "control_variate",
    "trace_samples", "samples", "points_per_component"};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a flat JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end())
      throw ConfigError("unknown config key '" + key + "'");
    if (value.is_object() || value.is_array()) throw ConfigError("config key '" + key + "' must be a scalar");
  }
  return j;
}

template <typename T>
T pick(const std::optional<T>& flag, const json& file, const char* key, T fallback) {
  if (flag) return *flag;
  if (file.contains(key)) {
    try {
      return file.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
  }
  return fallback;
}

bool pick_flag(bool flag, const json& file, const char* key, bool fallback) {
  return flag ? true : pick<bool>(std::nullopt, file, key, fallback);
}

struct ResolvedRun {
  RunConfig cfg;
  std::string out_dir;
};

ResolvedRun resolve(const RunFlags& f, const json& file) {
  std::string exp_name = f.experiment.empty() ? pick<std::string>(std::nullopt, file, "experiment", "") : f.experiment;
  if (exp_name.empty()) throw ConfigError("missing experiment; valid: noisy-scale, noisy-scale-ablation, gmm");
  Experiment experiment = parse_experiment(exp_name);
  if (pick_flag(f.ablation, file, "ablation", false)) {
    if (experiment == Experiment::Gmm) throw ConfigError("--ablation applies to noisy-scale only");
    experiment = Experiment::NoisyScaleAblation;
  }
  RunConfig cfg = default_run_config(experiment);
  const std::string est = pick<std::string>(f.estimator, file, "estimator", "");
  if (est.empty()) throw ConfigError("missing --estimator; valid: nesvb, sgvb, reinforce, rws, st-gumbel");
  cfg.estimator.kind = parse_estimator(est);
  cfg.steps = pick(f.steps, file, "steps", cfg.steps);
  cfg.n_seeds = pick(f.seeds, file, "seeds", cfg.n_seeds);
  cfg.estimator.nes.sigma = pick(f.sigma, file, "sigma", cfg.estimator.nes.sigma);
  cfg.estimator.nes.n_pairs = pick(f.pairs, file, "pairs", cfg.estimator.nes.n_pairs);
  cfg.estimator.nes.fitness_shaping = pick_flag(f.fitness_shaping, file, "fitness_shaping", false);
  cfg.estimator.nes.common_random_numbers = pick_flag(f.common_random_numbers, file, "common_random_numbers", false);
  cfg.estimator.temperature = pick(f.temperature, file, "temperature", cfg.estimator.temperature);
  cfg.estimator.particles = pick(f.particles, file, "particles", cfg.estimator.particles);
  cfg.estimator.control_variate = pick_flag(f.control_variate, file, "control_variate", false);
  cfg.estimator.samples = pick(f.samples, file, "samples", cfg.estimator.samples);
  cfg.optimizer.kind = parse_optimizer(pick<std::string>(f.optimizer, file, "optimizer", "adam"));
  cfg.optimizer.learning_rate = pick(f.lr, file, "lr", cfg.optimizer.learning_rate);
  if (f.clip_norm) {
    cfg.optimizer.clip_norm = *f.clip_norm;
  } else if (file.contains("clip_norm") && !file.at("clip_norm").is_null()) {
    cfg.optimizer.clip_norm = pick<double>(std::nullopt, file, "clip_norm", 0.0);
  }
  cfg.master_seed = pick(f.master_seed, file, "master_seed", cfg.master_seed);
  cfg.threads = pick(f.threads, file, "threads", cfg.threads);
  cfg.trace_samples = pick(f.trace_samples, file, "trace_samples", cfg.trace_samples);
  cfg.gmm_points_per_component = pick(f.points_per_component, file, "points_per_component", cfg.gmm_points_per_component);
  validate(cfg);
  return {cfg, pick<std::string>(f.out, file, "out", "runs")};
}

int cmd_run(const RunFlags& flags, std::ostream& out) {
  const json file = flags.config ? load_config(*flags.config) : json::object();
  const ResolvedRun run = resolve(flags, file);
  const RunResult result = run_experiment(run.cfg);
  const auto dir = write_run(result, run.out_dir, flags.config ? file : json(nullptr));

  out << "wrote " << dir.string() << '\n';
  const Eigen::VectorXd finals = result.mean_final_params();
  for (std::size_t k = 0; k < result.param_columns.size() && !result.mean_trace.empty(); ++k)
    out << "  mean final " << result.param_columns[k] << " = " << format_real(result.mean_trace.back().params[k])
        << '\n';
  if (!result.mean_trace.empty()) out << "  mean final elbo = " << format_real(result.mean_trace.back().elbo) << '\n';
  if (auto acc = result.mean_accuracy()) out << "  mean adjusted accuracy = " << format_real(*acc) << '\n';
  if (result.any_diverged()) {
    out << "  diverged seeds: " << result.diverged_count() << " of " << result.seeds.size() << '\n';
    return kDiverged;
  }
  return kOk;
}

struct VarianceFlags {
  std::string estimators = "nesvb,reinforce,sgvb";
  int trials = 10000;
  int budget = 50;
  double sigma = 0.1;
  double theta = 8.5;
  double log_var = 0.0;
  std::uint64_t master_seed = 1;
  std::optional<std::string> out;
};

int cmd_variance(const VarianceFlags& f, std::ostream& out) {
  if (f.trials < 100) throw ConfigError("--trials must be >= 100");
  if (f.budget < 2) throw ConfigError("--budget must be >= 2");
  const NoisyScaleModel model;
  const ParamVector params = model.make_params(f.theta, f.log_var);

  std::vector<EstimatorKind> kinds;
  std::stringstream list(f.estimators);
  for (std::string name; std::getline(list, name, ',');) {
    if (name.empty()) continue;
    const EstimatorKind k = parse_estimator(name);
    const auto ok = supported_estimators(Experiment::NoisyScale);
    if (std::find(ok.begin(), ok.end(), k) == ok.end())
      throw ConfigError("estimator '" + name + "' is not available at the noisy-scale probe point");
    kinds.push_back(k);
  }
  if (kinds.empty()) throw ConfigError("--estimators is empty");

  std::ostringstream csv;
  csv << "estimator,evaluations,trials,trace_variance,var_mean,var_log_var,grad_mean,grad_log_var\n";
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    EstimatorConfig cfg;
    cfg.kind = kinds[i];
    cfg.nes.sigma = f.sigma;
    cfg.nes.n_pairs = std::max(1, f.budget / 2);
    cfg.samples = f.budget;
    cfg.particles = f.budget;
    const RngStream stream(f.master_seed, 0x7a7 + static_cast<std::uint64_t>(kinds[i]));
    const EstimatorMoments m = measure_estimator_variance(model, params, cfg, f.trials, stream);
    csv << estimator_name(cfg.kind) << ',' << evaluation_budget(cfg) << ',' << f.trials << ','
        << format_real(m.trace_variance()) << ',' << format_real(m.variance(0)) << ',' << format_real(m.variance(1))
        << ',' << format_real(m.mean(0)) << ',' << format_real(m.mean(1)) << '\n';
  }
  out << csv.str();
  if (f.out) write_file_atomic(*f.out, csv.str());
  return kOk;
}

int cmd_dataset(int per_component, std::uint64_t master_seed, int seed_index, const std::optional<std::string>& path,
                std::ostream& out) {
  if (per_component < 1) throw ConfigError("--per-component must be >= 1");
  if (seed_index < 0) throw ConfigError("--seed-index must be >= 0");
  const std::string csv = dataset_csv(gmm_dataset_for_seed(master_seed, seed_index, per_component));
  if (path) {
    write_file_atomic(*path, csv);
    out << "wrote " << *path << '\n';
  } else {
    out << csv;
  }
  return kOk;
}

json default_config_json() {
  json j;
  j["noisy_scale"] = to_json(default_run_config(Experiment::NoisyScale));
  j["gmm"] = to_json(default_run_config(Experiment::Gmm));
  for (auto& [_, v] : j.items()) v.erase("estimator");
  return j;
}

}  // namespace

int verify(const std::vector<Check>& suite, std::ostream& out) { return run_verification(suite, out); }

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variational inference with evolution-strategies gradient estimates"};
  app.name("nesvb");
  bool version = false;
  app.add_flag("--version", version, "Print the version and default configuration");
  app.require_subcommand(0, 1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "Run an experiment across seeds and write traces");
  run->add_option("experiment", rf.experiment, "noisy-scale | noisy-scale-ablation | gmm");
  run->add_option("--estimator", rf.estimator, "nesvb | sgvb | reinforce | rws | st-gumbel");
  run->add_option("--steps", rf.steps, "Optimizer steps per seed");
  run->add_option("--seeds", rf.seeds, "Independent seeds");
  run->add_option("--sigma", rf.sigma, "NES perturbation scale");
  run->add_option("--pairs", rf.pairs, "NES mirrored pairs per estimate");
  run->add_option("--lr", rf.lr, "Learning rate");
  run->add_option("--optimizer", rf.optimizer, "adam | sgd");
  run->add_option("--clip-norm", rf.clip_norm, "Gradient max-norm clipping");
  run->add_option("--temperature", rf.temperature, "Gumbel-softmax temperature");
  run->add_option("--particles", rf.particles, "RWS particles");
  run->add_option("--samples", rf.samples, "Draws per estimate for single-evaluation estimators");
  run->add_option("--trace-samples", rf.trace_samples, "ELBO draws recorded per step");
  run->add_option("--points-per-component", rf.points_per_component, "GMM dataset size per component");
  run->add_flag("--ablation", rf.ablation, "Deterministic-mean noisy-scale variant");
  run->add_flag("--fitness-shaping", rf.fitness_shaping, "Rank-based NES fitness shaping");
  run->add_flag("--common-random-numbers", rf.common_random_numbers, "Share inner draws within an NES pair");
  run->add_flag("--control-variate", rf.control_variate, "Running-mean baseline for REINFORCE");
  run->add_option("--out", rf.out, "Output directory (default: runs)");
  run->add_option("--master-seed", rf.master_seed, "Seed for every random stream");
  run->add_option("--threads", rf.threads, "Worker cap (default: hardware concurrency)");
  run->add_option("--config", rf.config, "Flat JSON config; flags override it");

  bool quick = false;
  auto* ver = app.add_subcommand("verify", "Check analytic gradients and estimator unbiasedness");
  ver->add_flag("--quick", quick, "Reduced trial counts");

  VarianceFlags vf;
  auto* var = app.add_subcommand("variance", "Gradient-estimate variance at the noisy-scale probe point");
  var->add_option("--estimators", vf.estimators, "Comma-separated estimator names");
  var->add_option("--trials", vf.trials, "Independent estimates per estimator (>= 100)");
  var->add_option("--budget", vf.budget, "ELBO evaluations per estimate");
  var->add_option("--sigma", vf.sigma, "NES perturbation scale");
  var->add_option("--theta", vf.theta, "Probe posterior mean");
  var->add_option("--log-var", vf.log_var, "Probe posterior log variance");
  var->add_option("--master-seed", vf.master_seed, "Seed");
  var->add_option("--out", vf.out, "Also write the CSV here");

  int per_component = 100;
  std::uint64_t data_seed = 1;
  int seed_index = 0;
  std::optional<std::string> data_out;
  auto* data = app.add_subcommand("dataset", "Generate the synthetic GMM dataset");
  data->add_option("--per-component", per_component, "Points per component");
  data->add_option("--master-seed", data_seed, "Seed (matches run --master-seed)");
  data->add_option("--seed-index", seed_index, "Which run seed's dataset to reproduce");
  data->add_option("--out", data_out, "CSV path (default: stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (version) {
      out << "nesvb " << kVersion << '\n' << default_config_json().dump(2) << '\n';
      return kOk;
    }
    if (*run) return cmd_run(rf, out);
    if (*ver) return verify(default_verification_suite(quick), out);
    if (*var) return cmd_variance(vf, out);
    if (*data) return cmd_dataset(per_component, data_seed, seed_index, data_out, out);
    out << app.help();
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace nesvb::cli
