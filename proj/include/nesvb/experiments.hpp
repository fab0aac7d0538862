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
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nesvb/estimators.hpp"
#include "nesvb/gmm.hpp"
#include "nesvb/optimizer.hpp"

namespace nesvb {

enum class Experiment { NoisyScale, NoisyScaleAblation, Gmm };

/// Accepts "noisy-scale", "noisy-scale-ablation", "gmm" (underscores too).
Experiment parse_experiment(std::string_view name);
/// Directory-style identifier: noisy_scale, noisy_scale_ablation, gmm.
std::string_view experiment_id(Experiment e);
std::vector<EstimatorKind> supported_estimators(Experiment e);

struct RunConfig {
  Experiment experiment = Experiment::NoisyScale;
  EstimatorConfig estimator;
  OptimizerConfig optimizer;
  int steps = 2500;
  int n_seeds = 5;
  std::uint64_t master_seed = 1;
  int threads = 1;
  /// Draws averaged into the ELBO recorded per step (separate stream).
  int trace_samples = 10;
  int gmm_points_per_component = 100;
  /// |log_var| beyond this marks a noisy-scale seed as diverged.
  double divergence_bound = 10.0;
};

/// Experiment defaults: 2500 steps and sigma 0.1 for noisy-scale, 500 steps
/// and sigma 0.05 for GMM; 5 seeds, 25 mirrored pairs, Adam at lr 0.01.
RunConfig default_run_config(Experiment e);
void validate(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);

struct TraceRecord {
  int step;
  int seed;
  double elbo;
  std::vector<double> params;
};

struct SeedResult {
  int seed = 0;
  std::vector<TraceRecord> trace;
  Eigen::VectorXd final_params;
  bool diverged = false;
  std::optional<int> diverged_step;
  std::string divergence_reason;
  // GMM only
  std::optional<GmmDataset> dataset;
  std::vector<int> assignments;
  std::optional<double> accuracy;
};

/// Mean over the seeds that recorded a given step.
struct MeanTraceRow {
  int step;
  int seeds;
  double elbo;
  std::vector<double> params;
};

struct RunResult {
  RunConfig config;
  std::vector<std::string> param_columns;
  std::vector<SeedResult> seeds;
  std::vector<MeanTraceRow> mean_trace;
  double wall_seconds = 0.0;

  bool any_diverged() const;
  int diverged_count() const;
  /// Mean of final parameter vectors over seeds that stayed finite.
  Eigen::VectorXd mean_final_params() const;
  std::optional<double> mean_accuracy() const;
};

/// The dataset seed `seed_index` of a GMM run with `master_seed` trains on.
GmmDataset gmm_dataset_for_seed(std::uint64_t master_seed, int seed_index, int n_per_component);

RunResult run_noisy_scale(const RunConfig& cfg);
RunResult run_noisy_scale_ablation(const RunConfig& cfg);
RunResult run_gmm(const RunConfig& cfg);
RunResult run_experiment(const RunConfig& cfg);

std::vector<MeanTraceRow> mean_trace(const std::vector<SeedResult>& seeds);

/// `<out>/<experiment>_<estimator>`
std::filesystem::path run_directory(const std::filesystem::path& out, const RunConfig& cfg);

nlohmann::json summary_json(const RunResult& result, const nlohmann::json& config_file = nullptr);
std::string trace_csv(const RunResult& result, const SeedResult& seed);
std::string mean_trace_csv(const RunResult& result);

/// Writes trace_seed<k>.csv, mean_trace.csv, summary.json, timing.json and,
/// for GMM, assignments_seed<k>.csv. Returns the run directory.
std::filesystem::path write_run(const RunResult& result, const std::filesystem::path& out,
                                const nlohmann::json& config_file = nullptr);

}  // namespace nesvb
