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
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nesvb/cli.hpp"
#include "nesvb/noisy_scale.hpp"

using namespace nesvb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nesvb_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("version prints the default configuration") {
  const Outcome o = run({"--version"});
  CHECK(o.code == cli::kOk);
  CHECK(o.out.rfind("nesvb 0.1.0\n", 0) == 0);
  CHECK(o.out.find("\"sigma\": 0.05") != std::string::npos);
  CHECK(o.out.find("\"steps\": 2500") != std::string::npos);
}

TEST_CASE("configuration errors exit with code 2") {
  const fs::path dir = scratch("errors");
  const std::string out = (dir / "runs").string();
  CHECK(run({"run", "noisy-scale", "--estimator", "bogus", "--out", out}).code == cli::kConfigError);
  const Outcome unknown = run({"run", "noisy-scale", "--estimator", "bogus", "--out", out});
  CHECK(unknown.err.find("nesvb, sgvb, reinforce, rws, st-gumbel") != std::string::npos);
  CHECK(run({"run", "gmm", "--estimator", "sgvb", "--out", out}).code == cli::kConfigError);
  CHECK(run({"run", "mnist", "--estimator", "nesvb", "--out", out}).code == cli::kConfigError);
  CHECK(run({"run", "noisy-scale", "--out", out}).code == cli::kConfigError);
  CHECK(run({"run", "noisy-scale", "--estimator", "nesvb", "--sigma", "0", "--out", out}).code == cli::kConfigError);
  CHECK(run({"run", "noisy-scale", "--estimator", "nesvb", "--steps", "abc"}).code == cli::kConfigError);
  CHECK(run({"run", "noisy-scale", "--estimator", "nesvb", "--no-such-flag"}).code == cli::kConfigError);
  CHECK(run({"run", "gmm", "--estimator", "nesvb", "--ablation", "--out", out}).code == cli::kConfigError);
  CHECK(run({"variance", "--trials", "99"}).code == cli::kConfigError);
  CHECK(run({"variance", "--estimators", "st-gumbel", "--trials", "100"}).code == cli::kConfigError);
  CHECK(run({"dataset", "--per-component", "0"}).code == cli::kConfigError);
  CHECK(run({}).code == cli::kConfigError);

  write(dir / "unknown_key.json", R"({"estimator": "nesvb", "stepz": 3})");
  const Outcome key = run({"run", "noisy-scale", "--config", (dir / "unknown_key.json").string(), "--out", out});
  CHECK(key.code == cli::kConfigError);
  CHECK(key.err.find("stepz") != std::string::npos);
  write(dir / "bad.json", "{not json");
  CHECK(run({"run", "noisy-scale", "--config", (dir / "bad.json").string()}).code == cli::kConfigError);
  write(dir / "type.json", R"({"estimator": "nesvb", "steps": "many"})");
  CHECK(run({"run", "noisy-scale", "--config", (dir / "type.json").string()}).code == cli::kConfigError);
  CHECK(run({"run", "noisy-scale", "--config", (dir / "missing.json").string()}).code == cli::kConfigError);
  CHECK_FALSE(fs::exists(dir / "runs"));
  fs::remove_all(dir);
}

TEST_CASE("flags override the config file which overrides defaults") {
  const fs::path dir = scratch("precedence");
  write(dir / "cfg.json", R"({"estimator": "sgvb", "steps": 7, "seeds": 2, "lr": 0.05, "trace_samples": 3})");
  const std::string out = (dir / "runs").string();
  const Outcome o = run({"run", "noisy-scale", "--config", (dir / "cfg.json").string(), "--steps", "4", "--threads", "2",
                         "--out", out});
  REQUIRE(o.code == cli::kOk);
  const auto summary = nlohmann::json::parse(slurp(dir / "runs" / "noisy_scale_sgvb" / "summary.json"));
  const auto& cfg = summary["config"];
  CHECK(cfg["steps"] == 4);          // flag
  CHECK(cfg["seeds"] == 2);          // file
  CHECK(cfg["lr"] == 0.05);          // file
  CHECK(cfg["trace_samples"] == 3);  // file
  CHECK(cfg["sigma"] == 0.1);        // default
  CHECK(cfg["pairs"] == 25);         // default
  CHECK(summary["config_file"]["steps"] == 7);
  fs::remove_all(dir);
}

TEST_CASE("reruns with the same seed write byte-identical outputs") {
  const fs::path dir = scratch("rerun");
  const std::vector<std::string> base{"run", "gmm", "--estimator", "nesvb", "--steps", "5", "--seeds", "2"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", (dir / "a").string(), "--threads", "1"});
  b.insert(b.end(), {"--out", (dir / "b").string(), "--threads", "4"});
  REQUIRE(run(a).code == cli::kOk);
  REQUIRE(run(b).code == cli::kOk);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a" / "gmm_nesvb")) {
    const std::string name = entry.path().filename().string();
    if (name == "timing.json") continue;
    CHECK_MESSAGE(slurp(entry.path()) == slurp(dir / "b" / "gmm_nesvb" / name), name);
    ++compared;
  }
  CHECK(compared == 6);
  fs::remove_all(dir);
}

TEST_CASE("diverged runs still write outputs and exit with code 3") {
  const fs::path dir = scratch("diverge");
  const Outcome o = run({"run", "noisy-scale", "--ablation", "--estimator", "sgvb", "--steps", "1100", "--seeds", "1",
                         "--out", (dir / "runs").string()});
  CHECK(o.code == cli::kDiverged);
  CHECK(o.out.find("diverged seeds: 1 of 1") != std::string::npos);
  const auto summary = nlohmann::json::parse(slurp(dir / "runs" / "noisy_scale_ablation_sgvb" / "summary.json"));
  CHECK(summary["diverged_seeds"] == 1);
  CHECK(summary["seeds"][0]["diverged"] == true);
  fs::remove_all(dir);
}

TEST_CASE("variance rows follow the requested order and do not depend on it") {
  const Outcome a = run({"variance", "--estimators", "sgvb,nesvb", "--trials", "200"});
  const Outcome b = run({"variance", "--estimators", "nesvb,sgvb", "--trials", "200"});
  REQUIRE(a.code == cli::kOk);
  REQUIRE(b.code == cli::kOk);
  std::vector<std::string> la, lb;
  std::istringstream sa(a.out), sb(b.out);
  for (std::string l; std::getline(sa, l);) la.push_back(l);
  for (std::string l; std::getline(sb, l);) lb.push_back(l);
  REQUIRE(la.size() == 3);
  CHECK(la[0] == "estimator,evaluations,trials,trace_variance,var_mean,var_log_var,grad_mean,grad_log_var");
  CHECK(la[1].rfind("sgvb,50,200,", 0) == 0);
  CHECK(la[2].rfind("nesvb,50,200,", 0) == 0);
  CHECK(la[1] == lb[2]);
  CHECK(la[2] == lb[1]);
}

TEST_CASE("dataset subcommand matches the run's dataset") {
  const Outcome o = run({"dataset", "--per-component", "2", "--seed-index", "1"});
  REQUIRE(o.code == cli::kOk);
  CHECK(o.out.rfind("x1,x2,true_label\n", 0) == 0);
  CHECK(std::count(o.out.begin(), o.out.end(), '\n') == 7);
  CHECK(o.out != run({"dataset", "--per-component", "2", "--seed-index", "0"}).out);
}

TEST_CASE("verify reports a corrupted hook by name and exits with code 1") {
  const NoisyScaleModel model;
  std::vector<Check> suite;
  suite.push_back(make_hook_check("noisy_scale.reparam_gradient", 5, [&model](int i) {
    Eigen::VectorXd at(2);
    at << 7.0 + 0.5 * i, -1.0 + 0.3 * i;
    const double u = 0.25 * i - 0.5;
    return HookProbe{at,
                     [&model, u](const Eigen::VectorXd& v) { return model.integrand(ParamVector(model.layout(), v), u); },
                     [&model, u](const Eigen::VectorXd& v) {
                       Eigen::VectorXd g = model.reparam_gradient_at(ParamVector(model.layout(), v), u);
                       g(1) *= 1.01;
                       return g;
                     }};
  }));
  std::ostringstream out;
  CHECK(cli::verify(suite, out) == cli::kCheckFailed);
  CHECK(out.str().find("noisy_scale.reparam_gradient") != std::string::npos);
  CHECK(out.str().find("FAIL") != std::string::npos);

  const Outcome quick = run({"verify", "--quick"});
  CHECK(quick.code == cli::kOk);
  CHECK(quick.out.find("all checks passed") != std::string::npos);
}
