// Copyright 2026 The PARGS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pargs/cli/commands.h"
#include "pargs/cli/config.h"
#include "pargs/errors.h"

namespace pargs::cli {

int Main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reward-guided decoding experiments on toy language models"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON experiment configuration");

  // One flag per configuration leaf, e.g. --decode.beta.
  const nlohmann::json defaults = DefaultConfig();
  const std::vector<std::string> leaves = LeafNames(defaults);
  std::map<std::string, std::string> overrides;
  std::map<std::string, CLI::Option*> leaf_options;
  for (const auto& name : leaves) {
    leaf_options[name] =
        app.add_option("--" + name, overrides[name],
                       "default " + At(defaults, name).dump())
            ->group("Configuration");
  }
  std::string out_dir;
  app.add_option("--out-dir", out_dir, "Same as --out_dir");

  auto* fit_ref = app.add_subcommand("fit-ref", "Fit an n-gram reference policy");
  auto* train_rm = app.add_subcommand("train-rm", "Train a linear reward model");
  std::string objective;
  train_rm->add_option("--objective", objective, "full or partial");
  auto* generate = app.add_subcommand("generate", "Decode responses for prompts");
  std::string method;
  std::string prompts;
  generate->add_option("--method", method,
                       "pargs, pargs-g, args, args-s, topk or best-of-n");
  generate->add_option("--prompts", prompts, "Prompt file, one per line");
  auto* evaluate = app.add_subcommand("evaluate", "Score trace directories");
  std::vector<std::string> traces;
  evaluate->add_option("--traces", traces, "Trace directories, one per method");
  auto* oracle = app.add_subcommand("oracle", "Exact checks on a toy instance");
  std::string check;
  oracle->add_option("--check", check, "ratio, pathology or single-rlhf");
  auto* cost = app.add_subcommand("cost", "Per-token inference cost model");
  auto* synth = app.add_subcommand("synth", "Write a synthetic task");
  auto* sweep = app.add_subcommand("sweep", "Mean reward across beta values");
  sweep->add_option("--method", method, "guided method to sweep");
  sweep->add_option("--prompts", prompts, "Prompt file, one per line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    nlohmann::json cfg = defaults;
    if (!config_path.empty()) MergeConfig(cfg, LoadConfigFile(config_path));
    for (const auto& name : leaves) {
      if (leaf_options[name]->count() > 0) {
        ApplyOverride(cfg, name, overrides[name]);
      }
    }
    if (!out_dir.empty()) ApplyOverride(cfg, "out_dir", out_dir);
    if (!objective.empty()) ApplyOverride(cfg, "train.objective", objective);
    if (!method.empty()) ApplyOverride(cfg, "decode.method", method);
    if (!prompts.empty()) ApplyOverride(cfg, "paths.prompts", prompts);
    if (!check.empty()) ApplyOverride(cfg, "oracle.check", check);

    if (fit_ref->parsed()) return CmdFitRef(cfg, out);
    if (train_rm->parsed()) return CmdTrainRm(cfg, out);
    if (generate->parsed()) return CmdGenerate(cfg, out);
    if (evaluate->parsed()) {
      std::vector<std::filesystem::path> dirs(traces.begin(), traces.end());
      return CmdEvaluate(cfg, dirs, out);
    }
    if (oracle->parsed()) return CmdOracle(cfg, out);
    if (cost->parsed()) return CmdCost(cfg, out);
    if (synth->parsed()) return CmdSynth(cfg, out);
    if (sweep->parsed()) return CmdSweep(cfg, out);
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace pargs::cli
