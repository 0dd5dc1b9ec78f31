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


// Experiment configuration: one JSON document whose every leaf can be
// overridden from the command line with a flag of the same dotted name, for
// example --decode.beta 2 or --paths.ref_policy out/ref_policy.json.

#ifndef PARGS_CLI_CONFIG_H_
#define PARGS_CLI_CONFIG_H_

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace pargs::cli {

// Bad configuration or usage; maps to exit status 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every recognised key with its default value.
nlohmann::json DefaultConfig();

// Dotted names of every leaf of `config`, in document order.
std::vector<std::string> LeafNames(const nlohmann::json& config);

// Deep-merges `overlay` into `base`. Keys absent from `base` are rejected so
// that typos fail loudly.
void MergeConfig(nlohmann::json& base, const nlohmann::json& overlay,
                 const std::string& where = "");

nlohmann::json LoadConfigFile(const std::filesystem::path& path);

// Parses `text` with the type of the existing leaf at `dotted` and stores it.
void ApplyOverride(nlohmann::json& config, const std::string& dotted,
                   const std::string& text);

const nlohmann::json& At(const nlohmann::json& config,
                         const std::string& dotted);

template <typename T>
T Get(const nlohmann::json& config, const std::string& dotted) {
  try {
    return At(config, dotted).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key " + dotted + " has the wrong type");
  }
}

}  // namespace pargs::cli

#endif  // PARGS_CLI_CONFIG_H_
