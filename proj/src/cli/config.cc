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


#include "pargs/cli/config.h"

#include <fstream>

namespace pargs::cli {
namespace {

using nlohmann::json;

void CollectLeaves(const json& node, const std::string& prefix,
                   std::vector<std::string>& out) {
  if (node.is_object() && !node.empty()) {
    for (const auto& [key, value] : node.items()) {
      CollectLeaves(value, prefix.empty() ? key : prefix + "." + key, out);
    }
    return;
  }
  out.push_back(prefix);
}

template <typename J>
J* Find(J& config, const std::string& dotted) {
  J* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot - start);
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &node->at(key);
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

}  // namespace

json DefaultConfig() {
  return json::parse(R"({
    "seed": 0,
    "out_dir": "out",
    "tokenize": "char",
    "paths": {
      "vocab": "",
      "corpus": "",
      "heldout": "",
      "preferences": "",
      "prompts": "",
      "ref_policy": "",
      "reward_model": "",
      "init_model": "",
      "eval_model": ""
    },
    "ref": {
      "order": 2,
      "alpha": 0.5,
      "heldout_fraction": 0.1,
      "append_eos": true
    },
    "train": {
      "objective": "partial",
      "learning_rate": 0.1,
      "epochs": 10,
      "prefix_mode": "all_prefixes",
      "l2": 0.0,
      "padding": "pad",
      "full_batch": false
    },
    "decode": {
      "method": "pargs",
      "beta": 1.0,
      "k": 10,
      "max_len": 16,
      "stop_on_eos": true,
      "samples_per_prompt": 1,
      "best_of_n": 10
    },
    "eval": {
      "baseline": "",
      "tie_band": 1e-6
    },
    "oracle": {
      "check": "ratio",
      "vocab_size": 4,
      "order": 2,
      "toy_seed": 0,
      "weight_scale": 1.0,
      "beta": 1.0,
      "length": 3,
      "prompt": "",
      "budget": 1000000,
      "spread_seed": 1,
      "spread_scale": 1.0,
      "pairs": 50,
      "expect": "any"
    },
    "cost": {
      "lm": {"n_layers": 36, "d_model": 1280, "n_ctx": 1},
      "rm": {"n_layers": 24, "d_model": 1024, "n_ctx": 1},
      "k": 10,
      "best_of_n": 10,
      "include_context": false
    },
    "synth": {
      "alphabet": "abcdef",
      "corpus_lines": 400,
      "corpus_line_len": 10,
      "transition_sharpness": 1.5,
      "unigram_scale": 1.0,
      "bigram_scale": 0.5,
      "cross_scale": 0.5,
      "train_prompts": 500,
      "eval_prompts": 200,
      "prompt_len": 2,
      "pairs_per_prompt": 10,
      "max_len": 8
    },
    "sweep": {
      "betas": [0.0, 0.5, 1.0, 2.0, 4.0]
    }
  })");
}

std::vector<std::string> LeafNames(const json& config) {
  std::vector<std::string> out;
  CollectLeaves(config, "", out);
  return out;
}

void MergeConfig(json& base, const json& overlay, const std::string& where) {
  if (!overlay.is_object()) {
    throw ConfigError("config " + (where.empty() ? "document" : where) +
                      " must be an object");
  }
  for (const auto& [key, value] : overlay.items()) {
    const std::string name = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key " + name);
    json& slot = base[key];
    if (slot.is_object()) {
      MergeConfig(slot, value, name);
    } else if (slot.is_number() ? value.is_number()
                                : slot.type() == value.type()) {
      slot = value;
    } else {
      throw ConfigError("config key " + name + " has the wrong type");
    }
  }
}

json LoadConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void ApplyOverride(json& config, const std::string& dotted,
                   const std::string& text) {
  json* slot = Find(config, dotted);
  if (slot == nullptr) throw ConfigError("unknown config key " + dotted);
  try {
    if (slot->is_string()) {
      *slot = text;
    } else if (slot->is_boolean()) {
      if (text == "true" || text == "1") {
        *slot = true;
      } else if (text == "false" || text == "0") {
        *slot = false;
      } else {
        throw ConfigError("--" + dotted + " expects true or false");
      }
    } else if (slot->is_number_unsigned()) {
      std::size_t used = 0;
      if (!text.empty() && text[0] == '-') throw std::invalid_argument("");
      *slot = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument("");
    } else if (slot->is_number_integer()) {
      std::size_t used = 0;
      *slot = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument("");
    } else if (slot->is_number_float()) {
      std::size_t used = 0;
      *slot = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("");
    } else {
      // Arrays: JSON text, or a comma-separated list of numbers.
      json parsed = text.find('[') == std::string::npos
                        ? json::parse("[" + text + "]")
                        : json::parse(text);
      if (parsed.type() != slot->type()) throw std::invalid_argument("");
      *slot = parsed;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse '" + text + "' for --" + dotted);
  }
}

const json& At(const json& config, const std::string& dotted) {
  const json* slot = Find(config, dotted);
  if (slot == nullptr) throw ConfigError("missing config key " + dotted);
  return *slot;
}

}  // namespace pargs::cli
