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

#include "pargs/decode.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pargs/rng.h"

namespace pargs {

std::string_view SelectionName(Selection s) {
  return s == Selection::kSample ? "sample" : "greedy";
}

Selection ParseSelection(std::string_view name) {
  if (name == "sample") return Selection::kSample;
  if (name == "greedy") return Selection::kGreedy;
  throw std::invalid_argument("unknown selection '" + std::string(name) +
                              "' (expected sample or greedy)");
}

void CheckDecodeConfig(const DecodeConfig& cfg) {
  if (cfg.k < 1) throw std::invalid_argument("decode: k must be >= 1");
  if (cfg.max_len < 1) {
    throw std::invalid_argument("decode: max_len must be >= 1");
  }
  if (!std::isfinite(cfg.beta)) {
    throw std::invalid_argument("decode: beta must be finite");
  }
}

std::vector<double> Softmax(const std::vector<double>& scores) {
  double max_score = -std::numeric_limits<double>::infinity();
  for (double s : scores) max_score = std::max(max_score, s);
  std::vector<double> probs(scores.size(), 0.0);
  if (!std::isfinite(max_score)) {
    throw std::invalid_argument("Softmax: no finite score");
  }
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    probs[i] = std::exp(scores[i] - max_score);
    z += probs[i];
  }
  for (double& p : probs) p /= z;
  return probs;
}

StepRecord GuidedStep(const ReferencePolicy& policy,
                      const RewardFunction* reward, const Sequence& prompt,
                      const Sequence& prefix, const DecodeConfig& cfg,
                      double u) {
  const auto candidates = TopKCandidates(policy, prompt, prefix, cfg.k);
  StepRecord step;
  const std::size_t n = candidates.size();
  step.candidates.reserve(n);
  step.ref_logprobs.reserve(n);
  step.rewards.reserve(n);
  step.scores.reserve(n);
  for (const Candidate& c : candidates) {
    const double r =
        reward != nullptr ? reward->Reward(prompt, prefix.Append(c.token)) : 0.0;
    step.candidates.push_back(c.token);
    step.ref_logprobs.push_back(c.logprob);
    step.rewards.push_back(r);
    step.scores.push_back(c.logprob + cfg.beta * r);
  }
  step.probs = Softmax(step.scores);
  if (cfg.selection == Selection::kGreedy) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (step.scores[i] > step.scores[best] ||
          (step.scores[i] == step.scores[best] &&
           step.candidates[i] < step.candidates[best])) {
        best = i;
      }
    }
    step.chosen = step.candidates[best];
  } else {
    step.chosen = step.candidates[SampleCategorical(step.probs, u)];
  }
  return step;
}

GenerationResult Generate(const ReferencePolicy& policy,
                          const RewardFunction* reward, const Sequence& prompt,
                          const DecodeConfig& cfg, std::string method) {
  CheckDecodeConfig(cfg);
  GenerationResult result;
  result.prompt = prompt;
  result.method = std::move(method);
  result.seed = cfg.seed;
  result.config = cfg;
  Rng rng(cfg.seed);
  std::vector<TokenId> tokens;
  Sequence prefix;
  for (std::size_t i = 0; i < cfg.max_len; ++i) {
    const double u = cfg.selection == Selection::kSample ? rng.Uniform() : 0.0;
    StepRecord step = GuidedStep(policy, reward, prompt, prefix, cfg, u);
    tokens.push_back(step.chosen);
    prefix = Sequence(tokens);
    const bool stop = cfg.stop_on_eos && step.chosen == policy.vocab().eos_id();
    result.steps.push_back(std::move(step));
    if (stop) break;
  }
  result.response = std::move(prefix);
  return result;
}

GenerationResult BestOfN(const ReferencePolicy& policy,
                         const RewardFunction& reward, const Sequence& prompt,
                         std::size_t n, const DecodeConfig& sample_cfg) {
  if (n < 1) throw std::invalid_argument("best-of-n: n must be >= 1");
  GenerationResult best;
  std::vector<double> rewards;
  rewards.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    DecodeConfig cfg = sample_cfg;
    cfg.beta = 0.0;
    cfg.selection = Selection::kSample;
    cfg.seed = DeriveSeed(sample_cfg.seed, j);
    GenerationResult sample = Generate(policy, nullptr, prompt, cfg);
    const double r = reward.Reward(prompt, sample.response);
    if (rewards.empty() || r > rewards[best.chosen_index]) {
      best = std::move(sample);
      best.chosen_index = j;
    }
    rewards.push_back(r);
  }
  best.method = std::string(MethodName(Method::kBestOfN));
  best.seed = sample_cfg.seed;
  best.config = sample_cfg;
  best.config.beta = 0.0;
  best.config.selection = Selection::kSample;
  best.candidate_rewards = std::move(rewards);
  return best;
}

std::string_view MethodName(Method m) {
  switch (m) {
    case Method::kPargs:
      return "pargs";
    case Method::kPargsGreedy:
      return "pargs-g";
    case Method::kArgs:
      return "args";
    case Method::kArgsSample:
      return "args-s";
    case Method::kTopK:
      return "topk";
    case Method::kBestOfN:
      return "best-of-n";
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  for (Method m : {Method::kPargs, Method::kPargsGreedy, Method::kArgs,
                   Method::kArgsSample, Method::kTopK, Method::kBestOfN}) {
    if (MethodName(m) == name) return m;
  }
  throw std::invalid_argument(
      "unknown method '" + std::string(name) +
      "' (expected pargs, pargs-g, args, args-s, topk or best-of-n)");
}

DecodeConfig ConfigureMethod(Method m, DecodeConfig base) {
  switch (m) {
    case Method::kPargs:
    case Method::kArgsSample:
      base.selection = Selection::kSample;
      break;
    case Method::kPargsGreedy:
    case Method::kArgs:
      base.selection = Selection::kGreedy;
      break;
    case Method::kTopK:
    case Method::kBestOfN:
      base.selection = Selection::kSample;
      base.beta = 0.0;
      break;
  }
  return base;
}

bool MethodNeedsRewardModel(Method m) { return m != Method::kTopK; }

void CheckRewardModelForMethod(Method m, const LinearRewardModel& model) {
  TrainedOn want = TrainedOn::kFullSequence;
  switch (m) {
    case Method::kPargs:
    case Method::kPargsGreedy:
      want = TrainedOn::kPartialSequence;
      break;
    case Method::kArgs:
    case Method::kArgsSample:
    case Method::kBestOfN:
      want = TrainedOn::kFullSequence;
      break;
    case Method::kTopK:
      return;
  }
  if (model.trained_on() != want) {
    throw std::invalid_argument(
        "method " + std::string(MethodName(m)) + " requires a reward model " +
        "trained_on=" + std::string(TrainedOnName(want)) +
        ", but the supplied model has trained_on=" +
        std::string(TrainedOnName(model.trained_on())) +
        (want == TrainedOn::kPartialSequence
             ? " (PARGS scores prefixes and needs a model trained on them)"
             : " (ARGS and best-of-N use a full-sequence model)"));
  }
}

nlohmann::ordered_json DecodeConfigToJson(const DecodeConfig& cfg) {
  nlohmann::ordered_json j;
  j["beta"] = cfg.beta;
  j["k"] = cfg.k;
  j["max_len"] = cfg.max_len;
  j["seed"] = cfg.seed;
  j["selection"] = SelectionName(cfg.selection);
  j["stop_on_eos"] = cfg.stop_on_eos;
  return j;
}

nlohmann::ordered_json GenerationToJson(const GenerationResult& result) {
  nlohmann::ordered_json j;
  j["method"] = result.method;
  j["seed"] = result.seed;
  j["config"] = DecodeConfigToJson(result.config);
  j["prompt"] = result.prompt.ids();
  j["response"] = result.response.ids();
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const StepRecord& s : result.steps) {
    nlohmann::ordered_json js;
    js["candidates"] = s.candidates;
    js["ref_logprobs"] = s.ref_logprobs;
    js["rewards"] = s.rewards;
    js["scores"] = s.scores;
    js["probs"] = s.probs;
    js["chosen"] = s.chosen;
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  if (!result.candidate_rewards.empty()) {
    j["candidate_rewards"] = result.candidate_rewards;
    j["chosen_index"] = result.chosen_index;
  }
  return j;
}

GenerationResult GenerationFromJson(const nlohmann::json& j) {
  GenerationResult r;
  r.method = j.at("method").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  const auto& c = j.at("config");
  r.config.beta = c.at("beta").get<double>();
  r.config.k = c.at("k").get<std::size_t>();
  r.config.max_len = c.at("max_len").get<std::size_t>();
  r.config.seed = c.at("seed").get<std::uint64_t>();
  r.config.selection = ParseSelection(c.at("selection").get<std::string>());
  r.config.stop_on_eos = c.at("stop_on_eos").get<bool>();
  r.prompt = SequenceFromJson(j.at("prompt"));
  r.response = SequenceFromJson(j.at("response"));
  for (const auto& js : j.at("steps")) {
    StepRecord s;
    s.candidates = js.at("candidates").get<std::vector<TokenId>>();
    s.ref_logprobs = js.at("ref_logprobs").get<std::vector<double>>();
    s.rewards = js.at("rewards").get<std::vector<double>>();
    s.scores = js.at("scores").get<std::vector<double>>();
    s.probs = js.at("probs").get<std::vector<double>>();
    s.chosen = js.at("chosen").get<TokenId>();
    r.steps.push_back(std::move(s));
  }
  if (j.contains("candidate_rewards")) {
    r.candidate_rewards = j.at("candidate_rewards").get<std::vector<double>>();
    r.chosen_index = j.at("chosen_index").get<std::size_t>();
  }
  return r;
}

}  // namespace pargs
