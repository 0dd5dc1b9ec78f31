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

// Reward-guided decoding. At every step the top-k reference candidates are
// rescored with log pi_ref(v | x, y) + beta * r(y, v | x) and the next token is
// drawn from (or, for greedy selection, is the argmax of) the softmax over
// those scores.

#ifndef PARGS_DECODE_H_
#define PARGS_DECODE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pargs/ref_policy.h"
#include "pargs/reward.h"
#include "pargs/sequence.h"

namespace pargs {

enum class Selection { kSample, kGreedy };

std::string_view SelectionName(Selection s);
Selection ParseSelection(std::string_view name);

struct DecodeConfig {
  double beta = 1.0;
  std::size_t k = 10;
  std::size_t max_len = 16;
  std::uint64_t seed = 0;
  Selection selection = Selection::kSample;
  bool stop_on_eos = false;
};

// Throws std::invalid_argument for k < 1, max_len < 1 or a non-finite beta.
void CheckDecodeConfig(const DecodeConfig& cfg);

struct StepRecord {
  std::vector<TokenId> candidates;
  std::vector<double> ref_logprobs;
  std::vector<double> rewards;
  std::vector<double> scores;
  std::vector<double> probs;
  TokenId chosen = 0;
};

struct GenerationResult {
  Sequence prompt;
  Sequence response;
  std::vector<StepRecord> steps;
  std::string method;
  std::uint64_t seed = 0;
  DecodeConfig config;
  // Best-of-N only: full-sequence reward of every sample, and the winner.
  std::vector<double> candidate_rewards;
  std::size_t chosen_index = 0;
};

// Scores the top-k candidates and returns the step distribution. `reward` may
// be null, in which case every reward is 0. The token is chosen with `u`
// (inverse CDF) for sampling and by argmax score, ties to the lower id, for
// greedy selection.
StepRecord GuidedStep(const ReferencePolicy& policy,
                      const RewardFunction* reward, const Sequence& prompt,
                      const Sequence& prefix, const DecodeConfig& cfg,
                      double u = 0.0);

// Max-shifted softmax; -infinity entries get probability 0.
std::vector<double> Softmax(const std::vector<double>& scores);

GenerationResult Generate(const ReferencePolicy& policy,
                          const RewardFunction* reward, const Sequence& prompt,
                          const DecodeConfig& cfg,
                          std::string method = "guided");

// Draws n unguided samples (sample j uses seed DeriveSeed(seed, j) with beta
// = 0) and returns the one with the highest full-sequence reward, earliest
// index on ties. `sample_cfg` supplies k, max_len and stop_on_eos.
GenerationResult BestOfN(const ReferencePolicy& policy,
                         const RewardFunction& reward, const Sequence& prompt,
                         std::size_t n, const DecodeConfig& sample_cfg);

// Named decoding methods and the reward model each one requires.
enum class Method { kPargs, kPargsGreedy, kArgs, kArgsSample, kTopK, kBestOfN };

std::string_view MethodName(Method m);
Method ParseMethod(std::string_view name);
// Adjusts selection (and beta for top-k) to the method's definition.
DecodeConfig ConfigureMethod(Method m, DecodeConfig base);
// PARGS variants need a partial-sequence model, ARGS variants and best-of-N a
// full-sequence model. Throws std::invalid_argument explaining a mismatch.
void CheckRewardModelForMethod(Method m, const LinearRewardModel& model);
bool MethodNeedsRewardModel(Method m);

nlohmann::ordered_json DecodeConfigToJson(const DecodeConfig& cfg);
// Trace document: method, seed, config, prompt, response and every step.
nlohmann::ordered_json GenerationToJson(const GenerationResult& result);
GenerationResult GenerationFromJson(const nlohmann::json& j);

}  // namespace pargs

#endif  // PARGS_DECODE_H_
