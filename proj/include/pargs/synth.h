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

// Synthetic preference data and the toy task used by demos and end-to-end
// checks.

#ifndef PARGS_SYNTH_H_
#define PARGS_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pargs/ref_policy.h"
#include "pargs/reward.h"
#include "pargs/sequence.h"

namespace pargs {

struct SynthOptions {
  std::size_t max_len = 8;
  bool stop_on_eos = true;
  // Reject samples that reach max_len without emitting EOS.
  bool require_eos = false;
  std::optional<std::size_t> top_k;
  std::size_t max_attempts = 100;
};

// For each prompt, draws pairs_per_prompt pairs of responses from `policy` and
// marks the first as chosen with probability sigmoid(r_a - r_b). Pair j of
// prompt p uses DeriveSeed(DeriveSeed(seed, p), j). Identical draws, and draws
// without EOS when require_eos is set, are redrawn up to max_attempts times;
// exhausting the attempts throws std::runtime_error.
PreferenceDataset SynthPreferences(const RewardFunction& true_reward,
                                   const ReferencePolicy& policy,
                                   std::span<const Sequence> prompts,
                                   std::size_t pairs_per_prompt,
                                   std::uint64_t seed,
                                   const SynthOptions& options = {});

// Uniformly random prompts over the non-special tokens.
std::vector<Sequence> RandomPrompts(const Vocabulary& vocab, std::size_t count,
                                    std::size_t length, std::uint64_t seed);

struct SyntheticTaskConfig {
  std::string alphabet = "abcdef";
  std::size_t corpus_lines = 400;
  std::size_t corpus_line_len = 10;
  std::size_t ngram_order = 2;
  double ngram_alpha = 0.5;
  // Larger values give peakier Markov transitions in the corpus source.
  double transition_sharpness = 1.5;
  double unigram_scale = 1.0;
  double bigram_scale = 0.5;
  double cross_scale = 0.5;
  std::uint64_t seed = 7;
};

// A vocabulary, a corpus drawn from a random Markov source (each line ends in
// EOS), the n-gram reference policy fit on it, and a random linear "true"
// reward over the same features the learned models use.
struct SyntheticTask {
  Vocabulary vocab;
  std::vector<Sequence> corpus;
  NGramPolicy policy;
  LinearRewardModel true_reward;
};

SyntheticTask MakeSyntheticTask(const SyntheticTaskConfig& cfg);

}  // namespace pargs

#endif  // PARGS_SYNTH_H_
