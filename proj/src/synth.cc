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

#include "pargs/synth.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pargs/rng.h"

namespace pargs {
namespace {

bool EndsWithEos(const Sequence& s, const Vocabulary& vocab) {
  return !s.empty() && s.back() == vocab.eos_id();
}

std::vector<TokenId> ContentIds(const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (TokenId t : vocab.NonPadIds()) {
    if (t != vocab.eos_id()) ids.push_back(t);
  }
  return ids;
}

}  // namespace

PreferenceDataset SynthPreferences(const RewardFunction& true_reward,
                                   const ReferencePolicy& policy,
                                   std::span<const Sequence> prompts,
                                   std::size_t pairs_per_prompt,
                                   std::uint64_t seed,
                                   const SynthOptions& options) {
  if (pairs_per_prompt < 1) {
    throw std::invalid_argument("SynthPreferences: pairs_per_prompt >= 1");
  }
  const Vocabulary& vocab = policy.vocab();
  SampleOptions sample_opts;
  sample_opts.max_len = options.max_len;
  sample_opts.stop_on_eos = options.stop_on_eos || options.require_eos;
  sample_opts.top_k = options.top_k;

  PreferenceDataset dataset;
  dataset.provenance = "synthetic (seed " + std::to_string(seed) + ")";
  dataset.pairs.reserve(prompts.size() * pairs_per_prompt);
  for (std::size_t p = 0; p < prompts.size(); ++p) {
    const std::uint64_t prompt_seed = DeriveSeed(seed, p);
    for (std::size_t j = 0; j < pairs_per_prompt; ++j) {
      const std::uint64_t pair_seed = DeriveSeed(prompt_seed, j);
      bool missing_eos = false;
      std::optional<std::pair<Sequence, Sequence>> drawn;
      for (std::size_t attempt = 0; attempt < options.max_attempts; ++attempt) {
        Sequence a = SampleSequence(policy, prompts[p], sample_opts,
                                    DeriveSeed(pair_seed, 1 + 2 * attempt));
        Sequence b = SampleSequence(policy, prompts[p], sample_opts,
                                    DeriveSeed(pair_seed, 2 + 2 * attempt));
        if (options.require_eos &&
            (!EndsWithEos(a, vocab) || !EndsWithEos(b, vocab))) {
          missing_eos = true;
          continue;
        }
        if (a == b) continue;
        drawn.emplace(std::move(a), std::move(b));
        break;
      }
      if (!drawn) {
        throw std::runtime_error(
            missing_eos
                ? "SynthPreferences: policy did not produce EOS within max_len " +
                      std::to_string(options.max_len) + " after " +
                      std::to_string(options.max_attempts) + " attempts"
                : "SynthPreferences: could not draw two distinct responses "
                  "after " + std::to_string(options.max_attempts) +
                      " attempts");
      }
      auto& [a, b] = *drawn;
      const double margin = true_reward.Reward(prompts[p], a) -
                            true_reward.Reward(prompts[p], b);
      Rng label_rng(DeriveSeed(pair_seed, 0));
      const bool a_wins = label_rng.Uniform() < Sigmoid(margin);
      PreferencePair pair{prompts[p], a_wins ? a : b, a_wins ? b : a};
      dataset.pairs.push_back(std::move(pair));
    }
  }
  return dataset;
}

std::vector<Sequence> RandomPrompts(const Vocabulary& vocab, std::size_t count,
                                    std::size_t length, std::uint64_t seed) {
  const auto content = ContentIds(vocab);
  Rng rng(seed);
  std::vector<Sequence> prompts;
  prompts.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<TokenId> ids(length);
    for (auto& t : ids) t = content[rng.Below(content.size())];
    prompts.emplace_back(std::move(ids));
  }
  return prompts;
}

SyntheticTask MakeSyntheticTask(const SyntheticTaskConfig& cfg) {
  Vocabulary vocab = Vocabulary::FromCharacters(cfg.alphabet);
  const auto content = ContentIds(vocab);
  const std::size_t n = content.size();
  Rng rng(cfg.seed);

  // Random Markov source: transition weights exp(sharpness * N(0, 1)).
  std::vector<std::vector<double>> transitions(n + 1, std::vector<double>(n));
  for (auto& row : transitions) {
    double z = 0.0;
    for (double& w : row) {
      w = std::exp(cfg.transition_sharpness * rng.Normal());
      z += w;
    }
    for (double& w : row) w /= z;
  }
  std::vector<Sequence> corpus;
  corpus.reserve(cfg.corpus_lines);
  for (std::size_t line = 0; line < cfg.corpus_lines; ++line) {
    std::vector<TokenId> ids;
    std::size_t state = n;  // start row
    for (std::size_t i = 0; i < cfg.corpus_line_len; ++i) {
      const std::size_t next = SampleCategorical(transitions[state], rng.Uniform());
      ids.push_back(content[next]);
      state = next;
    }
    ids.push_back(vocab.eos_id());
    corpus.emplace_back(std::move(ids));
  }
  NGramPolicy policy = FitNGram(corpus, cfg.ngram_order, cfg.ngram_alpha, vocab);

  LinearRewardModel zero = LinearRewardModel::Zero(vocab, TrainedOn::kFullSequence);
  const Featurizer& f = zero.featurizer();
  std::vector<double> weights(f.dimension(), 0.0);
  for (TokenId a : content) {
    weights[f.UnigramIndex(a)] = cfg.unigram_scale * rng.Normal();
    for (TokenId b : content) {
      weights[f.BigramIndex(a, b)] = cfg.bigram_scale * rng.Normal();
      weights[f.CrossIndex(a, b)] = cfg.cross_scale * rng.Normal();
    }
  }
  LinearRewardModel true_reward =
      zero.WithWeights(std::move(weights), TrainedOn::kFullSequence);
  return SyntheticTask{std::move(vocab), std::move(corpus), std::move(policy),
                       std::move(true_reward)};
}

}  // namespace pargs
