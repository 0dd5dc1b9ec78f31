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

// Prefix reward functions r(y^{1:i} | x): a sparse linear model trained with
// Bradley-Terry losses on full or partial sequences, and explicit per-token
// reward fields.

#ifndef PARGS_REWARD_H_
#define PARGS_REWARD_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pargs/sequence.h"

namespace pargs {

// Scores a response prefix in the context of a prompt. PAD tokens must not
// change the score.
class RewardFunction {
 public:
  virtual ~RewardFunction() = default;
  virtual const Vocabulary& vocab() const = 0;
  virtual double Reward(const Sequence& prompt,
                        const Sequence& prefix) const = 0;
};

// Sparse real vector; zero entries are never stored.
class FeatureVector {
 public:
  void Add(std::size_t index, double value);
  double Get(std::size_t index) const;
  bool empty() const { return entries_.empty(); }
  std::size_t nnz() const { return entries_.size(); }
  const std::map<std::size_t, double>& entries() const { return entries_; }

  double Dot(const std::vector<double>& dense) const;
  // this - other
  FeatureVector Minus(const FeatureVector& other) const;
  FeatureVector Scaled(double factor) const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::map<std::size_t, double> entries_;
};

// Response unigram counts, response bigram counts, an indicator crossing the
// last prompt token with the first response token, and the response length.
// PAD tokens contribute nothing.
class Featurizer {
 public:
  explicit Featurizer(std::size_t vocab_size);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t dimension() const { return 2 * vocab_size_ * vocab_size_ +
                                         vocab_size_ + 1; }
  std::string id() const;

  std::size_t UnigramIndex(TokenId t) const { return t; }
  std::size_t BigramIndex(TokenId a, TokenId b) const {
    return vocab_size_ + a * vocab_size_ + b;
  }
  std::size_t CrossIndex(TokenId last_prompt, TokenId first_response) const {
    return vocab_size_ + vocab_size_ * vocab_size_ +
           last_prompt * vocab_size_ + first_response;
  }
  std::size_t LengthIndex() const { return dimension() - 1; }

  FeatureVector Featurize(const Sequence& prompt, const Sequence& prefix,
                          TokenId pad_id) const;

 private:
  std::size_t vocab_size_;
};

enum class TrainedOn { kFullSequence, kPartialSequence };

std::string_view TrainedOnName(TrainedOn t);
TrainedOn ParseTrainedOn(std::string_view name);

class LinearRewardModel : public RewardFunction {
 public:
  LinearRewardModel(Vocabulary vocab, std::vector<double> weights,
                    TrainedOn trained_on);
  static LinearRewardModel Zero(const Vocabulary& vocab, TrainedOn trained_on);

  const Vocabulary& vocab() const override { return vocab_; }
  const Featurizer& featurizer() const { return featurizer_; }
  const std::vector<double>& weights() const { return weights_; }
  TrainedOn trained_on() const { return trained_on_; }

  FeatureVector Featurize(const Sequence& prompt,
                          const Sequence& prefix) const {
    return featurizer_.Featurize(prompt, prefix, vocab_.pad_id());
  }
  double Reward(const Sequence& prompt, const Sequence& prefix) const override;

  LinearRewardModel WithWeights(std::vector<double> weights,
                                TrainedOn trained_on) const {
    return LinearRewardModel(vocab_, std::move(weights), trained_on);
  }

  // {"featurizer_id", "trained_on", "dimension", "vocab", "weights":
  // [[index, value], ...]} with zero weights omitted.
  nlohmann::json ToJson() const;
  static LinearRewardModel FromJson(const nlohmann::json& j);
  static LinearRewardModel Load(const std::filesystem::path& path);

  friend bool operator==(const LinearRewardModel& a,
                         const LinearRewardModel& b) {
    return a.vocab_ == b.vocab_ && a.weights_ == b.weights_ &&
           a.trained_on_ == b.trained_on_;
  }

 private:
  Vocabulary vocab_;
  Featurizer featurizer_;
  std::vector<double> weights_;
  TrainedOn trained_on_;
};

// -log(sigmoid(margin)), stable for any finite margin.
double NegLogSigmoid(double margin);
double Sigmoid(double x);

// -log sigmoid(r(y_w | x) - r(y_l | x)).
double BtLossFull(const RewardFunction& reward, const PreferencePair& pair);

// Same on the length-i prefixes after padding both responses to the longer
// length. Throws std::out_of_range unless 1 <= i <= max(|y_w|, |y_l|).
double BtLossPartial(const RewardFunction& reward, const PreferencePair& pair,
                     std::size_t i);

// The length-i prefix of `y` padded to `padded_length`.
Sequence PaddedPrefix(const Sequence& y, std::size_t padded_length,
                      std::size_t i, const Vocabulary& vocab);

// Gradient of BtLossFull (prefix unset) or BtLossPartial(prefix) with respect
// to the weights: -sigmoid(-margin) (phi_w - phi_l).
FeatureVector GradBt(const LinearRewardModel& model, const PreferencePair& pair,
                     std::optional<std::size_t> prefix = std::nullopt);

enum class Objective { kFull, kPartial };
enum class PrefixMode { kAllPrefixes, kSampledPrefix };
// How unequal response lengths are aligned for the partial objective.
enum class PaddingMode { kPadToLongest, kTruncateToShortest };

std::string_view ObjectiveName(Objective o);
Objective ParseObjective(std::string_view name);
PrefixMode ParsePrefixMode(std::string_view name);
std::string_view PrefixModeName(PrefixMode m);
PaddingMode ParsePaddingMode(std::string_view name);
std::string_view PaddingModeName(PaddingMode m);

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  PrefixMode prefix_mode = PrefixMode::kAllPrefixes;
  double l2 = 0.0;
  PaddingMode padding = PaddingMode::kPadToLongest;
  // One step per epoch on the summed gradient of every pair instead of SGD
  // over shuffled pairs.
  bool full_batch = false;
};

struct TrainResult {
  LinearRewardModel model;
  double initial_loss;
  std::vector<double> epoch_losses;  // mean objective after each epoch
};

// Per-pair objective: the full loss, or the sum (all_prefixes) / mean
// (sampled_prefix) of partial losses over the aligned prefix lengths.
double PairObjective(const LinearRewardModel& model, const PreferencePair& pair,
                     const TrainConfig& cfg, Objective objective);
double MeanObjective(const LinearRewardModel& model,
                     const PreferenceDataset& dataset, const TrainConfig& cfg,
                     Objective objective);

// Plain SGD (or full-batch gradient descent) with optional L2. Throws
// NumericError naming the epoch if the loss or weights become non-finite.
TrainResult Train(const LinearRewardModel& init,
                  const PreferenceDataset& dataset, const TrainConfig& cfg,
                  Objective objective);

// Per-token rewards r(y^i | x, y^{1:i-1}) stored explicitly; the prefix
// reward is their running sum. PAD positions contribute zero.
class TokenRewardField : public RewardFunction {
 public:
  using Key = std::pair<Sequence, Sequence>;  // (prompt, y^{1:i})

  explicit TokenRewardField(Vocabulary vocab) : vocab_(std::move(vocab)) {}

  const Vocabulary& vocab() const override { return vocab_; }
  void Set(const Sequence& prompt, const Sequence& prefix, double value);
  // Throws std::out_of_range for a prefix the field does not cover.
  double TokenReward(const Sequence& prompt, const Sequence& prefix) const;
  double Reward(const Sequence& prompt, const Sequence& prefix) const override;
  const std::map<Key, double>& entries() const { return entries_; }

 private:
  Vocabulary vocab_;
  std::map<Key, double> entries_;
};

// Full-sequence rewards r(y | x) keyed by (prompt, response).
using FullRewards = std::map<std::pair<Sequence, Sequence>, double>;

// Zero reward on every token but the last, which carries r(y | x).
TokenRewardField MakeLastonlyField(const FullRewards& full_rewards,
                                   const Vocabulary& vocab);

// Random N(0, scale^2) rewards on shared interior prefixes; the last token of
// each response absorbs the remainder so every full reward is unchanged.
TokenRewardField MakeSpreadField(const FullRewards& full_rewards,
                                 const Vocabulary& vocab,
                                 std::uint64_t spread_seed,
                                 double scale = 1.0);

}  // namespace pargs

#endif  // PARGS_REWARD_H_
