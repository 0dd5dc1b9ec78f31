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

#include "pargs/reward.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "pargs/errors.h"
#include "pargs/ref_policy.h"
#include "pargs/rng.h"

namespace pargs {

// ---------------------------------------------------------------------------
// FeatureVector

void FeatureVector::Add(std::size_t index, double value) {
  if (value == 0.0) return;
  auto [it, inserted] = entries_.emplace(index, value);
  if (!inserted) {
    it->second += value;
    if (it->second == 0.0) entries_.erase(it);
  }
}

double FeatureVector::Get(std::size_t index) const {
  auto it = entries_.find(index);
  return it == entries_.end() ? 0.0 : it->second;
}

double FeatureVector::Dot(const std::vector<double>& dense) const {
  double total = 0.0;
  for (const auto& [index, value] : entries_) total += dense.at(index) * value;
  return total;
}

FeatureVector FeatureVector::Minus(const FeatureVector& other) const {
  FeatureVector out = *this;
  for (const auto& [index, value] : other.entries_) out.Add(index, -value);
  return out;
}

FeatureVector FeatureVector::Scaled(double factor) const {
  FeatureVector out;
  for (const auto& [index, value] : entries_) out.Add(index, value * factor);
  return out;
}

// ---------------------------------------------------------------------------
// Featurizer

Featurizer::Featurizer(std::size_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size_ < 3) {
    throw std::invalid_argument("Featurizer: vocabulary too small");
  }
}

std::string Featurizer::id() const {
  return "uni-bi-cross-len/v1/V" + std::to_string(vocab_size_);
}

FeatureVector Featurizer::Featurize(const Sequence& prompt,
                                    const Sequence& prefix,
                                    TokenId pad_id) const {
  std::vector<TokenId> tokens;
  tokens.reserve(prefix.size());
  for (TokenId t : prefix) {
    if (t != pad_id) tokens.push_back(t);
  }
  FeatureVector f;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    f.Add(UnigramIndex(tokens[i]), 1.0);
    if (i > 0) f.Add(BigramIndex(tokens[i - 1], tokens[i]), 1.0);
  }
  if (!tokens.empty()) {
    for (auto it = prompt.ids().rbegin(); it != prompt.ids().rend(); ++it) {
      if (*it == pad_id) continue;
      f.Add(CrossIndex(*it, tokens.front()), 1.0);
      break;
    }
  }
  f.Add(LengthIndex(), static_cast<double>(tokens.size()));
  return f;
}

// ---------------------------------------------------------------------------
// Enum names

std::string_view TrainedOnName(TrainedOn t) {
  return t == TrainedOn::kFullSequence ? "full_sequence" : "partial_sequence";
}

TrainedOn ParseTrainedOn(std::string_view name) {
  if (name == "full_sequence" || name == "full") return TrainedOn::kFullSequence;
  if (name == "partial_sequence" || name == "partial") {
    return TrainedOn::kPartialSequence;
  }
  throw std::invalid_argument("unknown trained_on value '" +
                              std::string(name) + "'");
}

std::string_view ObjectiveName(Objective o) {
  return o == Objective::kFull ? "full" : "partial";
}

Objective ParseObjective(std::string_view name) {
  if (name == "full") return Objective::kFull;
  if (name == "partial") return Objective::kPartial;
  throw std::invalid_argument("unknown objective '" + std::string(name) +
                              "' (expected full or partial)");
}

std::string_view PrefixModeName(PrefixMode m) {
  return m == PrefixMode::kAllPrefixes ? "all_prefixes" : "sampled_prefix";
}

PrefixMode ParsePrefixMode(std::string_view name) {
  if (name == "all_prefixes") return PrefixMode::kAllPrefixes;
  if (name == "sampled_prefix") return PrefixMode::kSampledPrefix;
  throw std::invalid_argument("unknown prefix mode '" + std::string(name) +
                              "'");
}

std::string_view PaddingModeName(PaddingMode m) {
  return m == PaddingMode::kPadToLongest ? "pad" : "truncate";
}

PaddingMode ParsePaddingMode(std::string_view name) {
  if (name == "pad") return PaddingMode::kPadToLongest;
  if (name == "truncate") return PaddingMode::kTruncateToShortest;
  throw std::invalid_argument("unknown padding mode '" + std::string(name) +
                              "' (expected pad or truncate)");
}

// ---------------------------------------------------------------------------
// LinearRewardModel

LinearRewardModel::LinearRewardModel(Vocabulary vocab,
                                     std::vector<double> weights,
                                     TrainedOn trained_on)
    : vocab_(std::move(vocab)),
      featurizer_(vocab_.size()),
      weights_(std::move(weights)),
      trained_on_(trained_on) {
  if (weights_.size() != featurizer_.dimension()) {
    throw std::invalid_argument(
        "LinearRewardModel: weight vector has " +
        std::to_string(weights_.size()) + " entries, featurizer needs " +
        std::to_string(featurizer_.dimension()));
  }
  for (double w : weights_) {
    if (!std::isfinite(w)) {
      throw std::invalid_argument("LinearRewardModel: non-finite weight");
    }
  }
}

LinearRewardModel LinearRewardModel::Zero(const Vocabulary& vocab,
                                          TrainedOn trained_on) {
  return LinearRewardModel(
      vocab, std::vector<double>(Featurizer(vocab.size()).dimension(), 0.0),
      trained_on);
}

double LinearRewardModel::Reward(const Sequence& prompt,
                                 const Sequence& prefix) const {
  return Featurize(prompt, prefix).Dot(weights_);
}

nlohmann::json LinearRewardModel::ToJson() const {
  nlohmann::json sparse = nlohmann::json::array();
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] != 0.0) sparse.push_back({i, weights_[i]});
  }
  return {{"featurizer_id", featurizer_.id()},
          {"trained_on", TrainedOnName(trained_on_)},
          {"dimension", weights_.size()},
          {"vocab", VocabularyToJson(vocab_)},
          {"weights", std::move(sparse)}};
}

LinearRewardModel LinearRewardModel::FromJson(const nlohmann::json& j) {
  Vocabulary vocab = VocabularyFromJson(j.at("vocab"));
  Featurizer featurizer(vocab.size());
  if (j.at("featurizer_id").get<std::string>() != featurizer.id()) {
    throw ParseError("reward model featurizer '" +
                     j.at("featurizer_id").get<std::string>() +
                     "' does not match '" + featurizer.id() + "'");
  }
  const auto dim = j.at("dimension").get<std::size_t>();
  if (dim != featurizer.dimension()) {
    throw ParseError("reward model dimension mismatch");
  }
  std::vector<double> weights(dim, 0.0);
  for (const auto& entry : j.at("weights")) {
    const auto index = entry.at(0).get<std::size_t>();
    if (index >= dim) throw ParseError("reward weight index out of range");
    weights[index] = entry.at(1).get<double>();
  }
  return LinearRewardModel(std::move(vocab), std::move(weights),
                           ParseTrainedOn(j.at("trained_on").get<std::string>()));
}

LinearRewardModel LinearRewardModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open reward model file " + path.string());
  try {
    return FromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Losses and gradients

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double NegLogSigmoid(double margin) {
  // softplus(-margin)
  return std::max(-margin, 0.0) + std::log1p(std::exp(-std::abs(margin)));
}

double BtLossFull(const RewardFunction& reward, const PreferencePair& pair) {
  return NegLogSigmoid(reward.Reward(pair.prompt, pair.chosen) -
                       reward.Reward(pair.prompt, pair.rejected));
}

Sequence PaddedPrefix(const Sequence& y, std::size_t padded_length,
                      std::size_t i, const Vocabulary& vocab) {
  return PadTo(y, padded_length, vocab).Prefix(i);
}

namespace {

std::size_t LongerLength(const PreferencePair& pair) {
  return std::max(pair.chosen.size(), pair.rejected.size());
}

std::size_t AlignedLength(const PreferencePair& pair, PaddingMode mode) {
  return mode == PaddingMode::kPadToLongest
             ? LongerLength(pair)
             : std::min(pair.chosen.size(), pair.rejected.size());
}

void CheckPrefixIndex(const PreferencePair& pair, std::size_t i) {
  const std::size_t longest = LongerLength(pair);
  if (i < 1 || i > longest) {
    throw std::out_of_range("prefix length " + std::to_string(i) +
                            " outside [1, " + std::to_string(longest) + "]");
  }
}

}  // namespace

double BtLossPartial(const RewardFunction& reward, const PreferencePair& pair,
                     std::size_t i) {
  CheckPrefixIndex(pair, i);
  const std::size_t longest = LongerLength(pair);
  const Vocabulary& vocab = reward.vocab();
  return NegLogSigmoid(
      reward.Reward(pair.prompt, PaddedPrefix(pair.chosen, longest, i, vocab)) -
      reward.Reward(pair.prompt,
                    PaddedPrefix(pair.rejected, longest, i, vocab)));
}

namespace {

// GradBt evaluated at `weights` instead of the model's own weights; the model
// only supplies the feature map.
FeatureVector GradBtAt(const LinearRewardModel& model,
                       const std::vector<double>& weights,
                       const PreferencePair& pair,
                       std::optional<std::size_t> prefix) {
  FeatureVector phi_w;
  FeatureVector phi_l;
  if (prefix) {
    CheckPrefixIndex(pair, *prefix);
    const std::size_t longest = LongerLength(pair);
    phi_w = model.Featurize(
        pair.prompt, PaddedPrefix(pair.chosen, longest, *prefix, model.vocab()));
    phi_l = model.Featurize(pair.prompt, PaddedPrefix(pair.rejected, longest,
                                                      *prefix, model.vocab()));
  } else {
    phi_w = model.Featurize(pair.prompt, pair.chosen);
    phi_l = model.Featurize(pair.prompt, pair.rejected);
  }
  const FeatureVector diff = phi_w.Minus(phi_l);
  const double margin = diff.Dot(weights);
  return diff.Scaled(-Sigmoid(-margin));
}

}  // namespace

FeatureVector GradBt(const LinearRewardModel& model, const PreferencePair& pair,
                     std::optional<std::size_t> prefix) {
  return GradBtAt(model, model.weights(), pair, prefix);
}

// ---------------------------------------------------------------------------
// Training

double PairObjective(const LinearRewardModel& model, const PreferencePair& pair,
                     const TrainConfig& cfg, Objective objective) {
  if (objective == Objective::kFull) return BtLossFull(model, pair);
  const std::size_t n = AlignedLength(pair, cfg.padding);
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 1; i <= n; ++i) total += BtLossPartial(model, pair, i);
  return cfg.prefix_mode == PrefixMode::kAllPrefixes
             ? total
             : total / static_cast<double>(n);
}

double MeanObjective(const LinearRewardModel& model,
                     const PreferenceDataset& dataset, const TrainConfig& cfg,
                     Objective objective) {
  if (dataset.pairs.empty()) {
    throw std::invalid_argument("MeanObjective: empty dataset");
  }
  double total = 0.0;
  for (const auto& pair : dataset.pairs) {
    total += PairObjective(model, pair, cfg, objective);
  }
  double mean = total / static_cast<double>(dataset.pairs.size());
  if (cfg.l2 > 0.0) {
    double sq = 0.0;
    for (double w : model.weights()) sq += w * w;
    mean += 0.5 * cfg.l2 * sq;
  }
  return mean;
}

namespace {

// Gradient of the per-pair objective. `rng` is consulted only for
// sampled_prefix.
FeatureVector PairGradient(const LinearRewardModel& model,
                           const std::vector<double>& weights,
                           const PreferencePair& pair, const TrainConfig& cfg,
                           Objective objective, Rng& rng) {
  if (objective == Objective::kFull) {
    return GradBtAt(model, weights, pair, std::nullopt);
  }
  const std::size_t n = AlignedLength(pair, cfg.padding);
  FeatureVector grad;
  if (n == 0) return grad;
  if (cfg.prefix_mode == PrefixMode::kSampledPrefix) {
    const std::size_t i = 1 + static_cast<std::size_t>(rng.Below(n));
    return GradBtAt(model, weights, pair, i);
  }
  for (std::size_t i = 1; i <= n; ++i) {
    const FeatureVector g = GradBtAt(model, weights, pair, i);
    for (const auto& [index, value] : g.entries()) grad.Add(index, value);
  }
  return grad;
}

void CheckFinite(const std::vector<double>& weights, double loss,
                 std::size_t epoch) {
  bool finite = std::isfinite(loss);
  for (double w : weights) finite = finite && std::isfinite(w);
  if (!finite) {
    throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                       " (non-finite loss); lower the learning rate");
  }
}

}  // namespace

TrainResult Train(const LinearRewardModel& init,
                  const PreferenceDataset& dataset, const TrainConfig& cfg,
                  Objective objective) {
  if (dataset.pairs.empty()) {
    throw std::invalid_argument("Train: empty dataset");
  }
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw std::invalid_argument("Train: learning_rate must be positive");
  }
  if (cfg.epochs < 1) throw std::invalid_argument("Train: epochs must be >= 1");
  if (cfg.l2 < 0.0) throw std::invalid_argument("Train: l2 must be >= 0");
  for (const auto& pair : dataset.pairs) CheckPreferencePair(pair);

  const TrainedOn tag = objective == Objective::kFull
                            ? TrainedOn::kFullSequence
                            : TrainedOn::kPartialSequence;
  LinearRewardModel model = init.WithWeights(init.weights(), tag);
  std::vector<double> weights = init.weights();
  TrainResult result{model, MeanObjective(model, dataset, cfg, objective), {}};

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(dataset.pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.full_batch) {
      std::vector<double> grad(weights.size(), 0.0);
      for (const auto& pair : dataset.pairs) {
        const FeatureVector g =
            PairGradient(model, weights, pair, cfg, objective, rng);
        for (const auto& [index, value] : g.entries()) grad[index] += value;
      }
      const double inv_n = 1.0 / static_cast<double>(dataset.pairs.size());
      for (std::size_t d = 0; d < weights.size(); ++d) {
        weights[d] -= cfg.learning_rate * (grad[d] * inv_n + cfg.l2 * weights[d]);
      }
      CheckFinite(weights, 0.0, epoch);
      model = model.WithWeights(weights, tag);
    } else {
      rng.Shuffle(order);
      for (std::size_t idx : order) {
        const FeatureVector grad = PairGradient(
            model, weights, dataset.pairs[idx], cfg, objective, rng);
        if (cfg.l2 > 0.0) {
          for (double& w : weights) w -= cfg.learning_rate * cfg.l2 * w;
        }
        for (const auto& [index, value] : grad.entries()) {
          weights[index] -= cfg.learning_rate * value;
        }
      }
      CheckFinite(weights, 0.0, epoch);
      model = model.WithWeights(weights, tag);
    }
    const double loss = MeanObjective(model, dataset, cfg, objective);
    CheckFinite(weights, loss, epoch);
    result.epoch_losses.push_back(loss);
  }
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Token reward fields

void TokenRewardField::Set(const Sequence& prompt, const Sequence& prefix,
                           double value) {
  if (prefix.empty()) {
    throw std::invalid_argument("TokenRewardField: empty prefix has no token");
  }
  entries_[{prompt, prefix}] = value;
}

double TokenRewardField::TokenReward(const Sequence& prompt,
                                     const Sequence& prefix) const {
  auto it = entries_.find({prompt, prefix});
  if (it == entries_.end()) {
    throw std::out_of_range("TokenRewardField: no token reward for prefix of "
                            "length " + std::to_string(prefix.size()));
  }
  return it->second;
}

double TokenRewardField::Reward(const Sequence& prompt,
                                const Sequence& prefix) const {
  double total = 0.0;
  for (std::size_t j = 1; j <= prefix.size(); ++j) {
    if (prefix[j - 1] == vocab_.pad_id()) continue;
    total += TokenReward(prompt, prefix.Prefix(j));
  }
  return total;
}

namespace {

void CheckPrefixFree(const FullRewards& full_rewards) {
  for (const auto& [key, value] : full_rewards) {
    const auto& [prompt, response] = key;
    if (response.empty()) {
      throw std::invalid_argument("full reward defined on an empty response");
    }
    if (!std::isfinite(value)) {
      throw std::invalid_argument("full reward is not finite");
    }
    for (std::size_t j = 1; j < response.size(); ++j) {
      if (full_rewards.contains({prompt, response.Prefix(j)})) {
        throw std::invalid_argument(
            "full-reward responses must be prefix-free: a response of length " +
            std::to_string(j) + " is a prefix of another");
      }
    }
  }
}

}  // namespace

TokenRewardField MakeLastonlyField(const FullRewards& full_rewards,
                                   const Vocabulary& vocab) {
  CheckPrefixFree(full_rewards);
  TokenRewardField field(vocab);
  for (const auto& [key, value] : full_rewards) {
    const auto& [prompt, response] = key;
    for (std::size_t j = 1; j < response.size(); ++j) {
      field.Set(prompt, response.Prefix(j), 0.0);
    }
    field.Set(prompt, response, value);
  }
  return field;
}

TokenRewardField MakeSpreadField(const FullRewards& full_rewards,
                                 const Vocabulary& vocab,
                                 std::uint64_t spread_seed, double scale) {
  CheckPrefixFree(full_rewards);
  TokenRewardField field(vocab);
  Rng rng(spread_seed);
  for (const auto& [key, value] : full_rewards) {
    const auto& [prompt, response] = key;
    double interior = 0.0;
    for (std::size_t j = 1; j < response.size(); ++j) {
      const Sequence prefix = response.Prefix(j);
      auto it = field.entries().find({prompt, prefix});
      double token_reward;
      if (it == field.entries().end()) {
        token_reward = scale * rng.Normal();
        field.Set(prompt, prefix, token_reward);
      } else {
        token_reward = it->second;
      }
      interior += token_reward;
    }
    field.Set(prompt, response, value - interior);
  }
  return field;
}

}  // namespace pargs
