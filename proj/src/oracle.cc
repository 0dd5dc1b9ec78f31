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

#include "pargs/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pargs/decode.h"
#include "pargs/errors.h"
#include "pargs/rng.h"

namespace pargs {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// exp(logs - max) / sum, in place order.
std::vector<double> NormalizeLogWeights(const std::vector<double>& logs) {
  double max_log = kNegInf;
  for (double l : logs) max_log = std::max(max_log, l);
  std::vector<double> out(logs.size(), 0.0);
  if (!std::isfinite(max_log)) {
    throw std::invalid_argument("no finite log weight to normalize");
  }
  double z = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    out[i] = std::exp(logs[i] - max_log);
    z += out[i];
  }
  for (double& p : out) p /= z;
  return out;
}

double LogSumExp(const std::vector<double>& logs) {
  double max_log = kNegInf;
  for (double l : logs) max_log = std::max(max_log, l);
  if (!std::isfinite(max_log)) return max_log;
  double z = 0.0;
  for (double l : logs) z += std::exp(l - max_log);
  return max_log + std::log(z);
}

// Log of sum over continuations c with |prefix + c| = horizon of
// pi_ref(c | x, prefix) exp(beta r(prefix + c | x)).
double LogContinuationMass(const ReferencePolicy& policy,
                           const RewardFunction& reward, double beta,
                           const Sequence& prompt, const Sequence& prefix,
                           std::size_t horizon) {
  if (prefix.size() == horizon) return beta * reward.Reward(prompt, prefix);
  const std::vector<double> logprobs = policy.NextLogprobs(prompt, prefix);
  std::vector<double> terms;
  terms.reserve(policy.vocab().NumNonPad());
  for (TokenId v : policy.vocab().NonPadIds()) {
    if (!std::isfinite(logprobs[v])) continue;
    terms.push_back(logprobs[v] + LogContinuationMass(policy, reward, beta,
                                                      prompt, prefix.Append(v),
                                                      horizon));
  }
  return LogSumExp(terms);
}

nlohmann::ordered_json ContextTable(const std::vector<ContextValue>& rows) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json j;
    j["prefix"] = row.prefix.ids();
    j["value"] = row.value;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace

std::uint64_t CheckEnumerationBudget(const Vocabulary& vocab,
                                     std::size_t length, std::uint64_t budget) {
  const std::uint64_t base = vocab.NumNonPad();
  std::uint64_t count = 1;
  bool overflow = false;
  for (std::size_t i = 0; i < length; ++i) {
    if (count > std::numeric_limits<std::uint64_t>::max() / base) {
      overflow = true;
      break;
    }
    count *= base;
  }
  if (overflow || count > budget) {
    throw BudgetExceeded(
        "enumeration needs " +
        (overflow ? std::string("more than 2^64")
                  : std::to_string(count)) +
        " sequences (" + std::to_string(base) + "^" + std::to_string(length) +
        "), budget is " + std::to_string(budget));
  }
  return count;
}

std::vector<Sequence> EnumerateSequences(const Vocabulary& vocab,
                                         std::size_t length,
                                         std::uint64_t budget) {
  const std::uint64_t count = CheckEnumerationBudget(vocab, length, budget);
  const std::vector<TokenId> alphabet = vocab.NonPadIds();
  std::vector<Sequence> out;
  out.reserve(count);
  std::vector<std::size_t> digits(length, 0);
  for (std::uint64_t n = 0; n < count; ++n) {
    std::vector<TokenId> ids(length);
    for (std::size_t i = 0; i < length; ++i) ids[i] = alphabet[digits[i]];
    out.emplace_back(std::move(ids));
    for (std::size_t i = length; i-- > 0;) {
      if (++digits[i] < alphabet.size()) break;
      digits[i] = 0;
    }
  }
  return out;
}

double EnumeratedPolicy::Total() const {
  double total = 0.0;
  for (const auto& [seq, p] : probs) total += p;
  return total;
}

EnumeratedPolicy EnumerateRlhf(const ReferencePolicy& policy,
                               const RewardFunction& reward, double beta,
                               const Sequence& prompt, std::size_t length,
                               std::uint64_t budget) {
  const auto sequences = EnumerateSequences(policy.vocab(), length, budget);
  std::vector<double> logs;
  logs.reserve(sequences.size());
  for (const Sequence& y : sequences) {
    logs.push_back(SequenceLogprob(policy, prompt, y) +
                   beta * reward.Reward(prompt, y));
  }
  const std::vector<double> probs = NormalizeLogWeights(logs);
  EnumeratedPolicy out;
  out.length = length;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    out.probs.emplace(sequences[i], probs[i]);
  }
  return out;
}

EnumeratedPolicy MarginalizeLastToken(const EnumeratedPolicy& policy) {
  if (policy.length == 0) {
    throw std::invalid_argument("cannot marginalize a length-0 policy");
  }
  EnumeratedPolicy out;
  out.length = policy.length - 1;
  for (const auto& [seq, p] : policy.probs) {
    out.probs[seq.Prefix(out.length)] += p;
  }
  return out;
}

std::vector<double> GuidedConditional(const ReferencePolicy& policy,
                                      const RewardFunction* reward,
                                      double beta, const Sequence& prompt,
                                      const Sequence& prefix) {
  DecodeConfig cfg;
  cfg.beta = beta;
  cfg.k = policy.vocab().NumNonPad();
  cfg.selection = Selection::kGreedy;
  const StepRecord step = GuidedStep(policy, reward, prompt, prefix, cfg);
  std::vector<double> out(policy.vocab().size(), 0.0);
  for (std::size_t i = 0; i < step.candidates.size(); ++i) {
    out[step.candidates[i]] = step.probs[i];
  }
  return out;
}

std::vector<double> SingleRlhfConditional(
    const ReferencePolicy& policy, const RewardFunction& reward, double beta,
    const Sequence& prompt, const Sequence& prefix, std::size_t horizon,
    std::uint64_t budget) {
  if (horizon <= prefix.size()) {
    throw std::invalid_argument("horizon must exceed the prefix length");
  }
  CheckEnumerationBudget(policy.vocab(), horizon - prefix.size(), budget);
  const std::vector<double> logprobs = policy.NextLogprobs(prompt, prefix);
  std::vector<double> logs(policy.vocab().size(), kNegInf);
  for (TokenId v : policy.vocab().NonPadIds()) {
    if (!std::isfinite(logprobs[v])) continue;
    logs[v] = logprobs[v] + LogContinuationMass(policy, reward, beta, prompt,
                                                prefix.Append(v), horizon);
  }
  return NormalizeLogWeights(logs);
}

double KlDivergence(const std::vector<double>& p,
                    const std::vector<double>& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("KlDivergence: size mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

double TotalVariation(const std::vector<double>& p,
                      const std::vector<double>& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("TotalVariation: size mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return 0.5 * total;
}

OracleReport CheckRatioTheoremDetailed(const ReferencePolicy& policy,
                                       const RewardFunction& reward,
                                       double beta, const Sequence& prompt,
                                       std::size_t max_length,
                                       std::uint64_t budget) {
  if (max_length < 1) throw std::invalid_argument("ratio check needs L >= 1");
  CheckEnumerationBudget(policy.vocab(), max_length, budget);
  const Vocabulary& vocab = policy.vocab();
  OracleReport report;
  report.check = "ratio";
  double max_dev = 0.0;
  EnumeratedPolicy previous;
  previous.probs.emplace(Sequence{}, 1.0);
  for (std::size_t i = 1; i <= max_length; ++i) {
    EnumeratedPolicy current =
        EnumerateRlhf(policy, reward, beta, prompt, i, budget);
    for (const auto& [prefix, denom] : previous.probs) {
      std::vector<double> ratio(vocab.size(), 0.0);
      double z = 0.0;
      for (TokenId v : vocab.NonPadIds()) {
        ratio[v] = current.probs.at(prefix.Append(v)) / denom;
        z += ratio[v];
      }
      for (double& r : ratio) r /= z;
      const std::vector<double> guided =
          GuidedConditional(policy, &reward, beta, prompt, prefix);
      double dev = 0.0;
      for (std::size_t t = 0; t < ratio.size(); ++t) {
        dev = std::max(dev, std::abs(ratio[t] - guided[t]));
      }
      report.ratio_deviations.push_back({prefix, dev});
      max_dev = std::max(max_dev, dev);
    }
    previous = std::move(current);
  }
  report.max_ratio_deviation = max_dev;
  return report;
}

double CheckRatioTheorem(const ReferencePolicy& policy,
                         const RewardFunction& reward, double beta,
                         const Sequence& prompt, std::size_t max_length,
                         std::uint64_t budget) {
  return *CheckRatioTheoremDetailed(policy, reward, beta, prompt, max_length,
                                    budget)
              .max_ratio_deviation;
}

OracleReport CompareSingleRlhf(const ReferencePolicy& policy,
                               const RewardFunction& reward, double beta,
                               const Sequence& prompt, std::size_t horizon,
                               std::uint64_t budget) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  CheckEnumerationBudget(policy.vocab(), horizon, budget);
  OracleReport report;
  report.check = "single-rlhf";
  double max_kl = 0.0;
  for (std::size_t m = 0; m < horizon; ++m) {
    for (const Sequence& prefix : EnumerateSequences(policy.vocab(), m, budget)) {
      const auto guided =
          GuidedConditional(policy, &reward, beta, prompt, prefix);
      const auto single = SingleRlhfConditional(policy, reward, beta, prompt,
                                                prefix, horizon, budget);
      const double kl = KlDivergence(guided, single);
      report.kl_per_context.push_back({prefix, kl});
      max_kl = std::max(max_kl, kl);
    }
  }
  report.max_kl = max_kl;
  return report;
}

FullRewards ScoreAllResponses(const RewardFunction& reward,
                              const Sequence& prompt, std::size_t length,
                              std::uint64_t budget) {
  FullRewards out;
  for (const Sequence& y : EnumerateSequences(reward.vocab(), length, budget)) {
    out.emplace(std::make_pair(prompt, y), reward.Reward(prompt, y));
  }
  return out;
}

OracleReport PathologyDemo(const ReferencePolicy& policy,
                           const FullRewards& full_rewards, double beta,
                           const Sequence& prompt, std::size_t length,
                           const PathologyOptions& options) {
  if (length < 1) throw std::invalid_argument("pathology demo needs L >= 1");
  const Vocabulary& vocab = policy.vocab();
  CheckEnumerationBudget(vocab, length, options.budget);
  const TokenRewardField lastonly = MakeLastonlyField(full_rewards, vocab);
  const TokenRewardField spread = MakeSpreadField(
      full_rewards, vocab, options.spread_seed, options.spread_scale);

  OracleReport report;
  report.check = "pathology";
  double max_diff = 0.0;
  double max_residual = 0.0;
  for (const auto& [key, target] : full_rewards) {
    const double a = lastonly.Reward(key.first, key.second);
    const double b = spread.Reward(key.first, key.second);
    max_diff = std::max(max_diff, std::abs(a - b));
    max_residual = std::max(
        {max_residual, std::abs(a - target), std::abs(b - target)});
  }
  report.full_reward_max_diff = max_diff;
  report.full_reward_max_residual = max_residual;

  double max_tv = 0.0;
  double lastonly_vs_ref = 0.0;
  for (std::size_t m = 0; m < length; ++m) {
    for (const Sequence& prefix : EnumerateSequences(vocab, m, options.budget)) {
      const auto p_last =
          GuidedConditional(policy, &lastonly, beta, prompt, prefix);
      const auto p_spread =
          GuidedConditional(policy, &spread, beta, prompt, prefix);
      const double tv = TotalVariation(p_last, p_spread);
      report.tv_per_context.push_back({prefix, tv});
      max_tv = std::max(max_tv, tv);
      if (m + 1 < length) {
        const auto logprobs = policy.NextLogprobs(prompt, prefix);
        std::vector<double> ref(vocab.size(), 0.0);
        for (TokenId v : vocab.NonPadIds()) ref[v] = std::exp(logprobs[v]);
        lastonly_vs_ref = std::max(lastonly_vs_ref, TotalVariation(p_last, ref));
      }
    }
  }
  report.pathology_tv = max_tv;
  report.lastonly_nonfinal_max_tv = lastonly_vs_ref;

  if (options.dataset != nullptr) {
    double loss_diff = 0.0;
    for (const auto& pair : options.dataset->pairs) {
      loss_diff = std::max(loss_diff, std::abs(BtLossFull(lastonly, pair) -
                                               BtLossFull(spread, pair)));
    }
    report.bt_loss_max_diff = loss_diff;
  }
  return report;
}

nlohmann::ordered_json OracleReportToJson(const OracleReport& report) {
  nlohmann::ordered_json j;
  j["check"] = report.check;
  auto put = [&j](const char* name, const std::optional<double>& v) {
    if (v) j[name] = *v;
  };
  put("max_ratio_deviation", report.max_ratio_deviation);
  put("max_kl", report.max_kl);
  put("pathology_tv", report.pathology_tv);
  put("full_reward_max_diff", report.full_reward_max_diff);
  put("full_reward_max_residual", report.full_reward_max_residual);
  put("lastonly_nonfinal_max_tv", report.lastonly_nonfinal_max_tv);
  put("bt_loss_max_diff", report.bt_loss_max_diff);
  if (!report.ratio_deviations.empty()) {
    j["ratio_deviations"] = ContextTable(report.ratio_deviations);
  }
  if (!report.kl_per_context.empty()) {
    j["kl_per_context"] = ContextTable(report.kl_per_context);
  }
  if (!report.tv_per_context.empty()) {
    j["tv_per_context"] = ContextTable(report.tv_per_context);
  }
  return j;
}

ToyInstance MakeToyInstance(std::size_t vocab_size, std::size_t order,
                            std::uint64_t seed, double weight_scale) {
  if (vocab_size < 3) throw std::invalid_argument("toy vocab_size must be >= 3");
  if (vocab_size - 2 > 26) {
    throw std::invalid_argument("toy vocab_size must be <= 28");
  }
  const std::string alphabet =
      std::string("abcdefghijklmnopqrstuvwxyz").substr(0, vocab_size - 2);
  Vocabulary vocab = Vocabulary::FromCharacters(alphabet);
  const std::vector<TokenId> tokens = vocab.NonPadIds();
  Rng rng(seed);

  // Corpus from a random peaked bigram source over every non-PAD token.
  std::vector<std::vector<double>> transitions(vocab.size());
  for (auto& row : transitions) {
    row.resize(tokens.size());
    double z = 0.0;
    for (double& w : row) {
      w = std::exp(1.5 * rng.Normal());
      z += w;
    }
    for (double& w : row) w /= z;
  }
  std::vector<Sequence> corpus;
  for (int line = 0; line < 30; ++line) {
    const std::size_t len = 2 + static_cast<std::size_t>(rng.Below(5));
    std::vector<TokenId> ids;
    TokenId state = vocab.pad_id();
    for (std::size_t i = 0; i < len; ++i) {
      state = tokens[SampleCategorical(transitions[state], rng.Uniform())];
      ids.push_back(state);
    }
    corpus.emplace_back(std::move(ids));
  }
  const double alpha = 0.1 + rng.Uniform();
  NGramPolicy policy = FitNGram(corpus, order, alpha, vocab);

  LinearRewardModel zero =
      LinearRewardModel::Zero(vocab, TrainedOn::kPartialSequence);
  const Featurizer& f = zero.featurizer();
  std::vector<double> weights(f.dimension(), 0.0);
  for (TokenId a : tokens) {
    weights[f.UnigramIndex(a)] = weight_scale * rng.Normal();
    for (TokenId b : tokens) {
      weights[f.BigramIndex(a, b)] = weight_scale * rng.Normal();
      weights[f.CrossIndex(a, b)] = weight_scale * rng.Normal();
    }
  }
  weights[f.LengthIndex()] = weight_scale * rng.Normal();
  LinearRewardModel reward =
      zero.WithWeights(std::move(weights), TrainedOn::kPartialSequence);
  return ToyInstance{std::move(vocab), std::move(policy), std::move(reward)};
}

}  // namespace pargs
