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

// Exact enumeration of KL-regularized policies on toy vocabularies.
//
// For a prefix length i the regularized optimum over length-i sequences is
//
//   pi_i(y) = pi_ref(y | x) exp(beta r(y | x)) / Z_i(x).
//
// The tokenwise guided sampler's conditional equals the normalized ratio
// pi_i(y^{1:i}) / pi_{i-1}(y^{1:i-1}); CheckRatioTheorem verifies this by
// brute force. SingleRlhfConditional instead marginalizes one full-length
// policy over every continuation, which is exponential in the horizon.

#ifndef PARGS_ORACLE_H_
#define PARGS_ORACLE_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pargs/ref_policy.h"
#include "pargs/reward.h"
#include "pargs/sequence.h"

namespace pargs {

inline constexpr std::uint64_t kDefaultEnumerationBudget = 1'000'000;

// (|V| - 1)^length, or throws BudgetExceeded stating the required count.
std::uint64_t CheckEnumerationBudget(const Vocabulary& vocab,
                                     std::size_t length, std::uint64_t budget);

// Every length-n sequence over the non-PAD tokens, lexicographic by id.
std::vector<Sequence> EnumerateSequences(const Vocabulary& vocab,
                                         std::size_t length,
                                         std::uint64_t budget =
                                             kDefaultEnumerationBudget);

struct EnumeratedPolicy {
  std::size_t length = 0;
  std::map<Sequence, double> probs;

  double Total() const;
};

EnumeratedPolicy EnumerateRlhf(const ReferencePolicy& policy,
                               const RewardFunction& reward, double beta,
                               const Sequence& prompt, std::size_t length,
                               std::uint64_t budget = kDefaultEnumerationBudget);

// Sums out the last token.
EnumeratedPolicy MarginalizeLastToken(const EnumeratedPolicy& policy);

// Guided-sampler conditional over the whole vocabulary with k = |V| - 1.
std::vector<double> GuidedConditional(const ReferencePolicy& policy,
                                      const RewardFunction* reward,
                                      double beta, const Sequence& prompt,
                                      const Sequence& prefix);

// Conditional of the single full-length optimum pi_horizon, marginalized over
// all continuations of prefix + v up to `horizon` tokens.
std::vector<double> SingleRlhfConditional(
    const ReferencePolicy& policy, const RewardFunction& reward, double beta,
    const Sequence& prompt, const Sequence& prefix, std::size_t horizon,
    std::uint64_t budget = kDefaultEnumerationBudget);

double KlDivergence(const std::vector<double>& p, const std::vector<double>& q);
double TotalVariation(const std::vector<double>& p,
                      const std::vector<double>& q);

struct ContextValue {
  Sequence prefix;
  double value;
};

struct OracleReport {
  std::string check;
  std::optional<double> max_ratio_deviation;
  std::vector<ContextValue> ratio_deviations;
  std::optional<double> max_kl;
  std::vector<ContextValue> kl_per_context;
  std::optional<double> pathology_tv;
  std::vector<ContextValue> tv_per_context;
  // max |r_lastonly(y) - r_spread(y)| over full responses.
  std::optional<double> full_reward_max_diff;
  // max |field(y) - full_rewards(y)| over both fields.
  std::optional<double> full_reward_max_residual;
  // max TV between lastonly step distributions and pi_ref at non-final steps.
  std::optional<double> lastonly_nonfinal_max_tv;
  std::optional<double> bt_loss_max_diff;
};

nlohmann::ordered_json OracleReportToJson(const OracleReport& report);

// Max absolute entrywise gap between the guided conditional and the
// normalized ratio pi_i / pi_{i-1}, over every prefix shorter than L.
OracleReport CheckRatioTheoremDetailed(
    const ReferencePolicy& policy, const RewardFunction& reward, double beta,
    const Sequence& prompt, std::size_t max_length,
    std::uint64_t budget = kDefaultEnumerationBudget);
double CheckRatioTheorem(const ReferencePolicy& policy,
                         const RewardFunction& reward, double beta,
                         const Sequence& prompt, std::size_t max_length,
                         std::uint64_t budget = kDefaultEnumerationBudget);

// KL(guided || single full-length optimum) for every prefix shorter than
// `horizon`.
OracleReport CompareSingleRlhf(const ReferencePolicy& policy,
                               const RewardFunction& reward, double beta,
                               const Sequence& prompt, std::size_t horizon,
                               std::uint64_t budget = kDefaultEnumerationBudget);

// r(y | x) for every length-L response.
FullRewards ScoreAllResponses(const RewardFunction& reward,
                              const Sequence& prompt, std::size_t length,
                              std::uint64_t budget = kDefaultEnumerationBudget);

struct PathologyOptions {
  std::uint64_t spread_seed = 1;
  double spread_scale = 1.0;
  std::uint64_t budget = kDefaultEnumerationBudget;
  // When set, full-sequence Bradley-Terry losses under both fields are
  // compared on this dataset.
  const PreferenceDataset* dataset = nullptr;
};

// Builds the lastonly and spread fields from `full_rewards` (which must cover
// every length-L response to `prompt`) and compares the step distributions
// they induce.
OracleReport PathologyDemo(const ReferencePolicy& policy,
                           const FullRewards& full_rewards, double beta,
                           const Sequence& prompt, std::size_t length,
                           const PathologyOptions& options = {});

// Random toy instance: n-gram reference fit on a random corpus plus a random
// linear reward model.
struct ToyInstance {
  Vocabulary vocab;
  NGramPolicy policy;
  LinearRewardModel reward;
};

// `vocab_size` counts PAD and EOS.
ToyInstance MakeToyInstance(std::size_t vocab_size, std::size_t order,
                            std::uint64_t seed, double weight_scale = 1.0);

}  // namespace pargs

#endif  // PARGS_ORACLE_H_
