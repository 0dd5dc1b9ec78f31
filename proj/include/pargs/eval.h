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

// Evaluation metrics and the per-token inference cost model.

#ifndef PARGS_EVAL_H_
#define PARGS_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pargs/decode.h"
#include "pargs/ref_policy.h"
#include "pargs/reward.h"
#include "pargs/sequence.h"

namespace pargs {

struct SampleStats {
  double mean = 0.0;
  double stddev = 0.0;     // sample (n - 1) standard deviation
  double std_error = 0.0;  // stddev / sqrt(n); 0 when n == 1
  std::size_t n = 0;
  bool small_sample = false;  // n == 1
};

SampleStats ComputeStats(std::span<const double> values);

struct WinTie {
  double win_pct = 0.0;
  double tie_pct = 0.0;
  double loss_pct = 0.0;
  std::size_t n = 0;
};

struct EvalReport {
  std::string method;
  double mean_reward = 0.0;
  double std_error = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
  bool small_sample = false;
  // The evaluation model has the same weights as the guidance model.
  bool same_model_warning = false;
  std::optional<double> diversity;
  std::optional<WinTie> win_tie;
};

// Mean and standard error of the full-sequence reward of every response
// under `rm_eval`. Passing the guidance model sets same_model_warning when the
// two are the same model.
EvalReport AvgReward(std::span<const GenerationResult> generations,
                     const LinearRewardModel& rm_eval,
                     const RewardFunction* guidance = nullptr);

std::size_t LcsLength(const Sequence& a, const Sequence& b);

// LCS F-measure with R = LCS/|a|, P = LCS/|b| and
// F = (1 + beta^2) R P / (R + beta^2 P). beta = 1 gives the symmetric F1.
// Zero when either side is empty.
double RougeL(const Sequence& a, const Sequence& b, double beta = 1.0);

// Mean ROUGE-L over all unordered pairs; needs at least two responses.
double Diversity(std::span<const Sequence> responses);

enum class Verdict { kAWins, kTie, kBWins };

class PairwiseJudge {
 public:
  virtual ~PairwiseJudge() = default;
  virtual Verdict Judge(const Sequence& prompt, const Sequence& a,
                        const Sequence& b) const = 0;
};

// Prefers the higher reward; differences within tie_band are ties.
class RewardJudge : public PairwiseJudge {
 public:
  explicit RewardJudge(const RewardFunction& reward, double tie_band = 1e-6)
      : reward_(reward), tie_band_(tie_band) {}
  Verdict Judge(const Sequence& prompt, const Sequence& a,
                const Sequence& b) const override;

 private:
  const RewardFunction& reward_;
  double tie_band_;
};

// Percentages of prompts where a beats, ties or loses to b. With a shuffle
// seed, each comparison is presented in a random order (coin i from
// DeriveSeed(seed, i)) and the verdict mapped back. Throws
// std::invalid_argument on length or prompt mismatch.
WinTie WinTieRate(std::span<const GenerationResult> gens_a,
                  std::span<const GenerationResult> gens_b,
                  const PairwiseJudge& judge,
                  std::optional<std::uint64_t> shuffle_seed = std::nullopt);

struct CostModelParams {
  std::size_t n_layers = 1;
  std::size_t d_model = 1;
  std::size_t n_ctx = 1;
  std::size_t k = 10;  // reward-model evaluations per generated token
};

struct CostOptions {
  std::size_t best_of_n = 10;
  // Adds the 2 n_layers n_ctx d_model attention term to each forward pass.
  bool include_context = false;
};

struct CostReport {
  double n_lm = 0.0;
  double n_rm = 0.0;
  double c_forward_lm = 0.0;
  double c_forward_rm = 0.0;
  std::size_t k = 0;
  double per_token_flops = 0.0;   // C_lm + k C_rm
  double guided_overhead = 0.0;   // k C_rm / C_lm
  double best_of_n_overhead = 0.0;  // N - 1 extra generations
  std::size_t best_of_n = 0;
  bool include_context = false;
};

// 12 n_layers d_model^2.
double NonEmbeddingParams(const CostModelParams& p);
double ForwardFlops(const CostModelParams& p, bool include_context);
// k is read from rm.k.
CostReport CostModel(const CostModelParams& lm, const CostModelParams& rm,
                     const CostOptions& options = {});
double RoundToSignificant(double x, int digits);

nlohmann::ordered_json CostReportToJson(const CostReport& r);
nlohmann::ordered_json EvalReportToJson(const EvalReport& r);
// Flat table: method,metric,value,stderr,n with metrics reward, diversity,
// win and tie in that order for every report.
std::string EvalReportsCsv(std::span<const EvalReport> reports);

struct SweepRow {
  double beta = 0.0;
  double mean_reward = 0.0;
  double stddev = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

struct SweepSetup {
  const ReferencePolicy* policy = nullptr;
  const RewardFunction* guidance = nullptr;
  const LinearRewardModel* evaluator = nullptr;
  std::vector<Sequence> prompts;
  DecodeConfig decode;  // beta is overwritten per row
  std::uint64_t master_seed = 0;
};

// Generates one response per prompt for each beta (prompt p uses seed
// DeriveSeed(master_seed, p) in every row) and scores it with the evaluator.
std::vector<SweepRow> BetaSweep(const SweepSetup& setup,
                                std::span<const double> betas);
// Columns beta,mean_reward,stddev,n,std_error.
std::string SweepCsv(std::span<const SweepRow> rows);

}  // namespace pargs

#endif  // PARGS_EVAL_H_
