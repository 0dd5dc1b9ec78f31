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


#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "pargs/decode.h"
#include "pargs/eval.h"
#include "pargs/reward.h"
#include "pargs/rng.h"
#include "pargs/synth.h"

namespace pargs {
namespace {

constexpr TokenId kA = 2;
constexpr TokenId kB = 3;

Vocabulary AbVocab() { return Vocabulary::FromCharacters("ab"); }

LinearRewardModel CountA(const Vocabulary& v, double value) {
  LinearRewardModel m = LinearRewardModel::Zero(v, TrainedOn::kFullSequence);
  std::vector<double> w = m.weights();
  w[m.featurizer().UnigramIndex(kA)] = value;
  return m.WithWeights(w, TrainedOn::kFullSequence);
}

GenerationResult Gen(Sequence prompt, Sequence response,
                     std::string method = "m") {
  GenerationResult g;
  g.prompt = std::move(prompt);
  g.response = std::move(response);
  g.method = std::move(method);
  return g;
}

// Exhaustive LCS: the longest subsequence of `a` (by subset enumeration)
// that is also a subsequence of `b`.
std::size_t BruteLcs(const Sequence& a, const Sequence& b) {
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    std::vector<TokenId> sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    std::size_t j = 0;
    for (std::size_t i = 0; i < b.size() && j < sub.size(); ++i) {
      if (b[i] == sub[j]) ++j;
    }
    if (j == sub.size()) best = std::max(best, sub.size());
  }
  return best;
}

TEST(StatsTest, HandComputedValues) {
  std::vector<double> two{0.0, 2.0};
  SampleStats s = ComputeStats(two);
  EXPECT_DOUBLE_EQ(s.mean, 1.0);
  EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(2.0));
  EXPECT_NEAR(s.std_error, 1.0, 1e-15);
  std::vector<double> constant(7, 3.5);
  s = ComputeStats(constant);
  EXPECT_EQ(s.mean, 3.5);
  EXPECT_EQ(s.std_error, 0.0);
  std::vector<double> one{4.0};
  s = ComputeStats(one);
  EXPECT_EQ(s.std_error, 0.0);
  EXPECT_TRUE(s.small_sample);
}

TEST(AvgRewardTest, ScoresWithEvaluator) {
  Vocabulary v = AbVocab();
  LinearRewardModel eval = CountA(v, 1.0);
  std::vector<GenerationResult> gens{Gen({}, {kB, kB}), Gen({}, {kA, kA})};
  EvalReport r = AvgReward(gens, eval);
  EXPECT_DOUBLE_EQ(r.mean_reward, 1.0);
  EXPECT_NEAR(r.std_error, 1.0, 1e-15);
  EXPECT_EQ(r.n, 2u);
  EXPECT_FALSE(r.same_model_warning);
  std::vector<GenerationResult> single{Gen({}, {kA})};
  EvalReport s = AvgReward(single, eval);
  EXPECT_TRUE(s.small_sample);
  EXPECT_EQ(s.std_error, 0.0);
}

TEST(AvgRewardTest, WarnsWhenEvaluatorIsGuidanceModel) {
  Vocabulary v = AbVocab();
  LinearRewardModel eval = CountA(v, 1.0);
  LinearRewardModel copy = CountA(v, 1.0);
  LinearRewardModel other = CountA(v, 2.0);
  std::vector<GenerationResult> gens{Gen({}, {kA})};
  EXPECT_TRUE(AvgReward(gens, eval, &copy).same_model_warning);
  EXPECT_FALSE(AvgReward(gens, eval, &other).same_model_warning);
}

TEST(RougeTest, Examples) {
  Vocabulary v = Vocabulary::FromCharacters("abcdexyz");
  EXPECT_DOUBLE_EQ(RougeL(Tokenize("abc", v), Tokenize("abc", v)), 1.0);
  EXPECT_DOUBLE_EQ(RougeL(Tokenize("abc", v), Tokenize("xyz", v)), 0.0);
  EXPECT_EQ(LcsLength(Tokenize("abcde", v), Tokenize("ace", v)), 3u);
  EXPECT_NEAR(RougeL(Tokenize("abcde", v), Tokenize("ace", v)), 0.75, 1e-15);
  EXPECT_EQ(RougeL(Sequence{}, Tokenize("a", v)), 0.0);
}

TEST(RougeTest, MatchesExhaustiveOracleOnShortSequences) {
  Rng rng(1);
  for (int trial = 0; trial < 3000; ++trial) {
    Sequence a = Sequence(std::vector<TokenId>(rng.Below(9)));
    Sequence b = Sequence(std::vector<TokenId>(1 + rng.Below(8)));
    std::vector<TokenId> ai(a.size());
    std::vector<TokenId> bi(b.size());
    for (auto& t : ai) t = static_cast<TokenId>(1 + rng.Below(3));
    for (auto& t : bi) t = static_cast<TokenId>(1 + rng.Below(3));
    a = Sequence(ai);
    b = Sequence(bi);
    const std::size_t lcs = BruteLcs(a, b);
    ASSERT_EQ(LcsLength(a, b), lcs);
    const double expected =
        (a.empty() || lcs == 0)
            ? 0.0
            : 2.0 * lcs / static_cast<double>(a.size() + b.size());
    EXPECT_NEAR(RougeL(a, b), expected, 1e-15);
    EXPECT_NEAR(RougeL(a, b), RougeL(b, a), 1e-15);
  }
}

TEST(DiversityTest, Properties) {
  Vocabulary v = Vocabulary::FromCharacters("abc");
  std::vector<Sequence> same(4, Tokenize("abc", v));
  EXPECT_DOUBLE_EQ(Diversity(same), 1.0);
  std::vector<Sequence> two{Tokenize("abcab", v), Tokenize("cab", v)};
  EXPECT_DOUBLE_EQ(Diversity(two), RougeL(two[0], two[1]));
  std::vector<Sequence> many{Tokenize("abc", v), Tokenize("bca", v),
                             Tokenize("aab", v), Tokenize("ccb", v)};
  std::vector<Sequence> reversed(many.rbegin(), many.rend());
  EXPECT_NEAR(Diversity(many), Diversity(reversed), 1e-15);
  std::vector<Sequence> one{Tokenize("a", v)};
  EXPECT_THROW(Diversity(one), std::invalid_argument);
}

TEST(WinTieTest, Cases) {
  Vocabulary v = AbVocab();
  LinearRewardModel r = CountA(v, 1.0);
  RewardJudge judge(r);
  std::vector<GenerationResult> a{Gen({kA}, {kA, kA}), Gen({kB}, {kA})};
  std::vector<GenerationResult> b{Gen({kA}, {kB, kA}), Gen({kB}, {kB})};
  WinTie dominant = WinTieRate(a, b, judge);
  EXPECT_EQ(dominant.win_pct, 100.0);
  EXPECT_EQ(dominant.tie_pct, 0.0);
  WinTie same = WinTieRate(a, a, judge);
  EXPECT_EQ(same.win_pct, 0.0);
  EXPECT_EQ(same.tie_pct, 100.0);

  std::vector<GenerationResult> x{Gen({}, {kA}), Gen({}, {kA}), Gen({}, {kB})};
  std::vector<GenerationResult> y{Gen({}, {kB}), Gen({}, {kA}), Gen({}, {kA})};
  WinTie mixed = WinTieRate(x, y, judge, 77);
  EXPECT_NEAR(mixed.win_pct, 33.33, 0.01);
  EXPECT_NEAR(mixed.tie_pct, 33.33, 0.01);
  EXPECT_NEAR(mixed.loss_pct, 33.33, 0.01);
}

TEST(WinTieTest, Mismatches) {
  Vocabulary v = AbVocab();
  LinearRewardModel r = CountA(v, 1.0);
  RewardJudge judge(r);
  std::vector<GenerationResult> a{Gen({kA}, {kA})};
  std::vector<GenerationResult> b{Gen({kB}, {kA})};
  std::vector<GenerationResult> c{Gen({kA}, {kA}), Gen({kA}, {kA})};
  EXPECT_THROW(WinTieRate(a, b, judge), std::invalid_argument);
  EXPECT_THROW(WinTieRate(a, c, judge), std::invalid_argument);
}

TEST(CostModelTest, PublishedOverheads) {
  const CostModelParams gpt2_large{36, 1280, 1, 10};
  const CostModelParams llama_7b{32, 4096, 1, 10};
  const CostModelParams deberta_large{24, 1024, 1, 10};
  CostReport small = CostModel(gpt2_large, deberta_large);
  EXPECT_NEAR(small.n_lm, 7.078e8, 1e5);
  EXPECT_NEAR(small.n_rm, 3.020e8, 1e5);
  EXPECT_NEAR(small.guided_overhead, 4.267, 1e-3);
  EXPECT_EQ(RoundToSignificant(small.guided_overhead, 2), 4.3);
  CostReport large = CostModel(llama_7b, deberta_large);
  EXPECT_NEAR(large.n_lm, 6.442e9, 1e6);
  EXPECT_NEAR(large.guided_overhead, 0.469, 1e-3);
  EXPECT_EQ(RoundToSignificant(large.guided_overhead, 2), 0.47);
  EXPECT_EQ(small.best_of_n_overhead, 9.0);
  EXPECT_EQ(small.per_token_flops,
            small.c_forward_lm + 10.0 * small.c_forward_rm);
}

TEST(CostModelTest, ContextTermAndValidation) {
  CostModelParams lm{2, 8, 16, 4};
  CostReport with = CostModel(lm, lm, {10, true});
  EXPECT_EQ(with.c_forward_lm, 2.0 * 12 * 2 * 64 + 2.0 * 2 * 16 * 8);
  EXPECT_EQ(with.guided_overhead, 4.0);
  CostModelParams bad{0, 8, 1, 1};
  EXPECT_THROW(CostModel(bad, lm), std::invalid_argument);
}

TEST(ReportTest, CsvHasFourRowsPerMethod) {
  EvalReport a;
  a.method = "pargs";
  a.mean_reward = 1.5;
  a.n = 3;
  EvalReport b = a;
  b.method = "topk";
  b.diversity = 0.25;
  b.win_tie = WinTie{10.0, 20.0, 70.0, 3};
  std::vector<EvalReport> reports{a, b};
  const std::string csv = EvalReportsCsv(reports);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 4);
  EXPECT_NE(csv.find("topk,diversity,0.25,nan,3\n"), std::string::npos);
  EXPECT_NE(csv.find("pargs,reward,1.5,0,3\n"), std::string::npos);
}

TEST(SweepTest, SingleBetaAndZeroRowMatchesTopK) {
  SyntheticTask task = MakeSyntheticTask({});
  SweepSetup setup;
  setup.policy = &task.policy;
  setup.guidance = &task.true_reward;
  setup.evaluator = &task.true_reward;
  setup.prompts = RandomPrompts(task.vocab, 40, 2, 3);
  setup.decode.k = 4;
  setup.decode.max_len = 6;
  setup.master_seed = 17;
  std::vector<double> one{0.0};
  auto rows = BetaSweep(setup, one);
  ASSERT_EQ(rows.size(), 1u);

  std::vector<GenerationResult> topk;
  for (std::size_t p = 0; p < setup.prompts.size(); ++p) {
    DecodeConfig cfg = ConfigureMethod(Method::kTopK, setup.decode);
    cfg.seed = DeriveSeed(17, p);
    topk.push_back(Generate(task.policy, nullptr, setup.prompts[p], cfg));
  }
  EvalReport base = AvgReward(topk, task.true_reward);
  // Same seeds and beta = 0: identical draws.
  EXPECT_DOUBLE_EQ(rows[0].mean_reward, base.mean_reward);
  const std::string csv = SweepCsv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "beta,mean_reward,stddev,n,std_error");
}

}  // namespace
}  // namespace pargs
