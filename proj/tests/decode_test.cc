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


#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "pargs/decode.h"
#include "pargs/ref_policy.h"
#include "pargs/reward.h"
#include "pargs/rng.h"

namespace pargs {
namespace {

using ::testing::HasSubstr;

constexpr TokenId kEos = 1;
constexpr TokenId kA = 2;
constexpr TokenId kB = 3;

Vocabulary AbVocab() { return Vocabulary::FromCharacters("ab"); }

// Reward = value * (number of a tokens); prefers a in every context.
LinearRewardModel CountA(const Vocabulary& v, double value,
                         TrainedOn tag = TrainedOn::kPartialSequence) {
  LinearRewardModel m = LinearRewardModel::Zero(v, tag);
  std::vector<double> w = m.weights();
  w[m.featurizer().UnigramIndex(kA)] = value;
  return m.WithWeights(w, tag);
}

// `row` for every prefix over {a, b} up to max_len.
TabularPolicy Stationary(const Vocabulary& v, std::size_t max_len,
                         const std::vector<double>& row) {
  TabularPolicy p(v, max_len);
  std::vector<Sequence> frontier{Sequence{}};
  for (std::size_t len = 0; len < max_len; ++len) {
    std::vector<Sequence> next;
    for (const Sequence& s : frontier) {
      p.Set(Sequence{}, s, row);
      next.push_back(s.Append(kA));
      next.push_back(s.Append(kB));
    }
    frontier = std::move(next);
  }
  return p;
}

NGramPolicy SmallNGram(const Vocabulary& v) {
  std::vector<Sequence> corpus{Tokenize("abcabcaab", v), Tokenize("ccba", v),
                               Tokenize("bbbac", v)};
  return FitNGram(corpus, 2, 0.4, v);
}

double Sum(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

TEST(SoftmaxTest, NormalizesAndHandlesNegInfinity) {
  auto p = Softmax({1000.0, 1000.0, -std::numeric_limits<double>::infinity()});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  EXPECT_EQ(p[2], 0.0);
}

TEST(GuidedStepTest, TwoCandidateClosedForm) {
  Vocabulary v = AbVocab();
  TabularPolicy p = Stationary(v, 1, {0.0, 0.0, 0.5, 0.5});
  LinearRewardModel r = CountA(v, 1.0);
  DecodeConfig cfg;
  cfg.beta = 1.0;
  cfg.k = 2;
  StepRecord s = GuidedStep(p, &r, Sequence{}, Sequence{}, cfg);
  ASSERT_EQ(s.candidates, (std::vector<TokenId>{kA, kB}));
  const double e = std::exp(1.0);
  EXPECT_NEAR(s.probs[0], e / (1.0 + e), 1e-15);
  EXPECT_NEAR(s.probs[0], 0.731059, 1e-6);
}

TEST(GuidedStepTest, BetaZeroIsRenormalizedReference) {
  Vocabulary v = Vocabulary::FromCharacters("abc");
  NGramPolicy p = SmallNGram(v);
  LinearRewardModel r = CountA(v, 5.0);
  DecodeConfig cfg;
  cfg.beta = 0.0;
  cfg.k = 3;
  StepRecord s = GuidedStep(p, &r, Sequence{}, Sequence{kB}, cfg);
  double mass = 0.0;
  for (double lp : s.ref_logprobs) mass += std::exp(lp);
  for (std::size_t i = 0; i < s.probs.size(); ++i) {
    EXPECT_NEAR(s.probs[i], std::exp(s.ref_logprobs[i]) / mass, 1e-14);
  }
}

TEST(GuidedStepTest, ConstantRewardShiftIsInvisible) {
  Vocabulary v = Vocabulary::FromCharacters("abc");
  NGramPolicy p = SmallNGram(v);
  // Only the length feature is weighted, so every candidate gets the same
  // reward.
  LinearRewardModel zero = LinearRewardModel::Zero(v, TrainedOn::kPartialSequence);
  std::vector<double> w = zero.weights();
  w[zero.featurizer().LengthIndex()] = 3.7;
  LinearRewardModel r = zero.WithWeights(w, TrainedOn::kPartialSequence);
  DecodeConfig cfg;
  cfg.beta = 2.0;
  cfg.k = 4;
  StepRecord guided = GuidedStep(p, &r, Sequence{kA}, Sequence{kB, kA}, cfg);
  StepRecord plain = GuidedStep(p, nullptr, Sequence{kA}, Sequence{kB, kA}, cfg);
  for (std::size_t i = 0; i < guided.probs.size(); ++i) {
    EXPECT_NEAR(guided.probs[i], plain.probs[i], 1e-14);
  }
}

TEST(GuidedStepTest, ProbabilitiesNormalize) {
  Rng rng(4);
  Vocabulary v = Vocabulary::FromCharacters("abcd");
  NGramPolicy p = SmallNGram(v);
  for (int i = 0; i < 200; ++i) {
    LinearRewardModel zero = LinearRewardModel::Zero(v, TrainedOn::kPartialSequence);
    std::vector<double> w = zero.weights();
    for (double& x : w) x = 3.0 * rng.Normal();
    LinearRewardModel r = zero.WithWeights(w, TrainedOn::kPartialSequence);
    DecodeConfig cfg;
    cfg.beta = 5.0 * rng.Uniform();
    cfg.k = 1 + rng.Below(4);
    Sequence prefix{static_cast<TokenId>(1 + rng.Below(4))};
    StepRecord s = GuidedStep(p, &r, Sequence{}, prefix, cfg, rng.Uniform());
    EXPECT_NEAR(Sum(s.probs), 1.0, 1e-12);
    EXPECT_EQ(s.probs.size(), cfg.k);
  }
}

TEST(GenerateTest, DeterministicGreedy) {
  Vocabulary v = AbVocab();
  TabularPolicy p = Stationary(v, 4, {0.0, 0.2, 0.5, 0.3});
  DecodeConfig cfg;
  cfg.selection = Selection::kGreedy;
  cfg.k = 3;
  cfg.max_len = 4;
  cfg.seed = 1;
  GenerationResult a = Generate(p, nullptr, Sequence{}, cfg);
  cfg.seed = 999;
  GenerationResult b = Generate(p, nullptr, Sequence{}, cfg);
  EXPECT_EQ(a.response, (Sequence{kA, kA, kA, kA}));
  EXPECT_EQ(a.response, b.response);
}

TEST(GenerateTest, SameSeedSameResult) {
  Vocabulary v = Vocabulary::FromCharacters("abc");
  NGramPolicy p = SmallNGram(v);
  LinearRewardModel r = CountA(v, 1.0);
  DecodeConfig cfg;
  cfg.k = 3;
  cfg.max_len = 10;
  cfg.seed = 31;
  auto a = Generate(p, &r, Sequence{kA}, cfg);
  auto b = Generate(p, &r, Sequence{kA}, cfg);
  EXPECT_EQ(GenerationToJson(a).dump(), GenerationToJson(b).dump());
}

TEST(GenerateTest, HugeBetaGreedyFollowsReward) {
  Vocabulary v = AbVocab();
  // The reference strongly prefers b.
  TabularPolicy p = Stationary(v, 5, {0.0, 0.0, 0.01, 0.99});
  LinearRewardModel r = CountA(v, 1.0);
  DecodeConfig cfg;
  cfg.beta = 1e6;
  cfg.k = 2;
  cfg.max_len = 5;
  cfg.selection = Selection::kGreedy;
  EXPECT_EQ(Generate(p, &r, Sequence{}, cfg).response,
            (Sequence{kA, kA, kA, kA, kA}));
}

TEST(GenerateTest, StopsAtEosWhenAsked) {
  Vocabulary v = AbVocab();
  TabularPolicy p = Stationary(v, 3, {0.0, 0.9, 0.05, 0.05});
  DecodeConfig cfg;
  cfg.k = 3;
  cfg.max_len = 3;
  cfg.selection = Selection::kGreedy;
  cfg.stop_on_eos = true;
  EXPECT_EQ(Generate(p, nullptr, Sequence{}, cfg).response, Sequence{kEos});
}

TEST(GenerateTest, RejectsBadConfig) {
  DecodeConfig cfg;
  cfg.k = 0;
  EXPECT_THROW(CheckDecodeConfig(cfg), std::invalid_argument);
  cfg = DecodeConfig{};
  cfg.max_len = 0;
  EXPECT_THROW(CheckDecodeConfig(cfg), std::invalid_argument);
  cfg = DecodeConfig{};
  cfg.beta = std::nan("");
  EXPECT_THROW(CheckDecodeConfig(cfg), std::invalid_argument);
}

TEST(GenerateTest, TraceJsonRoundTrip) {
  Vocabulary v = Vocabulary::FromCharacters("abc");
  NGramPolicy p = SmallNGram(v);
  LinearRewardModel r = CountA(v, 0.5);
  DecodeConfig cfg;
  cfg.k = 2;
  cfg.max_len = 6;
  cfg.seed = 8;
  auto g = Generate(p, &r, Sequence{kB}, cfg, "pargs");
  auto back = GenerationFromJson(GenerationToJson(g));
  EXPECT_EQ(GenerationToJson(back).dump(), GenerationToJson(g).dump());
}

TEST(BestOfNTest, SingleSampleMatchesUnguidedDraw) {
  Vocabulary v = Vocabulary::FromCharacters("abc");
  NGramPolicy p = SmallNGram(v);
  LinearRewardModel r = CountA(v, 1.0, TrainedOn::kFullSequence);
  DecodeConfig cfg;
  cfg.k = 4;
  cfg.max_len = 8;
  cfg.seed = 55;
  GenerationResult best = BestOfN(p, r, Sequence{kA}, 1, cfg);
  DecodeConfig topk = ConfigureMethod(Method::kTopK, cfg);
  topk.seed = DeriveSeed(55, 0);
  EXPECT_EQ(best.response, Generate(p, nullptr, Sequence{kA}, topk).response);
}

TEST(BestOfNTest, ReturnsMaxRecordedReward) {
  Vocabulary v = Vocabulary::FromCharacters("abc");
  NGramPolicy p = SmallNGram(v);
  LinearRewardModel r = CountA(v, 1.0, TrainedOn::kFullSequence);
  DecodeConfig cfg;
  cfg.k = 4;
  cfg.max_len = 8;
  cfg.seed = 2;
  GenerationResult best = BestOfN(p, r, Sequence{kA}, 8, cfg);
  ASSERT_EQ(best.candidate_rewards.size(), 8u);
  double max = best.candidate_rewards[0];
  for (double x : best.candidate_rewards) max = std::max(max, x);
  EXPECT_EQ(r.Reward(best.prompt, best.response), max);
  EXPECT_EQ(best.candidate_rewards[best.chosen_index], max);
}

TEST(BestOfNTest, ExpectedRewardNondecreasingInN) {
  Vocabulary v = Vocabulary::FromCharacters("abc");
  NGramPolicy p = SmallNGram(v);
  LinearRewardModel r = CountA(v, 1.0, TrainedOn::kFullSequence);
  DecodeConfig cfg;
  cfg.k = 4;
  cfg.max_len = 6;
  std::vector<double> means;
  std::vector<double> ses;
  for (std::size_t n : {1u, 2u, 4u, 8u}) {
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::uint64_t t = 0; t < 200; ++t) {
      cfg.seed = DeriveSeed(1234, t);
      const double x = r.Reward(Sequence{kA}, BestOfN(p, r, Sequence{kA}, n, cfg).response);
      s1 += x;
      s2 += x * x;
    }
    const double mean = s1 / 200.0;
    means.push_back(mean);
    ses.push_back(std::sqrt((s2 / 200.0 - mean * mean) / 199.0));
  }
  for (std::size_t i = 1; i < means.size(); ++i) {
    EXPECT_GE(means[i], means[i - 1] - 2.0 * (ses[i] + ses[i - 1]));
  }
  EXPECT_GT(means.back(), means.front());
}

TEST(MethodTest, NamesRoundTrip) {
  for (Method m : {Method::kPargs, Method::kPargsGreedy, Method::kArgs,
                   Method::kArgsSample, Method::kTopK, Method::kBestOfN}) {
    EXPECT_EQ(ParseMethod(MethodName(m)), m);
  }
  EXPECT_THROW(ParseMethod("beam"), std::invalid_argument);
}

TEST(MethodTest, ConfigureMethodSelections) {
  DecodeConfig base;
  base.beta = 2.0;
  EXPECT_EQ(ConfigureMethod(Method::kPargs, base).selection, Selection::kSample);
  EXPECT_EQ(ConfigureMethod(Method::kPargsGreedy, base).selection,
            Selection::kGreedy);
  EXPECT_EQ(ConfigureMethod(Method::kArgs, base).selection, Selection::kGreedy);
  EXPECT_EQ(ConfigureMethod(Method::kTopK, base).beta, 0.0);
  EXPECT_EQ(ConfigureMethod(Method::kPargs, base).beta, 2.0);
}

TEST(MethodTest, TrainedOnGuard) {
  Vocabulary v = AbVocab();
  LinearRewardModel full = CountA(v, 1.0, TrainedOn::kFullSequence);
  LinearRewardModel partial = CountA(v, 1.0, TrainedOn::kPartialSequence);
  try {
    CheckRewardModelForMethod(Method::kPargs, full);
    FAIL() << "expected a mismatch error";
  } catch (const std::invalid_argument& e) {
    EXPECT_THAT(e.what(), HasSubstr("trained_on=partial_sequence"));
    EXPECT_THAT(e.what(), HasSubstr("trained_on=full_sequence"));
  }
  EXPECT_NO_THROW(CheckRewardModelForMethod(Method::kPargs, partial));
  EXPECT_NO_THROW(CheckRewardModelForMethod(Method::kPargsGreedy, partial));
  EXPECT_THROW(CheckRewardModelForMethod(Method::kArgs, partial),
               std::invalid_argument);
  EXPECT_NO_THROW(CheckRewardModelForMethod(Method::kArgsSample, full));
  EXPECT_NO_THROW(CheckRewardModelForMethod(Method::kBestOfN, full));
  EXPECT_FALSE(MethodNeedsRewardModel(Method::kTopK));
}

}  // namespace
}  // namespace pargs
