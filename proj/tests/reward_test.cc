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
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gtest/gtest.h"
#include "pargs/errors.h"
#include "pargs/reward.h"
#include "pargs/rng.h"
#include "pargs/sequence.h"
#include "test_util.h"

namespace pargs {
namespace {

constexpr TokenId kEos = 1;
constexpr TokenId kA = 2;
constexpr TokenId kB = 3;

Vocabulary AbVocab() { return Vocabulary::FromCharacters("ab"); }

LinearRewardModel RandomModel(const Vocabulary& v, Rng& rng, double scale,
                              TrainedOn tag = TrainedOn::kFullSequence) {
  std::vector<double> w(Featurizer(v.size()).dimension());
  for (double& x : w) x = scale * rng.Normal();
  return LinearRewardModel(v, std::move(w), tag);
}

// Response over the non-PAD tokens with length in [1, max_len].
Sequence RandomResponse(const Vocabulary& v, Rng& rng, std::size_t max_len) {
  const std::size_t n = 1 + rng.Below(max_len);
  std::vector<TokenId> ids(n);
  for (auto& t : ids) t = static_cast<TokenId>(1 + rng.Below(v.size() - 1));
  return Sequence(std::move(ids));
}

// Model whose reward is `value` times the count of token a.
LinearRewardModel CountA(const Vocabulary& v, double value) {
  LinearRewardModel m = LinearRewardModel::Zero(v, TrainedOn::kFullSequence);
  std::vector<double> w = m.weights();
  w[m.featurizer().UnigramIndex(kA)] = value;
  return m.WithWeights(w, TrainedOn::kFullSequence);
}

TEST(FeaturizeTest, EmptyPrefix) {
  LinearRewardModel m = LinearRewardModel::Zero(AbVocab(), TrainedOn::kFullSequence);
  EXPECT_TRUE(m.Featurize(Sequence{kA}, Sequence{}).empty());
}

TEST(FeaturizeTest, DirectCounts) {
  LinearRewardModel m = LinearRewardModel::Zero(AbVocab(), TrainedOn::kFullSequence);
  const Featurizer& f = m.featurizer();
  FeatureVector phi = m.Featurize(Sequence{}, Sequence{kA, kB});
  EXPECT_EQ(phi.Get(f.UnigramIndex(kA)), 1.0);
  EXPECT_EQ(phi.Get(f.UnigramIndex(kB)), 1.0);
  EXPECT_EQ(phi.Get(f.BigramIndex(kA, kB)), 1.0);
  EXPECT_EQ(phi.Get(f.BigramIndex(kB, kA)), 0.0);
  EXPECT_EQ(phi.Get(f.LengthIndex()), 2.0);
  EXPECT_EQ(phi.nnz(), 4u);
}

TEST(FeaturizeTest, CrossFeatureUsesLastPromptToken) {
  LinearRewardModel m = LinearRewardModel::Zero(AbVocab(), TrainedOn::kFullSequence);
  const Featurizer& f = m.featurizer();
  FeatureVector phi = m.Featurize(Sequence{kA, kB}, Sequence{kA});
  EXPECT_EQ(phi.Get(f.CrossIndex(kB, kA)), 1.0);
  EXPECT_EQ(phi.Get(f.CrossIndex(kA, kA)), 0.0);
}

TEST(FeaturizeTest, PadTransparency) {
  Vocabulary v = AbVocab();
  LinearRewardModel m = LinearRewardModel::Zero(v, TrainedOn::kFullSequence);
  Sequence y{kB, kA, kEos};
  EXPECT_EQ(m.Featurize(Sequence{kA}, PadTo(y, y.size() + 3, v)),
            m.Featurize(Sequence{kA}, y));
}

TEST(FeaturizeTest, IndexLayoutIsInjective) {
  Featurizer f(5);
  std::vector<int> used(f.dimension(), 0);
  for (TokenId a = 0; a < 5; ++a) {
    ++used[f.UnigramIndex(a)];
    for (TokenId b = 0; b < 5; ++b) {
      ++used[f.BigramIndex(a, b)];
      ++used[f.CrossIndex(a, b)];
    }
  }
  ++used[f.LengthIndex()];
  for (int u : used) EXPECT_EQ(u, 1);
}

TEST(ModelTest, JsonRoundTripKeepsTag) {
  Rng rng(4);
  Vocabulary v = Vocabulary::FromCharacters("abc");
  LinearRewardModel m = RandomModel(v, rng, 1.0, TrainedOn::kPartialSequence);
  LinearRewardModel back = LinearRewardModel::FromJson(m.ToJson());
  EXPECT_EQ(back, m);
  EXPECT_EQ(m.ToJson()["trained_on"], "partial_sequence");
}

TEST(ModelTest, RejectsWrongDimensionAndNonFinite) {
  Vocabulary v = AbVocab();
  EXPECT_THROW(LinearRewardModel(v, {1.0, 2.0}, TrainedOn::kFullSequence),
               std::invalid_argument);
  std::vector<double> w(Featurizer(v.size()).dimension(), 0.0);
  w[3] = std::nan("");
  EXPECT_THROW(LinearRewardModel(v, w, TrainedOn::kFullSequence),
               std::invalid_argument);
}

TEST(BtLossTest, AnalyticValues) {
  Vocabulary v = AbVocab();
  PreferencePair pair{Sequence{}, Sequence{kA}, Sequence{kB}};
  EXPECT_NEAR(BtLossFull(CountA(v, 0.0), pair), 0.693147, 1e-6);
  EXPECT_NEAR(BtLossFull(CountA(v, std::log(3.0)), pair), 0.287682, 1e-6);
  EXPECT_NEAR(BtLossFull(CountA(v, -std::log(3.0)), pair), 1.386294, 1e-6);
}

TEST(BtLossTest, NegLogSigmoidIsStable) {
  EXPECT_NEAR(NegLogSigmoid(-800.0), 800.0, 1e-9);
  EXPECT_GE(NegLogSigmoid(800.0), 0.0);
  EXPECT_LT(NegLogSigmoid(800.0), 1e-300);
  EXPECT_NEAR(Sigmoid(1.0), std::exp(1.0) / (1.0 + std::exp(1.0)), 1e-15);
}

TEST(BtLossTest, PartialBeyondLengthsEqualsFull) {
  Rng rng(8);
  Vocabulary v = Vocabulary::FromCharacters("abc");
  LinearRewardModel m = RandomModel(v, rng, 1.0);
  PreferencePair pair{Sequence{kA}, Sequence{kA, kB, 4}, Sequence{kB}};
  EXPECT_NEAR(BtLossPartial(m, pair, 3), BtLossFull(m, pair), 1e-12);
}

TEST(BtLossTest, IdenticalFirstTokensGiveLn2) {
  Rng rng(9);
  Vocabulary v = Vocabulary::FromCharacters("abc");
  LinearRewardModel m = RandomModel(v, rng, 1.0);
  PreferencePair pair{Sequence{kB}, Sequence{kA, kB}, Sequence{kA, 4, 4}};
  EXPECT_NEAR(BtLossPartial(m, pair, 1), std::log(2.0), 1e-12);
}

TEST(BtLossTest, PartialIndexOutOfRange) {
  Vocabulary v = AbVocab();
  PreferencePair pair{Sequence{}, Sequence{kA}, Sequence{kB, kB}};
  EXPECT_THROW(BtLossPartial(CountA(v, 1.0), pair, 0), std::out_of_range);
  EXPECT_THROW(BtLossPartial(CountA(v, 1.0), pair, 3), std::out_of_range);
}

// Brute force over every pair of responses of length <= 3 on a 3-token
// alphabet: when every prefix margin is at most the full margin, the summed
// partial loss bounds the full loss from above.
TEST(BtLossTest, SummedPartialBoundsFullWhenMarginsDominated) {
  Vocabulary v = AbVocab();
  Rng rng(10);
  LinearRewardModel m = RandomModel(v, rng, 1.0);
  std::vector<Sequence> responses;
  for (std::size_t len = 1; len <= 3; ++len) {
    std::size_t count = 1;
    for (std::size_t i = 0; i < len; ++i) count *= 3;
    for (std::size_t code = 0; code < count; ++code) {
      std::vector<TokenId> ids;
      std::size_t c = code;
      for (std::size_t i = 0; i < len; ++i, c /= 3) {
        ids.push_back(static_cast<TokenId>(1 + c % 3));
      }
      responses.emplace_back(std::move(ids));
    }
  }
  std::size_t checked = 0;
  for (const auto& w : responses) {
    for (const auto& l : responses) {
      if (w == l) continue;
      PreferencePair pair{Sequence{kA}, w, l};
      const double full = BtLossFull(m, pair);
      const std::size_t n = std::max(w.size(), l.size());
      bool dominated = true;
      double total = 0.0;
      for (std::size_t i = 1; i <= n; ++i) {
        const double partial = BtLossPartial(m, pair, i);
        dominated = dominated && partial >= full - 1e-12;
        total += partial;
      }
      if (!dominated) continue;
      ++checked;
      EXPECT_GE(total, full - 1e-12);
    }
  }
  EXPECT_GT(checked, 100u);
}

TEST(GradTest, ZeroWeightsGiveHalfFeatureDifference) {
  Vocabulary v = Vocabulary::FromCharacters("abc");
  LinearRewardModel m = LinearRewardModel::Zero(v, TrainedOn::kFullSequence);
  PreferencePair pair{Sequence{kB}, Sequence{kA, kB}, Sequence{4}};
  FeatureVector expected =
      m.Featurize(pair.prompt, pair.chosen)
          .Minus(m.Featurize(pair.prompt, pair.rejected))
          .Scaled(-0.5);
  EXPECT_EQ(GradBt(m, pair), expected);
}

TEST(GradTest, EqualFeaturesGiveZeroGradient) {
  Rng rng(12);
  Vocabulary v = AbVocab();
  LinearRewardModel m = RandomModel(v, rng, 1.0);
  // Same first token: the length-1 prefixes have identical features.
  PreferencePair pair{Sequence{}, Sequence{kA, kB}, Sequence{kA, kA}};
  EXPECT_TRUE(GradBt(m, pair, 1).empty());
}

TEST(GradTest, MatchesCentralDifferences) {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    Vocabulary v = Vocabulary::FromCharacters(trial % 2 ? "abc" : "ab");
    LinearRewardModel m = RandomModel(v, rng, 0.5);
    PreferencePair pair{RandomResponse(v, rng, 2), RandomResponse(v, rng, 4),
                        RandomResponse(v, rng, 4)};
    if (pair.chosen == pair.rejected) continue;
    std::optional<std::size_t> prefix;
    if (trial % 3 != 0) {
      prefix = 1 + rng.Below(std::max(pair.chosen.size(), pair.rejected.size()));
    }
    auto loss = [&](const std::vector<double>& w) {
      LinearRewardModel mw = m.WithWeights(w, m.trained_on());
      return prefix ? BtLossPartial(mw, pair, *prefix) : BtLossFull(mw, pair);
    };
    const FeatureVector g = GradBt(m, pair, prefix);
    const double h = 1e-5;
    double err2 = 0.0;
    double norm2 = 0.0;
    for (std::size_t d = 0; d < m.weights().size(); ++d) {
      std::vector<double> plus = m.weights();
      std::vector<double> minus = m.weights();
      plus[d] += h;
      minus[d] -= h;
      const double fd = (loss(plus) - loss(minus)) / (2 * h);
      err2 += (fd - g.Get(d)) * (fd - g.Get(d));
      norm2 += fd * fd;
    }
    if (norm2 == 0.0) {
      EXPECT_TRUE(g.empty());
    } else {
      EXPECT_LT(std::sqrt(err2 / norm2), 1e-5) << "trial " << trial;
    }
  }
}

TEST(TrainTest, SinglePairSeparable) {
  Vocabulary v = AbVocab();
  PreferenceDataset d;
  d.pairs.push_back({Sequence{}, Sequence{kA}, Sequence{kB}});
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.epochs = 200;
  TrainResult r = Train(LinearRewardModel::Zero(v, TrainedOn::kFullSequence),
                        d, cfg, Objective::kFull);
  ASSERT_EQ(r.epoch_losses.size(), 200u);
  EXPECT_LT(r.epoch_losses.back(), 0.05);
  EXPECT_NEAR(r.initial_loss, std::log(2.0), 1e-12);
}

TEST(TrainTest, ContradictoryPairsLeaveWeightsAtInit) {
  Rng rng(14);
  Vocabulary v = Vocabulary::FromCharacters("abc");
  PreferenceDataset d;
  for (int i = 0; i < 20; ++i) {
    PreferencePair p{RandomResponse(v, rng, 2), RandomResponse(v, rng, 3),
                     RandomResponse(v, rng, 3)};
    if (p.chosen == p.rejected) continue;
    d.pairs.push_back(p);
    d.pairs.push_back({p.prompt, p.rejected, p.chosen});
  }
  TrainConfig cfg;
  cfg.full_batch = true;
  cfg.learning_rate = 0.3;
  cfg.epochs = 50;
  LinearRewardModel init = LinearRewardModel::Zero(v, TrainedOn::kFullSequence);
  for (Objective obj : {Objective::kFull, Objective::kPartial}) {
    TrainResult r = Train(init, d, cfg, obj);
    for (std::size_t i = 0; i < init.weights().size(); ++i) {
      EXPECT_NEAR(r.model.weights()[i], init.weights()[i], 1e-6);
    }
  }
}

TEST(TrainTest, FixedSeedBitIdentical) {
  Rng rng(15);
  Vocabulary v = Vocabulary::FromCharacters("abc");
  PreferenceDataset d;
  for (int i = 0; i < 40; ++i) {
    PreferencePair p{RandomResponse(v, rng, 2), RandomResponse(v, rng, 4),
                     RandomResponse(v, rng, 4)};
    if (p.chosen != p.rejected) d.pairs.push_back(p);
  }
  TrainConfig cfg;
  cfg.seed = 3;
  cfg.prefix_mode = PrefixMode::kSampledPrefix;
  LinearRewardModel init = LinearRewardModel::Zero(v, TrainedOn::kFullSequence);
  TrainResult a = Train(init, d, cfg, Objective::kPartial);
  TrainResult b = Train(init, d, cfg, Objective::kPartial);
  EXPECT_EQ(a.model.weights(), b.model.weights());
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  EXPECT_EQ(a.model.trained_on(), TrainedOn::kPartialSequence);
}

TEST(TrainTest, LossDecreasesOnAverage) {
  Rng rng(16);
  Vocabulary v = Vocabulary::FromCharacters("abc");
  LinearRewardModel truth = RandomModel(v, rng, 1.0);
  PreferenceDataset d;
  for (int i = 0; i < 60; ++i) {
    Sequence prompt = RandomResponse(v, rng, 2);
    Sequence a = RandomResponse(v, rng, 4);
    Sequence b = RandomResponse(v, rng, 4);
    if (a == b) continue;
    if (truth.Reward(prompt, a) < truth.Reward(prompt, b)) std::swap(a, b);
    d.pairs.push_back({prompt, a, b});
  }
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.learning_rate = 0.05;
  TrainResult r = Train(LinearRewardModel::Zero(v, TrainedOn::kFullSequence), d,
                        cfg, Objective::kPartial);
  const auto& l = r.epoch_losses;
  double first = (l[0] + l[1] + l[2]) / 3.0;
  double last = (l[17] + l[18] + l[19]) / 3.0;
  EXPECT_LT(last, first);
  EXPECT_LT(l.front(), r.initial_loss);
}

TEST(TrainTest, DivergenceRaisesNumericError) {
  Vocabulary v = AbVocab();
  PreferenceDataset d;
  d.pairs.push_back({Sequence{}, Sequence{kA}, Sequence{kB}});
  TrainConfig cfg;
  cfg.learning_rate = 1e308;
  cfg.epochs = 5;
  cfg.l2 = 10.0;
  EXPECT_THROW(Train(LinearRewardModel::Zero(v, TrainedOn::kFullSequence), d,
                     cfg, Objective::kFull),
               NumericError);
}

FullRewards ThreeTokenRewards(const Vocabulary& v) {
  FullRewards full;
  full[{Sequence{}, Sequence{kA, kB, kA}}] = 2.0;
  full[{Sequence{}, Sequence{kA, kA, kB}}] = -1.0;
  full[{Sequence{}, Sequence{kB, kB, kB}}] = 0.5;
  (void)v;
  return full;
}

TEST(FieldTest, LastonlyPutsRewardOnFinalToken) {
  Vocabulary v = AbVocab();
  TokenRewardField f = MakeLastonlyField(ThreeTokenRewards(v), v);
  const Sequence y{kA, kB, kA};
  EXPECT_EQ(f.TokenReward(Sequence{}, y.Prefix(1)), 0.0);
  EXPECT_EQ(f.TokenReward(Sequence{}, y.Prefix(2)), 0.0);
  EXPECT_EQ(f.TokenReward(Sequence{}, y), 2.0);
  EXPECT_EQ(f.Reward(Sequence{}, y.Prefix(2)), 0.0);
  EXPECT_EQ(f.Reward(Sequence{}, y), 2.0);
}

TEST(FieldTest, SpreadKeepsFullRewards) {
  Vocabulary v = AbVocab();
  const FullRewards full = ThreeTokenRewards(v);
  TokenRewardField spread = MakeSpreadField(full, v, 21);
  TokenRewardField last = MakeLastonlyField(full, v);
  bool nonzero_interior = false;
  for (const auto& [key, r] : full) {
    const auto& [x, y] = key;
    EXPECT_NEAR(spread.Reward(x, y), r, 1e-12);
    EXPECT_NEAR(spread.Reward(x, y), last.Reward(x, y), 1e-12);
    double sum = 0.0;
    for (std::size_t i = 1; i <= y.size(); ++i) {
      sum += spread.TokenReward(x, y.Prefix(i));
    }
    EXPECT_NEAR(sum, r, 1e-12);
    nonzero_interior =
        nonzero_interior || spread.TokenReward(x, y.Prefix(1)) != 0.0;
  }
  EXPECT_TRUE(nonzero_interior);
  // One entry per distinct prefix: a, ab, aba, aa, aab, b, bb, bbb.
  EXPECT_EQ(spread.entries().size(), 8u);
}

TEST(FieldTest, PadPositionsContributeNothing) {
  Vocabulary v = AbVocab();
  TokenRewardField f = MakeSpreadField(ThreeTokenRewards(v), v, 3);
  const Sequence y{kA, kB, kA};
  EXPECT_EQ(f.Reward(Sequence{}, PadTo(y, 5, v)), f.Reward(Sequence{}, y));
}

TEST(FieldTest, MissingEntryAndBadInputsThrow) {
  Vocabulary v = AbVocab();
  TokenRewardField f = MakeLastonlyField(ThreeTokenRewards(v), v);
  EXPECT_THROW(f.Reward(Sequence{}, Sequence{kB, kA}), std::out_of_range);
  EXPECT_THROW(f.Set(Sequence{}, Sequence{}, 1.0), std::invalid_argument);
  FullRewards not_prefix_free;
  not_prefix_free[{Sequence{}, Sequence{kA}}] = 1.0;
  not_prefix_free[{Sequence{}, Sequence{kA, kB}}] = 1.0;
  EXPECT_THROW(MakeLastonlyField(not_prefix_free, v), std::invalid_argument);
}

}  // namespace
}  // namespace pargs
