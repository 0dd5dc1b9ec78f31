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

#include "pargs/eval.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "pargs/rng.h"

namespace pargs {
namespace {

std::string FormatDouble(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

Verdict Flip(Verdict v) {
  switch (v) {
    case Verdict::kAWins:
      return Verdict::kBWins;
    case Verdict::kBWins:
      return Verdict::kAWins;
    case Verdict::kTie:
      return Verdict::kTie;
  }
  return v;
}

}  // namespace

SampleStats ComputeStats(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("ComputeStats: no values");
  SampleStats s;
  s.n = values.size();
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(s.n);
  if (s.n == 1) {
    s.small_sample = true;
    return s;
  }
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(s.n - 1));
  s.std_error = s.stddev / std::sqrt(static_cast<double>(s.n));
  return s;
}

EvalReport AvgReward(std::span<const GenerationResult> generations,
                     const LinearRewardModel& rm_eval,
                     const RewardFunction* guidance) {
  if (generations.empty()) {
    throw std::invalid_argument("AvgReward: no generations");
  }
  std::vector<double> rewards;
  rewards.reserve(generations.size());
  for (const auto& g : generations) {
    rewards.push_back(rm_eval.Reward(g.prompt, g.response));
  }
  const SampleStats s = ComputeStats(rewards);
  EvalReport report;
  report.method = generations.front().method;
  report.mean_reward = s.mean;
  report.std_error = s.std_error;
  report.stddev = s.stddev;
  report.n = s.n;
  report.small_sample = s.small_sample;
  if (guidance != nullptr) {
    const auto* linear = dynamic_cast<const LinearRewardModel*>(guidance);
    report.same_model_warning =
        guidance == &rm_eval ||
        (linear != nullptr && linear->vocab() == rm_eval.vocab() &&
         linear->weights() == rm_eval.weights());
  }
  return report;
}

std::size_t LcsLength(const Sequence& a, const Sequence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double RougeL(const Sequence& a, const Sequence& b, double beta) {
  if (a.empty() || b.empty()) return 0.0;
  const double lcs = static_cast<double>(LcsLength(a, b));
  if (lcs == 0.0) return 0.0;
  const double recall = lcs / static_cast<double>(a.size());
  const double precision = lcs / static_cast<double>(b.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * recall * precision / (recall + b2 * precision);
}

double Diversity(std::span<const Sequence> responses) {
  if (responses.size() < 2) {
    throw std::invalid_argument("Diversity: need at least two responses");
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    for (std::size_t j = i + 1; j < responses.size(); ++j) {
      total += RougeL(responses[i], responses[j]);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

Verdict RewardJudge::Judge(const Sequence& prompt, const Sequence& a,
                           const Sequence& b) const {
  const double diff = reward_.Reward(prompt, a) - reward_.Reward(prompt, b);
  if (std::abs(diff) <= tie_band_) return Verdict::kTie;
  return diff > 0.0 ? Verdict::kAWins : Verdict::kBWins;
}

WinTie WinTieRate(std::span<const GenerationResult> gens_a,
                  std::span<const GenerationResult> gens_b,
                  const PairwiseJudge& judge,
                  std::optional<std::uint64_t> shuffle_seed) {
  if (gens_a.size() != gens_b.size()) {
    throw std::invalid_argument("WinTieRate: " + std::to_string(gens_a.size()) +
                                " vs " + std::to_string(gens_b.size()) +
                                " generations");
  }
  if (gens_a.empty()) throw std::invalid_argument("WinTieRate: no pairs");
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;
  for (std::size_t i = 0; i < gens_a.size(); ++i) {
    const auto& a = gens_a[i];
    const auto& b = gens_b[i];
    if (a.prompt != b.prompt) {
      throw std::invalid_argument("WinTieRate: prompt mismatch at index " +
                                  std::to_string(i));
    }
    bool swap = false;
    if (shuffle_seed) swap = Rng(DeriveSeed(*shuffle_seed, i)).Uniform() < 0.5;
    const Verdict v = swap ? Flip(judge.Judge(a.prompt, b.response, a.response))
                           : judge.Judge(a.prompt, a.response, b.response);
    if (v == Verdict::kAWins) {
      ++wins;
    } else if (v == Verdict::kTie) {
      ++ties;
    } else {
      ++losses;
    }
  }
  const double n = static_cast<double>(gens_a.size());
  return WinTie{100.0 * static_cast<double>(wins) / n,
                100.0 * static_cast<double>(ties) / n,
                100.0 * static_cast<double>(losses) / n, gens_a.size()};
}

double NonEmbeddingParams(const CostModelParams& p) {
  const double d = static_cast<double>(p.d_model);
  return 12.0 * static_cast<double>(p.n_layers) * d * d;
}

double ForwardFlops(const CostModelParams& p, bool include_context) {
  double c = 2.0 * NonEmbeddingParams(p);
  if (include_context) {
    c += 2.0 * static_cast<double>(p.n_layers) *
         static_cast<double>(p.n_ctx) * static_cast<double>(p.d_model);
  }
  return c;
}

CostReport CostModel(const CostModelParams& lm, const CostModelParams& rm,
                     const CostOptions& options) {
  for (const CostModelParams* p : {&lm, &rm}) {
    if (p->n_layers == 0 || p->d_model == 0 || p->n_ctx == 0 || p->k == 0) {
      throw std::invalid_argument("cost model parameters must be positive");
    }
  }
  if (options.best_of_n == 0) {
    throw std::invalid_argument("best_of_n must be positive");
  }
  CostReport r;
  r.n_lm = NonEmbeddingParams(lm);
  r.n_rm = NonEmbeddingParams(rm);
  r.c_forward_lm = ForwardFlops(lm, options.include_context);
  r.c_forward_rm = ForwardFlops(rm, options.include_context);
  r.k = rm.k;
  const double k = static_cast<double>(rm.k);
  r.per_token_flops = r.c_forward_lm + k * r.c_forward_rm;
  r.guided_overhead = k * r.c_forward_rm / r.c_forward_lm;
  r.best_of_n = options.best_of_n;
  r.best_of_n_overhead = static_cast<double>(options.best_of_n) - 1.0;
  r.include_context = options.include_context;
  return r;
}

double RoundToSignificant(double x, int digits) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  const double magnitude = std::floor(std::log10(std::abs(x)));
  const double scale = std::pow(10.0, digits - 1 - magnitude);
  return std::round(x * scale) / scale;
}

nlohmann::ordered_json CostReportToJson(const CostReport& r) {
  nlohmann::ordered_json j;
  j["n_lm"] = r.n_lm;
  j["n_rm"] = r.n_rm;
  j["c_forward_lm"] = r.c_forward_lm;
  j["c_forward_rm"] = r.c_forward_rm;
  j["k"] = r.k;
  j["per_token_flops"] = r.per_token_flops;
  j["guided_overhead"] = r.guided_overhead;
  j["guided_overhead_2sf"] = RoundToSignificant(r.guided_overhead, 2);
  j["best_of_n"] = r.best_of_n;
  j["best_of_n_overhead"] = r.best_of_n_overhead;
  j["include_context"] = r.include_context;
  return j;
}

nlohmann::ordered_json EvalReportToJson(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["mean_reward"] = r.mean_reward;
  j["std_error"] = r.std_error;
  j["stddev"] = r.stddev;
  j["n"] = r.n;
  j["small_sample"] = r.small_sample;
  j["same_model_warning"] = r.same_model_warning;
  j["diversity"] = r.diversity ? nlohmann::ordered_json(*r.diversity)
                               : nlohmann::ordered_json(nullptr);
  if (r.win_tie) {
    j["win_tie"] = {{"win_pct", r.win_tie->win_pct},
                    {"tie_pct", r.win_tie->tie_pct},
                    {"loss_pct", r.win_tie->loss_pct},
                    {"n", r.win_tie->n}};
  } else {
    j["win_tie"] = nullptr;
  }
  return j;
}

std::string EvalReportsCsv(std::span<const EvalReport> reports) {
  std::string out = "method,metric,value,stderr,n\n";
  const double nan = std::nan("");
  for (const auto& r : reports) {
    auto row = [&](const char* metric, double value, double se,
                   std::size_t n) {
      out += r.method + "," + metric + "," + FormatDouble(value) + "," +
             FormatDouble(se) + "," + std::to_string(n) + "\n";
    };
    row("reward", r.mean_reward, r.std_error, r.n);
    row("diversity", r.diversity.value_or(nan), nan, r.n);
    row("win", r.win_tie ? r.win_tie->win_pct : nan, nan,
        r.win_tie ? r.win_tie->n : 0);
    row("tie", r.win_tie ? r.win_tie->tie_pct : nan, nan,
        r.win_tie ? r.win_tie->n : 0);
  }
  return out;
}

std::vector<SweepRow> BetaSweep(const SweepSetup& setup,
                                std::span<const double> betas) {
  if (betas.empty()) throw std::invalid_argument("BetaSweep: no betas");
  if (setup.policy == nullptr || setup.evaluator == nullptr) {
    throw std::invalid_argument("BetaSweep: policy and evaluator required");
  }
  if (setup.prompts.empty()) throw std::invalid_argument("BetaSweep: no prompts");
  std::vector<SweepRow> rows;
  for (double beta : betas) {
    std::vector<GenerationResult> gens;
    gens.reserve(setup.prompts.size());
    for (std::size_t p = 0; p < setup.prompts.size(); ++p) {
      DecodeConfig cfg = setup.decode;
      cfg.beta = beta;
      cfg.seed = DeriveSeed(setup.master_seed, p);
      gens.push_back(
          Generate(*setup.policy, setup.guidance, setup.prompts[p], cfg));
    }
    const EvalReport r = AvgReward(gens, *setup.evaluator);
    rows.push_back({beta, r.mean_reward, r.stddev, r.std_error, r.n});
  }
  return rows;
}

std::string SweepCsv(std::span<const SweepRow> rows) {
  std::string out = "beta,mean_reward,stddev,n,std_error\n";
  for (const auto& r : rows) {
    out += FormatDouble(r.beta) + "," + FormatDouble(r.mean_reward) + "," +
           FormatDouble(r.stddev) + "," + std::to_string(r.n) + "," +
           FormatDouble(r.std_error) + "\n";
  }
  return out;
}

}  // namespace pargs
