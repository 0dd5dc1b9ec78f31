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

#include "pargs/ref_policy.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pargs/errors.h"
#include "pargs/rng.h"

namespace pargs {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> LogOf(const std::vector<double>& probs) {
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out[i] = probs[i] > 0.0 ? std::log(probs[i]) : kNegInf;
  }
  return out;
}

}  // namespace

nlohmann::json VocabularyToJson(const Vocabulary& vocab) {
  return {{"tokens", vocab.tokens()},
          {"pad_id", vocab.pad_id()},
          {"eos_id", vocab.eos_id()}};
}

Vocabulary VocabularyFromJson(const nlohmann::json& j) {
  return Vocabulary(j.at("tokens").get<std::vector<std::string>>(),
                    j.at("pad_id").get<TokenId>(),
                    j.at("eos_id").get<TokenId>());
}

// ---------------------------------------------------------------------------
// TabularPolicy

TabularPolicy::TabularPolicy(Vocabulary vocab, std::size_t max_len)
    : vocab_(std::move(vocab)), max_len_(max_len) {
  if (max_len_ == 0) {
    throw std::invalid_argument("TabularPolicy: max_len must be positive");
  }
}

void TabularPolicy::Set(const Sequence& prompt, const Sequence& prefix,
                        std::vector<double> probs) {
  CheckSequence(prompt, vocab_);
  CheckSequence(prefix, vocab_);
  if (prefix.size() >= max_len_) {
    throw std::invalid_argument("TabularPolicy: prefix reaches max_len");
  }
  if (probs.size() != vocab_.size()) {
    throw std::invalid_argument("TabularPolicy: probability vector has " +
                                std::to_string(probs.size()) +
                                " entries, vocabulary has " +
                                std::to_string(vocab_.size()));
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("TabularPolicy: negative or non-finite "
                                  "probability");
    }
    total += p;
  }
  if (probs[vocab_.pad_id()] != 0.0) {
    throw std::invalid_argument("TabularPolicy: PAD must have probability 0");
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("TabularPolicy: probabilities sum to " +
                                std::to_string(total));
  }
  table_[{prompt, prefix}] = std::move(probs);
}

const std::vector<double>& TabularPolicy::Conditional(
    const Sequence& prompt, const Sequence& prefix) const {
  if (prefix.size() >= max_len_) {
    throw std::out_of_range("TabularPolicy: prefix length " +
                            std::to_string(prefix.size()) +
                            " reaches max_len " + std::to_string(max_len_));
  }
  auto it = table_.find({prompt, prefix});
  if (it == table_.end()) {
    throw std::out_of_range("TabularPolicy: no conditional stored for context");
  }
  return it->second;
}

std::vector<double> TabularPolicy::NextLogprobs(const Sequence& prompt,
                                                const Sequence& prefix) const {
  return LogOf(Conditional(prompt, prefix));
}

nlohmann::json TabularPolicy::ToJson() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [key, probs] : table_) {
    rows.push_back({{"prompt", SequenceToJson(key.first)},
                    {"prefix", SequenceToJson(key.second)},
                    {"probs", probs}});
  }
  return {{"kind", "tabular"},
          {"vocab", VocabularyToJson(vocab_)},
          {"max_len", max_len_},
          {"table", std::move(rows)}};
}

TabularPolicy TabularPolicy::FromJson(const nlohmann::json& j) {
  if (j.at("kind") != "tabular") {
    throw ParseError("expected a tabular policy document");
  }
  TabularPolicy policy(VocabularyFromJson(j.at("vocab")),
                       j.at("max_len").get<std::size_t>());
  for (const auto& row : j.at("table")) {
    policy.Set(SequenceFromJson(row.at("prompt")),
               SequenceFromJson(row.at("prefix")),
               row.at("probs").get<std::vector<double>>());
  }
  return policy;
}

// ---------------------------------------------------------------------------
// NGramPolicy

NGramPolicy::NGramPolicy(Vocabulary vocab, std::size_t order, double alpha,
                         Counts counts)
    : vocab_(std::move(vocab)),
      order_(order),
      alpha_(alpha),
      counts_(std::move(counts)) {
  if (order_ < 1) throw std::invalid_argument("n-gram order must be >= 1");
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) {
    throw std::invalid_argument("n-gram alpha must be positive and finite");
  }
  for (const auto& [context, row] : counts_) {
    if (context.size() >= order_) {
      throw std::invalid_argument("n-gram context longer than order - 1");
    }
    if (row.size() != vocab_.size()) {
      throw std::invalid_argument("n-gram count row has wrong width");
    }
    if (row[vocab_.pad_id()] != 0) {
      throw std::invalid_argument("n-gram counts include PAD");
    }
  }
}

NGramPolicy::Context NGramPolicy::ContextFor(const Sequence& prompt,
                                             const Sequence& prefix) const {
  const std::size_t want = order_ - 1;
  Context context;
  const std::size_t available = prompt.size() + prefix.size();
  const std::size_t take = std::min(want, available);
  context.reserve(take);
  for (std::size_t pos = available - take; pos < available; ++pos) {
    context.push_back(pos < prompt.size() ? prompt[pos]
                                          : prefix[pos - prompt.size()]);
  }
  return context;
}

std::vector<double> NGramPolicy::Conditional(const Context& context) const {
  std::vector<double> probs(vocab_.size(), 0.0);
  const double support = static_cast<double>(vocab_.NumNonPad());
  auto it = counts_.find(context);
  double total = 0.0;
  if (it != counts_.end()) {
    for (std::uint64_t c : it->second) total += static_cast<double>(c);
  }
  const double denom = total + alpha_ * support;
  for (TokenId t = 0; t < vocab_.size(); ++t) {
    if (t == vocab_.pad_id()) continue;
    const double c =
        it != counts_.end() ? static_cast<double>(it->second[t]) : 0.0;
    probs[t] = (c + alpha_) / denom;
  }
  return probs;
}

std::vector<double> NGramPolicy::NextLogprobs(const Sequence& prompt,
                                              const Sequence& prefix) const {
  return LogOf(Conditional(ContextFor(prompt, prefix)));
}

nlohmann::json NGramPolicy::ToJson() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [context, row] : counts_) {
    rows.push_back({{"context", context}, {"counts", row}});
  }
  return {{"kind", "ngram"},
          {"vocab", VocabularyToJson(vocab_)},
          {"order", order_},
          {"alpha", alpha_},
          {"counts", std::move(rows)}};
}

NGramPolicy NGramPolicy::FromJson(const nlohmann::json& j) {
  if (j.at("kind") != "ngram") {
    throw ParseError("expected an n-gram policy document");
  }
  Counts counts;
  for (const auto& row : j.at("counts")) {
    counts.emplace(row.at("context").get<Context>(),
                   row.at("counts").get<std::vector<std::uint64_t>>());
  }
  return NGramPolicy(VocabularyFromJson(j.at("vocab")),
                     j.at("order").get<std::size_t>(),
                     j.at("alpha").get<double>(), std::move(counts));
}

NGramPolicy FitNGram(std::span<const Sequence> corpus, std::size_t order,
                     double alpha, const Vocabulary& vocab) {
  if (corpus.empty()) throw std::invalid_argument("FitNGram: empty corpus");
  if (order < 1) throw std::invalid_argument("FitNGram: order must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("FitNGram: alpha must be > 0");
  NGramPolicy::Counts counts;
  for (const Sequence& seq : corpus) {
    CheckSequence(seq, vocab);
    for (std::size_t pos = 0; pos < seq.size(); ++pos) {
      if (seq[pos] == vocab.pad_id()) {
        throw std::invalid_argument("FitNGram: corpus contains PAD");
      }
      const std::size_t take = std::min(order - 1, pos);
      NGramPolicy::Context context(seq.begin() + (pos - take),
                                   seq.begin() + pos);
      auto& row = counts[context];
      if (row.empty()) row.assign(vocab.size(), 0);
      ++row[seq[pos]];
    }
  }
  return NGramPolicy(vocab, order, alpha, std::move(counts));
}

std::unique_ptr<ReferencePolicy> PolicyFromJson(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ngram") {
    return std::make_unique<NGramPolicy>(NGramPolicy::FromJson(j));
  }
  if (kind == "tabular") {
    return std::make_unique<TabularPolicy>(TabularPolicy::FromJson(j));
  }
  throw ParseError("unknown policy kind '" + kind + "'");
}

std::unique_ptr<ReferencePolicy> LoadPolicy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open policy file " + path.string());
  try {
    return PolicyFromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Queries

std::vector<Candidate> TopKCandidates(const ReferencePolicy& policy,
                                      const Sequence& prompt,
                                      const Sequence& prefix, std::size_t k) {
  const Vocabulary& vocab = policy.vocab();
  if (k < 1 || k > vocab.NumNonPad()) {
    throw std::out_of_range("top-k: k = " + std::to_string(k) +
                            " outside [1, " +
                            std::to_string(vocab.NumNonPad()) + "]");
  }
  const std::vector<double> logprobs = policy.NextLogprobs(prompt, prefix);
  std::vector<Candidate> all;
  all.reserve(vocab.NumNonPad());
  for (TokenId t : vocab.NonPadIds()) all.push_back({t, logprobs[t]});
  std::stable_sort(all.begin(), all.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.logprob != b.logprob) return a.logprob > b.logprob;
                     return a.token < b.token;
                   });
  all.resize(k);
  return all;
}

double SequenceLogprob(const ReferencePolicy& policy, const Sequence& prompt,
                       const Sequence& response) {
  double total = 0.0;
  for (std::size_t i = 0; i < response.size(); ++i) {
    total += policy.NextLogprobs(prompt, response.Prefix(i))[response[i]];
  }
  return total;
}

double Perplexity(const ReferencePolicy& policy,
                  std::span<const Sequence> corpus) {
  double total = 0.0;
  std::size_t tokens = 0;
  const Sequence empty;
  for (const Sequence& seq : corpus) {
    total += SequenceLogprob(policy, empty, seq);
    tokens += seq.size();
  }
  if (tokens == 0) {
    throw std::invalid_argument("Perplexity: corpus has no tokens");
  }
  return std::exp(-total / static_cast<double>(tokens));
}

Sequence SampleSequence(const ReferencePolicy& policy, const Sequence& prompt,
                        const SampleOptions& options, std::uint64_t seed) {
  if (options.max_len < 1) {
    throw std::invalid_argument("SampleSequence: max_len must be >= 1");
  }
  if (!(options.temperature > 0.0)) {
    throw std::invalid_argument("SampleSequence: temperature must be > 0");
  }
  const Vocabulary& vocab = policy.vocab();
  const std::size_t k = options.top_k.value_or(vocab.NumNonPad());
  Rng rng(seed);
  std::vector<TokenId> out;
  Sequence prefix;
  for (std::size_t step = 0; step < options.max_len; ++step) {
    const auto candidates = TopKCandidates(policy, prompt, prefix, k);
    std::vector<double> probs(candidates.size());
    double max_logit = kNegInf;
    for (const auto& c : candidates) {
      max_logit = std::max(max_logit, c.logprob / options.temperature);
    }
    double z = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      probs[i] = std::exp(candidates[i].logprob / options.temperature -
                          max_logit);
      z += probs[i];
    }
    for (double& p : probs) p /= z;
    const TokenId token =
        candidates[SampleCategorical(probs, rng.Uniform())].token;
    out.push_back(token);
    prefix = Sequence(out);
    if (options.stop_on_eos && token == vocab.eos_id()) break;
  }
  return Sequence(std::move(out));
}

}  // namespace pargs
