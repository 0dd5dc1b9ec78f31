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

// Frozen reference policies: exact tables for oracle work and add-alpha
// smoothed n-gram models fit from a corpus.

#ifndef PARGS_REF_POLICY_H_
#define PARGS_REF_POLICY_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pargs/sequence.h"

namespace pargs {

// Autoregressive conditional distribution pi_ref(v | x, y^{1:i-1}).
class ReferencePolicy {
 public:
  virtual ~ReferencePolicy() = default;

  virtual const Vocabulary& vocab() const = 0;

  // Log-probability for every vocabulary id. The PAD entry is -infinity and
  // exp() of the remaining entries sums to 1.
  virtual std::vector<double> NextLogprobs(const Sequence& prompt,
                                           const Sequence& prefix) const = 0;

  virtual nlohmann::json ToJson() const = 0;
};

// Explicit conditionals keyed by (prompt, prefix).
class TabularPolicy : public ReferencePolicy {
 public:
  TabularPolicy(Vocabulary vocab, std::size_t max_len);

  // `probs` covers the whole vocabulary, is nonnegative, has PAD = 0 and sums
  // to 1 within 1e-12.
  void Set(const Sequence& prompt, const Sequence& prefix,
           std::vector<double> probs);

  const Vocabulary& vocab() const override { return vocab_; }
  std::size_t max_len() const { return max_len_; }
  std::size_t num_contexts() const { return table_.size(); }

  // Throws std::out_of_range for a missing context or |prefix| >= max_len.
  std::vector<double> NextLogprobs(const Sequence& prompt,
                                   const Sequence& prefix) const override;
  const std::vector<double>& Conditional(const Sequence& prompt,
                                         const Sequence& prefix) const;

  nlohmann::json ToJson() const override;
  static TabularPolicy FromJson(const nlohmann::json& j);

 private:
  Vocabulary vocab_;
  std::size_t max_len_;
  std::map<std::pair<Sequence, Sequence>, std::vector<double>> table_;
};

// Add-alpha smoothed n-gram model. The context of the next token is the last
// (order - 1) tokens of the prompt followed by the response prefix; shorter
// histories use all the tokens available.
class NGramPolicy : public ReferencePolicy {
 public:
  using Context = std::vector<TokenId>;
  using Counts = std::map<Context, std::vector<std::uint64_t>>;

  NGramPolicy(Vocabulary vocab, std::size_t order, double alpha,
              Counts counts);

  const Vocabulary& vocab() const override { return vocab_; }
  std::size_t order() const { return order_; }
  double alpha() const { return alpha_; }
  const Counts& counts() const { return counts_; }

  Context ContextFor(const Sequence& prompt, const Sequence& prefix) const;
  // (count(c, t) + alpha) / (count(c, .) + alpha (|V| - 1)); PAD gets 0.
  std::vector<double> Conditional(const Context& context) const;

  std::vector<double> NextLogprobs(const Sequence& prompt,
                                   const Sequence& prefix) const override;

  nlohmann::json ToJson() const override;
  static NGramPolicy FromJson(const nlohmann::json& j);

 private:
  Vocabulary vocab_;
  std::size_t order_;
  double alpha_;
  Counts counts_;
};

NGramPolicy FitNGram(std::span<const Sequence> corpus, std::size_t order,
                     double alpha, const Vocabulary& vocab);

// Dispatches on the "kind" field.
std::unique_ptr<ReferencePolicy> PolicyFromJson(const nlohmann::json& j);
std::unique_ptr<ReferencePolicy> LoadPolicy(const std::filesystem::path& path);

nlohmann::json VocabularyToJson(const Vocabulary& vocab);
Vocabulary VocabularyFromJson(const nlohmann::json& j);

struct Candidate {
  TokenId token;
  double logprob;
};

// The k most probable non-PAD tokens, ties broken by ascending id. Throws
// std::out_of_range unless 1 <= k <= |V| - 1.
std::vector<Candidate> TopKCandidates(const ReferencePolicy& policy,
                                      const Sequence& prompt,
                                      const Sequence& prefix, std::size_t k);

// Sum of stepwise NextLogprobs entries.
double SequenceLogprob(const ReferencePolicy& policy, const Sequence& prompt,
                       const Sequence& response);

// exp(-mean token log-probability) over `corpus`, each line scored as a
// response to the empty prompt.
double Perplexity(const ReferencePolicy& policy,
                  std::span<const Sequence> corpus);

struct SampleOptions {
  std::size_t max_len = 16;
  std::optional<std::size_t> top_k;  // unset: all non-PAD tokens
  bool stop_on_eos = true;
  double temperature = 1.0;
};

// Ancestral sampling, one Rng::Uniform draw per token.
Sequence SampleSequence(const ReferencePolicy& policy, const Sequence& prompt,
                        const SampleOptions& options, std::uint64_t seed);

}  // namespace pargs

#endif  // PARGS_REF_POLICY_H_
