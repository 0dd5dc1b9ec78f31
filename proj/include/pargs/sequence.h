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

// Token inventory, immutable token sequences and preference records.

#ifndef PARGS_SEQUENCE_H_
#define PARGS_SEQUENCE_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace pargs {

using TokenId = std::uint32_t;

enum class TokenizeMode { kCharacter, kWhitespace };

std::string_view TokenizeModeName(TokenizeMode mode);
TokenizeMode ParseTokenizeMode(std::string_view name);

// Ordered set of distinct token strings with reserved PAD and EOS entries.
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> tokens, TokenId pad_id, TokenId eos_id);

  // PAD and EOS get ids 0 and 1; each UTF-8 code point of `chars` follows.
  static Vocabulary FromCharacters(std::string_view chars,
                                   std::string pad = "<pad>",
                                   std::string eos = "<eos>");

  // One token per line, PAD first, EOS second.
  static Vocabulary Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  TokenId pad_id() const { return pad_id_; }
  TokenId eos_id() const { return eos_id_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const;
  bool Contains(TokenId id) const { return id < tokens_.size(); }
  std::optional<TokenId> Find(std::string_view token) const;

  // Every id except PAD, ascending. EOS is included.
  std::vector<TokenId> NonPadIds() const;
  std::size_t NumNonPad() const { return tokens_.size() - 1; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.pad_id_ == b.pad_id_ &&
           a.eos_id_ == b.eos_id_;
  }

 private:
  std::vector<std::string> tokens_;
  TokenId pad_id_;
  TokenId eos_id_;
  std::unordered_map<std::string, TokenId> index_;
};

// Immutable list of token ids.
class Sequence {
 public:
  Sequence() = default;
  explicit Sequence(std::vector<TokenId> ids) : ids_(std::move(ids)) {}
  Sequence(std::initializer_list<TokenId> ids) : ids_(ids) {}

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  TokenId operator[](std::size_t i) const { return ids_[i]; }
  TokenId back() const { return ids_.back(); }
  const std::vector<TokenId>& ids() const { return ids_; }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  // First i tokens. Throws std::out_of_range when i > size().
  Sequence Prefix(std::size_t i) const;
  Sequence Append(TokenId token) const;

  friend auto operator<=>(const Sequence&, const Sequence&) = default;
  friend bool operator==(const Sequence&, const Sequence&) = default;

 private:
  std::vector<TokenId> ids_;
};

// Throws std::invalid_argument if any id is outside `vocab`.
void CheckSequence(const Sequence& seq, const Vocabulary& vocab);

// Number of tokens before the first PAD.
std::size_t UnpaddedLength(const Sequence& seq, const Vocabulary& vocab);

Sequence Tokenize(std::string_view text, const Vocabulary& vocab,
                  TokenizeMode mode = TokenizeMode::kCharacter);
// PAD is dropped; every other token is rendered by its string.
std::string Detokenize(const Sequence& seq, const Vocabulary& vocab,
                       TokenizeMode mode = TokenizeMode::kCharacter);

// Extends `seq` with PAD to exactly `length` tokens.
Sequence PadTo(const Sequence& seq, std::size_t length,
               const Vocabulary& vocab);

nlohmann::json SequenceToJson(const Sequence& seq);
Sequence SequenceFromJson(const nlohmann::json& j);

struct PreferencePair {
  Sequence prompt;
  Sequence chosen;
  Sequence rejected;
};

// Throws std::invalid_argument unless chosen and rejected are nonempty and
// distinct.
void CheckPreferencePair(const PreferencePair& pair);

struct PreferenceDataset {
  std::vector<PreferencePair> pairs;
  std::string provenance;
};

// JSON-lines, one {"prompt", "chosen", "rejected"} object per line. All
// malformed lines are collected into one ParseError message.
PreferenceDataset LoadPreferences(const std::filesystem::path& path,
                                  const Vocabulary& vocab,
                                  TokenizeMode mode = TokenizeMode::kCharacter);
void SavePreferences(const std::filesystem::path& path,
                     const PreferenceDataset& dataset, const Vocabulary& vocab,
                     TokenizeMode mode = TokenizeMode::kCharacter);

// One text per line, tokenized. Blank lines are skipped.
std::vector<Sequence> LoadTextLines(const std::filesystem::path& path,
                                    const Vocabulary& vocab,
                                    TokenizeMode mode);

}  // namespace pargs

#endif  // PARGS_SEQUENCE_H_
