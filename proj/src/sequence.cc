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

#include "pargs/sequence.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pargs/errors.h"

namespace pargs {
namespace {

// Splits `text` into UTF-8 code points. Stray continuation bytes become
// single-byte units so that unknown-unit errors still point somewhere.
std::vector<std::string_view> SplitCodePoints(std::string_view text) {
  std::vector<std::string_view> units;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    if (i + len > text.size()) len = text.size() - i;
    units.push_back(text.substr(i, len));
    i += len;
  }
  return units;
}

std::vector<std::string_view> SplitWhitespace(std::string_view text) {
  std::vector<std::string_view> units;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t') ++j;
    if (j > i) units.push_back(text.substr(i, j - i));
    i = j;
  }
  return units;
}

// Character units, except that multi-character vocabulary entries such as
// "<eos>" are matched whole (longest first) so detokenized text round-trips.
std::vector<std::string_view> SplitCharacters(std::string_view text,
                                              const Vocabulary& vocab) {
  std::vector<std::string_view> specials;
  for (TokenId id = 0; id < vocab.size(); ++id) {
    if (id == vocab.pad_id()) continue;
    const std::string& t = vocab.token(id);
    if (SplitCodePoints(t).size() > 1) specials.push_back(t);
  }
  if (specials.empty()) return SplitCodePoints(text);
  std::sort(specials.begin(), specials.end(),
            [](std::string_view a, std::string_view b) {
              return a.size() > b.size();
            });
  std::vector<std::string_view> units;
  std::size_t i = 0;
  while (i < text.size()) {
    std::string_view rest = text.substr(i);
    bool matched = false;
    for (std::string_view sp : specials) {
      if (rest.starts_with(sp)) {
        units.push_back(rest.substr(0, sp.size()));
        i += sp.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    std::string_view unit = SplitCodePoints(rest.substr(0, 4)).front();
    units.push_back(rest.substr(0, unit.size()));
    i += unit.size();
  }
  return units;
}

}  // namespace

std::string_view TokenizeModeName(TokenizeMode mode) {
  return mode == TokenizeMode::kCharacter ? "char" : "whitespace";
}

TokenizeMode ParseTokenizeMode(std::string_view name) {
  if (name == "char" || name == "character") return TokenizeMode::kCharacter;
  if (name == "whitespace" || name == "word") return TokenizeMode::kWhitespace;
  throw std::invalid_argument("unknown tokenize mode '" + std::string(name) +
                              "' (expected char or whitespace)");
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenId pad_id,
                       TokenId eos_id)
    : tokens_(std::move(tokens)), pad_id_(pad_id), eos_id_(eos_id) {
  if (tokens_.size() < 3) {
    throw std::invalid_argument(
        "vocabulary needs PAD, EOS and at least one content token");
  }
  if (pad_id_ >= tokens_.size() || eos_id_ >= tokens_.size()) {
    throw std::invalid_argument("PAD/EOS id outside vocabulary");
  }
  if (pad_id_ == eos_id_) {
    throw std::invalid_argument("PAD and EOS must be distinct tokens");
  }
  for (TokenId id = 0; id < tokens_.size(); ++id) {
    if (!index_.emplace(tokens_[id], id).second) {
      throw std::invalid_argument("duplicate vocabulary token '" +
                                  tokens_[id] + "'");
    }
  }
}

Vocabulary Vocabulary::FromCharacters(std::string_view chars, std::string pad,
                                      std::string eos) {
  std::vector<std::string> tokens = {std::move(pad), std::move(eos)};
  for (std::string_view unit : SplitCodePoints(chars)) {
    tokens.emplace_back(unit);
  }
  return Vocabulary(std::move(tokens), 0, 1);
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  try {
    return Vocabulary(std::move(tokens), 0, 1);
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void Vocabulary::Save(const std::filesystem::path& path) const {
  if (pad_id_ != 0 || eos_id_ != 1) {
    throw std::invalid_argument(
        "vocabulary files require PAD at id 0 and EOS at id 1");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write vocabulary file " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

const std::string& Vocabulary::token(TokenId id) const {
  if (!Contains(id)) {
    throw std::out_of_range("token id " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(size()));
  }
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> Vocabulary::NonPadIds() const {
  std::vector<TokenId> ids;
  ids.reserve(NumNonPad());
  for (TokenId id = 0; id < tokens_.size(); ++id) {
    if (id != pad_id_) ids.push_back(id);
  }
  return ids;
}

Sequence Sequence::Prefix(std::size_t i) const {
  if (i > ids_.size()) {
    throw std::out_of_range("prefix length " + std::to_string(i) +
                            " exceeds sequence length " +
                            std::to_string(ids_.size()));
  }
  return Sequence(std::vector<TokenId>(ids_.begin(), ids_.begin() + i));
}

Sequence Sequence::Append(TokenId token) const {
  std::vector<TokenId> ids = ids_;
  ids.push_back(token);
  return Sequence(std::move(ids));
}

void CheckSequence(const Sequence& seq, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!vocab.Contains(seq[i])) {
      throw std::invalid_argument("token id " + std::to_string(seq[i]) +
                                  " at position " + std::to_string(i) +
                                  " outside vocabulary");
    }
  }
}

std::size_t UnpaddedLength(const Sequence& seq, const Vocabulary& vocab) {
  std::size_t n = 0;
  while (n < seq.size() && seq[n] != vocab.pad_id()) ++n;
  return n;
}

Sequence Tokenize(std::string_view text, const Vocabulary& vocab,
                  TokenizeMode mode) {
  const auto units = mode == TokenizeMode::kCharacter
                         ? SplitCharacters(text, vocab)
                         : SplitWhitespace(text);
  std::vector<TokenId> ids;
  ids.reserve(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    auto id = vocab.Find(units[i]);
    if (!id || *id == vocab.pad_id()) {
      throw std::invalid_argument("unknown token '" + std::string(units[i]) +
                                  "' at position " + std::to_string(i));
    }
    ids.push_back(*id);
  }
  return Sequence(std::move(ids));
}

std::string Detokenize(const Sequence& seq, const Vocabulary& vocab,
                       TokenizeMode mode) {
  std::string out;
  bool first = true;
  for (TokenId id : seq) {
    if (id == vocab.pad_id()) continue;
    if (mode == TokenizeMode::kWhitespace && !first) out += ' ';
    out += vocab.token(id);
    first = false;
  }
  return out;
}

Sequence PadTo(const Sequence& seq, std::size_t length,
               const Vocabulary& vocab) {
  if (length < seq.size()) {
    throw std::invalid_argument("PadTo: target length " +
                                std::to_string(length) +
                                " is shorter than sequence length " +
                                std::to_string(seq.size()));
  }
  std::vector<TokenId> ids = seq.ids();
  ids.resize(length, vocab.pad_id());
  return Sequence(std::move(ids));
}

nlohmann::json SequenceToJson(const Sequence& seq) { return seq.ids(); }

Sequence SequenceFromJson(const nlohmann::json& j) {
  return Sequence(j.get<std::vector<TokenId>>());
}

void CheckPreferencePair(const PreferencePair& pair) {
  if (pair.chosen.empty() || pair.rejected.empty()) {
    throw std::invalid_argument("chosen and rejected must be nonempty");
  }
  if (pair.chosen == pair.rejected) {
    throw std::invalid_argument("chosen and rejected are identical");
  }
}

PreferenceDataset LoadPreferences(const std::filesystem::path& path,
                                  const Vocabulary& vocab, TokenizeMode mode) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open preference file " + path.string());
  PreferenceDataset dataset;
  dataset.provenance = path.string();
  std::ostringstream problems;
  std::size_t num_problems = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    try {
      if (line.empty()) throw std::invalid_argument("empty record");
      nlohmann::json record;
      try {
        record = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error&) {
        throw std::invalid_argument("not a JSON object");
      }
      if (!record.is_object()) throw std::invalid_argument("not a JSON object");
      auto field = [&](const char* name) {
        auto it = record.find(name);
        if (it == record.end()) {
          throw std::invalid_argument(std::string("missing field \"") + name +
                                      "\"");
        }
        if (!it->is_string()) {
          throw std::invalid_argument(std::string("field \"") + name +
                                      "\" is not a string");
        }
        try {
          return Tokenize(it->get<std::string>(), vocab, mode);
        } catch (const std::invalid_argument& e) {
          throw std::invalid_argument(std::string("field \"") + name +
                                      "\": " + e.what());
        }
      };
      PreferencePair pair{field("prompt"), field("chosen"),
                          field("rejected")};
      CheckPreferencePair(pair);
      dataset.pairs.push_back(std::move(pair));
    } catch (const std::invalid_argument& e) {
      ++num_problems;
      problems << "\n  line " << line_no << ": " << e.what();
    }
  }
  if (num_problems > 0) {
    throw ParseError(path.string() + ": " + std::to_string(num_problems) +
                     " malformed record(s):" + problems.str());
  }
  if (dataset.pairs.empty()) {
    throw ParseError(path.string() + ": preference file is empty");
  }
  return dataset;
}

void SavePreferences(const std::filesystem::path& path,
                     const PreferenceDataset& dataset, const Vocabulary& vocab,
                     TokenizeMode mode) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write preference file " + path.string());
  for (const auto& pair : dataset.pairs) {
    nlohmann::ordered_json record;
    record["prompt"] = Detokenize(pair.prompt, vocab, mode);
    record["chosen"] = Detokenize(pair.chosen, vocab, mode);
    record["rejected"] = Detokenize(pair.rejected, vocab, mode);
    out << record.dump() << '\n';
  }
}

std::vector<Sequence> LoadTextLines(const std::filesystem::path& path,
                                    const Vocabulary& vocab,
                                    TokenizeMode mode) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open text file " + path.string());
  std::vector<Sequence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      out.push_back(Tokenize(line, vocab, mode));
    } catch (const std::invalid_argument& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                       ": " + e.what());
    }
  }
  return out;
}

}  // namespace pargs
