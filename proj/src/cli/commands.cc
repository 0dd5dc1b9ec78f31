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


#include "pargs/cli/commands.h"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pargs/cli/config.h"
#include "pargs/decode.h"
#include "pargs/errors.h"
#include "pargs/eval.h"
#include "pargs/oracle.h"
#include "pargs/ref_policy.h"
#include "pargs/reward.h"
#include "pargs/rng.h"
#include "pargs/sequence.h"
#include "pargs/synth.h"

namespace pargs::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// Stream indices for DeriveSeed(master, stream); fixed so that reruns agree.
enum SeedStream : std::uint64_t {
  kHeldoutSplit = 1,
  kTrainOrder = 2,
  kTrainPrompts = 3,
  kEvalPrompts = 4,
  kPreferences = 5,
  kWinTieCoins = 6,
  kOraclePairs = 7,
  kSynthTask = 8,
  kGeneration = 9,
  kSweep = 10,
};

std::string FormatDouble(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string Dump(const ordered_json& j) { return j.dump(2) + "\n"; }

fs::path OutDir(const json& cfg) {
  const fs::path dir = Get<std::string>(cfg, "out_dir");
  if (dir.empty()) throw ConfigError("out_dir must not be empty");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw ConfigError("cannot create out_dir " + dir.string() + ": " +
                      ec.message());
  }
  return dir;
}

fs::path RequirePath(const json& cfg, const std::string& key,
                     const std::string& command) {
  const std::string value = Get<std::string>(cfg, key);
  if (value.empty()) {
    throw ConfigError(command + " needs --" + key);
  }
  if (!fs::exists(value)) {
    throw ConfigError(value + ": no such file (" + key + ")");
  }
  return value;
}

std::optional<fs::path> OptionalPath(const json& cfg, const std::string& key) {
  const std::string value = Get<std::string>(cfg, key);
  if (value.empty()) return std::nullopt;
  if (!fs::exists(value)) {
    throw ConfigError(value + ": no such file (" + key + ")");
  }
  return fs::path(value);
}

TokenizeMode Mode(const json& cfg) {
  try {
    return ParseTokenizeMode(Get<std::string>(cfg, "tokenize"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::uint64_t Seed(const json& cfg) { return Get<std::uint64_t>(cfg, "seed"); }

std::vector<std::string> ReadLines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open text file " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// UTF-8 code points of `text`.
std::vector<std::string> CodePoints(const std::string& text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size();) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t n = lead < 0x80 ? 1 : lead < 0xE0 ? 2 : lead < 0xF0 ? 3 : 4;
    n = std::min(n, text.size() - i);
    out.push_back(text.substr(i, n));
    i += n;
  }
  return out;
}

Vocabulary VocabularyFromLines(const std::vector<std::string>& lines,
                               TokenizeMode mode) {
  std::set<std::string> units;
  for (const auto& line : lines) {
    if (mode == TokenizeMode::kCharacter) {
      for (auto& cp : CodePoints(line)) units.insert(cp);
    } else {
      std::istringstream words(line);
      std::string w;
      while (words >> w) units.insert(w);
    }
  }
  std::vector<std::string> tokens{"<pad>", "<eos>"};
  for (const auto& u : units) {
    if (u != "<pad>" && u != "<eos>") tokens.push_back(u);
  }
  return Vocabulary(std::move(tokens), 0, 1);
}

std::string VocabularyText(const Vocabulary& vocab) {
  std::string out;
  for (const auto& t : vocab.tokens()) out += t + "\n";
  return out;
}

// Vocabulary from paths.vocab, else from the reference policy file.
Vocabulary ResolveVocabulary(const json& cfg, const std::string& command) {
  if (auto path = OptionalPath(cfg, "paths.vocab")) {
    return Vocabulary::Load(*path);
  }
  if (auto path = OptionalPath(cfg, "paths.ref_policy")) {
    return LoadPolicy(*path)->vocab();
  }
  throw ConfigError(command + " needs --paths.vocab or --paths.ref_policy");
}

LinearRewardModel LoadModelFor(const fs::path& path, const Vocabulary& vocab,
                               const std::string& role) {
  LinearRewardModel model = LinearRewardModel::Load(path);
  if (!(model.vocab() == vocab)) {
    throw ConfigError(role + " " + path.string() +
                      " uses a different vocabulary than the reference policy");
  }
  return model;
}

std::string ModelFingerprint(const LinearRewardModel& model) {
  return Fingerprint(model.ToJson().dump());
}

DecodeConfig DecodeFromConfig(const json& cfg) {
  DecodeConfig d;
  d.beta = Get<double>(cfg, "decode.beta");
  d.k = Get<std::size_t>(cfg, "decode.k");
  d.max_len = Get<std::size_t>(cfg, "decode.max_len");
  d.stop_on_eos = Get<bool>(cfg, "decode.stop_on_eos");
  d.seed = Seed(cfg);
  CheckDecodeConfig(d);
  return d;
}

Method MethodFromConfig(const json& cfg) {
  try {
    return ParseMethod(Get<std::string>(cfg, "decode.method"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// Guidance model required by `method`, checked for its trained_on tag.
std::optional<LinearRewardModel> GuidanceModel(const json& cfg, Method method,
                                               const Vocabulary& vocab,
                                               const std::string& command) {
  if (!MethodNeedsRewardModel(method)) return std::nullopt;
  LinearRewardModel model =
      LoadModelFor(RequirePath(cfg, "paths.reward_model", command), vocab,
                   "reward model");
  try {
    CheckRewardModelForMethod(method, model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return model;
}

}  // namespace

void WriteFileAtomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string Fingerprint(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

// ---------------------------------------------------------------------------
// fit-ref

int CmdFitRef(const json& cfg, std::ostream& out) {
  const fs::path corpus_path = RequirePath(cfg, "paths.corpus", "fit-ref");
  const TokenizeMode mode = Mode(cfg);
  const std::size_t order = Get<std::size_t>(cfg, "ref.order");
  const double alpha = Get<double>(cfg, "ref.alpha");
  const double fraction = Get<double>(cfg, "ref.heldout_fraction");
  const bool append_eos = Get<bool>(cfg, "ref.append_eos");
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ConfigError("ref.heldout_fraction must be in [0, 1)");
  }
  const auto heldout_file = OptionalPath(cfg, "paths.heldout");

  const std::vector<std::string> lines = ReadLines(corpus_path);
  if (lines.empty()) throw ParseError(corpus_path.string() + ": corpus is empty");
  Vocabulary vocab = [&] {
    if (auto path = OptionalPath(cfg, "paths.vocab")) {
      return Vocabulary::Load(*path);
    }
    std::vector<std::string> all = lines;
    if (heldout_file) {
      for (auto& l : ReadLines(*heldout_file)) all.push_back(l);
    }
    return VocabularyFromLines(all, mode);
  }();

  auto tokenize_all = [&](const std::vector<std::string>& text,
                          const fs::path& source) {
    std::vector<Sequence> seqs;
    for (std::size_t i = 0; i < text.size(); ++i) {
      Sequence s;
      try {
        s = Tokenize(text[i], vocab, mode);
      } catch (const std::invalid_argument& e) {
        throw ParseError(source.string() + ": line " + std::to_string(i + 1) +
                         ": " + e.what());
      }
      if (append_eos && (s.empty() || s.back() != vocab.eos_id())) {
        s = s.Append(vocab.eos_id());
      }
      seqs.push_back(std::move(s));
    }
    return seqs;
  };
  std::vector<Sequence> corpus = tokenize_all(lines, corpus_path);
  std::vector<Sequence> train;
  std::vector<Sequence> heldout;
  if (heldout_file) {
    train = corpus;
    heldout = tokenize_all(ReadLines(*heldout_file), *heldout_file);
  } else {
    std::vector<std::size_t> idx(corpus.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(DeriveSeed(Seed(cfg), kHeldoutSplit));
    rng.Shuffle(idx);
    std::size_t n_heldout =
        static_cast<std::size_t>(std::floor(fraction * corpus.size()));
    n_heldout = std::min(n_heldout, corpus.size() - 1);
    std::vector<bool> is_heldout(corpus.size(), false);
    for (std::size_t i = 0; i < n_heldout; ++i) is_heldout[idx[i]] = true;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      (is_heldout[i] ? heldout : train).push_back(corpus[i]);
    }
  }

  NGramPolicy policy = FitNGram(train, order, alpha, vocab);
  const fs::path dir = OutDir(cfg);
  WriteFileAtomic(dir / "ref_policy.json", policy.ToJson().dump() + "\n");
  WriteFileAtomic(dir / "vocab.txt", VocabularyText(vocab));

  ordered_json summary;
  summary["order"] = order;
  summary["alpha"] = alpha;
  summary["vocab_size"] = vocab.size();
  summary["train_lines"] = train.size();
  summary["heldout_lines"] = heldout.size();
  std::optional<double> ppl;
  if (!heldout.empty()) ppl = Perplexity(policy, heldout);
  summary["heldout_perplexity"] = ppl ? ordered_json(*ppl) : ordered_json();
  WriteFileAtomic(dir / "fit_ref.json", Dump(summary));

  out << "fit " << order << "-gram on " << train.size() << " lines, |V| = "
      << vocab.size() << "\n";
  if (ppl) {
    out << "held-out perplexity: " << FormatDouble(*ppl) << " on "
        << heldout.size() << " lines\n";
  } else {
    out << "held-out perplexity: n/a (empty held-out split)\n";
  }
  out << "wrote " << (dir / "ref_policy.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train-rm

int CmdTrainRm(const json& cfg, std::ostream& out) {
  const TokenizeMode mode = Mode(cfg);
  const fs::path prefs_path = RequirePath(cfg, "paths.preferences", "train-rm");
  Objective objective;
  TrainConfig tc;
  try {
    objective = ParseObjective(Get<std::string>(cfg, "train.objective"));
    tc.prefix_mode = ParsePrefixMode(Get<std::string>(cfg, "train.prefix_mode"));
    tc.padding = ParsePaddingMode(Get<std::string>(cfg, "train.padding"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  tc.learning_rate = Get<double>(cfg, "train.learning_rate");
  tc.epochs = Get<std::size_t>(cfg, "train.epochs");
  tc.l2 = Get<double>(cfg, "train.l2");
  tc.full_batch = Get<bool>(cfg, "train.full_batch");
  tc.seed = DeriveSeed(Seed(cfg), kTrainOrder);

  Vocabulary vocab = ResolveVocabulary(cfg, "train-rm");
  PreferenceDataset data = LoadPreferences(prefs_path, vocab, mode);
  LinearRewardModel init = [&] {
    if (auto path = OptionalPath(cfg, "paths.init_model")) {
      return LoadModelFor(*path, vocab, "init model");
    }
    return LinearRewardModel::Zero(vocab, TrainedOn::kFullSequence);
  }();

  const TrainResult result = [&] {
    try {
      return Train(init, data, tc, objective);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();

  const std::string name(ObjectiveName(objective));
  const fs::path dir = OutDir(cfg);
  const fs::path model_path = dir / ("rm_" + name + ".json");
  WriteFileAtomic(model_path, result.model.ToJson().dump() + "\n");
  std::string csv = "epoch,mean_loss\n0," + FormatDouble(result.initial_loss) + "\n";
  out << "epoch 0 mean loss " << FormatDouble(result.initial_loss) << "\n";
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    csv += std::to_string(e + 1) + "," + FormatDouble(result.epoch_losses[e]) + "\n";
    out << "epoch " << e + 1 << " mean loss "
        << FormatDouble(result.epoch_losses[e]) << "\n";
  }
  WriteFileAtomic(dir / ("train_" + name + "_loss.csv"), csv);
  out << "trained_on=" << TrainedOnName(result.model.trained_on()) << " on "
      << data.pairs.size() << " pairs; wrote " << model_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// generate

int CmdGenerate(const json& cfg, std::ostream& out) {
  const TokenizeMode mode = Mode(cfg);
  const Method method = MethodFromConfig(cfg);
  const std::string method_name(MethodName(method));
  auto policy =
      LoadPolicy(RequirePath(cfg, "paths.ref_policy", "generate"));
  const Vocabulary& vocab = policy->vocab();
  const auto guidance = GuidanceModel(cfg, method, vocab, "generate");
  const auto prompts =
      LoadTextLines(RequirePath(cfg, "paths.prompts", "generate"), vocab, mode);
  if (prompts.empty()) throw ConfigError("prompt file has no prompts");
  const std::size_t samples = Get<std::size_t>(cfg, "decode.samples_per_prompt");
  const std::size_t best_n = Get<std::size_t>(cfg, "decode.best_of_n");
  if (samples < 1) throw ConfigError("decode.samples_per_prompt must be >= 1");
  if (method == Method::kBestOfN && best_n < 1) {
    throw ConfigError("decode.best_of_n must be >= 1");
  }
  const DecodeConfig base = ConfigureMethod(method, DecodeFromConfig(cfg));
  const RewardFunction* reward = guidance ? &*guidance : nullptr;

  const fs::path trace_dir = OutDir(cfg) / "traces" / method_name;
  std::error_code ec;
  if (fs::exists(trace_dir)) {
    for (const auto& entry : fs::directory_iterator(trace_dir)) {
      if (entry.path().extension() == ".json") fs::remove(entry.path(), ec);
    }
  }
  fs::create_directories(trace_dir);

  const std::uint64_t master = DeriveSeed(Seed(cfg), kGeneration);
  for (std::size_t p = 0; p < prompts.size(); ++p) {
    ordered_json doc;
    doc["method"] = method_name;
    doc["prompt_index"] = p;
    doc["prompt_text"] = Detokenize(prompts[p], vocab, mode);
    doc["guidance_fingerprint"] =
        guidance ? ordered_json(ModelFingerprint(*guidance)) : ordered_json();
    ordered_json list = ordered_json::array();
    std::string first_text;
    for (std::size_t s = 0; s < samples; ++s) {
      DecodeConfig dc = base;
      dc.seed = DeriveSeed(DeriveSeed(master, p), s);
      GenerationResult g =
          method == Method::kBestOfN
              ? BestOfN(*policy, *reward, prompts[p], best_n, dc)
              : Generate(*policy, reward, prompts[p], dc, method_name);
      ordered_json trace = GenerationToJson(g);
      trace["response_text"] = Detokenize(g.response, vocab, mode);
      if (s == 0) first_text = trace["response_text"].get<std::string>();
      list.push_back(std::move(trace));
    }
    doc["samples"] = std::move(list);
    char name[32];
    std::snprintf(name, sizeof(name), "prompt_%05zu.json", p);
    WriteFileAtomic(trace_dir / name, Dump(doc));
    out << method_name << " prompt " << p << ": \""
        << doc["prompt_text"].get<std::string>() << "\" -> \"" << first_text
        << "\"\n";
  }
  out << "wrote " << prompts.size() << " traces to " << trace_dir.string()
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

namespace {

struct MethodTraces {
  std::string method;
  std::vector<std::string> guidance;  // fingerprint per prompt ("" if none)
  std::vector<std::vector<GenerationResult>> per_prompt;
};

MethodTraces LoadTraceDir(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ConfigError(dir.string() + ": not a trace directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError(dir.string() + ": no trace files");
  MethodTraces t;
  for (const auto& f : files) {
    std::ifstream in(f);
    json doc;
    try {
      doc = json::parse(in);
      const std::string method = doc.at("method").get<std::string>();
      if (t.method.empty()) t.method = method;
      if (method != t.method) {
        throw ParseError(f.string() + ": mixes methods " + t.method + " and " +
                         method);
      }
      const auto& fp = doc.at("guidance_fingerprint");
      t.guidance.push_back(fp.is_null() ? "" : fp.get<std::string>());
      std::vector<GenerationResult> gens;
      for (const auto& s : doc.at("samples")) gens.push_back(GenerationFromJson(s));
      if (gens.empty()) throw ParseError(f.string() + ": no samples");
      t.per_prompt.push_back(std::move(gens));
    } catch (const json::exception& e) {
      throw ParseError(f.string() + ": " + e.what());
    }
  }
  return t;
}

}  // namespace

int CmdEvaluate(const json& cfg, const std::vector<fs::path>& trace_dirs,
                std::ostream& out) {
  if (trace_dirs.empty()) throw ConfigError("evaluate needs --traces DIR...");
  std::vector<MethodTraces> methods;
  for (const auto& d : trace_dirs) methods.push_back(LoadTraceDir(d));
  LinearRewardModel eval_model =
      LinearRewardModel::Load(RequirePath(cfg, "paths.eval_model", "evaluate"));
  const std::string eval_fp = ModelFingerprint(eval_model);
  for (const auto& m : methods) {
    for (const auto& gens : m.per_prompt) {
      for (const auto& g : gens) {
        try {
          CheckSequence(g.prompt, eval_model.vocab());
          CheckSequence(g.response, eval_model.vocab());
        } catch (const std::invalid_argument& e) {
          throw ConfigError(m.method + " traces do not match the evaluation "
                            "model's vocabulary: " + e.what());
        }
      }
    }
  }

  // Prompt sets must agree exactly across methods.
  const MethodTraces& first = methods.front();
  for (const auto& m : methods) {
    bool same = m.per_prompt.size() == first.per_prompt.size();
    for (std::size_t p = 0; same && p < m.per_prompt.size(); ++p) {
      same = m.per_prompt[p][0].prompt == first.per_prompt[p][0].prompt;
    }
    if (!same) {
      throw ConfigError("mismatched prompt sets: " + m.method + " (" +
                        std::to_string(m.per_prompt.size()) + " prompts) vs " +
                        first.method + " (" +
                        std::to_string(first.per_prompt.size()) + " prompts)");
    }
  }
  std::string baseline = Get<std::string>(cfg, "eval.baseline");
  if (baseline.empty()) baseline = first.method;
  const MethodTraces* base = nullptr;
  for (const auto& m : methods) {
    if (m.method == baseline) base = &m;
  }
  if (base == nullptr) {
    throw ConfigError("eval.baseline " + baseline + " is not among the traces");
  }

  const RewardJudge judge(eval_model, Get<double>(cfg, "eval.tie_band"));
  const std::uint64_t coin_seed = DeriveSeed(Seed(cfg), kWinTieCoins);
  std::vector<EvalReport> reports;
  for (const auto& m : methods) {
    std::vector<GenerationResult> all;
    std::vector<GenerationResult> firsts;
    bool multi = true;
    for (const auto& gens : m.per_prompt) {
      all.insert(all.end(), gens.begin(), gens.end());
      firsts.push_back(gens.front());
      multi = multi && gens.size() >= 2;
    }
    EvalReport r = AvgReward(all, eval_model);
    r.method = m.method;
    r.same_model_warning =
        std::find(m.guidance.begin(), m.guidance.end(), eval_fp) !=
        m.guidance.end();
    if (multi) {
      double total = 0.0;
      for (const auto& gens : m.per_prompt) {
        std::vector<Sequence> responses;
        for (const auto& g : gens) responses.push_back(g.response);
        total += Diversity(responses);
      }
      r.diversity = total / static_cast<double>(m.per_prompt.size());
    }
    if (&m != base) {
      std::vector<GenerationResult> base_firsts;
      for (const auto& gens : base->per_prompt) base_firsts.push_back(gens.front());
      r.win_tie = WinTieRate(firsts, base_firsts, judge, coin_seed);
    }
    reports.push_back(std::move(r));
  }

  ordered_json doc;
  doc["eval_model_fingerprint"] = eval_fp;
  doc["baseline"] = baseline;
  doc["prompts"] = first.per_prompt.size();
  ordered_json list = ordered_json::array();
  for (const auto& r : reports) list.push_back(EvalReportToJson(r));
  doc["reports"] = std::move(list);
  const fs::path dir = OutDir(cfg);
  WriteFileAtomic(dir / "eval_report.json", Dump(doc));
  WriteFileAtomic(dir / "eval_report.csv", EvalReportsCsv(reports));

  for (const auto& r : reports) {
    out << r.method << ": mean reward " << FormatDouble(r.mean_reward)
        << " +- " << FormatDouble(r.std_error) << " (n=" << r.n << ")";
    if (r.diversity) out << ", diversity " << FormatDouble(*r.diversity);
    if (r.win_tie) {
      out << ", vs " << baseline << " win " << FormatDouble(r.win_tie->win_pct)
          << "% tie " << FormatDouble(r.win_tie->tie_pct) << "%";
    }
    out << "\n";
    if (r.same_model_warning) {
      out << "warning: " << r.method
          << " was guided by the evaluation model itself\n";
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// oracle

int CmdOracle(const json& cfg, std::ostream& out) {
  const std::string check = Get<std::string>(cfg, "oracle.check");
  const std::string expect = Get<std::string>(cfg, "oracle.expect");
  if (check != "ratio" && check != "pathology" && check != "single-rlhf") {
    throw ConfigError("unknown oracle check '" + check +
                      "' (expected ratio, pathology or single-rlhf)");
  }
  if (expect != "any" && expect != "equal" && expect != "differ") {
    throw ConfigError("oracle.expect must be any, equal or differ");
  }
  const std::size_t length = Get<std::size_t>(cfg, "oracle.length");
  const double beta = Get<double>(cfg, "oracle.beta");
  const std::uint64_t budget = Get<std::uint64_t>(cfg, "oracle.budget");
  ToyInstance toy = [&] {
    try {
      return MakeToyInstance(Get<std::size_t>(cfg, "oracle.vocab_size"),
                             Get<std::size_t>(cfg, "oracle.order"),
                             Get<std::uint64_t>(cfg, "oracle.toy_seed"),
                             Get<double>(cfg, "oracle.weight_scale"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  Sequence prompt;
  try {
    prompt = Tokenize(Get<std::string>(cfg, "oracle.prompt"), toy.vocab);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("oracle.prompt: ") + e.what());
  }
  if (length < 1) throw ConfigError("oracle.length must be >= 1");

  OracleReport report;
  bool holds = false;
  std::string relation;
  if (check == "ratio") {
    report = CheckRatioTheoremDetailed(toy.policy, toy.reward, beta, prompt,
                                       length, budget);
    holds = *report.max_ratio_deviation <= 1e-9;
    relation = "max ratio deviation " +
               FormatDouble(*report.max_ratio_deviation) + " <= 1e-9";
  } else if (check == "pathology") {
    const FullRewards full = ScoreAllResponses(toy.reward, prompt, length, budget);
    const auto responses = EnumerateSequences(toy.vocab, length, budget);
    PreferenceDataset data;
    const std::size_t pairs = Get<std::size_t>(cfg, "oracle.pairs");
    if (responses.size() >= 2) {
      Rng rng(DeriveSeed(Seed(cfg), kOraclePairs));
      for (std::size_t i = 0; i < pairs; ++i) {
        const std::size_t a = rng.Below(responses.size());
        std::size_t b = rng.Below(responses.size() - 1);
        if (b >= a) ++b;
        data.pairs.push_back({prompt, responses[a], responses[b]});
      }
    }
    PathologyOptions opts;
    opts.spread_seed = Get<std::uint64_t>(cfg, "oracle.spread_seed");
    opts.spread_scale = Get<double>(cfg, "oracle.spread_scale");
    opts.budget = budget;
    opts.dataset = data.pairs.empty() ? nullptr : &data;
    report = PathologyDemo(toy.policy, full, beta, prompt, length, opts);
    const double bt_diff = report.bt_loss_max_diff.value_or(0.0);
    holds = *report.full_reward_max_diff <= 1e-12 && bt_diff <= 1e-12 &&
            *report.lastonly_nonfinal_max_tv <= 1e-12 &&
            *report.pathology_tv > 1e-3;
    relation = "full-reward agreement " +
               FormatDouble(*report.full_reward_max_diff) +
               " <= 1e-12, bt loss agreement " + FormatDouble(bt_diff) +
               " <= 1e-12, lastonly non-final tv " +
               FormatDouble(*report.lastonly_nonfinal_max_tv) +
               " <= 1e-12 and pathology tv " +
               FormatDouble(*report.pathology_tv) + " > 1e-3";
  } else {
    report = CompareSingleRlhf(toy.policy, toy.reward, beta, prompt, length,
                               budget);
    const double kl = *report.max_kl;
    holds = expect == "any" || (expect == "equal" && kl <= 1e-9) ||
            (expect == "differ" && kl > 1e-3);
    relation = "max KL(guided || single) " + FormatDouble(kl) +
               (expect == "equal"    ? " <= 1e-9"
                : expect == "differ" ? " > 1e-3"
                                     : " (reported)");
  }

  ordered_json doc;
  doc["instance"] = {{"vocab_size", toy.vocab.size()},
                     {"order", toy.policy.order()},
                     {"toy_seed", Get<std::uint64_t>(cfg, "oracle.toy_seed")},
                     {"beta", beta},
                     {"length", length},
                     {"prompt", SequenceToJson(prompt)}};
  doc["holds"] = holds;
  doc["relation"] = relation;
  doc["report"] = OracleReportToJson(report);
  const fs::path path = OutDir(cfg) / ("oracle_" + check + ".json");
  WriteFileAtomic(path, Dump(doc));
  out << check << ": " << relation << " -> " << (holds ? "HOLDS" : "VIOLATED")
      << "\nwrote " << path.string() << "\n";
  return holds ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------------------
// cost

int CmdCost(const json& cfg, std::ostream& out) {
  const std::size_t k = Get<std::size_t>(cfg, "cost.k");
  auto params = [&](const std::string& who) {
    return CostModelParams{Get<std::size_t>(cfg, "cost." + who + ".n_layers"),
                           Get<std::size_t>(cfg, "cost." + who + ".d_model"),
                           Get<std::size_t>(cfg, "cost." + who + ".n_ctx"), k};
  };
  CostOptions opts;
  opts.best_of_n = Get<std::size_t>(cfg, "cost.best_of_n");
  opts.include_context = Get<bool>(cfg, "cost.include_context");
  CostReport r;
  try {
    r = CostModel(params("lm"), params("rm"), opts);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const fs::path path = OutDir(cfg) / "cost_report.json";
  WriteFileAtomic(path, Dump(CostReportToJson(r)));
  out << "N_lm = " << FormatDouble(r.n_lm) << ", N_rm = " << FormatDouble(r.n_rm)
      << "\nper-token FLOPs = " << FormatDouble(r.per_token_flops)
      << "\nguided overhead (k = " << r.k
      << ") = " << FormatDouble(RoundToSignificant(r.guided_overhead, 2))
      << "x (" << FormatDouble(r.guided_overhead) << ")"
      << "\nbest-of-" << r.best_of_n << " overhead = "
      << FormatDouble(r.best_of_n_overhead) << "x\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

int CmdSynth(const json& cfg, std::ostream& out) {
  SyntheticTaskConfig tc;
  tc.alphabet = Get<std::string>(cfg, "synth.alphabet");
  tc.corpus_lines = Get<std::size_t>(cfg, "synth.corpus_lines");
  tc.corpus_line_len = Get<std::size_t>(cfg, "synth.corpus_line_len");
  tc.ngram_order = Get<std::size_t>(cfg, "ref.order");
  tc.ngram_alpha = Get<double>(cfg, "ref.alpha");
  tc.transition_sharpness = Get<double>(cfg, "synth.transition_sharpness");
  tc.unigram_scale = Get<double>(cfg, "synth.unigram_scale");
  tc.bigram_scale = Get<double>(cfg, "synth.bigram_scale");
  tc.cross_scale = Get<double>(cfg, "synth.cross_scale");
  tc.seed = DeriveSeed(Seed(cfg), kSynthTask);
  SyntheticTask task = [&] {
    try {
      return MakeSyntheticTask(tc);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  const Vocabulary& vocab = task.vocab;
  const std::size_t prompt_len = Get<std::size_t>(cfg, "synth.prompt_len");
  if (prompt_len < 1) throw ConfigError("synth.prompt_len must be >= 1");
  const auto train_prompts =
      RandomPrompts(vocab, Get<std::size_t>(cfg, "synth.train_prompts"),
                    prompt_len, DeriveSeed(Seed(cfg), kTrainPrompts));
  const auto eval_prompts =
      RandomPrompts(vocab, Get<std::size_t>(cfg, "synth.eval_prompts"),
                    prompt_len, DeriveSeed(Seed(cfg), kEvalPrompts));
  SynthOptions so;
  so.max_len = Get<std::size_t>(cfg, "synth.max_len");
  const PreferenceDataset prefs = SynthPreferences(
      task.true_reward, task.policy, train_prompts,
      Get<std::size_t>(cfg, "synth.pairs_per_prompt"),
      DeriveSeed(Seed(cfg), kPreferences), so);

  const fs::path dir = OutDir(cfg);
  auto lines = [&](const std::vector<Sequence>& seqs, bool strip_eos) {
    std::string text;
    for (const auto& s : seqs) {
      Sequence body = s;
      if (strip_eos && !body.empty() && body.back() == vocab.eos_id()) {
        body = body.Prefix(body.size() - 1);
      }
      text += Detokenize(body, vocab) + "\n";
    }
    return text;
  };
  WriteFileAtomic(dir / "vocab.txt", VocabularyText(vocab));
  WriteFileAtomic(dir / "corpus.txt", lines(task.corpus, true));
  WriteFileAtomic(dir / "train_prompts.txt", lines(train_prompts, false));
  WriteFileAtomic(dir / "prompts.txt", lines(eval_prompts, false));
  WriteFileAtomic(dir / "true_reward.json", task.true_reward.ToJson().dump() + "\n");
  const fs::path prefs_path = dir / "preferences.jsonl";
  SavePreferences(fs::path(prefs_path.string() + ".tmp"), prefs, vocab);
  fs::rename(prefs_path.string() + ".tmp", prefs_path);
  out << "synthetic task: |V| = " << vocab.size() << ", " << task.corpus.size()
      << " corpus lines, " << prefs.pairs.size() << " preference pairs, "
      << eval_prompts.size() << " evaluation prompts\nwrote " << dir.string()
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

int CmdSweep(const json& cfg, std::ostream& out) {
  const TokenizeMode mode = Mode(cfg);
  const Method method = MethodFromConfig(cfg);
  if (method == Method::kBestOfN || method == Method::kTopK) {
    throw ConfigError("sweep needs a guided method (pargs, pargs-g, args, args-s)");
  }
  auto policy = LoadPolicy(RequirePath(cfg, "paths.ref_policy", "sweep"));
  const Vocabulary& vocab = policy->vocab();
  const auto guidance = GuidanceModel(cfg, method, vocab, "sweep");
  const LinearRewardModel evaluator = LoadModelFor(
      RequirePath(cfg, "paths.eval_model", "sweep"), vocab, "eval model");
  SweepSetup setup;
  setup.policy = policy.get();
  setup.guidance = &*guidance;
  setup.evaluator = &evaluator;
  setup.prompts =
      LoadTextLines(RequirePath(cfg, "paths.prompts", "sweep"), vocab, mode);
  if (setup.prompts.empty()) throw ConfigError("prompt file has no prompts");
  setup.decode = ConfigureMethod(method, DecodeFromConfig(cfg));
  setup.master_seed = DeriveSeed(Seed(cfg), kSweep);
  const auto betas = Get<std::vector<double>>(cfg, "sweep.betas");
  if (betas.empty()) throw ConfigError("sweep.betas must not be empty");
  const auto rows = BetaSweep(setup, betas);
  const fs::path path = OutDir(cfg) / "sweep.csv";
  WriteFileAtomic(path, SweepCsv(rows));
  for (const auto& r : rows) {
    out << "beta " << FormatDouble(r.beta) << ": mean reward "
        << FormatDouble(r.mean_reward) << " (sd " << FormatDouble(r.stddev)
        << ", se " << FormatDouble(r.std_error) << ", n " << r.n << ")\n";
  }
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

}  // namespace pargs::cli
