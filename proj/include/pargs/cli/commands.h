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


// Subcommands of the pargs tool. Each reads a merged configuration, writes its
// artifacts under out_dir with write-then-rename, prints a short summary and
// returns the process exit status.

#ifndef PARGS_CLI_COMMANDS_H_
#define PARGS_CLI_COMMANDS_H_

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace pargs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

int CmdFitRef(const nlohmann::json& cfg, std::ostream& out);
int CmdTrainRm(const nlohmann::json& cfg, std::ostream& out);
int CmdGenerate(const nlohmann::json& cfg, std::ostream& out);
int CmdEvaluate(const nlohmann::json& cfg,
                const std::vector<std::filesystem::path>& trace_dirs,
                std::ostream& out);
// Exit status 0 iff the checked relation holds, kExitRuntime otherwise.
int CmdOracle(const nlohmann::json& cfg, std::ostream& out);
int CmdCost(const nlohmann::json& cfg, std::ostream& out);
int CmdSynth(const nlohmann::json& cfg, std::ostream& out);
int CmdSweep(const nlohmann::json& cfg, std::ostream& out);

// Writes `contents` to a temporary sibling and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path,
                     const std::string& contents);

// Stable 64-bit FNV-1a digest, hex encoded.
std::string Fingerprint(const std::string& bytes);

// Parses the command line, runs the subcommand and maps errors to exit
// statuses: 0 success, 1 usage or configuration error, 2 runtime or numeric
// error.
int Main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace pargs::cli

#endif  // PARGS_CLI_COMMANDS_H_
