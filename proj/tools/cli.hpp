// Copyright 2026 The mpxlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command implementations behind the mpxlab executable. Kept in a library
// so tests can drive them without spawning processes.

#ifndef MPXLAB_TOOLS_CLI_HPP_
#define MPXLAB_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

#include "mpxlab/scenario.hpp"
#include "mpxlab/semantics.hpp"

namespace mpxlab::cli {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOracleMismatch = 1;
inline constexpr int kExitMalformed = 2;
inline constexpr int kExitDomain = 3;
inline constexpr int kExitUnsupported = 4;
inline constexpr int kExitInternal = 5;

int exit_code_for(ErrorKind kind);

struct Overrides {
  std::string mechanism;
  std::string policy;
  int channels = 0;
  long long seed = -1;
};

int cmd_analyze(const std::string& spec_path, std::ostream& out, std::ostream& err);

int cmd_simulate(const std::vector<std::string>& spec_paths, const Overrides& overrides,
                 const std::string& out_dir, const std::string& format, int jobs,
                 std::ostream& out, std::ostream& err);

int cmd_assign(const std::string& spec_path, const Overrides& overrides, int process,
               bool emit_spec, const std::string& out_dir, std::ostream& out,
               std::ostream& err);

int cmd_oracle_check(std::size_t bound, const Classifier& classifier, std::ostream& out,
                     std::ostream& err);

// Parses argv and dispatches; returns the process exit code.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mpxlab::cli

#endif  // MPXLAB_TOOLS_CLI_HPP_
