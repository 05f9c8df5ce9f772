// Copyright 2026 The strsbp Authors
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

#ifndef STRSBP_TOOLS_CLI_COMMANDS_H_
#define STRSBP_TOOLS_CLI_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

namespace strsbp::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Parses `args` (without the program name) and runs one of the train, eval,
// gradcheck, encode or validate commands. Diagnostics are written to `err`
// as a single "error: ..." line.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace strsbp::cli

#endif  // STRSBP_TOOLS_CLI_COMMANDS_H_
