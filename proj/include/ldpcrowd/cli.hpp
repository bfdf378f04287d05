// Copyright 2026 The ldpcrowd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ldpcrowd::cli {

enum ExitCode : int { ok = 0, usage = 1, io = 2, data = 3 };

/// Environment variable supplying the seed when neither --seed nor the
/// config sets one.
inline constexpr const char* seed_env = "LDPCROWD_SEED";

/// Runs one invocation; `args` excludes the program name. Machine-readable
/// output goes to `out`, notes and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ldpcrowd::cli
