/*
 Copyright 2026 The hypctrl Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef HYPCTRL_TOOLS_COMMANDS_HPP
#define HYPCTRL_TOOLS_COMMANDS_HPP

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace hypctrl::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericError = 3 };

struct Options {
    std::string config;
    std::string out;  // overrides output.directory when set
    bool dry_run = false;
    int refine = 1;
};

/// File name and content, written only after the whole command succeeded.
using Artifacts = std::vector<std::pair<std::string, std::string>>;

Artifacts simulate(const Options& opt, std::ostream& log);
Artifacts kernels(const Options& opt, std::ostream& log);
Artifacts plan(const Options& opt, std::ostream& log);
Artifacts compare(const Options& opt, std::ostream& log);

/// Runs one command, maps failures to exit codes and writes the artifacts.
int execute(Artifacts (*command)(const Options&, std::ostream&), const Options& opt, std::ostream& log,
            std::ostream& err);

} // namespace hypctrl::cli

#endif // HYPCTRL_TOOLS_COMMANDS_HPP
