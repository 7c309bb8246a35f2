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


#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
    using namespace hypctrl::cli;
    CLI::App app{"hypctrl: tracking control of hyperbolic PDE-ODE systems"};
    app.require_subcommand(1);
    Options opt;

    struct Entry {
        const char* name;
        const char* help;
        Artifacts (*fn)(const Options&, std::ostream&);
    };
    const Entry entries[] = {
        {"simulate", "closed-loop run: timeseries.csv, profiles.csv, metrics.json", &simulate},
        {"kernels", "kernel tables K, K_inv, N, P and kernel_report.json", &kernels},
        {"plan", "reference trajectory and feedforward: reference.csv", &plan},
        {"compare", "flatness vs backstepping inputs: compare.csv, compare.json", &compare},
    };
    for (const Entry& e : entries) {
        CLI::App* sub = app.add_subcommand(e.name, e.help);
        sub->add_option("--config", opt.config, "scenario JSON file")->required();
        sub->add_option("--out", opt.out, "output directory (overrides output.directory)");
        sub->add_flag("--dry-run", opt.dry_run, "validate and print tau1, tau2 and the F spectrum");
        sub->add_option("--refine", opt.refine, "multiply M and divide dt by this factor")
            ->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }
    for (const Entry& e : entries) {
        if (app.got_subcommand(e.name)) {
            return execute(e.fn, opt, std::cout, std::cerr);
        }
    }
    return kConfigError;
}
