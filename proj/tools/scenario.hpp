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

#ifndef HYPCTRL_TOOLS_SCENARIO_HPP
#define HYPCTRL_TOOLS_SCENARIO_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hypctrl/simulator.hpp"

namespace hypctrl::cli {

/// Bad scenario file. `where` is "line L, column C" or a JSON pointer plus the
/// line the key first appears on, when it can be found.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& where, const std::string& what)
        : std::runtime_error(where.empty() ? what : where + ": " + what), where_(where) {}
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

/// A coefficient or initial profile over z in [0, 1].
struct ProfileSpec {
    enum class Kind { Constant, Table, SinCubed };
    Kind kind = Kind::Constant;
    double value = 0.0;                            // constant or amplitude
    std::vector<std::pair<double, double>> table;  // (z, value), increasing z

    double operator()(double z) const;
    nlohmann::json to_json() const;
};

/// A time given as a number or a sum of terms over {tau1, tau2, T_end},
/// e.g. "tau1" or "T_end - tau2".
struct TimeExpr {
    std::string text;
    double resolve(double tau1, double tau2, double T_end) const;
};

struct Scenario {
    std::string name;

    std::string system_type;  // "heavy_rope" or "custom"
    HeavyRopeParameters rope;
    ProfileSpec lambda1, lambda2;
    ProfileSpec A11, A12, A21, A22;
    Eigen::MatrixXd F;
    Eigen::VectorXd b, c;
    double q0 = 0.0, q1 = 0.0;

    int M = 400;
    double kernel_tolerance = 1e-10;
    int kernel_max_iterations = 200;

    double dt = 2.5e-3;
    double T_end = 5.0;
    Eigen::VectorXd xi0;
    ProfileSpec x1_0, x2_0;

    ControllerType controller = ControllerType::Flatness;
    double gamma = 0.0;
    Eigen::VectorXd kappa;
    std::optional<Eigen::VectorXd> k;
    std::optional<double> q1cl;

    double y0 = 0.0;
    double y_star = 1.0;
    TimeExpr t0{"tau1"};
    TimeExpr t_star{"T_end - tau2"};
    int component = 0;  // -1: flat output

    double t_query = 2.5;
    double quiescence_margin = 0.2;
    bool shadow_backstepping = false;
    bool record_target = false;

    std::string output_directory = "out";
    std::vector<double> snapshot_times;

    /// Scales the grid by `factor` and divides dt by it.
    void refine(int factor);

    HyperbolicSystem build_system() const;
    /// Run configuration on the grid of `sys`; resolves reference times.
    SimConfig build_config(const HyperbolicSystem& sys, const CharacteristicMap& cmap) const;

    /// Normalized scenario with all defaults filled in; loading it reproduces this run.
    nlohmann::json to_json() const;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

} // namespace hypctrl::cli

#endif // HYPCTRL_TOOLS_SCENARIO_HPP
