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

#ifndef HYPCTRL_SIMULATOR_HPP
#define HYPCTRL_SIMULATOR_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypctrl/backstepping.hpp"
#include "hypctrl/flatness.hpp"
#include "hypctrl/model.hpp"
#include "hypctrl/transforms.hpp"

namespace hypctrl {

enum class ControllerType { None, Feedforward, Flatness, Backstepping };

std::string to_string(ControllerType type);
ControllerType parse_controller(const std::string& name);

/// Advances the plant by one step: both transport components by characteristic
/// foot tracing with linear interpolation, sources and the ODE by explicit Euler.
class PlantStepper {
public:
    PlantStepper(const HyperbolicSystem& sys, const CharacteristicMap& cmap, double dt);

    /// u is held constant over the step.
    PlantState step(const PlantState& state, double u) const;
    double dt() const { return dt_; }

private:
    struct Foot {
        bool interior = true;
        int index = 0;        // left interpolation node
        double weight = 0.0;  // weight of index + 1
        double theta = 0.0;   // boundary crossing, as a fraction of the step
        double source_time = 0.0;
        Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    };

    HyperbolicSystem sys_;
    double dt_;
    std::vector<Foot> foot1_;
    std::vector<Foot> foot2_;
};

PlantState step(const PlantState& state, double u, const HyperbolicSystem& sys, const CharacteristicMap& cmap,
                double dt);

/// Plant sampled on node-locked characteristic lines: component i lives at the
/// travel times 0, dt, 2 dt, ... plus the far boundary, so every foot point of
/// the transport lands on a node. Requires dt < min(tau1, tau2).
class CharacteristicPlant {
public:
    CharacteristicPlant(const HyperbolicSystem& sys, const CharacteristicMap& cmap, double dt,
                        const PlantState& initial);

    /// Sets x1(1) = q1 x2(1) + u at the current time.
    void impose_input(double u);
    /// Advances by dt with u held over the step.
    void advance(double u);

    /// State resampled on the system grid.
    PlantState state() const;
    double time() const { return t_; }
    double x1_at_0() const { return line1_.value.front(); }
    double x2_at_1() const { return line2_.value.back(); }
    int nodes(int component) const;

private:
    struct Line {
        std::vector<double> s;  // travel time of each node
        std::vector<double> z;
        Profile value;
        std::vector<Eigen::Matrix2d> A;
        // where each node sits on the other line
        std::vector<int> other_index;
        std::vector<double> other_weight;
        bool partial = false;  // last cell shorter than dt
    };

    static Line make_line(const CharacteristicMap& cmap, int component, double dt);
    static void locate(const Line& line, double s, int& index, double& weight);
    static double lerp(const Profile& v, int index, double weight);

    HyperbolicSystem sys_;
    double dt_;
    double t_ = 0.0;
    Eigen::VectorXd xi_;
    Line line1_;
    Line line2_;
    // x1 node fed from inside the short top cell, completed once the input is known
    bool pending_ = false;
    double pending_old_ = 0.0;
    double pending_source_ = 0.0;
    // system grid readout
    std::vector<int> out1_index_, out2_index_;
    std::vector<double> out1_weight_, out2_weight_;
};

struct ReferenceSpec {
    double y0 = 0.0;
    double y_star = 0.0;
    double t0 = 0.0;
    double t_star = 1.0;
    /// ODE component the endpoint values refer to; -1 means the flat output itself.
    int component = 0;
};

struct SimConfig {
    double dt = 2.5e-3;
    double T_end = 5.0;
    ControllerType controller = ControllerType::Flatness;
    double gamma = 0.0;
    Eigen::VectorXd kappa;
    /// Backstepping parameters; derived from (gamma, kappa) when absent.
    std::optional<Eigen::VectorXd> k;
    std::optional<double> q1cl;
    ReferenceSpec reference;
    Eigen::VectorXd xi0;
    Profile x1_0;
    Profile x2_0;
    std::vector<double> snapshot_times;
    /// Also evaluate the backstepping law on the simulated trajectory.
    bool shadow_backstepping = false;
    /// Record the backstepping target state every step.
    bool record_target = false;
    double t_query = 2.5;
    double quiescence_margin = 0.2;
    KernelOptions kernel_options;
};

/// Everything precomputed for one system and parameter set; immutable and shareable.
struct ControllerDesign {
    TransformedSystem ts;
    FlatStructure flat;
    TauGrid tau_grid;
    HccfCoefficients a;
    DesiredCoefficients desired;
    ReferencePlan plan;
    double output_scale = 1.0;
    HccfTransformer hccf;
    StateParametrizer parametrizer;
    BacksteppingGains bs;
    std::vector<std::string> warnings;
};

ControllerDesign design_controllers(const HyperbolicSystem& sys, const SimConfig& config);

/// Reference trajectory quantities at one instant.
struct ReferencePoint {
    Eigen::VectorXd xi;
    PdeProfiles xbar;
    PdeProfiles x;
    double ubar = 0.0;
    double u = 0.0;
};

ReferencePoint reference_at(const ControllerDesign& design, double t);

struct Snapshot {
    double t = 0.0;
    PdeProfiles x;
    PdeProfiles x_ref;
};

struct Metrics {
    double u_rms = 0.0;
    double max_tracking_error = 0.0;  // max |xi_c - xi_c,r| for t > t_query
    double t_query = 0.0;
    double eps_residual = 0.0;        // normalized residual of the target error law
    double max_shadow_deviation = 0.0;
    std::optional<TargetDiagnostics> target;
};

struct SimResult {
    double tau1 = 0.0;
    double tau2 = 0.0;
    std::vector<double> t;
    std::vector<Eigen::VectorXd> xi;
    std::vector<Eigen::VectorXd> xi_ref;
    std::vector<double> u;
    std::vector<double> u_ref;
    std::vector<double> ubar;
    std::vector<double> ubar_ref;
    std::vector<double> u_shadow;
    std::vector<double> x1_at_0;
    std::vector<double> x2_at_1;
    std::vector<Eigen::VectorXd> y;      // y^[n] from the plant state
    std::vector<Eigen::VectorXd> y_ref;  // y_r^[n]
    std::vector<Snapshot> snapshots;
    TargetTrajectory target;
    Metrics metrics;
    std::vector<std::string> warnings;
};

SimResult run(const HyperbolicSystem& sys, const SimConfig& config);
SimResult run(const ControllerDesign& design, const SimConfig& config);

Metrics compute_metrics(const SimResult& result, const SimConfig& config);

void write_timeseries_csv(std::ostream& os, const SimResult& result);
void write_profiles_csv(std::ostream& os, const SimResult& result, const Grid& grid);
/// CSV with columns t, y_r, y_r^(1) .. y_r^(n), ubar_r, u_r.
void write_reference_csv(std::ostream& os, const ControllerDesign& design, double t_begin, double t_end,
                         double dt);

} // namespace hypctrl

#endif // HYPCTRL_SIMULATOR_HPP
