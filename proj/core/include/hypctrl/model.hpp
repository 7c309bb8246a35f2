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

#ifndef HYPCTRL_MODEL_HPP
#define HYPCTRL_MODEL_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypctrl/errors.hpp"

namespace hypctrl {

using Profile = std::vector<double>;

/// Uniform grid on the normalized domain [0, 1] with M intervals.
class Grid {
public:
    explicit Grid(int intervals);

    int intervals() const { return intervals_; }
    int size() const { return intervals_ + 1; }
    double step() const { return 1.0 / intervals_; }
    double node(int k) const { return static_cast<double>(k) / intervals_; }
    std::vector<double> nodes() const;

    /// Samples a closure once onto the grid nodes.
    Profile sample(const std::function<double(double)>& f) const;

    bool operator==(const Grid& other) const = default;

private:
    int intervals_;
};

/// Linear interpolation of a table on the uniform grid over [0, 1]; clamps outside.
double interpolate(std::span<const double> table, double z);

/// Linear interpolation on a uniform grid over [lo, lo + step * (size - 1)].
double interpolate_uniform(std::span<const double> table, double lo, double step, double x);

/// Plant description for the coupled transport/ODE system.
///
///   xi'      = F xi + b x1(0, t)
///   x2(0, t) = q0 x1(0, t) + c^T xi
///   x_t      = Lambda(z) x_z + A(z) x,    Lambda = diag(lambda1, -lambda2)
///   x1(1, t) = q1 x2(1, t) + u
struct HyperbolicSystem {
    Grid grid{1};
    int n = 0;
    Profile lambda1;
    Profile lambda2;
    std::vector<Eigen::Matrix2d> A;
    Eigen::MatrixXd F;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    double q0 = 0.0;
    double q1 = 0.0;
};

struct ValidationReport {
    int controllability_rank = 0;
    bool controllable = false;   // (F, b) has full controllability rank
    bool q0_nonzero = false;
    bool speeds_positive = false;
    double min_speed = 0.0;

    bool ok() const { return controllable && q0_nonzero && speeds_positive; }
    std::string summary() const;
};

/// Kalman controllability matrix [b, F b, ..., F^{n-1} b].
Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& F, const Eigen::VectorXd& b);

/// Checks table shapes and finiteness (throws InvalidInput) and reports the
/// controllability and boundary-coupling assumptions without throwing.
ValidationReport validate(const HyperbolicSystem& sys);

/// Travel-time maps phi_i(z) = int_0^z 1/lambda_i and their inverses.
class CharacteristicMap {
public:
    CharacteristicMap() = default;
    CharacteristicMap(Grid grid, Profile phi1, Profile phi2);

    const Grid& grid() const { return grid_; }
    double tau1() const { return phi1_.back(); }
    double tau2() const { return phi2_.back(); }
    double tau(int i) const { return i == 1 ? tau1() : tau2(); }

    const Profile& phi_table(int i) const { return i == 1 ? phi1_ : phi2_; }

    /// phi_i(z) by linear interpolation of the node table.
    double phi(int i, double z) const;
    /// psi_i(tau), the inverse of phi_i, by monotone inverse interpolation.
    double psi(int i, double tau) const;

private:
    Grid grid_{1};
    Profile phi1_;
    Profile phi2_;
};

CharacteristicMap characteristic_map(const HyperbolicSystem& sys);

/// Cumulative trapezoid of a node table: out[k] = int_0^{z_k} f.
Profile cumulative_trapezoid(std::span<const double> f, double step);

struct HeavyRopeParameters {
    double rho = 0.3;   // line density
    double ell = 3.0;   // rope length
    double g = 9.81;
    double m = 0.25;    // load mass
};

/// Rope speed lambda(z) = sqrt(g / rho * (rho * ell * z + m)) and its z-derivative.
double heavy_rope_speed(const HeavyRopeParameters& p, double z);
double heavy_rope_speed_derivative(const HeavyRopeParameters& p, double z);

/// Linear heavy rope with a point load, states
/// x = 1/2 [[lambda, 1], [-lambda, 1]] [w_s, w_t] and xi = [w(0), w_t(0)].
HyperbolicSystem heavy_rope(const HeavyRopeParameters& p, const Grid& grid);

struct PlantState {
    double t = 0.0;
    Eigen::VectorXd xi;
    Profile x1;
    Profile x2;
};

} // namespace hypctrl

#endif // HYPCTRL_MODEL_HPP
