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

#ifndef HYPCTRL_BACKSTEPPING_HPP
#define HYPCTRL_BACKSTEPPING_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypctrl/model.hpp"
#include "hypctrl/transforms.hpp"

namespace hypctrl {

/// k with det(sI - F - b k^T) = s^n + sum kappa_i s^i (Ackermann).
Eigen::VectorXd place_gain(const Eigen::MatrixXd& F, const Eigen::VectorXd& b, const Eigen::VectorXd& kappa);

/// N(z), 2 x n per grid node, removing the ODE state from the error PDE.
struct DecouplingMatrix {
    std::vector<Eigen::MatrixXd> N;
};

/// N' = Lambda^{-1} [N (F + b k^T) - C], N(0) = [k^T; c^T + q0 k^T], classical RK4 on the z-grid.
DecouplingMatrix solve_decoupling(const TransformedSystem& ts, const Eigen::VectorXd& k);

struct PKernel {
    TriangularKernel P;
    Profile p1;  // on tau in [0, tau1], M intervals
    Profile p2;  // on tau in [0, tau2], M intervals
};

/// Diagonal kernel P_ii(z, zeta) = p_i(phi_i(z) - phi_i(zeta)) / lambda_i(zeta).
PKernel solve_P_kernel(const DecouplingMatrix& N, const HyperbolicSystem& sys, const CharacteristicMap& cmap);

struct BacksteppingGains {
    Eigen::VectorXd k;
    double q1cl = 0.0;
    double q1bar = 0.0;
    DecouplingMatrix N;
    PKernel P;
    TriangularKernel P_inv;
    Eigen::RowVectorXd r;                    // (e1^T - q1cl e2^T)[N(1) - int P(1,z) N(z) dz]
    std::vector<Eigen::RowVector2d> w;       // (e1^T - q1cl e2^T) P(1, z)
    std::vector<std::string> warnings;
};

BacksteppingGains backstepping_gains(const TransformedSystem& ts, const Eigen::VectorXd& kappa, double q1cl);

struct BacksteppingResiduals {
    double decoupling = 0.0;  // max |N' - Lambda^{-1}[N (F + b k^T) - C]|, central differences
    double decoupling_initial = 0.0;
    double p1 = 0.0;          // discrete Volterra residuals of the two diagonal kernels
    double p2 = 0.0;
};

BacksteppingResiduals backstepping_residuals(const BacksteppingGains& gains, const TransformedSystem& ts);

struct ErrorState {
    Eigen::VectorXd e_xi;
    PdeProfiles eps;
};

double bs_feedback(const BacksteppingGains& gains, const ErrorState& error, double ubar_r);

/// eps~ = eps - N e_xi and eps_bar = eps~ - int P eps~.
PdeProfiles decoupled_error(const BacksteppingGains& gains, const ErrorState& error);
PdeProfiles target_error(const BacksteppingGains& gains, const ErrorState& error);

struct TargetTrajectory {
    std::vector<double> t;
    std::vector<PdeProfiles> eps_bar;
};

struct TargetDiagnostics {
    double transport_residual = 0.0;  // rms residual of the transport equation relative to rms of d/dt
    double boundary_residual = 0.0;   // max |eps_bar1(1) - q1cl eps_bar2(1)| for t > 0
    double initial_norm = 0.0;
    double late_norm = 0.0;           // max sup-norm for t > tau1 + tau2 + margin
    double quiescence_ratio = 0.0;    // late_norm / initial_norm
};

TargetDiagnostics target_residual(const TargetTrajectory& traj, const BacksteppingGains& gains,
                                  const HyperbolicSystem& sys, const CharacteristicMap& cmap, double margin);

} // namespace hypctrl

#endif // HYPCTRL_BACKSTEPPING_HPP
