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

#ifndef HYPCTRL_TRANSFORMS_HPP
#define HYPCTRL_TRANSFORMS_HPP

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypctrl/model.hpp"

namespace hypctrl {

/// Values on the node triangle {(z_k, zeta_j) : j <= k} of a uniform grid,
/// stored row-packed by z.
template <typename T>
class TriangularField {
public:
    TriangularField() = default;
    TriangularField(Grid grid, const T& fill)
        : grid_(grid), values_(static_cast<std::size_t>(grid.size()) * (grid.size() + 1) / 2, fill) {}

    const Grid& grid() const { return grid_; }
    int intervals() const { return grid_.intervals(); }

    T& at(int k, int j) { return values_[index(k, j)]; }
    const T& at(int k, int j) const { return values_[index(k, j)]; }

    /// Piecewise-linear interpolation: bilinear on full cells, barycentric on
    /// the cells cut by the diagonal. Arguments are clamped onto the triangle.
    T eval(double z, double zeta) const {
        const int M = grid_.intervals();
        z = std::clamp(z, 0.0, 1.0);
        zeta = std::clamp(zeta, 0.0, z);
        const double sk = z * M;
        const double sj = zeta * M;
        const int k = std::min(static_cast<int>(sk), M - 1);
        const int j = std::min(static_cast<int>(sj), k);
        const double wz = sk - k;
        const double wj = sj - j;
        if (j < k) {
            return (1.0 - wz) * ((1.0 - wj) * at(k, j) + wj * at(k, j + 1)) +
                   wz * ((1.0 - wj) * at(k + 1, j) + wj * at(k + 1, j + 1));
        }
        return (1.0 - wz) * at(k, k) + (wz - wj) * at(k + 1, k) + wj * at(k + 1, k + 1);
    }

    std::vector<T>& data() { return values_; }
    const std::vector<T>& data() const { return values_; }

private:
    static std::size_t index(int k, int j) {
        return static_cast<std::size_t>(k) * (k + 1) / 2 + static_cast<std::size_t>(j);
    }

    Grid grid_{1};
    std::vector<T> values_;
};

/// 2x2 matrix kernel on the triangle zeta <= z (K, K_I, P or P_I).
class TriangularKernel : public TriangularField<Eigen::Matrix2d> {
public:
    TriangularKernel() = default;
    TriangularKernel(Grid grid, std::string label)
        : TriangularField<Eigen::Matrix2d>(grid, Eigen::Matrix2d::Zero()), label_(std::move(label)) {}

    const std::string& label() const { return label_; }
    double max_abs() const;

private:
    std::string label_;
};

/// Diagonal scaling x~ = E x, E = diag(exp(alpha1), exp(-alpha2)),
/// alpha_i(z) = int_0^z A_ii / lambda_i.
struct ScalingGains {
    Profile alpha1;
    Profile alpha2;

    Eigen::Matrix2d E(int k) const;
    Eigen::Matrix2d E_inv(int k) const;
};

ScalingGains scaling_gains(const HyperbolicSystem& sys);

/// Off-diagonal couplings left after scaling (the diagonal of A~ is zero).
struct ScaledCoupling {
    Profile a12;
    Profile a21;
};

ScaledCoupling scaled_coupling(const HyperbolicSystem& sys, const ScalingGains& gains);

struct KernelOptions {
    double tolerance = 1e-10;
    int max_iterations = 200;
};

struct KernelSolveInfo {
    int iterations = 0;
    double last_change = 0.0;
};

/// Kernel of the Volterra transform removing the in-domain coupling. Each
/// component is integrated along its characteristic from the boundary carrying
/// its data (zeta = 0 for K11, K22; the diagonal for K12, K21) in travel-time
/// coordinates; the coupling terms are resolved by successive approximation.
TriangularKernel solve_kernel_K(const HyperbolicSystem& sys, const CharacteristicMap& cmap,
                                const ScaledCoupling& coupling, const KernelOptions& options = {},
                                KernelSolveInfo* info = nullptr);

/// Inverse kernel from K_I(z, s) = K(z, s) + int_s^z K(z, r) K_I(r, s) dr, column by column.
TriangularKernel reciprocity_inverse(const TriangularKernel& kernel);

struct PdeProfiles {
    Profile x1;
    Profile x2;
};

/// out(z) = v(z) + sign * int_0^z kernel(z, s) v(s) ds (trapezoid).
PdeProfiles apply_volterra(const TriangularKernel& kernel, const PdeProfiles& v, double sign);

struct TransformedSystem {
    HyperbolicSystem sys;
    CharacteristicMap cmap;
    ScalingGains gains;
    ScaledCoupling coupling;
    TriangularKernel K;
    TriangularKernel K_inv;
    KernelSolveInfo kernel_info;
    /// C(z) = K(z, 0) Lambda(0) e2 c^T, 2 x n per node.
    std::vector<Eigen::MatrixXd> C;
    double q1bar = 0.0;
    /// (q1bar e2^T - e1^T) K(1, z) per node, used by the input map.
    std::vector<Eigen::RowVector2d> input_weights;
};

/// Runs both preliminary transformations. Requires q0 != 0.
TransformedSystem transform_system(const HyperbolicSystem& sys, const KernelOptions& options = {});

std::vector<Eigen::MatrixXd> coupling_matrix_C(const TriangularKernel& K, const HyperbolicSystem& sys);

/// x -> x~ = E x -> x_bar = x~ - int K x~.
PdeProfiles push_forward(const TransformedSystem& ts, const PdeProfiles& x);
/// x_bar -> x~ = x_bar + int K_I x_bar -> x = E^{-1} x~.
PdeProfiles pull_back(const TransformedSystem& ts, const PdeProfiles& xbar);

PdeProfiles scale(const ScalingGains& gains, const PdeProfiles& x);
PdeProfiles unscale(const ScalingGains& gains, const PdeProfiles& xt);

/// u_bar = exp(alpha1(1)) u + int_0^1 (q1bar e2^T - e1^T) K(1, z) x~(z) dz.
double input_map(const TransformedSystem& ts, double u, const PdeProfiles& x_tilde);
double input_unmap(const TransformedSystem& ts, double u_bar, const PdeProfiles& x_tilde);

struct KernelResiduals {
    double bc11 = 0.0;  // K11(z,0) - q0 l2(0)/l1(0) K12(z,0)
    double bc12 = 0.0;  // K12(z,z) + A~12/(l1+l2)
    double bc21 = 0.0;  // K21(z,z) - A~21/(l1+l2)
    double bc22 = 0.0;  // K22(z,0) - l1(0)/(q0 l2(0)) K21(z,0)
    Eigen::Matrix2d pde = Eigen::Matrix2d::Zero();  // max interior residual per component

    double max_bc() const { return std::max({bc11, bc12, bc21, bc22}); }
};

/// Boundary residuals at every boundary node, and the interior residual of
/// Lambda(z) K_z + (K Lambda(zeta))_zeta - K A~ by central differences.
KernelResiduals kernel_residuals(const TriangularKernel& K, const HyperbolicSystem& sys,
                                 const ScaledCoupling& coupling);

/// max over (z, zeta) of |K_I - K - int K K_I|.
double reciprocity_residual(const TriangularKernel& K, const TriangularKernel& K_inv);

/// CSV with columns z,zeta,<label>11,<label>12,<label>21,<label>22.
void write_kernel_csv(std::ostream& os, const TriangularKernel& kernel);

} // namespace hypctrl

#endif // HYPCTRL_TRANSFORMS_HPP
