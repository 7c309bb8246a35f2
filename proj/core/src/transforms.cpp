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

#include "hypctrl/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "hypctrl/io.hpp"
#include "hypctrl/volterra.hpp"

namespace hypctrl {

namespace {

using Field = TriangularField<double>;

// Linear interpolation along the zeta-row j over the nodes k = j .. M.
double row_value(const Field& f, int j, double z) {
    const int M = f.intervals();
    if (j == M) {
        return f.at(M, M);
    }
    const double s = z * M;
    const int k = std::clamp(static_cast<int>(s), j, M - 1);
    const double w = std::clamp(s - k, 0.0, 1.0);
    return (1.0 - w) * f.at(k, j) + w * f.at(k + 1, j);
}

// Linear interpolation along the z-column k over the nodes j = 0 .. k.
double column_value(const Field& f, int k, double zeta) {
    if (k == 0) {
        return f.at(0, 0);
    }
    const int M = f.intervals();
    const double s = zeta * M;
    const int j = std::clamp(static_cast<int>(s), 0, k - 1);
    const double w = std::clamp(s - j, 0.0, 1.0);
    return (1.0 - w) * f.at(k, j) + w * f.at(k, j + 1);
}

struct KernelMarcher {
    const CharacteristicMap& cmap;
    int M;
    double h;

    // Components whose characteristics leave zeta = 0 (K11, K22): L(z, 0) = bc * other(z, 0),
    // dL/ds = coef(zeta) other, with s the travel time along both coordinates.
    void march_from_bottom(Field& L, const Field& other, const Profile& coef, int i, double bc) const {
        const Profile& phi = cmap.phi_table(i);
        for (int k = 0; k <= M; ++k) {
            L.at(k, 0) = bc * other.at(k, 0);
        }
        for (int j = 1; j <= M; ++j) {
            const double ds = phi[j] - phi[j - 1];
            for (int k = j; k <= M; ++k) {
                const double zf = std::max(cmap.psi(i, phi[k] - ds), (j - 1) * h);
                const double f_foot = coef[j - 1] * row_value(other, j - 1, zf);
                const double f_node = coef[j] * other.at(k, j);
                L.at(k, j) = row_value(L, j - 1, zf) + 0.5 * ds * (f_node + f_foot);
            }
        }
    }

    // Components whose characteristics leave the diagonal (K12, K21): z runs
    // backward in phi_i while zeta runs forward in phi_j.
    void march_from_diagonal(Field& L, const Field& other, const Profile& coef, const Profile& diag, int i,
                             int jj) const {
        const Profile& phi_i = cmap.phi_table(i);
        const Profile& phi_j = cmap.phi_table(jj);
        for (int k = 0; k <= M; ++k) {
            L.at(k, k) = diag[k];
        }
        for (int k = 1; k <= M; ++k) {
            const double ds = phi_i[k] - phi_i[k - 1];
            const double zprev = (k - 1) * h;
            for (int j = 0; j < k; ++j) {
                const double zeta_f = cmap.psi(jj, phi_j[j] + ds);
                double l_foot = 0.0;
                double f_foot = 0.0;
                double seg = ds;
                if (zeta_f <= zprev) {
                    l_foot = column_value(L, k - 1, zeta_f);
                    f_foot = interpolate(coef, zeta_f) * column_value(other, k - 1, zeta_f);
                } else {
                    // The characteristic reaches the diagonal inside (z_{k-1}, z_k].
                    const double s_target = phi_i[k] + phi_j[j];
                    const double s_lo = phi_i[k - 1] + phi_j[k - 1];
                    const double s_hi = phi_i[k] + phi_j[k];
                    const double w = std::clamp((s_target - s_lo) / (s_hi - s_lo), 0.0, 1.0);
                    const double zd = zprev + w * h;
                    seg = phi_i[k] - ((1.0 - w) * phi_i[k - 1] + w * phi_i[k]);
                    l_foot = (1.0 - w) * diag[k - 1] + w * diag[k];
                    f_foot = interpolate(coef, zd) * ((1.0 - w) * other.at(k - 1, k - 1) + w * other.at(k, k));
                }
                const double f_node = coef[j] * other.at(k, j);
                L.at(k, j) = l_foot - 0.5 * seg * (f_node + f_foot);
            }
        }
    }
};

double max_change(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

double trapezoid_weight(int i, int lo, int hi, double h) {
    if (lo == hi) {
        return 0.0;
    }
    return (i == lo || i == hi) ? 0.5 * h : h;
}

} // namespace

double TriangularKernel::max_abs() const {
    double m = 0.0;
    for (const auto& v : data()) {
        m = std::max(m, v.cwiseAbs().maxCoeff());
    }
    return m;
}

Eigen::Matrix2d ScalingGains::E(int k) const {
    return Eigen::Vector2d(std::exp(alpha1[k]), std::exp(-alpha2[k])).asDiagonal();
}

Eigen::Matrix2d ScalingGains::E_inv(int k) const {
    return Eigen::Vector2d(std::exp(-alpha1[k]), std::exp(alpha2[k])).asDiagonal();
}

ScalingGains scaling_gains(const HyperbolicSystem& sys) {
    const int N = sys.grid.size();
    Profile f1(N);
    Profile f2(N);
    for (int k = 0; k < N; ++k) {
        f1[k] = sys.A[k](0, 0) / sys.lambda1[k];
        f2[k] = sys.A[k](1, 1) / sys.lambda2[k];
    }
    return {cumulative_trapezoid(f1, sys.grid.step()), cumulative_trapezoid(f2, sys.grid.step())};
}

ScaledCoupling scaled_coupling(const HyperbolicSystem& sys, const ScalingGains& gains) {
    const int N = sys.grid.size();
    ScaledCoupling out{Profile(N), Profile(N)};
    for (int k = 0; k < N; ++k) {
        const double e = std::exp(gains.alpha1[k] + gains.alpha2[k]);
        out.a12[k] = sys.A[k](0, 1) * e;
        out.a21[k] = sys.A[k](1, 0) / e;
    }
    return out;
}

TriangularKernel solve_kernel_K(const HyperbolicSystem& sys, const CharacteristicMap& cmap,
                                const ScaledCoupling& coupling, const KernelOptions& options,
                                KernelSolveInfo* info) {
    if (sys.q0 == 0.0) {
        throw AssumptionViolation("kernel boundary condition requires q0 != 0");
    }
    const Grid& grid = sys.grid;
    const int M = grid.intervals();
    const int N = grid.size();

    // Work with L_ij = K_ij lambda_j(zeta); along characteristics
    //   dL11/ds =  a21 r L12,  dL12/ds = -a12 L11 / r,
    //   dL21/ds =  a21 r L22,  dL22/ds = -a12 L21 / r,   r = lambda1 / lambda2.
    Profile c11(N), c12(N), c21(N), c22(N), d12(N), d21(N);
    for (int k = 0; k < N; ++k) {
        const double l1 = sys.lambda1[k];
        const double l2 = sys.lambda2[k];
        const double r = l1 / l2;
        c11[k] = coupling.a21[k] * r;
        c12[k] = -coupling.a12[k] / r;
        c21[k] = coupling.a21[k] * r;
        c22[k] = -coupling.a12[k] / r;
        d12[k] = -l2 * coupling.a12[k] / (l1 + l2);
        d21[k] = l1 * coupling.a21[k] / (l1 + l2);
    }

    Field L11(grid, 0.0), L12(grid, 0.0), L21(grid, 0.0), L22(grid, 0.0);
    const KernelMarcher marcher{cmap, M, grid.step()};
    KernelSolveInfo local;
    bool converged = false;
    for (int it = 1; it <= options.max_iterations; ++it) {
        const Field o11 = L11, o12 = L12, o21 = L21, o22 = L22;
        marcher.march_from_diagonal(L12, L11, c12, d12, 1, 2);
        marcher.march_from_bottom(L11, L12, c11, 1, sys.q0);
        marcher.march_from_diagonal(L21, L22, c21, d21, 2, 1);
        marcher.march_from_bottom(L22, L21, c22, 2, 1.0 / sys.q0);
        const double change = std::max({max_change(L11, o11), max_change(L12, o12), max_change(L21, o21),
                                        max_change(L22, o22)});
        local.iterations = it;
        local.last_change = change;
        if (!std::isfinite(change)) {
            throw NumericError("kernel iteration diverged");
        }
        if (change < options.tolerance) {
            converged = true;
            break;
        }
    }
    if (info) {
        *info = local;
    }
    if (!converged) {
        throw NumericError("kernel iteration did not converge in " + std::to_string(options.max_iterations) +
                           " iterations (last change " + format_double(local.last_change) + ")");
    }

    TriangularKernel K(grid, "K");
    for (int k = 0; k <= M; ++k) {
        for (int j = 0; j <= k; ++j) {
            const double l1 = sys.lambda1[j];
            const double l2 = sys.lambda2[j];
            K.at(k, j) << L11.at(k, j) / l1, L12.at(k, j) / l2, L21.at(k, j) / l1, L22.at(k, j) / l2;
        }
    }
    return K;
}

TriangularKernel reciprocity_inverse(const TriangularKernel& kernel) {
    const Grid& grid = kernel.grid();
    const int M = grid.intervals();
    const double h = grid.step();
    TriangularKernel out(grid, kernel.label() + "_I");
    for (int j = 0; j <= M; ++j) {
        std::vector<Eigen::Matrix2d> rhs;
        rhs.reserve(M - j + 1);
        for (int k = j; k <= M; ++k) {
            rhs.push_back(kernel.at(k, j));
        }
        const auto sol = solve_second_kind<Eigen::Matrix2d, Eigen::Matrix2d>(
            Eigen::Matrix2d::Identity(),
            [&](std::size_t m, std::size_t i) -> Eigen::Matrix2d {
                return -kernel.at(j + static_cast<int>(m), j + static_cast<int>(i));
            },
            rhs, h);
        for (int k = j; k <= M; ++k) {
            out.at(k, j) = sol[k - j];
        }
    }
    return out;
}

namespace {

void require_grid(const PdeProfiles& v, std::size_t nodes, const char* what) {
    if (v.x1.size() != nodes || v.x2.size() != nodes) {
        throw InvalidInput(std::string(what) + ": profile has " + std::to_string(v.x1.size()) + "/" +
                           std::to_string(v.x2.size()) + " samples, grid has " + std::to_string(nodes));
    }
}

} // namespace

PdeProfiles apply_volterra(const TriangularKernel& kernel, const PdeProfiles& v, double sign) {
    const int M = kernel.intervals();
    const double h = kernel.grid().step();
    require_grid(v, static_cast<std::size_t>(M) + 1, "Volterra transform");
    PdeProfiles out = v;
    for (int k = 1; k <= M; ++k) {
        Eigen::Vector2d acc = Eigen::Vector2d::Zero();
        for (int i = 0; i <= k; ++i) {
            acc += trapezoid_weight(i, 0, k, h) * (kernel.at(k, i) * Eigen::Vector2d(v.x1[i], v.x2[i]));
        }
        out.x1[k] += sign * acc(0);
        out.x2[k] += sign * acc(1);
    }
    return out;
}

std::vector<Eigen::MatrixXd> coupling_matrix_C(const TriangularKernel& K, const HyperbolicSystem& sys) {
    const int N = sys.grid.size();
    std::vector<Eigen::MatrixXd> C(N);
    const double l20 = sys.lambda2[0];
    for (int k = 0; k < N; ++k) {
        const Eigen::Vector2d col = -l20 * K.at(k, 0).col(1);
        C[k] = col * sys.c.transpose();
    }
    return C;
}

TransformedSystem transform_system(const HyperbolicSystem& sys, const KernelOptions& options) {
    const ValidationReport report = validate(sys);
    if (!report.q0_nonzero) {
        throw AssumptionViolation("q0 must be nonzero for the decoupling transformation");
    }
    if (!report.speeds_positive) {
        throw InvalidInput("transport speeds must be positive");
    }
    TransformedSystem ts;
    ts.sys = sys;
    ts.cmap = characteristic_map(sys);
    ts.gains = scaling_gains(sys);
    ts.coupling = scaled_coupling(sys, ts.gains);
    ts.K = solve_kernel_K(sys, ts.cmap, ts.coupling, options, &ts.kernel_info);
    ts.K_inv = reciprocity_inverse(ts.K);
    ts.C = coupling_matrix_C(ts.K, sys);
    const int M = sys.grid.intervals();
    ts.q1bar = sys.q1 * std::exp(ts.gains.alpha1[M] + ts.gains.alpha2[M]);
    ts.input_weights.resize(M + 1);
    for (int k = 0; k <= M; ++k) {
        ts.input_weights[k] = ts.q1bar * ts.K.at(M, k).row(1) - ts.K.at(M, k).row(0);
    }
    return ts;
}

PdeProfiles scale(const ScalingGains& gains, const PdeProfiles& x) {
    require_grid(x, gains.alpha1.size(), "scaling");
    PdeProfiles out = x;
    for (std::size_t k = 0; k < x.x1.size(); ++k) {
        out.x1[k] *= std::exp(gains.alpha1[k]);
        out.x2[k] *= std::exp(-gains.alpha2[k]);
    }
    return out;
}

PdeProfiles unscale(const ScalingGains& gains, const PdeProfiles& xt) {
    require_grid(xt, gains.alpha1.size(), "scaling");
    PdeProfiles out = xt;
    for (std::size_t k = 0; k < xt.x1.size(); ++k) {
        out.x1[k] *= std::exp(-gains.alpha1[k]);
        out.x2[k] *= std::exp(gains.alpha2[k]);
    }
    return out;
}

PdeProfiles push_forward(const TransformedSystem& ts, const PdeProfiles& x) {
    return apply_volterra(ts.K, scale(ts.gains, x), -1.0);
}

PdeProfiles pull_back(const TransformedSystem& ts, const PdeProfiles& xbar) {
    return unscale(ts.gains, apply_volterra(ts.K_inv, xbar, 1.0));
}

namespace {

double input_integral(const TransformedSystem& ts, const PdeProfiles& x_tilde) {
    const int M = ts.sys.grid.intervals();
    const double h = ts.sys.grid.step();
    double acc = 0.0;
    for (int k = 0; k <= M; ++k) {
        acc += trapezoid_weight(k, 0, M, h) *
               ts.input_weights[k].dot(Eigen::Vector2d(x_tilde.x1[k], x_tilde.x2[k]));
    }
    return acc;
}

} // namespace

double input_map(const TransformedSystem& ts, double u, const PdeProfiles& x_tilde) {
    const int M = ts.sys.grid.intervals();
    return std::exp(ts.gains.alpha1[M]) * u + input_integral(ts, x_tilde);
}

double input_unmap(const TransformedSystem& ts, double u_bar, const PdeProfiles& x_tilde) {
    const int M = ts.sys.grid.intervals();
    return std::exp(-ts.gains.alpha1[M]) * (u_bar - input_integral(ts, x_tilde));
}

KernelResiduals kernel_residuals(const TriangularKernel& K, const HyperbolicSystem& sys,
                                 const ScaledCoupling& coupling) {
    const int M = sys.grid.intervals();
    const double h = sys.grid.step();
    KernelResiduals r;
    const double l10 = sys.lambda1[0];
    const double l20 = sys.lambda2[0];
    for (int k = 0; k <= M; ++k) {
        const Eigen::Matrix2d& K0 = K.at(k, 0);
        r.bc11 = std::max(r.bc11, std::abs(K0(0, 0) - sys.q0 * l20 / l10 * K0(0, 1)));
        r.bc22 = std::max(r.bc22, std::abs(K0(1, 1) - l10 / (sys.q0 * l20) * K0(1, 0)));
        const double sum = sys.lambda1[k] + sys.lambda2[k];
        r.bc12 = std::max(r.bc12, std::abs(K.at(k, k)(0, 1) + coupling.a12[k] / sum));
        r.bc21 = std::max(r.bc21, std::abs(K.at(k, k)(1, 0) - coupling.a21[k] / sum));
    }
    const Eigen::Vector2d sigma(1.0, -1.0);
    for (int k = 2; k < M; ++k) {
        const Eigen::Vector2d lz(sys.lambda1[k], sys.lambda2[k]);
        for (int j = 1; j < k; ++j) {
            const Eigen::Matrix2d Kz = (K.at(k + 1, j) - K.at(k - 1, j)) / (2.0 * h);
            Eigen::Matrix2d At;
            At << 0.0, coupling.a12[j], coupling.a21[j], 0.0;
            for (int a = 0; a < 2; ++a) {
                for (int c = 0; c < 2; ++c) {
                    const Profile& lc = c == 0 ? sys.lambda1 : sys.lambda2;
                    const double flux_hi = K.at(k, j + 1)(a, c) * lc[j + 1];
                    const double flux_lo = K.at(k, j - 1)(a, c) * lc[j - 1];
                    const double res = sigma(a) * lz(a) * Kz(a, c) + sigma(c) * (flux_hi - flux_lo) / (2.0 * h) -
                                       (K.at(k, j) * At)(a, c);
                    r.pde(a, c) = std::max(r.pde(a, c), std::abs(res));
                }
            }
        }
    }
    return r;
}

double reciprocity_residual(const TriangularKernel& K, const TriangularKernel& K_inv) {
    const int M = K.intervals();
    const double h = K.grid().step();
    double worst = 0.0;
    for (int k = 0; k <= M; ++k) {
        for (int j = 0; j <= k; ++j) {
            Eigen::Matrix2d acc = K_inv.at(k, j) - K.at(k, j);
            for (int i = j; i <= k; ++i) {
                acc -= trapezoid_weight(i, j, k, h) * (K.at(k, i) * K_inv.at(i, j));
            }
            worst = std::max(worst, acc.cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

void write_kernel_csv(std::ostream& os, const TriangularKernel& kernel) {
    const std::string& l = kernel.label();
    write_csv_header(os, {"z", "zeta", l + "11", l + "12", l + "21", l + "22"});
    const Grid& grid = kernel.grid();
    for (int k = 0; k <= grid.intervals(); ++k) {
        for (int j = 0; j <= k; ++j) {
            const Eigen::Matrix2d& v = kernel.at(k, j);
            const double row[] = {grid.node(k), grid.node(j), v(0, 0), v(0, 1), v(1, 0), v(1, 1)};
            write_csv_row(os, row);
        }
    }
}

} // namespace hypctrl
