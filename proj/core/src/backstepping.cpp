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

#include "hypctrl/backstepping.hpp"

#include <algorithm>
#include <cmath>

#include "hypctrl/volterra.hpp"

namespace hypctrl {

namespace {

double weight(int i, int count, double h) {
    if (count == 0) {
        return 0.0;
    }
    return (i == 0 || i == count) ? 0.5 * h : h;
}

double sup_norm(const PdeProfiles& p) {
    double m = 0.0;
    for (std::size_t k = 0; k < p.x1.size(); ++k) {
        m = std::max({m, std::abs(p.x1[k]), std::abs(p.x2[k])});
    }
    return m;
}

} // namespace

Eigen::VectorXd place_gain(const Eigen::MatrixXd& F, const Eigen::VectorXd& b, const Eigen::VectorXd& kappa) {
    const int n = static_cast<int>(F.rows());
    if (kappa.size() != n) {
        throw InvalidInput("target polynomial needs " + std::to_string(n) + " coefficients");
    }
    if (n == 0) {
        return Eigen::VectorXd(0);
    }
    const Eigen::MatrixXd Mc = controllability_matrix(F, b);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Mc);
    if (lu.rank() < n) {
        throw AssumptionViolation("(F, b) is not controllable; gain placement impossible");
    }
    const Eigen::RowVectorXd h = Mc.transpose().fullPivLu().solve(Eigen::VectorXd::Unit(n, n - 1)).transpose();
    Eigen::MatrixXd poly = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
        poly += kappa(i) * power;
        power = power * F;
    }
    poly += power;
    return -(h * poly).transpose();
}

DecouplingMatrix solve_decoupling(const TransformedSystem& ts, const Eigen::VectorXd& k) {
    const HyperbolicSystem& sys = ts.sys;
    const int n = sys.n;
    const int M = sys.grid.intervals();
    const double h = sys.grid.step();
    const Eigen::MatrixXd Acl = sys.F + sys.b * k.transpose();

    auto rhs = [&](double l1, double l2, const Eigen::MatrixXd& C, const Eigen::MatrixXd& N) {
        Eigen::MatrixXd d = N * Acl - C;
        d.row(0) /= l1;
        d.row(1) /= -l2;
        return d;
    };

    DecouplingMatrix out;
    out.N.resize(M + 1);
    Eigen::MatrixXd N(2, n);
    N.row(0) = k.transpose();
    N.row(1) = sys.c.transpose() + sys.q0 * k.transpose();
    out.N[0] = N;
    for (int m = 0; m < M; ++m) {
        const double l1a = sys.lambda1[m], l1b = sys.lambda1[m + 1];
        const double l2a = sys.lambda2[m], l2b = sys.lambda2[m + 1];
        const Eigen::MatrixXd& Ca = ts.C[m];
        const Eigen::MatrixXd& Cb = ts.C[m + 1];
        const Eigen::MatrixXd Cm = 0.5 * (Ca + Cb);
        const double l1m = 0.5 * (l1a + l1b), l2m = 0.5 * (l2a + l2b);
        const Eigen::MatrixXd k1 = rhs(l1a, l2a, Ca, N);
        const Eigen::MatrixXd k2 = rhs(l1m, l2m, Cm, N + 0.5 * h * k1);
        const Eigen::MatrixXd k3 = rhs(l1m, l2m, Cm, N + 0.5 * h * k2);
        const Eigen::MatrixXd k4 = rhs(l1b, l2b, Cb, N + h * k3);
        N += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.N[m + 1] = N;
    }
    return out;
}

PKernel solve_P_kernel(const DecouplingMatrix& N, const HyperbolicSystem& sys, const CharacteristicMap& cmap) {
    if (sys.q0 == 0.0) {
        throw AssumptionViolation("q0 must be nonzero for the stabilizing kernel");
    }
    const Grid& grid = sys.grid;
    const int M = grid.intervals();
    Profile g1(M + 1), g2(M + 1);
    for (int k = 0; k <= M; ++k) {
        const Eigen::Vector2d nb = N.N[k] * sys.b;
        g1[k] = nb(0);
        g2[k] = nb(1);
    }

    auto solve = [&](int i, const Profile& g, double mu) {
        const double h = cmap.tau(i) / M;
        Profile G(M + 1);
        for (int l = 0; l <= M; ++l) {
            G[l] = interpolate(g, cmap.psi(i, l * h));
        }
        return solve_second_kind(
            mu, [&](std::size_t m, std::size_t j) { return G[m - j]; }, std::span<const double>(G), h);
    };

    PKernel out;
    out.p1 = solve(1, g1, 1.0);
    out.p2 = solve(2, g2, -sys.q0);
    out.P = TriangularKernel(grid, "P");
    const Profile& phi1 = cmap.phi_table(1);
    const Profile& phi2 = cmap.phi_table(2);
    const double h1 = cmap.tau1() / M;
    const double h2 = cmap.tau2() / M;
    for (int k = 0; k <= M; ++k) {
        for (int j = 0; j <= k; ++j) {
            Eigen::Matrix2d& P = out.P.at(k, j);
            P.setZero();
            P(0, 0) = interpolate_uniform(out.p1, 0.0, h1, phi1[k] - phi1[j]) / sys.lambda1[j];
            P(1, 1) = interpolate_uniform(out.p2, 0.0, h2, phi2[k] - phi2[j]) / sys.lambda2[j];
        }
    }
    return out;
}

BacksteppingGains backstepping_gains(const TransformedSystem& ts, const Eigen::VectorXd& kappa, double q1cl) {
    const HyperbolicSystem& sys = ts.sys;
    const int M = sys.grid.intervals();
    const double h = sys.grid.step();
    BacksteppingGains g;
    g.k = place_gain(sys.F, sys.b, kappa);
    g.q1cl = q1cl;
    g.q1bar = ts.q1bar;
    g.N = solve_decoupling(ts, g.k);
    g.P = solve_P_kernel(g.N, sys, ts.cmap);
    g.P_inv = reciprocity_inverse(g.P.P);

    const Eigen::RowVector2d sel(1.0, -q1cl);
    g.w.resize(M + 1);
    Eigen::MatrixXd integral = Eigen::MatrixXd::Zero(2, sys.n);
    for (int k = 0; k <= M; ++k) {
        g.w[k] = sel * g.P.P.at(M, k);
        integral += weight(k, M, h) * (g.P.P.at(M, k) * g.N.N[k]);
    }
    g.r = sel * (g.N.N[M] - integral);

    if (std::abs(sys.q0 * q1cl) >= 1.0) {
        g.warnings.emplace_back("|q0 q1cl| >= 1; the closed-loop boundary reflection is not contractive");
    }
    if (sys.n > 0) {
        const Eigen::VectorXcd ev = (sys.F + sys.b * g.k.transpose()).eigenvalues();
        for (int i = 0; i < ev.size(); ++i) {
            if (!(ev(i).real() < 0.0)) {
                g.warnings.emplace_back("F + b k^T is not Hurwitz");
                break;
            }
        }
    }
    return g;
}

BacksteppingResiduals backstepping_residuals(const BacksteppingGains& gains, const TransformedSystem& ts) {
    const HyperbolicSystem& sys = ts.sys;
    const int M = sys.grid.intervals();
    const double h = sys.grid.step();
    BacksteppingResiduals r;
    if (sys.n > 0) {
        const Eigen::MatrixXd Acl = sys.F + sys.b * gains.k.transpose();
        Eigen::MatrixXd N0(2, sys.n);
        N0.row(0) = gains.k.transpose();
        N0.row(1) = sys.c.transpose() + sys.q0 * gains.k.transpose();
        r.decoupling_initial = (gains.N.N[0] - N0).cwiseAbs().maxCoeff();
        for (int k = 1; k < M; ++k) {
            Eigen::MatrixXd rhs = gains.N.N[k] * Acl - ts.C[k];
            rhs.row(0) /= sys.lambda1[k];
            rhs.row(1) /= -sys.lambda2[k];
            const Eigen::MatrixXd d = (gains.N.N[k + 1] - gains.N.N[k - 1]) / (2.0 * h);
            r.decoupling = std::max(r.decoupling, (d - rhs).cwiseAbs().maxCoeff());
        }
    }
    auto volterra = [&](int i, const Profile& p, double mu) {
        const int row = i - 1;
        const double step = ts.cmap.tau(i) / M;
        Profile G(M + 1);
        for (int l = 0; l <= M; ++l) {
            const double z = ts.cmap.psi(i, l * step);
            double g = 0.0;
            if (sys.n > 0) {
                const double s = z * M;
                const int k = std::min(static_cast<int>(s), M - 1);
                const double w = s - k;
                g = (1.0 - w) * (gains.N.N[k].row(row) * sys.b)(0) + w * (gains.N.N[k + 1].row(row) * sys.b)(0);
            }
            G[l] = g;
        }
        double worst = 0.0;
        for (int m = 0; m <= M; ++m) {
            double acc = mu * p[m];
            for (int j = 0; j <= m; ++j) {
                acc += weight(j, m, step) * G[m - j] * p[j];
            }
            worst = std::max(worst, std::abs(acc - G[m]));
        }
        return worst;
    };
    r.p1 = volterra(1, gains.P.p1, 1.0);
    r.p2 = volterra(2, gains.P.p2, -sys.q0);
    return r;
}

double bs_feedback(const BacksteppingGains& gains, const ErrorState& error, double ubar_r) {
    const int M = static_cast<int>(error.eps.x1.size()) - 1;
    if (M + 1 != static_cast<int>(gains.w.size())) {
        throw InvalidInput("error profile does not match the gain grid");
    }
    const double h = 1.0 / M;
    double u = ubar_r + (gains.q1cl - gains.q1bar) * error.eps.x2[M];
    for (int k = 0; k <= M; ++k) {
        u += weight(k, M, h) * gains.w[k].dot(Eigen::Vector2d(error.eps.x1[k], error.eps.x2[k]));
    }
    if (error.e_xi.size() > 0) {
        u += gains.r.dot(error.e_xi);
    }
    return u;
}

PdeProfiles decoupled_error(const BacksteppingGains& gains, const ErrorState& error) {
    PdeProfiles out = error.eps;
    if (error.e_xi.size() == 0) {
        return out;
    }
    for (std::size_t k = 0; k < out.x1.size(); ++k) {
        const Eigen::Vector2d ne = gains.N.N[k] * error.e_xi;
        out.x1[k] -= ne(0);
        out.x2[k] -= ne(1);
    }
    return out;
}

PdeProfiles target_error(const BacksteppingGains& gains, const ErrorState& error) {
    return apply_volterra(gains.P.P, decoupled_error(gains, error), -1.0);
}

TargetDiagnostics target_residual(const TargetTrajectory& traj, const BacksteppingGains& gains,
                                  const HyperbolicSystem& sys, const CharacteristicMap& cmap, double margin) {
    TargetDiagnostics d;
    if (traj.t.empty()) {
        return d;
    }
    const int M = sys.grid.intervals();
    const double h = sys.grid.step();
    double res2 = 0.0;
    double dt2 = 0.0;
    for (std::size_t i = 0; i + 1 < traj.t.size(); ++i) {
        const double dt = traj.t[i + 1] - traj.t[i];
        const PdeProfiles& a = traj.eps_bar[i];
        const PdeProfiles& b = traj.eps_bar[i + 1];
        for (int k = 1; k < M; ++k) {
            const double d1 = (b.x1[k] - a.x1[k]) / dt;
            const double d2 = (b.x2[k] - a.x2[k]) / dt;
            const double r1 = d1 - sys.lambda1[k] * (a.x1[k + 1] - a.x1[k]) / h;
            const double r2 = d2 + sys.lambda2[k] * (a.x2[k] - a.x2[k - 1]) / h;
            res2 += r1 * r1 + r2 * r2;
            dt2 += d1 * d1 + d2 * d2;
        }
    }
    d.transport_residual = dt2 > 0.0 ? std::sqrt(res2 / dt2) : std::sqrt(res2);
    for (std::size_t i = 1; i < traj.t.size(); ++i) {
        const PdeProfiles& e = traj.eps_bar[i];
        d.boundary_residual = std::max(d.boundary_residual, std::abs(e.x1[M] - gains.q1cl * e.x2[M]));
    }
    d.initial_norm = sup_norm(traj.eps_bar.front());
    const double t_quiet = traj.t.front() + cmap.tau1() + cmap.tau2() + margin;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        if (traj.t[i] > t_quiet) {
            d.late_norm = std::max(d.late_norm, sup_norm(traj.eps_bar[i]));
        }
    }
    d.quiescence_ratio = d.initial_norm > 0.0 ? d.late_norm / d.initial_norm : d.late_norm;
    return d;
}

} // namespace hypctrl
