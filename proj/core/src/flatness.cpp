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

#include "hypctrl/flatness.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "hypctrl/volterra.hpp"

namespace hypctrl {

namespace {

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) {
        f *= i;
    }
    return f;
}

double binomial(int n, int k) {
    return factorial(n) / (factorial(k) * factorial(n - k));
}

double trap_weight(int i, int count, double h) {
    if (count == 0) {
        return 0.0;
    }
    return (i == 0 || i == count) ? 0.5 * h : h;
}

Eigen::RowVectorXd interpolate_row(const std::vector<Eigen::MatrixXd>& table, int row, double z) {
    const int M = static_cast<int>(table.size()) - 1;
    const double s = std::clamp(z, 0.0, 1.0) * M;
    const int k = std::min(static_cast<int>(s), M - 1);
    const double w = s - k;
    return (1.0 - w) * table[k].row(row) + w * table[k + 1].row(row);
}

double interpolate_piece(const Profile& v, double lo, double h, double x) {
    return interpolate_uniform(v, lo, h, x);
}

template <typename V>
V interpolate_piece(const std::vector<V>& v, double lo, double h, double x) {
    const int last = static_cast<int>(v.size()) - 1;
    const double s = std::clamp((x - lo) / h, 0.0, static_cast<double>(last));
    const int k = std::min(static_cast<int>(s), last - 1);
    const double w = s - k;
    return (1.0 - w) * v[k] + w * v[k + 1];
}

// Trapezoid of d(tau) * g(tau) over both pieces.
template <typename G>
double integrate_against(const TauGrid& grid, const PiecewiseTable& d, G&& g) {
    double acc = 0.0;
    for (int i = 0; i <= grid.n_neg; ++i) {
        acc += trap_weight(i, grid.n_neg, grid.h_neg()) * d.neg[i] * g(grid.neg_node(i));
    }
    for (int i = 0; i <= grid.n_pos; ++i) {
        acc += trap_weight(i, grid.n_pos, grid.h_pos()) * d.pos[i] * g(grid.pos_node(i));
    }
    return acc;
}

// Running integral int_{-tau2}^{tau} f(sigma) dsigma.
PiecewiseTable cumulative(const TauGrid& grid, const PiecewiseTable& f) {
    PiecewiseTable out = PiecewiseTable::zeros(grid);
    for (int i = 1; i <= grid.n_neg; ++i) {
        out.neg[i] = out.neg[i - 1] + 0.5 * grid.h_neg() * (f.neg[i - 1] + f.neg[i]);
    }
    out.pos[0] = out.neg.back();
    for (int i = 1; i <= grid.n_pos; ++i) {
        out.pos[i] = out.pos[i - 1] + 0.5 * grid.h_pos() * (f.pos[i - 1] + f.pos[i]);
    }
    return out;
}

template <typename F>
PiecewiseTable tabulate(const TauGrid& grid, F&& f) {
    PiecewiseTable out = PiecewiseTable::zeros(grid);
    for (int i = 0; i <= grid.n_neg; ++i) {
        out.neg[i] = f(grid.neg_node(i));
    }
    for (int i = 0; i <= grid.n_pos; ++i) {
        out.pos[i] = f(grid.pos_node(i));
    }
    return out;
}

void axpy(PiecewiseTable& y, double a, const PiecewiseTable& x) {
    for (std::size_t i = 0; i < y.neg.size(); ++i) {
        y.neg[i] += a * x.neg[i];
    }
    for (std::size_t i = 0; i < y.pos.size(); ++i) {
        y.pos[i] += a * x.pos[i];
    }
}

// int_{-tau2}^{tau} (tau - sigma)^m f(sigma) dsigma on the grid.
PiecewiseTable repeated_integral(const TauGrid& grid, const PiecewiseTable& f, int m) {
    PiecewiseTable out = PiecewiseTable::zeros(grid);
    for (int l = 0; l <= m; ++l) {
        PiecewiseTable moment = f;
        for (int i = 0; i <= grid.n_neg; ++i) {
            moment.neg[i] *= std::pow(grid.neg_node(i), l);
        }
        for (int i = 0; i <= grid.n_pos; ++i) {
            moment.pos[i] *= std::pow(grid.pos_node(i), l);
        }
        const PiecewiseTable cum = cumulative(grid, moment);
        const double coef = binomial(m, l) * ((l % 2) ? -1.0 : 1.0);
        for (int i = 0; i <= grid.n_neg; ++i) {
            out.neg[i] += coef * std::pow(grid.neg_node(i), m - l) * cum.neg[i];
        }
        for (int i = 0; i <= grid.n_pos; ++i) {
            out.pos[i] += coef * std::pow(grid.pos_node(i), m - l) * cum.pos[i];
        }
    }
    return out;
}

void check_window(const FlatOutputSignal& y, double lo, double hi) {
    constexpr double slack = 1e-9;
    if (lo < y.window_begin() - slack || hi > y.window_end() + slack) {
        throw InvalidInput("signal window [" + std::to_string(y.window_begin()) + ", " +
                           std::to_string(y.window_end()) + "] does not cover the required window [" +
                           std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

} // namespace

double FlatStructure::output_scale(int component) const {
    if (n == 0) {
        throw InvalidInput("no ODE state to scale");
    }
    if (component < 0 || component >= n) {
        throw InvalidInput("output component out of range");
    }
    return Tc_inv(component, 0);
}

FlatStructure flat_structure(const HyperbolicSystem& sys) {
    FlatStructure fs;
    const int n = sys.n;
    fs.n = n;
    if (n == 0) {
        fs.h.resize(0);
        fs.Tc.resize(0, 0);
        fs.Tc_inv.resize(0, 0);
        fs.p1 = Eigen::RowVectorXd::Ones(1);
        fs.p2 = sys.q0 * fs.p1;
        return fs;
    }
    const Eigen::MatrixXd Mc = controllability_matrix(sys.F, sys.b);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Mc);
    if (lu.rank() < n) {
        throw AssumptionViolation("(F, b) is not controllable; controllability rank " +
                                  std::to_string(lu.rank()) + " < " + std::to_string(n));
    }
    const Eigen::VectorXd en = Eigen::VectorXd::Unit(n, n - 1);
    fs.h = Mc.transpose().fullPivLu().solve(en).transpose();
    fs.Tc.resize(n, n);
    Eigen::RowVectorXd row = fs.h;
    for (int i = 0; i < n; ++i) {
        fs.Tc.row(i) = row;
        row = row * sys.F;
    }
    fs.Tc_inv = fs.Tc.inverse();
    fs.p1.resize(n + 1);
    fs.p1.head(n) = -fs.Tc.row(n - 1) * sys.F * fs.Tc_inv;
    fs.p1(n) = 1.0;
    fs.p2 = sys.q0 * fs.p1;
    fs.p2.head(n) += sys.c.transpose() * fs.Tc_inv;
    return fs;
}

double FlatOutputSignal::derivative(int order, double t) const {
    std::vector<double> out(order + 1);
    derivatives(t, out);
    return out[order];
}

ReferencePlan::ReferencePlan(double y0, double y_star, double t0, double t_star, int n)
    : y0_(y0), y_star_(y_star), t0_(t0), t_star_(t_star), n_(n) {
    if (!(t_star > t0)) {
        throw InvalidInput("reference transition requires t_star > t0");
    }
    if (n < 0) {
        throw InvalidInput("reference order must be nonnegative");
    }
    const double delta = y_star - y0;
    c_.assign(2 * n + 2, 0.0);
    c_[0] = y0;
    for (int k = 0; k <= n; ++k) {
        c_[n + 1 + k] += delta * binomial(n + k, k) * binomial(2 * n + 1, n - k) * ((k % 2) ? -1.0 : 1.0);
    }
    const int degree = 2 * n + 1;
    dc_.resize(degree + 1);
    for (int i = 0; i <= degree; ++i) {
        for (int j = i; j <= degree; ++j) {
            dc_[i].push_back(c_[j] * factorial(j) / factorial(j - i));
        }
    }
}

void ReferencePlan::derivatives(double t, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    if (out.empty()) {
        return;
    }
    if (t <= t0_) {
        out[0] = y0_;
        return;
    }
    if (t >= t_star_) {
        out[0] = y_star_;
        return;
    }
    const double T = t_star_ - t0_;
    const double s = (t - t0_) / T;
    double scale = 1.0;
    for (std::size_t i = 0; i < out.size() && i < dc_.size(); ++i) {
        const std::vector<double>& d = dc_[i];
        double acc = 0.0;
        for (auto it = d.rbegin(); it != d.rend(); ++it) {
            acc = acc * s + *it;
        }
        out[i] = acc * scale;
        scale /= T;
    }
}

ReferencePlan plan_reference(double y0, double y_star, double t0, double t_star, int n) {
    return ReferencePlan(y0, y_star, t0, t_star, n);
}

TauGrid TauGrid::make(double tau1, double tau2, double step) {
    if (!(tau1 > 0.0) || !(tau2 > 0.0) || !(step > 0.0)) {
        throw InvalidInput("delay grid requires positive delays and step");
    }
    TauGrid g;
    g.tau1 = tau1;
    g.tau2 = tau2;
    g.n_neg = std::max(1, static_cast<int>(std::ceil(tau2 / step - 1e-9)));
    g.n_pos = std::max(1, static_cast<int>(std::ceil(tau1 / step - 1e-9)));
    return g;
}

PiecewiseTable PiecewiseTable::zeros(const TauGrid& grid) {
    return {Profile(grid.n_neg + 1, 0.0), Profile(grid.n_pos + 1, 0.0)};
}

double PiecewiseTable::integral(const TauGrid& grid) const {
    return trapezoid(neg, grid.h_neg()) + trapezoid(pos, grid.h_pos());
}

double PiecewiseTable::eval(const TauGrid& grid, double tau) const {
    if (tau < 0.0) {
        return interpolate_piece(neg, -grid.tau2, grid.h_neg(), tau);
    }
    return interpolate_piece(pos, 0.0, grid.h_pos(), tau);
}

double ShiftDerivativeFunctional::evaluate(const FlatOutputSignal& y, double t) const {
    std::vector<double> d(n + 1);
    double acc = 0.0;
    for (const auto& atom : atoms) {
        const double shift = atom.at == Endpoint::Plus ? grid.tau1 : -grid.tau2;
        y.derivatives(t + shift, d);
        acc += atom.weight * d[atom.order];
    }
    auto add_piece = [&](int count, double h, auto node, auto value) {
        for (int i = 0; i <= count; ++i) {
            y.derivatives(t + node(i), d);
            double s = 0.0;
            for (int o = 0; o <= n && o < static_cast<int>(densities.size()); ++o) {
                s += value(o, i) * d[o];
            }
            acc += trap_weight(i, count, h) * s;
        }
    };
    add_piece(grid.n_neg, grid.h_neg(), [&](int i) { return grid.neg_node(i); },
              [&](int o, int i) { return densities[o].neg[i]; });
    add_piece(grid.n_pos, grid.h_pos(), [&](int i) { return grid.pos_node(i); },
              [&](int o, int i) { return densities[o].pos[i]; });
    return acc;
}

ShiftDerivativeFunctional input_functional(const FlatStructure& flat, const TransformedSystem& ts,
                                           const TauGrid& grid) {
    const int n = flat.n;
    ShiftDerivativeFunctional fn;
    fn.grid = grid;
    fn.n = n;
    for (int i = 0; i <= n; ++i) {
        if (flat.p1(i) != 0.0) {
            fn.atoms.push_back({flat.p1(i), Endpoint::Plus, i});
        }
        if (flat.p2(i) != 0.0) {
            fn.atoms.push_back({-ts.q1bar * flat.p2(i), Endpoint::Minus, i});
        }
    }
    fn.densities.assign(n + 1, PiecewiseTable::zeros(grid));
    if (n == 0) {
        return fn;
    }
    const CharacteristicMap& cmap = ts.cmap;
    for (int i = 0; i <= grid.n_neg; ++i) {
        const double z = cmap.psi(2, grid.tau2 + grid.neg_node(i));
        const Eigen::RowVectorXd row = -ts.q1bar * interpolate_row(ts.C, 1, z) * flat.Tc_inv;
        for (int o = 0; o < n; ++o) {
            fn.densities[o].neg[i] = row(o);
        }
    }
    for (int i = 0; i <= grid.n_pos; ++i) {
        const double z = cmap.psi(1, grid.tau1 - grid.pos_node(i));
        const Eigen::RowVectorXd row = -interpolate_row(ts.C, 0, z) * flat.Tc_inv;
        for (int o = 0; o < n; ++o) {
            fn.densities[o].pos[i] = row(o);
        }
    }
    return fn;
}

HccfCoefficients reduce_to_canonical(const ShiftDerivativeFunctional& functional) {
    const int n = functional.n;
    const TauGrid& grid = functional.grid;
    const double span = grid.tau1 + grid.tau2;

    std::vector<double> plus(n + 1, 0.0);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n + 1);
    for (const auto& atom : functional.atoms) {
        if (atom.order < 0 || atom.order > n) {
            throw InvalidInput("functional atom order out of range");
        }
        (atom.at == Endpoint::Plus ? plus[atom.order] : a(atom.order)) += atom.weight;
    }
    PiecewiseTable density = PiecewiseTable::zeros(grid);
    if (static_cast<int>(functional.densities.size()) > n) {
        axpy(density, 1.0, functional.densities[n]);
    }

    // Lower-order densities: repeated integration by parts toward +tau1.
    for (int i = 0; i < n && i < static_cast<int>(functional.densities.size()); ++i) {
        const PiecewiseTable& f = functional.densities[i];
        for (int k = i; k < n; ++k) {
            const int m = k - i;
            const double moment = integrate_against(grid, f, [&](double tau) {
                return std::pow(grid.tau1 - tau, m);
            });
            plus[k] += ((m % 2) ? -1.0 : 1.0) / factorial(m) * moment;
        }
        const int m = n - i;
        axpy(density, ((m % 2) ? -1.0 : 1.0) / factorial(m - 1), repeated_integral(grid, f, m - 1));
    }

    // Lower-order atoms at +tau1: Taylor expansion about -tau2 with integral remainder.
    for (int i = 0; i < n; ++i) {
        const double w = plus[i];
        if (w == 0.0) {
            continue;
        }
        for (int k = i; k < n; ++k) {
            a(k) += w * std::pow(span, k - i) / factorial(k - i);
        }
        const int m = n - i - 1;
        axpy(density, w,
             tabulate(grid, [&](double tau) { return std::pow(grid.tau1 - tau, m) / factorial(m); }));
    }

    if (std::abs(plus[n] - 1.0) > 1e-9) {
        throw AssumptionViolation("leading coefficient of y^(n)(t + tau1) is " + std::to_string(plus[n]) +
                                  ", expected 1");
    }
    return {grid, a, density};
}

double feedforward(const HccfCoefficients& coeffs, const FlatOutputSignal& plan, double t) {
    const int n = coeffs.n();
    const TauGrid& grid = coeffs.grid;
    std::vector<double> d(n + 1);
    plan.derivatives(t + grid.tau1, d);
    double u = d[n];
    plan.derivatives(t - grid.tau2, d);
    for (int i = 0; i <= n; ++i) {
        u += coeffs.a(i) * d[i];
    }
    u += integrate_against(grid, coeffs.a_fun, [&](double tau) {
        plan.derivatives(t + tau, d);
        return d[n];
    });
    return u;
}

Eigen::VectorXcd polynomial_roots(const Eigen::VectorXd& kappa) {
    const int n = static_cast<int>(kappa.size());
    if (n == 0) {
        return Eigen::VectorXcd(0);
    }
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        comp(i, i + 1) = 1.0;
    }
    comp.row(n - 1) = -kappa.transpose();
    return comp.eigenvalues();
}

bool is_hurwitz(const Eigen::VectorXd& kappa) {
    const Eigen::VectorXcd roots = polynomial_roots(kappa);
    for (int i = 0; i < roots.size(); ++i) {
        if (!(roots(i).real() < 0.0)) {
            return false;
        }
    }
    return true;
}

DesiredCoefficients desired_coefficients(double gamma, const Eigen::VectorXd& kappa, const TauGrid& grid) {
    const int n = static_cast<int>(kappa.size());
    const double span = grid.tau1 + grid.tau2;
    DesiredCoefficients out;
    out.coeffs.grid = grid;
    out.coeffs.a = Eigen::VectorXd::Zero(n + 1);
    for (int i = 0; i < n; ++i) {
        double v = kappa(i) * gamma;
        for (int k = 0; k <= i; ++k) {
            v += kappa(k) * std::pow(span, i - k) / factorial(i - k);
        }
        out.coeffs.a(i) = v;
    }
    out.coeffs.a(n) = gamma;
    out.coeffs.a_fun = tabulate(grid, [&](double tau) {
        double v = 0.0;
        for (int i = 0; i < n; ++i) {
            v += kappa(i) * std::pow(grid.tau1 - tau, n - i - 1) / factorial(n - i - 1);
        }
        return v;
    });
    out.kappa_hurwitz = is_hurwitz(kappa);
    out.gamma_admissible = std::abs(gamma) < 1.0;
    if (!out.kappa_hurwitz) {
        out.warnings.emplace_back("target polynomial is not Hurwitz; the closed loop will not be stable");
    }
    if (!out.gamma_admissible) {
        out.warnings.emplace_back("|gamma| >= 1; the neutral closed-loop dynamics are not stable");
    }
    return out;
}

std::complex<double> characteristic_value(const HccfCoefficients& coeffs, std::complex<double> s) {
    const int n = coeffs.n();
    const TauGrid& grid = coeffs.grid;
    const std::complex<double> back = std::exp(-grid.tau2 * s);
    std::complex<double> bracket = std::exp(grid.tau1 * s) + coeffs.a(n) * back;
    for (int i = 0; i <= grid.n_neg; ++i) {
        const double tau = grid.neg_node(i);
        bracket += trap_weight(i, grid.n_neg, grid.h_neg()) * coeffs.a_fun.neg[i] * std::exp(tau * s);
    }
    for (int i = 0; i <= grid.n_pos; ++i) {
        const double tau = grid.pos_node(i);
        bracket += trap_weight(i, grid.n_pos, grid.h_pos()) * coeffs.a_fun.pos[i] * std::exp(tau * s);
    }
    std::complex<double> value = std::pow(s, n) * bracket;
    for (int i = 0; i < n; ++i) {
        value += coeffs.a(i) * std::pow(s, i) * back;
    }
    return value;
}

HccfTransformer::HccfTransformer(const FlatStructure& flat, const TransformedSystem& ts, const TauGrid& grid)
    : flat_(flat), grid_(grid), q0_(ts.sys.q0) {
    if (q0_ == 0.0) {
        throw AssumptionViolation("q0 must be nonzero for the canonical-form transformation");
    }
    const int n = flat.n;
    const auto& sys = ts.sys;
    const double hn = grid.h_neg();
    const double hp = grid.h_pos();
    c_ = n > 0 ? Eigen::RowVectorXd(sys.c.transpose()) : Eigen::RowVectorXd(0);
    top_row_ = n > 0 ? Eigen::RowVectorXd(flat.Tc.row(n - 1) * sys.F) : Eigen::RowVectorXd(0);

    z_neg_.resize(grid.n_neg + 1);
    z_pos_.resize(grid.n_pos + 1);
    c2_neg_.resize(grid.n_neg + 1);
    c1_pos_.resize(grid.n_pos + 1);
    for (int l = 0; l <= grid.n_neg; ++l) {
        z_neg_[l] = ts.cmap.psi(2, l * hn);
        c2_neg_[l] = interpolate_row(ts.C, 1, z_neg_[l]);
    }
    for (int l = 0; l <= grid.n_pos; ++l) {
        z_pos_[l] = ts.cmap.psi(1, l * hp);
        c1_pos_[l] = interpolate_row(ts.C, 0, z_pos_[l]);
    }
    if (n == 0) {
        return;
    }

    const Eigen::MatrixXd step_neg = (-sys.F * hn).exp();
    const Eigen::MatrixXd step_pos = (sys.F * hp).exp();
    exp_neg_.assign(grid.n_neg + 1, Eigen::MatrixXd::Identity(n, n));
    exp_pos_.assign(grid.n_pos + 1, Eigen::MatrixXd::Identity(n, n));
    for (int k = 1; k <= grid.n_neg; ++k) {
        exp_neg_[k] = exp_neg_[k - 1] * step_neg;
    }
    for (int k = 1; k <= grid.n_pos; ++k) {
        exp_pos_[k] = exp_pos_[k - 1] * step_pos;
    }
    g_neg_.resize(grid.n_neg + 1);
    g_pos_.resize(grid.n_pos + 1);
    for (int k = 0; k <= grid.n_neg; ++k) {
        g_neg_[k] = exp_neg_[k] * sys.b / q0_;
    }
    for (int k = 0; k <= grid.n_pos; ++k) {
        g_pos_[k] = exp_pos_[k] * sys.b;
    }

    // Kernels of the Volterra equations for the delayed and predicted ODE states.
    cbar_neg_.resize(grid.n_neg + 1);
    for (int k = 0; k <= grid.n_neg; ++k) {
        Eigen::MatrixXd m = g_neg_[k] * c_;
        for (int l = 0; l <= k; ++l) {
            m += trap_weight(l, k, hn) * (g_neg_[k - l] * c2_neg_[l]);
        }
        cbar_neg_[k] = -m;
    }
    cbar_pos_.resize(grid.n_pos + 1);
    for (int k = 0; k <= grid.n_pos; ++k) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (int l = 0; l <= k; ++l) {
            m += trap_weight(l, k, hp) * (g_pos_[k - l] * c1_pos_[l]);
        }
        cbar_pos_[k] = -m;
    }
}

HccfState HccfTransformer::operator()(const Eigen::VectorXd& xi, const PdeProfiles& xbar) const {
    const int n = flat_.n;
    const TauGrid& grid = grid_;
    const double hn = grid.h_neg();
    const double hp = grid.h_pos();
    const int Nn = grid.n_neg;
    const int Np = grid.n_pos;

    std::vector<double> v2(Nn + 1);
    std::vector<double> v1(Np + 1);
    for (int l = 0; l <= Nn; ++l) {
        v2[l] = interpolate(xbar.x2, z_neg_[l]);
    }
    for (int l = 0; l <= Np; ++l) {
        v1[l] = interpolate(xbar.x1, z_pos_[l]);
    }

    std::vector<Eigen::VectorXd> past(Nn + 1, Eigen::VectorXd::Zero(n));
    std::vector<Eigen::VectorXd> future(Np + 1, Eigen::VectorXd::Zero(n));
    if (n > 0) {
        std::vector<Eigen::VectorXd> rhs(Nn + 1);
        for (int m = 0; m <= Nn; ++m) {
            Eigen::VectorXd r = exp_neg_[m] * xi;
            for (int l = 0; l <= m; ++l) {
                r -= trap_weight(l, m, hn) * v2[l] * g_neg_[m - l];
            }
            rhs[m] = std::move(r);
        }
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        past = solve_second_kind<Eigen::MatrixXd, Eigen::VectorXd>(
            I, [&](std::size_t m, std::size_t i) -> const Eigen::MatrixXd& { return cbar_neg_[m - i]; }, rhs, hn);

        rhs.assign(Np + 1, Eigen::VectorXd());
        for (int m = 0; m <= Np; ++m) {
            Eigen::VectorXd r = exp_pos_[m] * xi;
            for (int l = 0; l <= m; ++l) {
                r += trap_weight(l, m, hp) * v1[l] * g_pos_[m - l];
            }
            rhs[m] = std::move(r);
        }
        future = solve_second_kind<Eigen::MatrixXd, Eigen::VectorXd>(
            I, [&](std::size_t m, std::size_t i) -> const Eigen::MatrixXd& { return cbar_pos_[m - i]; }, rhs, hp);
    }

    HccfState st;
    st.grid = grid;
    st.eta = n > 0 ? Eigen::VectorXd(flat_.Tc * past[Nn]) : Eigen::VectorXd(0);
    st.eta_np1 = PiecewiseTable::zeros(grid);
    st.xi_neg.resize(Nn + 1);
    st.xi_pos = future;
    for (int m = 0; m <= Nn; ++m) {
        // Boundary value x1(0, t - m h) recovered from x2 at the end of its characteristic.
        double integral = 0.0;
        for (int l = 0; l <= m && n > 0; ++l) {
            integral += trap_weight(l, m, hn) * c2_neg_[l].dot(past[m - l]);
        }
        const double cx = n > 0 ? c_.dot(past[m]) : 0.0;
        const double x10 = (v2[m] - cx - integral) / q0_;
        const double top = n > 0 ? top_row_.dot(past[m]) : 0.0;
        st.eta_np1.neg[Nn - m] = x10 + top;
        st.xi_neg[Nn - m] = past[m];
    }
    for (int m = 0; m <= Np; ++m) {
        double integral = 0.0;
        for (int l = 0; l <= m && n > 0; ++l) {
            integral += trap_weight(l, m, hp) * c1_pos_[l].dot(future[m - l]);
        }
        const double top = n > 0 ? top_row_.dot(future[m]) : 0.0;
        st.eta_np1.pos[m] = v1[m] + integral + top;
    }
    return st;
}

HccfState hccf_transform(const FlatStructure& flat, const TransformedSystem& ts, const TauGrid& grid,
                         const Eigen::VectorXd& xi, const PdeProfiles& xbar) {
    return HccfTransformer(flat, ts, grid)(xi, xbar);
}

HccfSignal::HccfSignal(const HccfState& state, const FlatStructure& flat, double t)
    : state_(state), flat_(flat), t_(t) {}

void HccfSignal::derivatives(double t, std::span<double> out) const {
    const TauGrid& grid = state_.grid;
    const double tau = std::clamp(t - t_, -grid.tau2, grid.tau1);
    const int n = flat_.n;
    std::fill(out.begin(), out.end(), 0.0);
    if (n > 0) {
        const Eigen::VectorXd xi = tau < 0.0
                                       ? interpolate_piece(state_.xi_neg, -grid.tau2, grid.h_neg(), tau)
                                       : interpolate_piece(state_.xi_pos, 0.0, grid.h_pos(), tau);
        const Eigen::VectorXd y = flat_.Tc * xi;
        for (int i = 0; i < n && i < static_cast<int>(out.size()); ++i) {
            out[i] = y(i);
        }
    }
    if (static_cast<int>(out.size()) > n) {
        out[n] = state_.eta_np1.eval(grid, tau);
    }
}

StateParametrizer::StateParametrizer(const FlatStructure& flat, const TransformedSystem& ts)
    : flat_(flat),
      grid_(ts.sys.grid),
      phi1_(ts.cmap.phi_table(1)),
      phi2_(ts.cmap.phi_table(2)),
      tau1_(ts.cmap.tau1()),
      tau2_(ts.cmap.tau2()) {
    const int N = grid_.size();
    w1_.resize(N);
    w2_.resize(N);
    for (int k = 0; k < N; ++k) {
        if (flat.n > 0) {
            w1_[k] = ts.C[k].row(0) * flat.Tc_inv / ts.sys.lambda1[k];
            w2_[k] = ts.C[k].row(1) * flat.Tc_inv / ts.sys.lambda2[k];
        } else {
            w1_[k] = Eigen::RowVectorXd(0);
            w2_[k] = Eigen::RowVectorXd(0);
        }
    }
    const int n = flat.n;
    const int Q = 2 * n + 1;
    auto prefix = [&](const std::vector<Eigen::RowVectorXd>& w, const Profile& phi) {
        std::vector<Eigen::MatrixXd> out(N + 1, Eigen::MatrixXd::Zero(n, Q + 1));
        for (int k = 0; k < N; ++k) {
            out[k + 1] = out[k];
            double power = 1.0;
            for (int q = 0; q <= Q; ++q) {
                for (int o = 0; o < n; ++o) {
                    out[k + 1](o, q) += w[k](o) * power;
                }
                power *= phi[k];
            }
        }
        return out;
    };
    moments1_ = prefix(w1_, phi1_);
    moments2_ = prefix(w2_, phi2_);
}

// Same trapezoid sums as the generic path, grouped by the pieces of the plan:
// on the polynomial piece y^(o)(base + sgn phi) expands in powers of phi, so
// each group reduces to prefix sums of w(o) phi^q.
ParametrizedState StateParametrizer::evaluate_plan(const ReferencePlan& plan, double t) const {
    const int n = flat_.n;
    const int N = grid_.size();
    const int M = grid_.intervals();
    const double h = grid_.step();
    const double t0 = plan.t0();
    const double ts = plan.t_star();
    const double D = ts - t0;
    const int Q = 2 * n + 1;
    std::vector<double> binom((Q + 1) * (Q + 1), 0.0);
    for (int p = 0; p <= Q; ++p) {
        for (int q = 0; q <= p; ++q) {
            binom[p * (Q + 1) + q] = binomial(p, q);
        }
    }
    std::vector<double> rpow(Q + 1);

    // piece: -1 before t0, 0 on the polynomial, 1 after t_star
    auto piece_sum = [&](const std::vector<Eigen::MatrixXd>& pre, int lo, int hi, double base, double sgn,
                         int piece) {
        if (lo >= hi) {
            return 0.0;
        }
        const Eigen::MatrixXd m = pre[hi] - pre[lo];
        if (piece < 0) {
            return plan.y0() * m(0, 0);
        }
        if (piece > 0) {
            return plan.y_star() * m(0, 0);
        }
        const double A = (base - t0) / D;
        rpow[0] = 1.0;
        for (int q = 1; q <= Q; ++q) {
            rpow[q] = rpow[q - 1] * sgn / D;
        }
        double total = 0.0;
        double scale = 1.0;
        for (int o = 0; o < n; ++o) {
            const std::vector<double>& c = plan.derivative_coefficients(o);
            for (int p = 0; p < static_cast<int>(c.size()); ++p) {
                double acc = 0.0;
                double apow = 1.0;  // A^(p - q), built from q = p downwards
                for (int q = p; q >= 0; --q) {
                    acc += binom[p * (Q + 1) + q] * apow * rpow[q] * m(o, q);
                    apow *= A;
                }
                total += scale * c[p] * acc;
            }
            scale /= D;
        }
        return total;
    };

    Eigen::VectorXd d(n + 1);
    std::span<double> ds(d.data(), d.size());
    ParametrizedState out;
    plan.derivatives(t, ds);
    out.xi = flat_.Tc_inv * d.head(n);
    out.xbar.x1.assign(N, 0.0);
    out.xbar.x2.assign(N, 0.0);
    for (int k = 0; k <= M; ++k) {
        plan.derivatives(t + phi1_[k], ds);
        double v1 = flat_.p1.dot(d);
        plan.derivatives(t - phi2_[k], ds);
        double v2 = flat_.p2.dot(d);
        if (k > 0) {
            // line 1: s_j = t + phi1_k - phi1_j decreases with j
            const double base1 = t + phi1_[k];
            auto s1 = [&](int j) { return t + phi1_[k] - phi1_[j]; };
            int a = 0, b = k + 1;
            {
                int lo = 0, hi = k + 1;
                while (lo < hi) {
                    const int mid = (lo + hi) / 2;
                    if (s1(mid) >= ts) lo = mid + 1; else hi = mid;
                }
                a = lo;
                lo = a;
                hi = k + 1;
                while (lo < hi) {
                    const int mid = (lo + hi) / 2;
                    if (s1(mid) > t0) lo = mid + 1; else hi = mid;
                }
                b = lo;
            }
            double sum1 = piece_sum(moments1_, 0, a, base1, -1.0, 1) + piece_sum(moments1_, a, b, base1, -1.0, 0) +
                          piece_sum(moments1_, b, k + 1, base1, -1.0, -1);
            // line 2: s_j = t - phi2_k + phi2_j increases with j
            const double base2 = t - phi2_[k];
            auto s2 = [&](int j) { return t - phi2_[k] + phi2_[j]; };
            {
                int lo = 0, hi = k + 1;
                while (lo < hi) {
                    const int mid = (lo + hi) / 2;
                    if (s2(mid) <= t0) lo = mid + 1; else hi = mid;
                }
                a = lo;
                lo = a;
                hi = k + 1;
                while (lo < hi) {
                    const int mid = (lo + hi) / 2;
                    if (s2(mid) < ts) lo = mid + 1; else hi = mid;
                }
                b = lo;
            }
            double sum2 = piece_sum(moments2_, 0, a, base2, 1.0, -1) + piece_sum(moments2_, a, b, base2, 1.0, 0) +
                          piece_sum(moments2_, b, k + 1, base2, 1.0, 1);
            // end nodes carry half weight
            for (int j : {0, k}) {
                plan.derivatives(s1(j), ds);
                sum1 -= 0.5 * w1_[j].dot(d.head(n));
                plan.derivatives(s2(j), ds);
                sum2 -= 0.5 * w2_[j].dot(d.head(n));
            }
            v1 -= h * sum1;
            v2 += h * sum2;
        }
        out.xbar.x1[k] = v1;
        out.xbar.x2[k] = v2;
    }
    return out;
}

ParametrizedState StateParametrizer::operator()(const FlatOutputSignal& y, double t) const {
    const int n = flat_.n;
    check_window(y, t - tau2_, t + tau1_);
    if (y.max_order() < n) {
        throw InvalidInput("signal provides fewer derivatives than the ODE order");
    }
    if (const auto* plan = dynamic_cast<const ReferencePlan*>(&y); plan && n > 0 && plan->degree() <= 2 * n + 1) {
        return evaluate_plan(*plan, t);
    }
    const int N = grid_.size();
    const int M = grid_.intervals();
    const double h = grid_.step();
    Eigen::VectorXd d(n + 1);
    std::span<double> ds(d.data(), d.size());

    ParametrizedState out;
    y.derivatives(t, ds);
    out.xi = flat_.Tc_inv * d.head(n);
    out.xbar.x1.assign(N, 0.0);
    out.xbar.x2.assign(N, 0.0);
    for (int k = 0; k <= M; ++k) {
        y.derivatives(t + phi1_[k], ds);
        double v1 = flat_.p1.dot(d);
        y.derivatives(t - phi2_[k], ds);
        double v2 = flat_.p2.dot(d);
        if (n > 0) {
            for (int j = 0; j <= k; ++j) {
                const double w = trap_weight(j, k, h);
                y.derivatives(t + phi1_[k] - phi1_[j], ds);
                v1 -= w * w1_[j].dot(d.head(n));
                y.derivatives(t - phi2_[k] + phi2_[j], ds);
                v2 += w * w2_[j].dot(d.head(n));
            }
        }
        out.xbar.x1[k] = v1;
        out.xbar.x2[k] = v2;
    }
    return out;
}

ParametrizedState parametrize_state(const FlatStructure& flat, const TransformedSystem& ts,
                                    const FlatOutputSignal& y, double t) {
    return StateParametrizer(flat, ts)(y, t);
}

double flat_feedback(const HccfCoefficients& a, const HccfCoefficients& abar, const HccfState& state,
                     const FlatOutputSignal& plan, double t) {
    const int n = a.n();
    if (abar.n() != n) {
        throw InvalidInput("coefficient orders differ");
    }
    const TauGrid& grid = state.grid;
    if (grid.n_neg != a.grid.n_neg || grid.n_pos != a.grid.n_pos || grid.n_neg != abar.grid.n_neg ||
        grid.n_pos != abar.grid.n_pos) {
        throw InvalidInput("coefficient tables and state use different delay grids");
    }
    std::vector<double> d(n + 1);
    double u = feedforward(a, plan, t);
    plan.derivatives(t - grid.tau2, d);
    u += (a.a(n) - abar.a(n)) * (state.eta_np1.neg[0] - d[n]);
    for (int i = 0; i < n; ++i) {
        u += (a.a(i) - abar.a(i)) * (state.eta(i) - d[i]);
    }
    for (int i = 0; i <= grid.n_neg; ++i) {
        plan.derivatives(t + grid.neg_node(i), d);
        u += trap_weight(i, grid.n_neg, grid.h_neg()) * (a.a_fun.neg[i] - abar.a_fun.neg[i]) *
             (state.eta_np1.neg[i] - d[n]);
    }
    for (int i = 0; i <= grid.n_pos; ++i) {
        plan.derivatives(t + grid.pos_node(i), d);
        u += trap_weight(i, grid.n_pos, grid.h_pos()) * (a.a_fun.pos[i] - abar.a_fun.pos[i]) *
             (state.eta_np1.pos[i] - d[n]);
    }
    return u;
}

} // namespace hypctrl
