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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "hypctrl/volterra.hpp"
#include "support.hpp"

using namespace hypctrl;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool pass, const std::string& what) {
    std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", what.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0, double e = 0, double g = 0) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a, b, c, d, e, g);
    return buf;
}

double rms_until(const SimResult& r, double t_end) {
    double acc = 0.0;
    int count = 0;
    for (std::size_t i = 0; i + 1 < r.t.size() && r.t[i] < t_end - 1e-12; ++i) {
        const double d = r.u[i] - r.u_ref[i];
        acc += d * d;
        ++count;
    }
    return std::sqrt(acc / count);
}

double max_tracking(const SimResult& r, double after, double until) {
    double m = 0.0;
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        if (r.t[i] > after && r.t[i] <= until + 1e-12) {
            m = std::max(m, std::abs(r.xi[i](0) - r.xi_ref[i](0)));
        }
    }
    return m;
}

double max_input_gap(const SimResult& a, const SimResult& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < std::min(a.u.size(), b.u.size()); ++i) {
        m = std::max(m, std::abs(a.u[i] - b.u[i]));
    }
    return m;
}

// manufactured Volterra problem: f = cos t, k = exp(t - s) on [0, 2]
double volterra_error(int m) {
    std::vector<double> t(m + 1), g(m + 1);
    for (int i = 0; i <= m; ++i) {
        t[i] = 2.0 * i / m;
        g[i] = std::cos(t[i]) + 0.5 * (std::exp(t[i]) - std::cos(t[i]) + std::sin(t[i]));
    }
    const auto f = solve_second_kind(1.0, [&](std::size_t j, std::size_t i) { return std::exp(t[j] - t[i]); },
                                     std::span<const double>(g), 2.0 / m);
    double e = 0.0;
    for (int i = 0; i <= m; ++i) {
        e = std::max(e, std::abs(f[i] - std::cos(t[i])));
    }
    return e;
}

double round_trip(const TransformedSystem& ts, const PdeProfiles& x) {
    const PdeProfiles b = pull_back(ts, push_forward(ts, x));
    const double s = std::max(test::sup(x.x1), test::sup(x.x2));
    return std::max(test::sup_diff(b.x1, x.x1), test::sup_diff(b.x2, x.x2)) / s;
}

class SineSum : public FlatOutputSignal {
public:
    explicit SineSum(std::mt19937& rng) {
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (int i = 0; i < 3; ++i) {
            a_[i] = U(rng);
            w_[i] = 1.0 + 2.0 * std::abs(U(rng));
            p_[i] = 3.0 * U(rng);
        }
    }
    int max_order() const override { return 64; }
    void derivatives(double t, std::span<double> out) const override {
        for (std::size_t o = 0; o < out.size(); ++o) {
            double s = 0.0;
            for (int i = 0; i < 3; ++i) {
                s += a_[i] * std::pow(w_[i], static_cast<double>(o)) *
                     std::sin(w_[i] * t + p_[i] + 0.5 * std::numbers::pi * static_cast<double>(o));
            }
            out[o] = s;
        }
    }

private:
    double a_[3], w_[3], p_[3];
};

double consistency_residual(int M) {
    const HyperbolicSystem sys = test::rope(M);
    const TransformedSystem ts = transform_system(sys);
    const FlatStructure flat = flat_structure(sys);
    const ReferencePlan plan(0.0, 1.0, 0.8, 3.5, 2);
    const double t = 2.1, d = 1e-5, h = sys.grid.step();
    const auto s0 = parametrize_state(flat, ts, plan, t);
    const auto sp = parametrize_state(flat, ts, plan, t + d);
    const auto sm = parametrize_state(flat, ts, plan, t - d);
    double worst = 0.0;
    for (int k = 1; k < M; ++k) {
        const Eigen::Vector2d Cxi = ts.C[k] * s0.xi;
        worst = std::max(worst, std::abs((sp.xbar.x1[k] - sm.xbar.x1[k]) / (2 * d) -
                                         sys.lambda1[k] * (s0.xbar.x1[k + 1] - s0.xbar.x1[k - 1]) / (2 * h) - Cxi(0)));
        worst = std::max(worst, std::abs((sp.xbar.x2[k] - sm.xbar.x2[k]) / (2 * d) +
                                         sys.lambda2[k] * (s0.xbar.x2[k + 1] - s0.xbar.x2[k - 1]) / (2 * h) - Cxi(1)));
    }
    const Eigen::VectorXd ode = (sp.xi - sm.xi) / (2 * d) - sys.F * s0.xi - sys.b * s0.xbar.x1[0];
    return std::max(worst, ode.cwiseAbs().maxCoeff());
}

} // namespace

int main() {
    constexpr int M = 400;
    constexpr double dt = 2.5e-3;

    {
        const auto t0 = Clock::now();
        const CharacteristicMap cm = characteristic_map(test::rope(M));
        const double secs = seconds_since(t0);
        const bool ok = std::abs(cm.tau1() - 0.667) <= 0.005 && std::abs(cm.tau2() - 0.667) <= 0.005 && secs < 1.0;
        report(1, ok, fmt("tau1 = %.5f s, tau2 = %.5f s (target 0.667 +- 0.005), %.3f s", cm.tau1(), cm.tau2(), secs));
    }
    {
        const auto t0 = Clock::now();
        const HyperbolicSystem sys = test::rope(M);
        const Eigen::VectorXcd ev = sys.F.eigenvalues();
        const double secs = seconds_since(t0);
        const double lo = std::min(ev(0).real(), ev(1).real());
        const double hi = std::max(ev(0).real(), ev(1).real());
        const double im = std::abs(ev(0).imag()) + std::abs(ev(1).imag());
        const bool ok = std::abs(hi) <= 0.01 && std::abs(lo + 3.43) <= 0.01 && im == 0.0 && secs < 1.0;
        report(2, ok, fmt("eig(F) = {%.6f, %.6f} (target {0, -3.43 +- 0.01}), %.3f s", hi, lo, secs));
    }

    // Closed-loop benchmark runs, gamma in {-0.3, 0, 0.3}, horizon 10 s.
    const HyperbolicSystem sys = test::rope(M);
    const double gammas[3] = {-0.3, 0.0, 0.3};
    SimResult runs[3];
    for (int g = 0; g < 3; ++g) {
        const auto t0 = Clock::now();
        SimConfig cfg = test::benchmark_config(sys, gammas[g], dt, 10.0);
        cfg.record_target = gammas[g] == 0.0;
        runs[g] = run(sys, cfg);
        std::printf("  run gamma = %+.1f: %.1f s\n", gammas[g], seconds_since(t0));
    }
    const SimResult& base = runs[1];

    {
        const double e5 = max_tracking(base, 2.5, 5.0);
        const double e10 = max_tracking(base, 2.5, 10.0);
        report(3, e5 < 0.05 && e10 < 0.05,
               fmt("gamma = 0: max |xi1 - xi1_r| = %.3e on (2.5, 5], %.3e on (2.5, 10] (limit 0.05 = 1%% of 5 m)", e5,
                   e10));
    }
    {
        double u10[3], u5[3];
        bool ok = true;
        const double expected[3] = {0.12, 0.16, 0.21};
        for (int g = 0; g < 3; ++g) {
            u10[g] = runs[g].metrics.u_rms;
            u5[g] = rms_until(runs[g], 5.0);
            ok = ok && std::abs(u10[g] - expected[g]) <= 0.2 * expected[g];
        }
        ok = ok && u10[0] < u10[1] && u10[1] < u10[2];
        report(4, ok,
               fmt("u_rms over [0, 10] = {%.4f, %.4f, %.4f} (expected {0.12, 0.16, 0.21} +- 20%%, increasing); "
                   "over [0, 5] = {%.4f, %.4f, %.4f}",
                   u10[0], u10[1], u10[2], u5[0], u5[1], u5[2]));
    }
    {
        auto pair = [&](int m, double step) {
            const HyperbolicSystem s = test::rope(m);
            SimConfig cfg = test::benchmark_config(s, 0.0, step, 5.0);
            cfg.shadow_backstepping = true;
            const ControllerDesign design = design_controllers(s, cfg);
            const SimResult flat = run(design, cfg);
            cfg.controller = ControllerType::Backstepping;
            cfg.shadow_backstepping = false;
            const SimResult bs = run(design, cfg);
            return std::make_tuple(max_input_gap(flat, bs), flat.metrics.max_shadow_deviation, flat.metrics.u_rms);
        };
        const auto t0 = Clock::now();
        const auto [d1, s1, u1] = pair(M, dt);
        const auto [d2, s2, u2] = pair(2 * M, dt / 2);
        const bool ok = d1 < 1e-2 && d1 / d2 >= 2.0;
        report(5, ok,
               fmt("max |u_flat - u_bs| = %.3e at dt = 2.5e-3, %.3e refined (ratio %.2f, need >= 2); "
                   "same-trajectory evaluation %.3e -> %.3e",
                   d1, d2, d1 / d2, s1, s2));
        std::printf("  refinement: u_rms over [0, 5] %.4f -> %.4f (%.2f%%), %.1f s\n", u1, u2,
                    100.0 * std::abs(u2 - u1) / u1, seconds_since(t0));
    }
    {
        double worst = 0.0;
        for (std::size_t i = 0; i < base.t.size() && base.t[i] <= base.tau1; ++i) {
            for (int g : {0, 2}) {
                worst = std::max(worst, std::abs(runs[g].xi[i](0) - base.xi[i](0)));
            }
        }
        report(6, worst < 1e-6, fmt("max |xi1(gamma) - xi1(0)| on [0, tau1] = %.3e (limit 1e-6)", worst));
    }
    {
        bool ok = true;
        std::string detail;
        auto part = [&](bool pass, const std::string& text) {
            ok = ok && pass;
            std::printf("  %s %s\n", pass ? "ok  " : "FAIL", text.c_str());
        };

        double pde_prev = 0.0, order = 0.0, bc = 0.0;
        for (int m : {100, 200, 400}) {
            const TransformedSystem ts = transform_system(test::rope(m));
            const KernelResiduals r = kernel_residuals(ts.K, ts.sys, ts.coupling);
            bc = std::max(bc, r.max_bc());
            const double p = r.pde.maxCoeff();
            if (pde_prev > 0.0) {
                order = std::log2(pde_prev / p);
            }
            pde_prev = p;
        }
        part(bc < 1e-8 && order > 0.9,
             fmt("kernel: boundary residual %.2e (< 1e-8), interior residual %.2e at M = 400, observed order %.2f", bc,
                 pde_prev, order));

        const double e1 = volterra_error(80), e2 = volterra_error(160);
        const double vo = std::log2(e1 / e2);
        part(vo >= 1.9 && vo <= 2.1, fmt("Volterra: manufactured-solution order %.3f (in [1.9, 2.1])", vo));

        const TransformedSystem ts400 = transform_system(test::rope(M));
        const TransformedSystem ts200 = transform_system(test::rope(200));
        const double rt400 = round_trip(ts400, test::sin_cubed_ic(ts400.sys.grid));
        const double rt200 = round_trip(ts200, test::sin_cubed_ic(ts200.sys.grid));
        const FlatStructure flat = flat_structure(ts400.sys);
        const TauGrid grid = TauGrid::make(ts400.cmap.tau1(), ts400.cmap.tau2(), dt);
        std::mt19937 rng(42);
        double hccf_rt = 0.0;
        for (int trial = 0; trial < 3; ++trial) {
            std::uniform_real_distribution<double> U(-1.0, 1.0);
            const Eigen::Vector2d xi(U(rng), U(rng));
            PdeProfiles xb{test::random_profile(ts400.sys.grid, rng), test::random_profile(ts400.sys.grid, rng)};
            const double shift = ts400.sys.q0 * xb.x1[0] + ts400.sys.c.dot(xi) - xb.x2[0];
            for (double& v : xb.x2) {
                v += shift;
            }
            const HccfState h = hccf_transform(flat, ts400, grid, xi, xb);
            const auto s = parametrize_state(flat, ts400, HccfSignal(h, flat, 0.0), 0.0);
            const double norm = std::max({xi.cwiseAbs().maxCoeff(), test::sup(xb.x1), test::sup(xb.x2)});
            hccf_rt = std::max(hccf_rt, std::max({(s.xi - xi).cwiseAbs().maxCoeff(), test::sup_diff(s.xbar.x1, xb.x1),
                                                  test::sup_diff(s.xbar.x2, xb.x2)}) / norm);
        }
        part(rt400 < 1e-2 && rt400 < rt200 && hccf_rt < 1e-2,
             fmt("round trips: E/K %.2e at M = 400 (%.2e at M = 200), HCCF %.2e (relative L-inf, limit 1e-2)", rt400,
                 rt200, hccf_rt));

        const double l1 = consistency_residual(100), l2 = consistency_residual(200), l3 = consistency_residual(400);
        part(l2 < l1 && l3 < l2,
             fmt("flat parametrization: dynamics residual %.2e -> %.2e -> %.2e for M = 100, 200, 400", l1, l2, l3));

        const ShiftDerivativeFunctional L = input_functional(flat, ts400, grid);
        const HccfCoefficients a = reduce_to_canonical(L);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const SineSum y(rng);
            const double raw = L.evaluate(y, 0.1 * i);
            worst = std::max(worst, std::abs(raw - feedforward(a, y, 0.1 * i)) / (1.0 + std::abs(raw)));
        }
        part(worst < 1e-3, fmt("functional reduction: raw vs canonical on 20 random signals, worst %.2e", worst));

        part(base.metrics.eps_residual < 0.05,
             fmt("error law: normalized residual of eps'' + 9 eps' + 20 eps = %.2f%% (limit 5%%)",
                 100.0 * base.metrics.eps_residual));
        const TargetDiagnostics& q = *base.metrics.target;
        part(q.quiescence_ratio < 0.05,
             fmt("quiescence: sup |eps_bar| for t > tau1 + tau2 + 0.2 is %.2f%% of its initial value (limit 5%%)",
                 100.0 * q.quiescence_ratio));
        report(7, ok, "property suite (details above)");
    }
    return failures == 0 ? 0 : 1;
}
