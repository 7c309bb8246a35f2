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

#include "hypctrl/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "hypctrl/io.hpp"

namespace hypctrl {

namespace {

Eigen::Matrix2d interpolate_matrix(const std::vector<Eigen::Matrix2d>& table, int k, double w) {
    if (w == 0.0 || k + 1 >= static_cast<int>(table.size())) {
        return table[k];
    }
    return (1.0 - w) * table[k] + w * table[k + 1];
}

double lerp(const Profile& v, int k, double w) {
    return w == 0.0 ? v[k] : (1.0 - w) * v[k] + w * v[k + 1];
}

} // namespace

std::string to_string(ControllerType type) {
    switch (type) {
    case ControllerType::None: return "none";
    case ControllerType::Feedforward: return "feedforward";
    case ControllerType::Flatness: return "flatness";
    case ControllerType::Backstepping: return "backstepping";
    }
    return "unknown";
}

ControllerType parse_controller(const std::string& name) {
    if (name == "none") return ControllerType::None;
    if (name == "feedforward") return ControllerType::Feedforward;
    if (name == "flatness") return ControllerType::Flatness;
    if (name == "backstepping") return ControllerType::Backstepping;
    throw InvalidInput("unknown controller '" + name + "' (expected none, feedforward, flatness, backstepping)");
}

PlantStepper::PlantStepper(const HyperbolicSystem& sys, const CharacteristicMap& cmap, double dt)
    : sys_(sys), dt_(dt) {
    if (!(dt > 0.0)) {
        throw InvalidInput("time step must be positive");
    }
    const int M = sys.grid.intervals();
    const Profile& phi1 = cmap.phi_table(1);
    const Profile& phi2 = cmap.phi_table(2);
    const double tau1 = cmap.tau1();
    auto locate = [&](Foot& f, double z) {
        const double s = std::clamp(z, 0.0, 1.0) * M;
        f.index = std::min(static_cast<int>(s), M - 1);
        f.weight = s - f.index;
        f.A = interpolate_matrix(sys.A, f.index, f.weight);
    };
    foot1_.resize(M + 1);
    foot2_.resize(M + 1);
    for (int k = 0; k <= M; ++k) {
        Foot& f1 = foot1_[k];
        const double s1 = phi1[k] + dt;
        if (s1 <= tau1 && k < M) {
            locate(f1, cmap.psi(1, s1));
            f1.source_time = dt;
        } else {
            const double rest = tau1 - phi1[k];
            f1.interior = false;
            f1.theta = 1.0 - rest / dt;
            f1.source_time = rest;
            locate(f1, 1.0);
        }
        Foot& f2 = foot2_[k];
        const double s2 = phi2[k] - dt;
        if (s2 >= 0.0 && k > 0) {
            locate(f2, cmap.psi(2, s2));
            f2.source_time = dt;
        } else {
            f2.interior = false;
            f2.theta = 1.0 - phi2[k] / dt;
            f2.source_time = phi2[k];
            locate(f2, 0.0);
        }
    }
}

PlantState PlantStepper::step(const PlantState& s, double u) const {
    const int M = sys_.grid.intervals();
    PlantState next;
    next.t = s.t + dt_;
    next.x1.assign(M + 1, 0.0);
    next.x2.assign(M + 1, 0.0);

    auto source = [&](const Foot& f, int row) {
        const Eigen::Vector2d x(lerp(s.x1, f.index, f.weight), lerp(s.x2, f.index, f.weight));
        return f.source_time * f.A.row(row).dot(x);
    };

    for (int k = 0; k <= M; ++k) {
        const Foot& f = foot1_[k];
        if (f.interior) {
            next.x1[k] = lerp(s.x1, f.index, f.weight) + source(f, 0);
        }
    }
    next.xi = s.xi;
    if (sys_.n > 0) {
        next.xi = s.xi + dt_ * (sys_.F * s.xi + sys_.b * s.x1[0]);
    }
    const double cx_old = sys_.n > 0 ? sys_.c.dot(s.xi) : 0.0;
    const double cx_new = sys_.n > 0 ? sys_.c.dot(next.xi) : 0.0;
    const double x20_old = sys_.q0 * s.x1[0] + cx_old;
    const double x20_new = sys_.q0 * next.x1[0] + cx_new;
    for (int k = 0; k <= M; ++k) {
        const Foot& f = foot2_[k];
        if (f.interior) {
            next.x2[k] = lerp(s.x2, f.index, f.weight) + source(f, 1);
        } else {
            next.x2[k] = (1.0 - f.theta) * x20_old + f.theta * x20_new + source(f, 1);
        }
    }
    const double x1M_new = sys_.q1 * next.x2[M] + u;
    for (int k = 0; k <= M; ++k) {
        const Foot& f = foot1_[k];
        if (!f.interior) {
            next.x1[k] = (1.0 - f.theta) * s.x1[M] + f.theta * x1M_new + source(f, 0);
        }
    }
    next.x1[M] = x1M_new;
    next.x2[0] = x20_new;
    return next;
}

PlantState step(const PlantState& state, double u, const HyperbolicSystem& sys, const CharacteristicMap& cmap,
                double dt) {
    return PlantStepper(sys, cmap, dt).step(state, u);
}

CharacteristicPlant::Line CharacteristicPlant::make_line(const CharacteristicMap& cmap, int component, double dt) {
    const double tau = cmap.tau(component);
    Line line;
    const auto full = static_cast<int>(std::floor(tau / dt + 1e-9));
    for (int j = 0; j <= full; ++j) {
        line.s.push_back(j * dt);
    }
    if (tau - full * dt > 1e-9 * dt) {
        line.s.push_back(tau);
        line.partial = true;
    } else {
        line.s.back() = tau;
    }
    for (double s : line.s) {
        line.z.push_back(cmap.psi(component, s));
    }
    line.z.front() = 0.0;
    line.z.back() = 1.0;
    return line;
}

void CharacteristicPlant::locate(const Line& line, double s, int& index, double& weight) {
    const int last = static_cast<int>(line.s.size()) - 1;
    if (s <= 0.0) {
        index = 0;
        weight = 0.0;
        return;
    }
    if (s >= line.s[last]) {
        index = last - 1;
        weight = 1.0;
        return;
    }
    const auto it = std::upper_bound(line.s.begin(), line.s.end(), s);
    index = std::min(static_cast<int>(std::distance(line.s.begin(), it)) - 1, last - 1);
    weight = (s - line.s[index]) / (line.s[index + 1] - line.s[index]);
}

double CharacteristicPlant::lerp(const Profile& v, int index, double weight) {
    return weight == 0.0 ? v[index] : (1.0 - weight) * v[index] + weight * v[index + 1];
}

CharacteristicPlant::CharacteristicPlant(const HyperbolicSystem& sys, const CharacteristicMap& cmap, double dt,
                                         const PlantState& initial)
    : sys_(sys), dt_(dt), t_(initial.t), xi_(initial.xi) {
    if (!(dt > 0.0)) {
        throw InvalidInput("time step must be positive");
    }
    if (!(dt < std::min(cmap.tau1(), cmap.tau2()))) {
        throw InvalidInput("time step must be shorter than both transport times");
    }
    const int M = sys.grid.intervals();
    if (static_cast<int>(initial.x1.size()) != M + 1 || static_cast<int>(initial.x2.size()) != M + 1) {
        throw InvalidInput("initial profiles must have M + 1 samples");
    }
    line1_ = make_line(cmap, 1, dt);
    line2_ = make_line(cmap, 2, dt);
    auto fill = [&](Line& line, const Profile& x0, const Line& other, int other_component) {
        for (double z : line.z) {
            line.value.push_back(interpolate(x0, z));
            const double s = z * sys.grid.intervals();
            const int k = std::min(static_cast<int>(s), M - 1);
            line.A.push_back(interpolate_matrix(sys.A, k, s - k));
            int idx = 0;
            double w = 0.0;
            locate(other, cmap.phi(other_component, z), idx, w);
            line.other_index.push_back(idx);
            line.other_weight.push_back(w);
        }
    };
    fill(line1_, initial.x1, line2_, 2);
    fill(line2_, initial.x2, line1_, 1);
    for (int k = 0; k <= M; ++k) {
        int idx = 0;
        double w = 0.0;
        locate(line1_, cmap.phi_table(1)[k], idx, w);
        out1_index_.push_back(idx);
        out1_weight_.push_back(w);
        locate(line2_, cmap.phi_table(2)[k], idx, w);
        out2_index_.push_back(idx);
        out2_weight_.push_back(w);
    }
}

int CharacteristicPlant::nodes(int component) const {
    return static_cast<int>((component == 1 ? line1_ : line2_).s.size());
}

void CharacteristicPlant::impose_input(double u) {
    Line& l1 = line1_;
    l1.value.back() = sys_.q1 * line2_.value.back() + u;
    if (pending_) {
        const int K1 = static_cast<int>(l1.s.size());
        const double theta = 1.0 - (l1.s[K1 - 1] - l1.s[K1 - 2]) / dt_;
        l1.value[K1 - 2] = (1.0 - theta) * pending_old_ + theta * l1.value.back() + pending_source_;
        pending_ = false;
    }
}

void CharacteristicPlant::advance(double u) {
    const Line& l1 = line1_;
    const Line& l2 = line2_;
    const int K1 = static_cast<int>(l1.s.size());
    const int K2 = static_cast<int>(l2.s.size());
    // source A x at node j of a line, with the other component read off its own line
    auto source1 = [&](int j) {
        const double x2 = lerp(l2.value, l1.other_index[j], l1.other_weight[j]);
        return l1.A[j](0, 0) * l1.value[j] + l1.A[j](0, 1) * x2;
    };
    auto source2 = [&](int j) {
        const double x1 = lerp(l1.value, l2.other_index[j], l2.other_weight[j]);
        return l2.A[j](1, 0) * x1 + l2.A[j](1, 1) * l2.value[j];
    };

    // x1 travels towards z = 0: node j takes node j + 1; with a short last cell
    // the node before it picks up the boundary value inside the step.
    const int crossing = l1.partial ? K1 - 2 : -1;
    Profile x1(K1);
    for (int j = 0; j < K1 - 1; ++j) {
        if (j != crossing) {
            x1[j] = l1.value[j + 1] + dt_ * source1(j + 1);
        }
    }
    Eigen::VectorXd xi = xi_;
    if (sys_.n > 0) {
        xi = xi_ + dt_ * (sys_.F * xi_ + sys_.b * l1.value.front());
    }

    // x2 travels towards z = 1: node j takes node j - 1; a short last cell
    // takes its foot from inside the previous cell.
    Profile x2(K2);
    x2[0] = sys_.q0 * x1[0] + (sys_.n > 0 ? sys_.c.dot(xi) : 0.0);
    for (int j = 1; j < K2; ++j) {
        if (l2.partial && j == K2 - 1) {
            const double rest = l2.s[j] - l2.s[j - 1];
            const double w = rest / dt_;
            const double v = (1.0 - w) * l2.value[j - 2] + w * l2.value[j - 1];
            const double src = (1.0 - w) * source2(j - 2) + w * source2(j - 1);
            x2[j] = v + dt_ * src;
        } else {
            x2[j] = l2.value[j - 1] + dt_ * source2(j - 1);
        }
    }
    x1[K1 - 1] = sys_.q1 * x2[K2 - 1] + u;
    if (crossing >= 0) {
        const double rest = l1.s[K1 - 1] - l1.s[crossing];
        const double theta = 1.0 - rest / dt_;
        pending_old_ = l1.value[K1 - 1];
        pending_source_ = rest * source1(K1 - 1);
        pending_ = true;
        x1[crossing] = (1.0 - theta) * pending_old_ + theta * x1[K1 - 1] + pending_source_;
    }
    line1_.value = std::move(x1);
    line2_.value = std::move(x2);
    xi_ = std::move(xi);
    t_ += dt_;
}

PlantState CharacteristicPlant::state() const {
    PlantState s;
    s.t = t_;
    s.xi = xi_;
    const std::size_t N = out1_index_.size();
    s.x1.resize(N);
    s.x2.resize(N);
    for (std::size_t k = 0; k < N; ++k) {
        s.x1[k] = lerp(line1_.value, out1_index_[k], out1_weight_[k]);
        s.x2[k] = lerp(line2_.value, out2_index_[k], out2_weight_[k]);
    }
    return s;
}

ControllerDesign design_controllers(const HyperbolicSystem& sys, const SimConfig& config) {
    if (!(config.dt > 0.0) || !(config.T_end > 0.0)) {
        throw InvalidInput("dt and T_end must be positive");
    }
    const ValidationReport report = validate(sys);
    if (!report.ok()) {
        throw AssumptionViolation("system violates the design assumptions: " + report.summary());
    }
    if (config.kappa.size() != sys.n) {
        throw InvalidInput("kappa needs " + std::to_string(sys.n) + " coefficients");
    }
    TransformedSystem ts = transform_system(sys, config.kernel_options);
    FlatStructure flat = flat_structure(sys);
    const TauGrid grid = TauGrid::make(ts.cmap.tau1(), ts.cmap.tau2(), config.dt);
    HccfCoefficients a = reduce_to_canonical(input_functional(flat, ts, grid));
    DesiredCoefficients desired = desired_coefficients(config.gamma, config.kappa, grid);

    const ReferenceSpec& ref = config.reference;
    double scale = 1.0;
    if (ref.component >= 0) {
        scale = flat.output_scale(ref.component);
    }
    ReferencePlan plan(ref.y0 / scale, ref.y_star / scale, ref.t0, ref.t_star, sys.n);

    const double q1cl = config.q1cl.value_or(-config.gamma / sys.q0);
    BacksteppingGains bs = backstepping_gains(ts, config.kappa, q1cl);
    if (config.k) {
        if (config.k->size() != sys.n) {
            throw InvalidInput("gain k needs " + std::to_string(sys.n) + " entries");
        }
        // An explicit gain replaces the placed one; recompute the dependent tables.
        Eigen::VectorXd kappa_equiv = Eigen::VectorXd::Zero(sys.n);
        const Eigen::MatrixXd Acl = sys.F + sys.b * config.k->transpose();
        Eigen::VectorXcd ev = Acl.eigenvalues();
        Eigen::VectorXcd poly = Eigen::VectorXcd::Zero(sys.n + 1);
        poly(0) = 1.0;
        for (int i = 0; i < ev.size(); ++i) {
            for (int j = i + 1; j >= 1; --j) {
                poly(j) = poly(j) - ev(i) * poly(j - 1);
            }
        }
        for (int i = 0; i < sys.n; ++i) {
            kappa_equiv(i) = poly(sys.n - i).real();
        }
        bs = backstepping_gains(ts, kappa_equiv, q1cl);
    }

    std::vector<std::string> warnings = desired.warnings;
    warnings.insert(warnings.end(), bs.warnings.begin(), bs.warnings.end());
    HccfTransformer hccf(flat, ts, grid);
    StateParametrizer parametrizer(flat, ts);
    return ControllerDesign{std::move(ts), std::move(flat), grid, std::move(a), std::move(desired), std::move(plan),
                            scale, std::move(hccf), std::move(parametrizer), std::move(bs), std::move(warnings)};
}

ReferencePoint reference_at(const ControllerDesign& design, double t) {
    ReferencePoint r;
    ParametrizedState ps = design.parametrizer(design.plan, t);
    r.xi = std::move(ps.xi);
    r.xbar = std::move(ps.xbar);
    r.ubar = feedforward(design.a, design.plan, t);
    const PdeProfiles x_tilde = apply_volterra(design.ts.K_inv, r.xbar, 1.0);
    r.u = input_unmap(design.ts, r.ubar, x_tilde);
    r.x = unscale(design.ts.gains, x_tilde);
    return r;
}

SimResult run(const HyperbolicSystem& sys, const SimConfig& config) {
    return run(design_controllers(sys, config), config);
}

SimResult run(const ControllerDesign& design, const SimConfig& config) {
    const TransformedSystem& ts = design.ts;
    const HyperbolicSystem& sys = ts.sys;
    const int n = sys.n;
    const int M = sys.grid.intervals();
    const FlatStructure& flat = design.flat;

    PlantState state;
    state.t = 0.0;
    state.xi = config.xi0.size() == n ? config.xi0 : Eigen::VectorXd::Zero(n);
    state.x1 = config.x1_0.empty() ? Profile(M + 1, 0.0) : config.x1_0;
    state.x2 = config.x2_0.empty() ? Profile(M + 1, 0.0) : config.x2_0;
    if (static_cast<int>(state.x1.size()) != M + 1 || static_cast<int>(state.x2.size()) != M + 1) {
        throw InvalidInput("initial profiles must have M + 1 = " + std::to_string(M + 1) + " samples");
    }

    CharacteristicPlant plant(sys, ts.cmap, config.dt, state);
    const int steps = static_cast<int>(std::llround(config.T_end / config.dt));

    SimResult res;
    res.tau1 = ts.cmap.tau1();
    res.tau2 = ts.cmap.tau2();
    res.warnings = design.warnings;

    std::vector<double> snap_times = config.snapshot_times;
    std::sort(snap_times.begin(), snap_times.end());
    std::size_t next_snap = 0;

    const bool need_bs = config.controller == ControllerType::Backstepping || config.shadow_backstepping ||
                         config.record_target;
    Eigen::VectorXd yd(n + 1);
    std::vector<double> yrd(n + 1);

    auto error_state = [&](const PdeProfiles& xbar, const ReferencePoint& ref) {
        ErrorState err;
        err.e_xi = state.xi - ref.xi;
        err.eps.x1.resize(M + 1);
        err.eps.x2.resize(M + 1);
        for (int k = 0; k <= M; ++k) {
            err.eps.x1[k] = xbar.x1[k] - ref.xbar.x1[k];
            err.eps.x2[k] = xbar.x2[k] - ref.xbar.x2[k];
        }
        return err;
    };

    for (int i = 0; i <= steps; ++i) {
        const double t = i * config.dt;
        state.t = t;
        // x1(1) still carries the previous input here; the new one is imposed below.
        const PdeProfiles x_tilde = scale(ts.gains, PdeProfiles{state.x1, state.x2});
        const PdeProfiles xbar = apply_volterra(ts.K, x_tilde, -1.0);
        const ReferencePoint ref = reference_at(design, t);
        ErrorState err;
        if (need_bs) {
            err = error_state(xbar, ref);
        }

        double ubar = 0.0;
        double u = 0.0;
        switch (config.controller) {
        case ControllerType::None:
            u = 0.0;
            ubar = input_map(ts, u, x_tilde);
            break;
        case ControllerType::Feedforward:
            u = ref.u;
            ubar = input_map(ts, u, x_tilde);
            break;
        case ControllerType::Flatness: {
            const HccfState hs = design.hccf(state.xi, xbar);
            ubar = flat_feedback(design.a, design.desired.coeffs, hs, design.plan, t);
            u = input_unmap(ts, ubar, x_tilde);
            break;
        }
        case ControllerType::Backstepping:
            ubar = bs_feedback(design.bs, err, ref.ubar);
            u = input_unmap(ts, ubar, x_tilde);
            break;
        }
        const double u_shadow =
            config.shadow_backstepping ? input_unmap(ts, bs_feedback(design.bs, err, ref.ubar), x_tilde) : 0.0;

        plant.impose_input(u);
        state.x1[M] = sys.q1 * state.x2[M] + u;

        res.t.push_back(t);
        res.xi.push_back(state.xi);
        res.xi_ref.push_back(ref.xi);
        res.u.push_back(u);
        res.u_ref.push_back(ref.u);
        res.ubar.push_back(ubar);
        res.ubar_ref.push_back(ref.ubar);
        res.x1_at_0.push_back(state.x1[0]);
        res.x2_at_1.push_back(state.x2[M]);
        if (config.shadow_backstepping) {
            res.u_shadow.push_back(u_shadow);
        }
        if (n > 0) {
            yd.head(n) = flat.Tc * state.xi;
            yd(n) = flat.Tc.row(n - 1) * sys.F * state.xi + state.x1[0];
        } else {
            yd(0) = state.x1[0];
        }
        res.y.push_back(yd);
        design.plan.derivatives(t, yrd);
        res.y_ref.push_back(Eigen::Map<Eigen::VectorXd>(yrd.data(), n + 1));
        if (config.record_target) {
            const PdeProfiles xbar_now = apply_volterra(ts.K, scale(ts.gains, PdeProfiles{state.x1, state.x2}), -1.0);
            res.target.t.push_back(t);
            res.target.eps_bar.push_back(target_error(design.bs, error_state(xbar_now, ref)));
        }
        while (next_snap < snap_times.size() && snap_times[next_snap] <= t + 0.5 * config.dt) {
            res.snapshots.push_back({t, PdeProfiles{state.x1, state.x2}, ref.x});
            ++next_snap;
        }
        if (i < steps) {
            plant.advance(u);
            state = plant.state();
        }
    }
    res.metrics = compute_metrics(res, config);
    if (config.record_target) {
        res.metrics.target = target_residual(res.target, design.bs, sys, ts.cmap, config.quiescence_margin);
    }
    return res;
}

namespace {

// Linear interpolation of a uniformly sampled series.
double sample(const std::vector<double>& t, const std::vector<double>& v, double at) {
    const double dt = t[1] - t[0];
    return interpolate_uniform(v, t.front(), dt, at);
}

} // namespace

Metrics compute_metrics(const SimResult& r, const SimConfig& config) {
    Metrics m;
    m.t_query = config.t_query;
    const std::size_t N = r.t.size();
    if (N == 0) {
        return m;
    }
    // u is held over [t_i, t_i + dt); the last sample only closes the horizon.
    const std::size_t held = N > 1 ? N - 1 : N;
    double acc = 0.0;
    for (std::size_t i = 0; i < held; ++i) {
        const double d = r.u[i] - r.u_ref[i];
        acc += d * d;
    }
    m.u_rms = std::sqrt(acc / held);

    const int c = std::max(config.reference.component, 0);
    for (std::size_t i = 0; i < N; ++i) {
        if (r.t[i] > config.t_query && r.xi[i].size() > c) {
            m.max_tracking_error = std::max(m.max_tracking_error, std::abs(r.xi[i](c) - r.xi_ref[i](c)));
        }
        if (!r.u_shadow.empty()) {
            m.max_shadow_deviation = std::max(m.max_shadow_deviation, std::abs(r.u[i] - r.u_shadow[i]));
        }
    }

    // Target error law eps^(n) + sum kappa_i eps^(i) = 0 with eps(t) = e(t + tau1) + gamma e(t - tau2).
    const int n = static_cast<int>(r.y.front().size()) - 1;
    if (N > 2 && config.kappa.size() == n) {
        std::vector<std::vector<double>> e(n + 1, std::vector<double>(N));
        for (std::size_t i = 0; i < N; ++i) {
            for (int o = 0; o <= n; ++o) {
                e[o][i] = r.y[i](o) - r.y_ref[i](o);
            }
        }
        const double lo = std::max(r.tau1, r.tau2) + config.dt;
        const double hi = r.t.back() - r.tau1;
        double res2 = 0.0;
        std::vector<double> norm2(n + 1, 0.0);
        int count = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double t = r.t[i];
            if (t < lo || t > hi) {
                continue;
            }
            double residual = 0.0;
            for (int o = 0; o <= n; ++o) {
                const double eps = sample(r.t, e[o], t + r.tau1) + config.gamma * sample(r.t, e[o], t - r.tau2);
                const double coef = o == n ? 1.0 : config.kappa(o);
                residual += coef * eps;
                norm2[o] += coef * coef * eps * eps;
            }
            res2 += residual * residual;
            ++count;
        }
        double scale = 0.0;
        for (double v : norm2) {
            scale += std::sqrt(v);
        }
        if (count > 0 && scale > 0.0) {
            m.eps_residual = std::sqrt(res2) / scale;
        }
    }
    return m;
}

void write_timeseries_csv(std::ostream& os, const SimResult& r) {
    const int n = r.xi.empty() ? 0 : static_cast<int>(r.xi.front().size());
    os << "t";
    for (int i = 0; i < n; ++i) {
        os << ",xi_" << (i + 1);
    }
    for (int i = 0; i < n; ++i) {
        os << ",xi_ref_" << (i + 1);
    }
    os << ",u,u_r,ubar,ubar_r,x1_at_0,x2_at_1";
    if (!r.u_shadow.empty()) {
        os << ",u_shadow";
    }
    os << '\n';
    std::vector<double> row;
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        row.clear();
        row.push_back(r.t[i]);
        for (int j = 0; j < n; ++j) {
            row.push_back(r.xi[i](j));
        }
        for (int j = 0; j < n; ++j) {
            row.push_back(r.xi_ref[i](j));
        }
        row.insert(row.end(), {r.u[i], r.u_ref[i], r.ubar[i], r.ubar_ref[i], r.x1_at_0[i], r.x2_at_1[i]});
        if (!r.u_shadow.empty()) {
            row.push_back(r.u_shadow[i]);
        }
        write_csv_row(os, row);
    }
}

void write_profiles_csv(std::ostream& os, const SimResult& r, const Grid& grid) {
    write_csv_header(os, {"t", "z", "x1", "x2", "x1_ref", "x2_ref"});
    for (const Snapshot& s : r.snapshots) {
        for (int k = 0; k <= grid.intervals(); ++k) {
            const double row[] = {s.t, grid.node(k), s.x.x1[k], s.x.x2[k], s.x_ref.x1[k], s.x_ref.x2[k]};
            write_csv_row(os, row);
        }
    }
}

void write_reference_csv(std::ostream& os, const ControllerDesign& design, double t_begin, double t_end,
                         double dt) {
    const int n = design.flat.n;
    os << "t,y_r";
    for (int i = 1; i <= n; ++i) {
        os << ",y_r_d" << i;
    }
    os << ",ubar_r,u_r\n";
    const int steps = static_cast<int>(std::llround((t_end - t_begin) / dt));
    std::vector<double> d(n + 1);
    std::vector<double> row;
    for (int i = 0; i <= steps; ++i) {
        const double t = t_begin + i * dt;
        design.plan.derivatives(t, d);
        const ReferencePoint ref = reference_at(design, t);
        row.assign(1, t);
        row.insert(row.end(), d.begin(), d.end());
        row.push_back(ref.ubar);
        row.push_back(ref.u);
        write_csv_row(os, row);
    }
}

} // namespace hypctrl
