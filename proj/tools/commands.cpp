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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <complex>
#include <thread>
#include <ostream>
#include <sstream>

#include "hypctrl/errors.hpp"
#include "hypctrl/io.hpp"
#include "scenario.hpp"

namespace hypctrl::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Loaded {
    Scenario scenario;
    HyperbolicSystem sys;
    CharacteristicMap cmap;
};

Loaded load(const Options& opt) {
    Loaded l;
    l.scenario = load_scenario(opt.config);
    if (opt.refine != 1) {
        l.scenario.refine(opt.refine);
    }
    if (!opt.out.empty()) {
        l.scenario.output_directory = opt.out;
    }
    l.sys = l.scenario.build_system();
    l.cmap = characteristic_map(l.sys);
    return l;
}

json vec(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(v(i));
    }
    return a;
}

std::vector<std::complex<double>> sorted_eigenvalues(const Eigen::MatrixXd& F) {
    std::vector<std::complex<double>> ev;
    if (F.size() == 0) {
        return ev;
    }
    const Eigen::VectorXcd e = F.eigenvalues();
    ev.assign(e.data(), e.data() + e.size());
    std::sort(ev.begin(), ev.end(), [](auto a, auto b) {
        return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
    });
    return ev;
}

json derived(const Loaded& l) {
    json eig = json::array();
    for (const auto& e : sorted_eigenvalues(l.sys.F)) {
        eig.push_back(json::array({e.real(), e.imag()}));
    }
    return json{{"tau1", l.cmap.tau1()}, {"tau2", l.cmap.tau2()}, {"F_eigenvalues", eig}};
}

// Prints the derived quantities and validates the design assumptions.
Artifacts dry_run(const Loaded& l, std::ostream& log) {
    const ValidationReport report = validate(l.sys);
    log << "tau1 = " << format_double(l.cmap.tau1()) << "\n";
    log << "tau2 = " << format_double(l.cmap.tau2()) << "\n";
    log << "F eigenvalues:";
    for (const auto& e : sorted_eigenvalues(l.sys.F)) {
        log << " " << format_double(e.real());
        if (e.imag() != 0.0) {
            log << (e.imag() > 0 ? "+" : "-") << format_double(std::abs(e.imag())) << "i";
        }
    }
    log << "\n" << report.summary() << "\n";
    if (!report.ok()) {
        throw AssumptionViolation("system violates the design assumptions: " + report.summary());
    }
    const SimConfig cfg = l.scenario.build_config(l.sys, l.cmap);
    log << "t0 = " << format_double(cfg.reference.t0) << ", t* = " << format_double(cfg.reference.t_star) << "\n";
    return {};
}

template <class Fn>
std::string render(Fn&& fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
}

json warnings_json(const std::vector<std::string>& w) {
    json a = json::array();
    for (const auto& s : w) {
        a.push_back(s);
    }
    return a;
}

unsigned thread_cap() {
    if (const char* env = std::getenv("HYPCTRL_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace

Artifacts simulate(const Options& opt, std::ostream& log) {
    const Loaded l = load(opt);
    if (opt.dry_run) {
        return dry_run(l, log);
    }
    const SimConfig cfg = l.scenario.build_config(l.sys, l.cmap);
    const SimResult r = run(l.sys, cfg);

    json metrics{{"u_rms", r.metrics.u_rms},
                 {"max_tracking_error", r.metrics.max_tracking_error},
                 {"t_query", r.metrics.t_query},
                 {"eps_residual", r.metrics.eps_residual}};
    if (cfg.shadow_backstepping) {
        metrics["max_shadow_deviation"] = r.metrics.max_shadow_deviation;
    }
    if (r.metrics.target) {
        const TargetDiagnostics& d = *r.metrics.target;
        metrics["target"] = {{"transport_residual", d.transport_residual},
                             {"boundary_residual", d.boundary_residual},
                             {"initial_norm", d.initial_norm},
                             {"late_norm", d.late_norm},
                             {"quiescence_ratio", d.quiescence_ratio}};
    }
    json d = derived(l);
    d["t0"] = cfg.reference.t0;
    d["t_star"] = cfg.reference.t_star;
    d["steps"] = r.t.size();
    json doc{{"metrics", metrics},
             {"derived", d},
             {"warnings", warnings_json(r.warnings)},
             {"config", l.scenario.to_json()}};

    log << "u_rms = " << format_double(r.metrics.u_rms)
        << ", max tracking error (t > " << format_double(r.metrics.t_query)
        << ") = " << format_double(r.metrics.max_tracking_error) << "\n";
    return {{"timeseries.csv", render([&](std::ostream& os) { write_timeseries_csv(os, r); })},
            {"profiles.csv", render([&](std::ostream& os) { write_profiles_csv(os, r, l.sys.grid); })},
            {"metrics.json", doc.dump(2) + "\n"}};
}

Artifacts kernels(const Options& opt, std::ostream& log) {
    const Loaded l = load(opt);
    if (opt.dry_run) {
        return dry_run(l, log);
    }
    const SimConfig cfg = l.scenario.build_config(l.sys, l.cmap);
    const ValidationReport report = validate(l.sys);
    if (!report.ok()) {
        throw AssumptionViolation("system violates the design assumptions: " + report.summary());
    }
    const TransformedSystem ts = transform_system(l.sys, cfg.kernel_options);
    const double q1cl = cfg.q1cl.value_or(-cfg.gamma / l.sys.q0);
    const BacksteppingGains bs = backstepping_gains(ts, cfg.kappa, q1cl);
    const KernelResiduals kr = kernel_residuals(ts.K, ts.sys, ts.coupling);
    const BacksteppingResiduals br = backstepping_residuals(bs, ts);

    json pde = json::array({json::array({kr.pde(0, 0), kr.pde(0, 1)}), json::array({kr.pde(1, 0), kr.pde(1, 1)})});
    json doc{{"K",
              {{"bc11", kr.bc11},
               {"bc12", kr.bc12},
               {"bc21", kr.bc21},
               {"bc22", kr.bc22},
               {"max_boundary", kr.max_bc()},
               {"pde_interior", pde},
               {"iterations", ts.kernel_info.iterations},
               {"last_change", ts.kernel_info.last_change}}},
             {"K_inv", {{"reciprocity", reciprocity_residual(ts.K, ts.K_inv)}}},
             {"N", {{"ode", br.decoupling}, {"initial", br.decoupling_initial}}},
             {"P", {{"p1_volterra", br.p1}, {"p2_volterra", br.p2}}},
             {"k", vec(bs.k)},
             {"q1cl", bs.q1cl},
             {"derived", derived(l)},
             {"warnings", warnings_json(bs.warnings)},
             {"config", l.scenario.to_json()}};

    const int n = l.sys.n;
    std::string n_csv = render([&](std::ostream& os) {
        os << "z";
        for (int r = 1; r <= 2; ++r) {
            for (int j = 1; j <= n; ++j) {
                os << ",N" << r << "_" << j;
            }
        }
        os << "\n";
        std::vector<double> row;
        for (int k = 0; k < l.sys.grid.size(); ++k) {
            row.assign(1, l.sys.grid.node(k));
            for (int r = 0; r < 2; ++r) {
                for (int j = 0; j < n; ++j) {
                    row.push_back(bs.N.N[k](r, j));
                }
            }
            write_csv_row(os, row);
        }
    });
    log << "K boundary residual " << format_double(kr.max_bc()) << " after " << ts.kernel_info.iterations
        << " iterations\n";
    return {{"K.csv", render([&](std::ostream& os) { write_kernel_csv(os, ts.K); })},
            {"K_inv.csv", render([&](std::ostream& os) { write_kernel_csv(os, ts.K_inv); })},
            {"N.csv", std::move(n_csv)},
            {"P.csv", render([&](std::ostream& os) { write_kernel_csv(os, bs.P.P); })},
            {"kernel_report.json", doc.dump(2) + "\n"}};
}

Artifacts plan(const Options& opt, std::ostream& log) {
    const Loaded l = load(opt);
    if (opt.dry_run) {
        return dry_run(l, log);
    }
    const SimConfig cfg = l.scenario.build_config(l.sys, l.cmap);
    const ControllerDesign design = design_controllers(l.sys, cfg);
    return {{"reference.csv",
             render([&](std::ostream& os) { write_reference_csv(os, design, 0.0, cfg.T_end, cfg.dt); })}};
}

Artifacts compare(const Options& opt, std::ostream& log) {
    const Loaded l = load(opt);
    if (opt.dry_run) {
        return dry_run(l, log);
    }
    SimConfig base = l.scenario.build_config(l.sys, l.cmap);
    const ControllerDesign design = design_controllers(l.sys, base);

    // Feedback laws are compared against each other; open-loop types against themselves.
    const bool feedback = base.controller == ControllerType::Flatness ||
                          base.controller == ControllerType::Backstepping;
    SimConfig a = base;
    SimConfig b = base;
    if (feedback) {
        a.controller = ControllerType::Flatness;
        a.shadow_backstepping = true;
        b.controller = ControllerType::Backstepping;
        b.shadow_backstepping = false;
    }
    a.record_target = b.record_target = false;

    SimResult ra, rb;
    if (thread_cap() >= 2) {
        auto fa = std::async(std::launch::async, [&] { return run(design, a); });
        rb = run(design, b);
        ra = fa.get();
    } else {
        ra = run(design, a);
        rb = run(design, b);
    }

    const std::size_t steps = std::min(ra.t.size(), rb.t.size());
    double max_dev = 0.0;
    double max_shadow = 0.0;
    std::string csv = render([&](std::ostream& os) {
        write_csv_header(os, {"t", "u_a", "u_b", "abs_diff", "u_shadow", "abs_shadow_diff"});
        for (std::size_t i = 0; i < steps; ++i) {
            const double d = std::abs(ra.u[i] - rb.u[i]);
            const double s = ra.u_shadow.empty() ? ra.u[i] : ra.u_shadow[i];
            const double ds = std::abs(ra.u[i] - s);
            max_dev = std::max(max_dev, d);
            max_shadow = std::max(max_shadow, ds);
            const double row[] = {ra.t[i], ra.u[i], rb.u[i], d, s, ds};
            write_csv_row(os, row);
        }
    });
    json doc{{"controllers", json::array({to_string(a.controller), to_string(b.controller)})},
             {"max_deviation", max_dev},
             {"max_shadow_deviation", max_shadow},
             {"q1cl", design.bs.q1cl},
             {"k", vec(design.bs.k)},
             {"derived", derived(l)},
             {"warnings", warnings_json(design.warnings)},
             {"config", l.scenario.to_json()}};
    log << "max |u_" << to_string(a.controller) << " - u_" << to_string(b.controller)
        << "| = " << format_double(max_dev) << " (same trajectory: " << format_double(max_shadow) << ")\n";
    return {{"compare.csv", std::move(csv)}, {"compare.json", doc.dump(2) + "\n"}};
}

int execute(Artifacts (*command)(const Options&, std::ostream&), const Options& opt, std::ostream& log,
            std::ostream& err) {
    Artifacts files;
    std::string directory;
    try {
        files = command(opt, log);
        if (files.empty()) {
            return kOk;
        }
        directory = opt.out.empty() ? load_scenario(opt.config).output_directory : opt.out;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const InvalidInput& e) {
        err << "invalid input: " << e.what() << "\n";
        return kConfigError;
    } catch (const AssumptionViolation& e) {
        err << "assumption violated: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return kNumericError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kNumericError;
    }

    std::vector<fs::path> written;
    try {
        fs::create_directories(directory);
        for (const auto& [name, content] : files) {
            const fs::path path = fs::path(directory) / name;
            std::ofstream os(path, std::ios::binary);
            os << content;
            os.close();
            if (!os) {
                throw std::runtime_error("cannot write " + path.string());
            }
            written.push_back(path);
        }
    } catch (const std::exception& e) {
        std::error_code ignore;
        for (const auto& p : written) {
            fs::remove(p, ignore);
        }
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }
    for (const auto& p : written) {
        log << "wrote " << p.string() << "\n";
    }
    return kOk;
}

} // namespace hypctrl::cli
