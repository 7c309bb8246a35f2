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

#include "scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace hypctrl::cli {

using nlohmann::json;

double ProfileSpec::operator()(double z) const {
    switch (kind) {
    case Kind::Constant:
        return value;
    case Kind::SinCubed:
        return value * std::pow(std::sin(2.0 * std::numbers::pi * z), 3);
    case Kind::Table: {
        if (z <= table.front().first) {
            return table.front().second;
        }
        if (z >= table.back().first) {
            return table.back().second;
        }
        const auto it = std::upper_bound(table.begin(), table.end(), z,
                                         [](double v, const auto& p) { return v < p.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double w = (z - lo.first) / (hi.first - lo.first);
        return (1.0 - w) * lo.second + w * hi.second;
    }
    }
    return 0.0;
}

json ProfileSpec::to_json() const {
    switch (kind) {
    case Kind::Constant:
        return value;
    case Kind::SinCubed:
        return json{{"type", "sin_cubed"}, {"amplitude", value}};
    case Kind::Table: {
        json arr = json::array();
        for (const auto& [z, v] : table) {
            arr.push_back(json::array({z, v}));
        }
        return arr;
    }
    }
    return nullptr;
}

namespace {

struct Term {
    double sign = 1.0;
    std::string name;  // empty: number
    double number = 0.0;
};

// Parses "a + b - c" with a, b, c numbers or one of tau1, tau2, T_end.
std::vector<Term> parse_terms(const std::string& text) {
    std::vector<Term> terms;
    std::size_t i = 0;
    auto skip = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
    };
    skip();
    if (i == text.size()) {
        throw std::invalid_argument("empty time expression");
    }
    double sign = 1.0;
    bool expect_term = true;
    while (i < text.size()) {
        skip();
        if (i == text.size()) {
            break;
        }
        const char ch = text[i];
        if (expect_term) {
            if (ch == '+' || ch == '-') {
                sign *= ch == '-' ? -1.0 : 1.0;
                ++i;
                continue;
            }
            Term t;
            t.sign = sign;
            if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
                const std::size_t start = i;
                while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
                    ++i;
                }
                t.name = text.substr(start, i - start);
                if (t.name != "tau1" && t.name != "tau2" && t.name != "T_end") {
                    throw std::invalid_argument("unknown symbol '" + t.name + "' (expected tau1, tau2, T_end)");
                }
            } else {
                std::size_t used = 0;
                try {
                    t.number = std::stod(text.substr(i), &used);
                } catch (const std::exception&) {
                    throw std::invalid_argument("cannot read a number at '" + text.substr(i) + "'");
                }
                i += used;
            }
            terms.push_back(t);
            sign = 1.0;
            expect_term = false;
        } else {
            if (ch != '+' && ch != '-') {
                throw std::invalid_argument("expected + or - at '" + text.substr(i) + "'");
            }
            sign = ch == '-' ? -1.0 : 1.0;
            ++i;
            expect_term = true;
        }
    }
    if (expect_term) {
        throw std::invalid_argument("time expression ends with an operator");
    }
    return terms;
}

} // namespace

double TimeExpr::resolve(double tau1, double tau2, double T_end) const {
    double sum = 0.0;
    for (const Term& t : parse_terms(text)) {
        double v = t.number;
        if (t.name == "tau1") v = tau1;
        if (t.name == "tau2") v = tau2;
        if (t.name == "T_end") v = T_end;
        sum += t.sign * v;
    }
    return sum;
}

namespace {

class Reader {
public:
    explicit Reader(const std::string& text) : text_(text) {}

    [[noreturn]] void fail(const std::string& path, const std::string& what) const {
        throw ConfigError(locate(path), what);
    }

    void keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) const {
        if (!obj.is_object()) {
            fail(path, "expected an object");
        }
        for (const auto& [key, value] : obj.items()) {
            if (!allowed.count(key)) {
                std::string list;
                for (const auto& a : allowed) {
                    list += (list.empty() ? "" : ", ") + a;
                }
                fail(path + "/" + key, "unknown key (allowed: " + list + ")");
            }
        }
    }

    double number(const json& j, const std::string& path) const {
        if (!j.is_number()) {
            fail(path, "expected a number");
        }
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            fail(path, "expected a finite number");
        }
        return v;
    }

    double positive(const json& j, const std::string& path) const {
        const double v = number(j, path);
        if (!(v > 0.0)) {
            fail(path, "must be positive");
        }
        return v;
    }

    int integer(const json& j, const std::string& path) const {
        if (!j.is_number_integer()) {
            fail(path, "expected an integer");
        }
        return j.get<int>();
    }

    bool boolean(const json& j, const std::string& path) const {
        if (!j.is_boolean()) {
            fail(path, "expected true or false");
        }
        return j.get<bool>();
    }

    std::string string(const json& j, const std::string& path) const {
        if (!j.is_string()) {
            fail(path, "expected a string");
        }
        return j.get<std::string>();
    }

    Eigen::VectorXd vector(const json& j, const std::string& path) const {
        if (!j.is_array()) {
            fail(path, "expected an array of numbers");
        }
        Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) {
            v(static_cast<Eigen::Index>(i)) = number(j[i], path + "/" + std::to_string(i));
        }
        return v;
    }

    Eigen::MatrixXd matrix(const json& j, const std::string& path) const {
        if (!j.is_array()) {
            fail(path, "expected an array of rows");
        }
        const auto rows = static_cast<Eigen::Index>(j.size());
        Eigen::MatrixXd m(rows, rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const std::string rp = path + "/" + std::to_string(r);
            const Eigen::VectorXd row = vector(j[r], rp);
            if (row.size() != rows) {
                fail(rp, "expected " + std::to_string(rows) + " entries (square matrix)");
            }
            m.row(r) = row.transpose();
        }
        return m;
    }

    ProfileSpec profile(const json& j, const std::string& path) const {
        ProfileSpec p;
        if (j.is_number()) {
            p.kind = ProfileSpec::Kind::Constant;
            p.value = number(j, path);
            return p;
        }
        if (j.is_array()) {
            p.kind = ProfileSpec::Kind::Table;
            if (j.empty()) {
                fail(path, "table needs at least one [z, value] pair");
            }
            for (std::size_t i = 0; i < j.size(); ++i) {
                const std::string ip = path + "/" + std::to_string(i);
                if (!j[i].is_array() || j[i].size() != 2) {
                    fail(ip, "expected a [z, value] pair");
                }
                const double z = number(j[i][0], ip + "/0");
                const double v = number(j[i][1], ip + "/1");
                if (z < 0.0 || z > 1.0) {
                    fail(ip + "/0", "z must lie in [0, 1]");
                }
                if (!p.table.empty() && !(z > p.table.back().first)) {
                    fail(ip + "/0", "z must be strictly increasing");
                }
                p.table.emplace_back(z, v);
            }
            return p;
        }
        if (j.is_object()) {
            keys(j, path, {"type", "amplitude"});
            if (!j.contains("type") || string(j["type"], path + "/type") != "sin_cubed") {
                fail(path + "/type", "expected \"sin_cubed\"");
            }
            p.kind = ProfileSpec::Kind::SinCubed;
            p.value = j.contains("amplitude") ? number(j["amplitude"], path + "/amplitude") : 1.0;
            return p;
        }
        fail(path, "expected a number, a [[z, value], ...] table or {\"type\": \"sin_cubed\", ...}");
    }

    TimeExpr time(const json& j, const std::string& path) const {
        TimeExpr e;
        if (j.is_number()) {
            std::ostringstream os;
            os.precision(17);
            os << number(j, path);
            e.text = os.str();
            return e;
        }
        e.text = string(j, path);
        try {
            e.resolve(1.0, 1.0, 1.0);
        } catch (const std::invalid_argument& err) {
            fail(path, err.what());
        }
        return e;
    }

    // "/a/b/0/c (line N)" from the first occurrence of each key after the previous one.
    std::string locate(const std::string& path) const {
        std::size_t pos = 0;
        bool found = true;
        std::size_t start = 1;
        while (start <= path.size() && found) {
            const std::size_t end = std::min(path.find('/', start), path.size());
            const std::string seg = path.substr(start, end - start);
            start = end + 1;
            if (seg.empty() || std::all_of(seg.begin(), seg.end(), [](char c) { return std::isdigit(c); })) {
                continue;
            }
            const std::size_t at = text_.find("\"" + seg + "\"", pos);
            if (at == std::string::npos) {
                found = false;
            } else {
                pos = at;
            }
        }
        if (!found || pos == 0) {
            return path;
        }
        const auto line = 1 + std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
        return path + " (line " + std::to_string(line) + ")";
    }

private:
    const std::string& text_;
};

Eigen::VectorXd default_kappa(int n) {
    // coefficients of (s + 1)^n, lowest order first
    Eigen::VectorXd k(n);
    for (int i = 0; i < n; ++i) {
        double c = 1.0;
        for (int j = 1; j <= i; ++j) {
            c = c * (n - j + 1) / j;
        }
        k(i) = c;
    }
    return k.reverse().eval().reverse();
}

std::string position(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

} // namespace

Scenario parse_scenario(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::string what = e.what();
        const auto colon = what.find("parse error");
        throw ConfigError(position(text, e.byte), colon == std::string::npos ? what : what.substr(colon));
    }
    const Reader rd(text);
    rd.keys(root, "", {"name", "system", "grid", "sim", "controller", "reference", "metrics", "output"});
    Scenario sc;
    if (root.contains("name")) {
        sc.name = rd.string(root["name"], "/name");
    }

    if (!root.contains("system")) {
        rd.fail("/system", "missing system block");
    }
    const json& sys = root["system"];
    if (!sys.is_object() || !sys.contains("type")) {
        rd.fail("/system/type", "system block needs \"type\": \"heavy_rope\" or \"custom\"");
    }
    sc.system_type = rd.string(sys["type"], "/system/type");
    int n = 0;
    if (sc.system_type == "heavy_rope") {
        rd.keys(sys, "/system", {"type", "rho", "ell", "g", "m"});
        if (sys.contains("rho")) sc.rope.rho = rd.positive(sys["rho"], "/system/rho");
        if (sys.contains("ell")) sc.rope.ell = rd.positive(sys["ell"], "/system/ell");
        if (sys.contains("g")) sc.rope.g = rd.positive(sys["g"], "/system/g");
        if (sys.contains("m")) sc.rope.m = rd.positive(sys["m"], "/system/m");
        n = 2;
    } else if (sc.system_type == "custom") {
        rd.keys(sys, "/system",
                {"type", "lambda1", "lambda2", "A11", "A12", "A21", "A22", "F", "b", "c", "q0", "q1"});
        for (const char* key : {"lambda1", "lambda2", "F", "b", "c", "q0", "q1"}) {
            if (!sys.contains(key)) {
                rd.fail(std::string("/system/") + key, "required for a custom system");
            }
        }
        sc.lambda1 = rd.profile(sys["lambda1"], "/system/lambda1");
        sc.lambda2 = rd.profile(sys["lambda2"], "/system/lambda2");
        if (sys.contains("A11")) sc.A11 = rd.profile(sys["A11"], "/system/A11");
        if (sys.contains("A12")) sc.A12 = rd.profile(sys["A12"], "/system/A12");
        if (sys.contains("A21")) sc.A21 = rd.profile(sys["A21"], "/system/A21");
        if (sys.contains("A22")) sc.A22 = rd.profile(sys["A22"], "/system/A22");
        sc.F = sys["F"].empty() ? Eigen::MatrixXd(0, 0) : rd.matrix(sys["F"], "/system/F");
        n = static_cast<int>(sc.F.rows());
        sc.b = rd.vector(sys["b"], "/system/b");
        sc.c = rd.vector(sys["c"], "/system/c");
        if (sc.b.size() != n) rd.fail("/system/b", "expected " + std::to_string(n) + " entries");
        if (sc.c.size() != n) rd.fail("/system/c", "expected " + std::to_string(n) + " entries");
        sc.q0 = rd.number(sys["q0"], "/system/q0");
        sc.q1 = rd.number(sys["q1"], "/system/q1");
    } else {
        rd.fail("/system/type", "unknown system type '" + sc.system_type + "' (expected heavy_rope or custom)");
    }

    if (root.contains("grid")) {
        const json& g = root["grid"];
        rd.keys(g, "/grid", {"M", "kernel_tolerance", "kernel_max_iterations"});
        if (g.contains("M")) sc.M = rd.integer(g["M"], "/grid/M");
        if (g.contains("kernel_tolerance")) sc.kernel_tolerance = rd.positive(g["kernel_tolerance"], "/grid/kernel_tolerance");
        if (g.contains("kernel_max_iterations")) {
            sc.kernel_max_iterations = rd.integer(g["kernel_max_iterations"], "/grid/kernel_max_iterations");
        }
    }
    if (sc.M < 2) rd.fail("/grid/M", "needs at least 2 intervals");
    if (sc.kernel_max_iterations < 1) rd.fail("/grid/kernel_max_iterations", "must be at least 1");

    sc.xi0 = Eigen::VectorXd::Zero(n);
    if (root.contains("sim")) {
        const json& s = root["sim"];
        rd.keys(s, "/sim", {"dt", "T_end", "xi0", "x1_0", "x2_0"});
        if (s.contains("dt")) sc.dt = rd.positive(s["dt"], "/sim/dt");
        if (s.contains("T_end")) sc.T_end = rd.positive(s["T_end"], "/sim/T_end");
        if (s.contains("xi0")) {
            sc.xi0 = rd.vector(s["xi0"], "/sim/xi0");
            if (sc.xi0.size() != n) rd.fail("/sim/xi0", "expected " + std::to_string(n) + " entries");
        }
        if (s.contains("x1_0")) sc.x1_0 = rd.profile(s["x1_0"], "/sim/x1_0");
        if (s.contains("x2_0")) sc.x2_0 = rd.profile(s["x2_0"], "/sim/x2_0");
    }
    if (sc.dt >= sc.T_end) rd.fail("/sim/dt", "must be smaller than T_end");

    sc.kappa = default_kappa(n);
    if (root.contains("controller")) {
        const json& c = root["controller"];
        rd.keys(c, "/controller", {"type", "gamma", "kappa", "k", "q1cl", "shadow_backstepping"});
        if (c.contains("type")) {
            const std::string type = rd.string(c["type"], "/controller/type");
            try {
                sc.controller = parse_controller(type);
            } catch (const std::exception& e) {
                rd.fail("/controller/type", e.what());
            }
        }
        if (c.contains("gamma")) sc.gamma = rd.number(c["gamma"], "/controller/gamma");
        if (c.contains("kappa")) {
            sc.kappa = rd.vector(c["kappa"], "/controller/kappa");
            if (sc.kappa.size() != n) rd.fail("/controller/kappa", "expected " + std::to_string(n) + " coefficients");
        }
        if (c.contains("k")) {
            sc.k = rd.vector(c["k"], "/controller/k");
            if (sc.k->size() != n) rd.fail("/controller/k", "expected " + std::to_string(n) + " entries");
        }
        if (c.contains("q1cl")) sc.q1cl = rd.number(c["q1cl"], "/controller/q1cl");
        if (c.contains("shadow_backstepping")) {
            sc.shadow_backstepping = rd.boolean(c["shadow_backstepping"], "/controller/shadow_backstepping");
        }
    }

    if (root.contains("reference")) {
        const json& r = root["reference"];
        rd.keys(r, "/reference", {"y0", "y_star", "t0", "t_star", "component"});
        if (r.contains("y0")) sc.y0 = rd.number(r["y0"], "/reference/y0");
        if (r.contains("y_star")) sc.y_star = rd.number(r["y_star"], "/reference/y_star");
        if (r.contains("t0")) sc.t0 = rd.time(r["t0"], "/reference/t0");
        if (r.contains("t_star")) sc.t_star = rd.time(r["t_star"], "/reference/t_star");
        if (r.contains("component")) {
            if (r["component"].is_string()) {
                if (rd.string(r["component"], "/reference/component") != "flat_output") {
                    rd.fail("/reference/component", "expected an ODE state index or \"flat_output\"");
                }
                sc.component = -1;
            } else {
                sc.component = rd.integer(r["component"], "/reference/component");
                if (sc.component < 0 || sc.component >= std::max(n, 1)) {
                    rd.fail("/reference/component", "index out of range for n = " + std::to_string(n));
                }
            }
        }
    }
    if (n == 0 && sc.component >= 0) {
        sc.component = -1;
    }

    if (root.contains("metrics")) {
        const json& m = root["metrics"];
        rd.keys(m, "/metrics", {"t_query", "quiescence_margin", "record_target"});
        if (m.contains("t_query")) sc.t_query = rd.number(m["t_query"], "/metrics/t_query");
        if (m.contains("quiescence_margin")) sc.quiescence_margin = rd.number(m["quiescence_margin"], "/metrics/quiescence_margin");
        if (m.contains("record_target")) sc.record_target = rd.boolean(m["record_target"], "/metrics/record_target");
    }

    if (root.contains("output")) {
        const json& o = root["output"];
        rd.keys(o, "/output", {"directory", "snapshot_times"});
        if (o.contains("directory")) sc.output_directory = rd.string(o["directory"], "/output/directory");
        if (o.contains("snapshot_times")) {
            const Eigen::VectorXd v = rd.vector(o["snapshot_times"], "/output/snapshot_times");
            sc.snapshot_times.assign(v.data(), v.data() + v.size());
            for (std::size_t i = 0; i < sc.snapshot_times.size(); ++i) {
                if (sc.snapshot_times[i] < 0.0 || sc.snapshot_times[i] > sc.T_end) {
                    rd.fail("/output/snapshot_times/" + std::to_string(i), "must lie in [0, T_end]");
                }
            }
        }
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(path, "cannot open scenario file");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_scenario(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + (e.where().empty() ? "" : ": " + e.where()),
                          std::string(e.what()).substr(e.where().empty() ? 0 : e.where().size() + 2));
    }
}

void Scenario::refine(int factor) {
    if (factor < 1) {
        throw ConfigError("--refine", "factor must be a positive integer");
    }
    M *= factor;
    dt /= factor;
}

HyperbolicSystem Scenario::build_system() const {
    const Grid grid(M);
    if (system_type == "heavy_rope") {
        return heavy_rope(rope, grid);
    }
    HyperbolicSystem sys;
    sys.grid = grid;
    sys.n = static_cast<int>(F.rows());
    sys.lambda1 = grid.sample(lambda1);
    sys.lambda2 = grid.sample(lambda2);
    sys.A.resize(grid.size());
    for (int k = 0; k < grid.size(); ++k) {
        const double z = grid.node(k);
        sys.A[k] << A11(z), A12(z), A21(z), A22(z);
    }
    sys.F = F;
    sys.b = b;
    sys.c = c;
    sys.q0 = q0;
    sys.q1 = q1;
    return sys;
}

SimConfig Scenario::build_config(const HyperbolicSystem& sys, const CharacteristicMap& cmap) const {
    SimConfig cfg;
    cfg.dt = dt;
    cfg.T_end = T_end;
    cfg.controller = controller;
    cfg.gamma = gamma;
    cfg.kappa = kappa;
    cfg.k = k;
    cfg.q1cl = q1cl;
    cfg.reference.y0 = y0;
    cfg.reference.y_star = y_star;
    cfg.reference.t0 = t0.resolve(cmap.tau1(), cmap.tau2(), T_end);
    cfg.reference.t_star = t_star.resolve(cmap.tau1(), cmap.tau2(), T_end);
    cfg.reference.component = component;
    if (!(cfg.reference.t_star > cfg.reference.t0)) {
        throw ConfigError("/reference/t_star", "resolves to " + std::to_string(cfg.reference.t_star) +
                                                   ", not after t0 = " + std::to_string(cfg.reference.t0));
    }
    cfg.xi0 = xi0;
    cfg.x1_0 = sys.grid.sample(x1_0);
    cfg.x2_0 = sys.grid.sample(x2_0);
    cfg.snapshot_times = snapshot_times;
    cfg.shadow_backstepping = shadow_backstepping;
    cfg.record_target = record_target;
    cfg.t_query = t_query;
    cfg.quiescence_margin = quiescence_margin;
    cfg.kernel_options.tolerance = kernel_tolerance;
    cfg.kernel_options.max_iterations = kernel_max_iterations;
    return cfg;
}

json Scenario::to_json() const {
    auto vec = [](const Eigen::VectorXd& v) {
        json a = json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            a.push_back(v(i));
        }
        return a;
    };
    json out;
    if (!name.empty()) {
        out["name"] = name;
    }
    json sys{{"type", system_type}};
    if (system_type == "heavy_rope") {
        sys["rho"] = rope.rho;
        sys["ell"] = rope.ell;
        sys["g"] = rope.g;
        sys["m"] = rope.m;
    } else {
        sys["lambda1"] = lambda1.to_json();
        sys["lambda2"] = lambda2.to_json();
        sys["A11"] = A11.to_json();
        sys["A12"] = A12.to_json();
        sys["A21"] = A21.to_json();
        sys["A22"] = A22.to_json();
        json f = json::array();
        for (Eigen::Index r = 0; r < F.rows(); ++r) {
            f.push_back(vec(F.row(r).transpose()));
        }
        sys["F"] = f;
        sys["b"] = vec(b);
        sys["c"] = vec(c);
        sys["q0"] = q0;
        sys["q1"] = q1;
    }
    out["system"] = sys;
    out["grid"] = {{"M", M}, {"kernel_tolerance", kernel_tolerance}, {"kernel_max_iterations", kernel_max_iterations}};
    out["sim"] = {{"dt", dt}, {"T_end", T_end}, {"xi0", vec(xi0)}, {"x1_0", x1_0.to_json()}, {"x2_0", x2_0.to_json()}};
    json ctrl{{"type", to_string(controller)}, {"gamma", gamma}, {"kappa", vec(kappa)},
              {"shadow_backstepping", shadow_backstepping}};
    if (k) ctrl["k"] = vec(*k);
    if (q1cl) ctrl["q1cl"] = *q1cl;
    out["controller"] = ctrl;
    out["reference"] = {{"y0", y0}, {"y_star", y_star}, {"t0", t0.text}, {"t_star", t_star.text}};
    if (component < 0) {
        out["reference"]["component"] = "flat_output";
    } else {
        out["reference"]["component"] = component;
    }
    out["metrics"] = {{"t_query", t_query}, {"quiescence_margin", quiescence_margin}, {"record_target", record_target}};
    out["output"] = {{"directory", output_directory}, {"snapshot_times", snapshot_times}};
    return out;
}

} // namespace hypctrl::cli
