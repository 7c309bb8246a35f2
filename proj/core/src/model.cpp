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

#include "hypctrl/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hypctrl {

Grid::Grid(int intervals) : intervals_(intervals) {
    if (intervals < 1) {
        throw InvalidInput("grid needs at least one interval");
    }
}

std::vector<double> Grid::nodes() const {
    std::vector<double> z(size());
    for (int k = 0; k < size(); ++k) {
        z[k] = node(k);
    }
    return z;
}

Profile Grid::sample(const std::function<double(double)>& f) const {
    Profile v(size());
    for (int k = 0; k < size(); ++k) {
        v[k] = f(node(k));
    }
    return v;
}

double interpolate_uniform(std::span<const double> table, double lo, double step, double x) {
    const auto last = static_cast<int>(table.size()) - 1;
    if (last <= 0) {
        return table.empty() ? 0.0 : table[0];
    }
    const double s = (x - lo) / step;
    if (s <= 0.0) {
        return table[0];
    }
    if (s >= last) {
        return table[last];
    }
    const int k = std::min(static_cast<int>(s), last - 1);
    const double w = s - k;
    return (1.0 - w) * table[k] + w * table[k + 1];
}

double interpolate(std::span<const double> table, double z) {
    const auto last = static_cast<int>(table.size()) - 1;
    return interpolate_uniform(table, 0.0, last > 0 ? 1.0 / last : 1.0, z);
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    os << "A1 (controllable): " << (controllable ? "pass" : "fail") << " (rank " << controllability_rank
       << ")\n";
    os << "A2 (q0 != 0): " << (q0_nonzero ? "pass" : "fail") << "\n";
    os << "speeds positive: " << (speeds_positive ? "pass" : "fail") << " (min " << min_speed << ")\n";
    return os.str();
}

Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& F, const Eigen::VectorXd& b) {
    const auto n = b.size();
    Eigen::MatrixXd Mc(n, n);
    Eigen::VectorXd col = b;
    for (Eigen::Index i = 0; i < n; ++i) {
        Mc.col(i) = col;
        col = F * col;
    }
    return Mc;
}

namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_shapes(const HyperbolicSystem& sys) {
    const auto m = static_cast<std::size_t>(sys.grid.size());
    if (sys.n < 0) {
        throw InvalidInput("ODE dimension must be non-negative");
    }
    if (sys.lambda1.size() != m || sys.lambda2.size() != m || sys.A.size() != m) {
        throw InvalidInput("coefficient tables must have M+1 entries");
    }
    if (sys.F.rows() != sys.n || sys.F.cols() != sys.n || sys.b.size() != sys.n || sys.c.size() != sys.n) {
        throw InvalidInput("F, b, c dimensions do not match n");
    }
    bool finite = all_finite(sys.lambda1) && all_finite(sys.lambda2) && std::isfinite(sys.q0) &&
                  std::isfinite(sys.q1) && sys.F.allFinite() && sys.b.allFinite() && sys.c.allFinite();
    for (const auto& a : sys.A) {
        finite = finite && a.allFinite();
    }
    if (!finite) {
        throw InvalidInput("system coefficients contain non-finite entries");
    }
}

} // namespace

ValidationReport validate(const HyperbolicSystem& sys) {
    check_shapes(sys);
    ValidationReport r;
    if (sys.n == 0) {
        r.controllability_rank = 0;
        r.controllable = true;
    } else {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(controllability_matrix(sys.F, sys.b));
        r.controllability_rank = static_cast<int>(lu.rank());
        r.controllable = r.controllability_rank == sys.n;
    }
    r.q0_nonzero = sys.q0 != 0.0;
    const double m1 = *std::min_element(sys.lambda1.begin(), sys.lambda1.end());
    const double m2 = *std::min_element(sys.lambda2.begin(), sys.lambda2.end());
    r.min_speed = std::min(m1, m2);
    r.speeds_positive = r.min_speed > 0.0;
    return r;
}

Profile cumulative_trapezoid(std::span<const double> f, double step) {
    Profile out(f.size(), 0.0);
    for (std::size_t k = 1; k < f.size(); ++k) {
        out[k] = out[k - 1] + 0.5 * step * (f[k - 1] + f[k]);
    }
    return out;
}

CharacteristicMap::CharacteristicMap(Grid grid, Profile phi1, Profile phi2)
    : grid_(grid), phi1_(std::move(phi1)), phi2_(std::move(phi2)) {
    for (const auto* phi : {&phi1_, &phi2_}) {
        if (phi->size() != static_cast<std::size_t>(grid_.size())) {
            throw InvalidInput("travel-time table size does not match grid");
        }
        for (std::size_t k = 1; k < phi->size(); ++k) {
            if (!((*phi)[k] > (*phi)[k - 1])) {
                throw NumericError("travel-time map is not strictly increasing");
            }
        }
    }
}

double CharacteristicMap::phi(int i, double z) const {
    return interpolate(phi_table(i), z);
}

double CharacteristicMap::psi(int i, double tau) const {
    const Profile& phi = phi_table(i);
    if (tau <= 0.0) {
        return 0.0;
    }
    if (tau >= phi.back()) {
        return 1.0;
    }
    const auto it = std::upper_bound(phi.begin(), phi.end(), tau);
    const auto k = static_cast<int>(std::distance(phi.begin(), it)) - 1;
    const double w = (tau - phi[k]) / (phi[k + 1] - phi[k]);
    return grid_.node(k) + w * grid_.step();
}

CharacteristicMap characteristic_map(const HyperbolicSystem& sys) {
    const auto r = validate(sys);
    if (!r.speeds_positive) {
        throw InvalidInput("transport speeds must be positive");
    }
    auto slowness = [&](const Profile& lambda) {
        Profile s(lambda.size());
        std::transform(lambda.begin(), lambda.end(), s.begin(), [](double l) { return 1.0 / l; });
        return cumulative_trapezoid(s, sys.grid.step());
    };
    return CharacteristicMap(sys.grid, slowness(sys.lambda1), slowness(sys.lambda2));
}

double heavy_rope_speed(const HeavyRopeParameters& p, double z) {
    return std::sqrt(p.g / p.rho * (p.rho * p.ell * z + p.m));
}

double heavy_rope_speed_derivative(const HeavyRopeParameters& p, double z) {
    return 0.5 * p.g * p.ell / heavy_rope_speed(p, z);
}

HyperbolicSystem heavy_rope(const HeavyRopeParameters& p, const Grid& grid) {
    if (!(p.rho > 0.0 && p.ell > 0.0 && p.g > 0.0 && p.m > 0.0)) {
        throw InvalidInput("heavy rope parameters must be positive");
    }
    HyperbolicSystem sys;
    sys.grid = grid;
    sys.n = 2;
    const double lambda0 = heavy_rope_speed(p, 0.0);
    sys.F.resize(2, 2);
    sys.F << 0.0, 1.0, 0.0, -p.g / lambda0;
    sys.b = Eigen::Vector2d(0.0, 2.0 * p.g / lambda0);
    sys.c = Eigen::Vector2d(0.0, 1.0);
    sys.q0 = -1.0;
    sys.q1 = -1.0;
    sys.lambda1 = grid.sample([&](double z) { return heavy_rope_speed(p, z) / p.ell; });
    sys.lambda2 = sys.lambda1;
    sys.A.resize(grid.size());
    for (int k = 0; k < grid.size(); ++k) {
        const double a = heavy_rope_speed_derivative(p, grid.node(k)) / (2.0 * p.ell);
        sys.A[k] << a, -a, a, -a;
    }
    return sys;
}

} // namespace hypctrl
