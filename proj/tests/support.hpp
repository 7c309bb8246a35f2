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

#ifndef HYPCTRL_TESTS_SUPPORT_HPP
#define HYPCTRL_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hypctrl/simulator.hpp"

namespace hypctrl::test {

inline HyperbolicSystem rope(int M) { return heavy_rope(HeavyRopeParameters{}, Grid(M)); }

inline double sup(const Profile& v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

inline double sup_diff(const Profile& a, const Profile& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

inline PdeProfiles sin_cubed_ic(const Grid& g, double amp = 0.4) {
    PdeProfiles x;
    x.x1 = g.sample([amp](double z) { return amp * std::pow(std::sin(2.0 * std::numbers::pi * z), 3); });
    x.x2 = x.x1;
    for (double& v : x.x2) {
        v = -v;
    }
    return x;
}

/// Smooth random profile: a few low sine modes with random amplitudes.
inline Profile random_profile(const Grid& g, std::mt19937& rng, int modes = 4) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> a(modes), p(modes);
    for (int i = 0; i < modes; ++i) {
        a[i] = U(rng) / (1 + i);
        p[i] = U(rng) * std::numbers::pi;
    }
    return g.sample([&](double z) {
        double s = 0.0;
        for (int i = 0; i < modes; ++i) {
            s += a[i] * std::sin((i + 1) * std::numbers::pi * z + p[i]);
        }
        return s;
    });
}

/// Benchmark closed loop: kappa = (20, 9), xi0 = (-0.5, 0), sin^3 profiles, 0 -> 5 m.
inline SimConfig benchmark_config(const HyperbolicSystem& sys, double gamma, double dt, double T_end) {
    const CharacteristicMap cm = characteristic_map(sys);
    SimConfig c;
    c.dt = dt;
    c.T_end = T_end;
    c.controller = ControllerType::Flatness;
    c.gamma = gamma;
    c.kappa = Eigen::Vector2d(20.0, 9.0);
    c.reference = ReferenceSpec{0.0, 5.0, cm.tau1(), 5.0 - cm.tau2(), 0};
    c.xi0 = Eigen::Vector2d(-0.5, 0.0);
    const PdeProfiles x0 = sin_cubed_ic(sys.grid);
    c.x1_0 = x0.x1;
    c.x2_0 = x0.x2;
    return c;
}

} // namespace hypctrl::test

#endif // HYPCTRL_TESTS_SUPPORT_HPP
