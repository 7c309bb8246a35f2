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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "hypctrl/volterra.hpp"

using namespace hypctrl;

namespace {

std::vector<double> nodes(int m, double T) {
    std::vector<double> t(m + 1);
    for (int i = 0; i <= m; ++i) {
        t[i] = T * i / m;
    }
    return t;
}

// f = cos t, k(t, s) = exp(t - s): g(t) = cos t + (exp t - cos t + sin t) / 2
double manufactured_error(int m) {
    const double T = 2.0;
    const auto t = nodes(m, T);
    std::vector<double> g(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        g[i] = std::cos(t[i]) + 0.5 * (std::exp(t[i]) - std::cos(t[i]) + std::sin(t[i]));
    }
    const auto f = solve_second_kind(
        1.0, [&](std::size_t j, std::size_t i) { return std::exp(t[j] - t[i]); }, g, T / m);
    double err = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        err = std::max(err, std::abs(f[i] - std::cos(t[i])));
    }
    return err;
}

} // namespace

TEST_CASE("trapezoid") {
    CHECK(trapezoid(std::vector<double>(11, 1.0), 0.1) == doctest::Approx(1.0));
    const auto t = nodes(7, 1.0);
    CHECK(trapezoid(t, 1.0 / 7) == doctest::Approx(0.5).epsilon(1e-14));
    auto sq = nodes(100, 1.0);
    for (double& v : sq) {
        v *= v;
    }
    CHECK(std::abs(trapezoid(sq, 0.01) - 1.0 / 3.0) < 1e-4);
    CHECK_THROWS_AS(trapezoid(std::vector<double>{1.0}, 0.1), InvalidInput);
}

TEST_CASE("zero kernel returns g / mu exactly") {
    const std::vector<double> g{1.0, -2.0, 3.5, 0.25};
    for (double mu : {1.0, -0.5, 3.0}) {
        const auto f = solve_second_kind(mu, [](std::size_t, std::size_t) { return 0.0; }, g, 0.1);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(f[i] == g[i] / mu);
        }
    }
}

TEST_CASE("unit kernel with g = 1 + t forces f = 1") {
    const auto t = nodes(50, 1.0);
    std::vector<double> g(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        g[i] = 1.0 + t[i];
    }
    const auto f = solve_second_kind(1.0, [](std::size_t, std::size_t) { return 1.0; }, g, 0.02);
    for (double v : f) {
        CHECK(v == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("manufactured solution converges at second order") {
    const double e1 = manufactured_error(40);
    const double e2 = manufactured_error(80);
    const double e3 = manufactured_error(160);
    const double order1 = std::log2(e1 / e2);
    const double order2 = std::log2(e2 / e3);
    MESSAGE("errors " << e1 << " " << e2 << " " << e3 << ", orders " << order1 << " " << order2);
    CHECK(order2 >= 1.9);
    CHECK(order2 <= 2.1);
    CHECK(order1 >= 1.9);
}

TEST_CASE("matrix path agrees with the scalar path for 1x1 problems") {
    const auto t = nodes(30, 1.5);
    std::vector<double> g(t.size());
    std::vector<Eigen::Matrix<double, 1, 1>> gm(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        g[i] = std::sin(3 * t[i]) + 1.0;
        gm[i](0, 0) = g[i];
    }
    auto k = [&](std::size_t j, std::size_t i) { return std::cos(t[j] * t[i]) - 0.3; };
    const double mu = -1.3;
    const auto fs = solve_second_kind(mu, k, g, 0.05);
    Eigen::Matrix<double, 1, 1> M;
    M(0, 0) = mu;
    const auto fm = solve_second_kind(
        M, [&](std::size_t j, std::size_t i) { return Eigen::Matrix<double, 1, 1>::Constant(k(j, i)); }, gm, 0.05);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(fm[i](0, 0) == doctest::Approx(fs[i]).epsilon(1e-13));
    }
}

TEST_CASE("2x2 system decouples into two scalar problems") {
    const auto t = nodes(40, 1.0);
    std::vector<Eigen::Vector2d> g(t.size());
    std::vector<double> g1(t.size()), g2(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        g1[i] = std::exp(-t[i]);
        g2[i] = t[i] * t[i];
        g[i] << g1[i], g2[i];
    }
    const Eigen::Matrix2d mu = Eigen::Vector2d(1.0, 2.0).asDiagonal();
    auto k1 = [&](std::size_t j, std::size_t i) { return t[j] - t[i]; };
    auto k2 = [&](std::size_t, std::size_t i) { return 1.0 + t[i]; };
    const auto f = solve_second_kind(
        mu,
        [&](std::size_t j, std::size_t i) {
            Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
            m(0, 0) = k1(j, i);
            m(1, 1) = k2(j, i);
            return m;
        },
        g, 1.0 / 40);
    const auto f1 = solve_second_kind(1.0, k1, g1, 1.0 / 40);
    const auto f2 = solve_second_kind(2.0, k2, g2, 1.0 / 40);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(f[i](0) == doctest::Approx(f1[i]).epsilon(1e-13));
        CHECK(f[i](1) == doctest::Approx(f2[i]).epsilon(1e-13));
    }
}

TEST_CASE("singular step reports a numeric error") {
    const std::vector<double> g{1.0, 1.0};
    CHECK_THROWS_AS(solve_second_kind(0.0, [](std::size_t, std::size_t) { return 0.0; }, g, 0.1), NumericError);
}
