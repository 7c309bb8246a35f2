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

#include "doctest.h"
#include "support.hpp"

using namespace hypctrl;

TEST_CASE("heavy rope coefficients") {
    const HyperbolicSystem sys = test::rope(400);
    CHECK(sys.n == 2);
    CHECK(sys.q0 == -1.0);
    CHECK(sys.q1 == -1.0);
    // physical speed sqrt(g m / rho) at the load, divided by ell on the normalized domain
    CHECK(heavy_rope_speed(HeavyRopeParameters{}, 0.0) == doctest::Approx(std::sqrt(8.175)).epsilon(1e-14));
    CHECK(sys.lambda1[0] == doctest::Approx(std::sqrt(8.175) / 3.0).epsilon(1e-14));
    CHECK(sys.lambda1 == sys.lambda2);

    const Eigen::VectorXcd ev = sys.F.eigenvalues();
    std::vector<double> re{ev(0).real(), ev(1).real()};
    std::sort(re.begin(), re.end());
    CHECK(re[0] == doctest::Approx(-3.43).epsilon(0.01 / 3.43));
    CHECK(std::abs(re[1]) < 1e-12);
    CHECK(std::abs(ev(0).imag()) + std::abs(ev(1).imag()) < 1e-12);
}

TEST_CASE("heavy rope speed derivative matches finite differences") {
    const HeavyRopeParameters p;
    for (double z : {0.0, 0.3, 0.77, 1.0}) {
        const double h = 1e-6;
        const double fd = (heavy_rope_speed(p, z + h) - heavy_rope_speed(p, z - h)) / (2 * h);
        CHECK(heavy_rope_speed_derivative(p, z) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("validate") {
    HyperbolicSystem sys = test::rope(50);
    ValidationReport r = validate(sys);
    CHECK(r.controllable);
    CHECK(r.q0_nonzero);
    CHECK(r.ok());

    HyperbolicSystem nob = sys;
    nob.b.setZero();
    r = validate(nob);
    CHECK_FALSE(r.controllable);
    CHECK(r.controllability_rank == 0);

    HyperbolicSystem noq = sys;
    noq.q0 = 0.0;
    CHECK_FALSE(validate(noq).q0_nonzero);

    HyperbolicSystem bad = sys;
    bad.lambda1.pop_back();
    CHECK_THROWS_AS(validate(bad), InvalidInput);
    bad = sys;
    bad.F(0, 0) = std::nan("");
    CHECK_THROWS_AS(validate(bad), InvalidInput);
}

TEST_CASE("positive rope parameters always satisfy the assumptions") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(0.05, 5.0);
    for (int i = 0; i < 20; ++i) {
        const HeavyRopeParameters p{U(rng), U(rng), U(rng), U(rng)};
        CHECK(validate(heavy_rope(p, Grid(40))).ok());
    }
}

TEST_CASE("characteristic map") {
    SUBCASE("heavy rope delays") {
        const CharacteristicMap cm = characteristic_map(test::rope(400));
        CHECK(cm.tau1() == doctest::Approx(0.667).epsilon(0.005 / 0.667));
        CHECK(cm.tau2() == cm.tau1());
    }
    SUBCASE("constant speed") {
        HyperbolicSystem sys = test::rope(64);
        std::fill(sys.lambda1.begin(), sys.lambda1.end(), 2.0);
        std::fill(sys.lambda2.begin(), sys.lambda2.end(), 4.0);
        const CharacteristicMap cm = characteristic_map(sys);
        CHECK(cm.tau1() == doctest::Approx(0.5));
        CHECK(cm.tau2() == doctest::Approx(0.25));
        CHECK(cm.phi(1, 0.3) == doctest::Approx(0.15));
        CHECK(cm.psi(2, 0.1) == doctest::Approx(0.4));
    }
    SUBCASE("phi1(0.5) against a Richardson-refined dense trapezoid") {
        const HeavyRopeParameters p;
        auto trap = [&](int m) {
            const double h = 0.5 / m;
            double s = 0.5 * (1.0 / heavy_rope_speed(p, 0.0) + 1.0 / heavy_rope_speed(p, 0.5));
            for (int i = 1; i < m; ++i) {
                s += 1.0 / heavy_rope_speed(p, i * h);
            }
            return s * h;
        };
        // normalized travel time: ell * int_0^{ell/2} ds / lambda(s) with s = ell z
        const double oracle = p.ell * (4.0 * trap(4000) - trap(2000)) / 3.0;
        const CharacteristicMap cm = characteristic_map(test::rope(400));
        CHECK(cm.phi(1, 0.5) == doctest::Approx(oracle).epsilon(1e-6));
    }
    SUBCASE("psi inverts phi with O(1/M^2) error") {
        for (int M : {50, 100, 200}) {
            const CharacteristicMap cm = characteristic_map(test::rope(M));
            double err = 0.0;
            for (int i = 0; i <= 997; ++i) {
                const double z = i / 997.0;
                err = std::max(err, std::abs(cm.psi(1, cm.phi(1, z)) - z));
            }
            CHECK(err < 1.0 / (M * M));
            const Profile& phi = cm.phi_table(1);
            CHECK(phi.front() == 0.0);
            CHECK(std::is_sorted(phi.begin(), phi.end(), std::less_equal<>()));
        }
    }
}

TEST_CASE("grid helpers") {
    const Grid g(4);
    CHECK(g.size() == 5);
    CHECK(g.node(2) == 0.5);
    const Profile v = g.sample([](double z) { return 2 * z; });
    CHECK(interpolate(v, 0.375) == doctest::Approx(0.75));
    CHECK(interpolate(v, 2.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(Grid(0), InvalidInput);
}
