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

namespace {

HyperbolicSystem uncoupled(int M) {
    HyperbolicSystem sys = test::rope(M);
    for (auto& a : sys.A) {
        a.setZero();
    }
    return sys;
}

double kernel_sup(const TriangularKernel& K) {
    double m = 0.0;
    for (const auto& v : K.data()) {
        m = std::max(m, v.cwiseAbs().maxCoeff());
    }
    return m;
}

double rel_round_trip(const TransformedSystem& ts, const PdeProfiles& x) {
    const PdeProfiles back = pull_back(ts, push_forward(ts, x));
    const double scale = std::max(test::sup(x.x1), test::sup(x.x2));
    return std::max(test::sup_diff(back.x1, x.x1), test::sup_diff(back.x2, x.x2)) / scale;
}

} // namespace

TEST_CASE("scaling gains") {
    SUBCASE("no diagonal coupling gives the identity") {
        const HyperbolicSystem sys = uncoupled(40);
        const ScalingGains g = scaling_gains(sys);
        for (int k = 0; k < sys.grid.size(); ++k) {
            CHECK(g.E(k).isIdentity(0.0));
        }
    }
    SUBCASE("heavy rope alpha1 = -alpha2") {
        const HyperbolicSystem sys = test::rope(200);
        const ScalingGains g = scaling_gains(sys);
        for (int k = 0; k < sys.grid.size(); ++k) {
            CHECK(g.alpha1[k] == doctest::Approx(-g.alpha2[k]).epsilon(1e-14));
        }
        CHECK(std::abs(g.alpha1.back()) > 1e-3);
    }
    SUBCASE("A11 = lambda1 = 1 gives alpha1(z) = z") {
        HyperbolicSystem sys = uncoupled(32);
        std::fill(sys.lambda1.begin(), sys.lambda1.end(), 1.0);
        for (auto& a : sys.A) {
            a(0, 0) = 1.0;
        }
        const ScalingGains g = scaling_gains(sys);
        for (int k = 0; k < sys.grid.size(); ++k) {
            CHECK(g.alpha1[k] == doctest::Approx(sys.grid.node(k)).epsilon(1e-14));
            CHECK((g.E(k) * g.E_inv(k)).isIdentity(1e-14));
        }
    }
}

TEST_CASE("kernel K") {
    SUBCASE("no in-domain coupling gives K = 0 and K_I = 0") {
        const TransformedSystem ts = transform_system(uncoupled(50));
        CHECK(kernel_sup(ts.K) == 0.0);
        CHECK(kernel_sup(ts.K_inv) == 0.0);
    }
    SUBCASE("heavy rope boundary conditions") {
        const TransformedSystem ts = transform_system(test::rope(400));
        const KernelResiduals r = kernel_residuals(ts.K, ts.sys, ts.coupling);
        CHECK(r.max_bc() < 1e-8);
        CHECK(kernel_sup(ts.K) > 0.1);
        CHECK(ts.kernel_info.last_change <= 1e-10);
        CHECK(reciprocity_residual(ts.K, ts.K_inv) < 1e-10);
        // K12 and K21 on the diagonal hold node by node
        for (int k = 0; k <= 400; ++k) {
            const double sum = ts.sys.lambda1[k] + ts.sys.lambda2[k];
            CHECK(std::abs(ts.K.at(k, k)(0, 1) + ts.coupling.a12[k] / sum) < 1e-12);
        }
    }
    SUBCASE("interior residual decays at first order or better") {
        double prev = 0.0;
        for (int M : {100, 200, 400}) {
            const TransformedSystem ts = transform_system(test::rope(M));
            const double r = kernel_residuals(ts.K, ts.sys, ts.coupling).pde.maxCoeff();
            if (prev > 0.0) {
                MESSAGE("M = " << M << " residual " << r << " order " << std::log2(prev / r));
                CHECK(std::log2(prev / r) > 0.9);
            }
            prev = r;
        }
    }
    SUBCASE("C(z) = K(z, 0) Lambda(0) e2 c^T") {
        const TransformedSystem ts = transform_system(test::rope(100));
        const auto C = coupling_matrix_C(ts.K, ts.sys);
        for (int k = 0; k <= 100; ++k) {
            const Eigen::MatrixXd expect =
                ts.K.at(k, 0) * Eigen::Vector2d(0.0, -ts.sys.lambda2[0]) * ts.sys.c.transpose();
            CHECK((C[k] - ts.C[k]).cwiseAbs().maxCoeff() < 1e-15);
            CHECK((C[k] - expect).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + expect.cwiseAbs().maxCoeff()));
        }
    }
    SUBCASE("q0 = 0 is rejected") {
        HyperbolicSystem sys = test::rope(20);
        sys.q0 = 0.0;
        CHECK_THROWS(transform_system(sys));
    }
}

TEST_CASE("reciprocity inverse") {
    SUBCASE("diagonal kernels stay diagonal") {
        const Grid g(60);
        TriangularKernel P(g, "P");
        for (int k = 0; k <= 60; ++k) {
            for (int j = 0; j <= k; ++j) {
                P.at(k, j)(0, 0) = std::sin(g.node(k) - 2 * g.node(j));
                P.at(k, j)(1, 1) = 1.0 + g.node(k) * g.node(j);
            }
        }
        const TriangularKernel PI = reciprocity_inverse(P);
        for (const auto& v : PI.data()) {
            CHECK(v(0, 1) == 0.0);
            CHECK(v(1, 0) == 0.0);
        }
        CHECK(reciprocity_residual(P, PI) < 1e-12);
    }
    SUBCASE("round trip on random profiles and the benchmark initial state") {
        std::mt19937 rng(11);
        const TransformedSystem ts = transform_system(test::rope(400));
        for (int i = 0; i < 5; ++i) {
            const PdeProfiles x{test::random_profile(ts.sys.grid, rng), test::random_profile(ts.sys.grid, rng)};
            CHECK(rel_round_trip(ts, x) < 5e-3);
        }
        CHECK(rel_round_trip(ts, test::sin_cubed_ic(ts.sys.grid)) < 5e-3);
    }
    SUBCASE("round trip improves under refinement") {
        const auto f = [](double z) { return std::exp(z) * std::cos(3 * z); };
        double prev = 1.0;
        for (int M : {50, 100, 200}) {
            const TransformedSystem ts = transform_system(test::rope(M));
            const PdeProfiles x{ts.sys.grid.sample(f), ts.sys.grid.sample([](double z) { return 1 - z * z; })};
            const double e = rel_round_trip(ts, x);
            CHECK(e <= prev);
            prev = e;
        }
    }
}

TEST_CASE("push forward and pull back") {
    SUBCASE("identity when K = 0 and E = I") {
        const TransformedSystem ts = transform_system(uncoupled(30));
        std::mt19937 rng(3);
        const PdeProfiles x{test::random_profile(ts.sys.grid, rng), test::random_profile(ts.sys.grid, rng)};
        const PdeProfiles y = push_forward(ts, x);
        CHECK(test::sup_diff(y.x1, x.x1) == 0.0);
        CHECK(test::sup_diff(y.x2, x.x2) == 0.0);
    }
    SUBCASE("boundary node z = 0 is untouched by the integral") {
        const TransformedSystem ts = transform_system(test::rope(100));
        const PdeProfiles x = test::sin_cubed_ic(ts.sys.grid);
        const PdeProfiles xt = scale(ts.gains, x);
        const PdeProfiles xb = push_forward(ts, x);
        CHECK(xb.x1[0] == xt.x1[0]);
        CHECK(xb.x2[0] == xt.x2[0]);
        CHECK(test::sup_diff(unscale(ts.gains, xt).x1, x.x1) < 1e-15);
    }
    SUBCASE("mismatched grids are rejected") {
        const TransformedSystem ts = transform_system(test::rope(100));
        const PdeProfiles x = test::sin_cubed_ic(Grid(50));
        CHECK_THROWS_AS(push_forward(ts, x), InvalidInput);
        CHECK_THROWS_AS(pull_back(ts, x), InvalidInput);
    }
}

TEST_CASE("input map") {
    SUBCASE("trivial transform leaves u alone") {
        const TransformedSystem ts = transform_system(uncoupled(30));
        const PdeProfiles x = test::sin_cubed_ic(ts.sys.grid);
        CHECK(input_map(ts, 0.7, x) == doctest::Approx(0.7).epsilon(1e-15));
    }
    SUBCASE("unmap inverts map") {
        const TransformedSystem ts = transform_system(test::rope(200));
        std::mt19937 rng(5);
        for (int i = 0; i < 5; ++i) {
            const PdeProfiles xt{test::random_profile(ts.sys.grid, rng), test::random_profile(ts.sys.grid, rng)};
            const double u = 0.3 * i - 0.6;
            CHECK(input_unmap(ts, input_map(ts, u, xt), xt) == doctest::Approx(u).epsilon(1e-13));
        }
    }
}
