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

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "support.hpp"

using namespace hypctrl;

namespace {

HyperbolicSystem unit_speed_uncoupled(int M) {
    HyperbolicSystem sys = test::rope(M);
    std::fill(sys.lambda1.begin(), sys.lambda1.end(), 1.0);
    std::fill(sys.lambda2.begin(), sys.lambda2.end(), 1.0);
    for (auto& A : sys.A) {
        A.setZero();
    }
    return sys;
}

ErrorState random_error(const Grid& g, std::mt19937& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    return ErrorState{Eigen::Vector2d(U(rng), U(rng)), {test::random_profile(g, rng), test::random_profile(g, rng)}};
}

} // namespace

TEST_CASE("gain placement") {
    SUBCASE("heavy rope closed-loop spectrum") {
        const HyperbolicSystem sys = test::rope(20);
        const Eigen::VectorXd k = place_gain(sys.F, sys.b, Eigen::Vector2d(20.0, 9.0));
        Eigen::VectorXcd ev = (sys.F + sys.b * k.transpose()).eigenvalues();
        std::vector<double> re{ev(0).real(), ev(1).real()};
        std::sort(re.begin(), re.end());
        CHECK(re[0] == doctest::Approx(-5.0).epsilon(1e-10));
        CHECK(re[1] == doctest::Approx(-4.0).epsilon(1e-10));
    }
    SUBCASE("controllable canonical form") {
        Eigen::Matrix3d F;
        F << 0, 1, 0, 0, 0, 1, 2, -3, 0.5;
        const Eigen::Vector3d b(0, 0, 1);
        const Eigen::Vector3d kappa(6, 11, 6);
        const Eigen::VectorXd k = place_gain(F, b, kappa);
        const Eigen::Vector3d expect = -F.row(2).transpose() - kappa;
        CHECK((k - expect).cwiseAbs().maxCoeff() < 1e-12);
        // target equal to the open-loop polynomial
        const Eigen::VectorXd k0 = place_gain(F, b, -F.row(2).transpose());
        CHECK(k0.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("uncontrollable pair") {
        CHECK_THROWS_AS(place_gain(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1)),
                        AssumptionViolation);
    }
}

TEST_CASE("decoupling matrix") {
    SUBCASE("C = 0 and F + b k^T = 0 keep N constant") {
        HyperbolicSystem sys = unit_speed_uncoupled(50);
        sys.n = 1;
        sys.F = Eigen::MatrixXd::Constant(1, 1, -0.7);
        sys.b = Eigen::VectorXd::Constant(1, 2.5);
        sys.c = Eigen::VectorXd::Constant(1, 0.4);
        const TransformedSystem ts = transform_system(sys);
        const Eigen::VectorXd k = place_gain(sys.F, sys.b, Eigen::VectorXd::Zero(1));
        CHECK(std::abs(sys.F(0, 0) + sys.b(0) * k(0)) < 1e-15);
        const DecouplingMatrix N = solve_decoupling(ts, k);
        for (const auto& m : N.N) {
            CHECK((m - N.N[0]).cwiseAbs().maxCoeff() < 1e-15);
        }
    }
    SUBCASE("unit speeds, C = 0: matrix exponential") {
        const HyperbolicSystem sys = unit_speed_uncoupled(400);
        const TransformedSystem ts = transform_system(sys);
        const Eigen::VectorXd k = place_gain(sys.F, sys.b, Eigen::Vector2d(20.0, 9.0));
        const Eigen::MatrixXd Acl = sys.F + sys.b * k.transpose();
        const DecouplingMatrix N = solve_decoupling(ts, k);
        double err = 0.0, scale = 0.0;
        for (int m = 0; m <= 400; ++m) {
            scale = std::max(scale, N.N[m].cwiseAbs().maxCoeff());
            const double z = sys.grid.node(m);
            const Eigen::MatrixXd E = (Acl * z).exp();
            const Eigen::MatrixXd Einv = (-Acl * z).exp();
            err = std::max(err, (N.N[m].row(0) - N.N[0].row(0) * E).cwiseAbs().maxCoeff());
            err = std::max(err, (N.N[m].row(1) - N.N[0].row(1) * Einv).cwiseAbs().maxCoeff());
        }
        MESSAGE("relative error " << err / scale);
        CHECK(err < 1e-8 * scale);
        CHECK(N.N[0].row(0) == k.transpose());
    }
    SUBCASE("heavy rope residual decays under refinement") {
        double prev = 0.0;
        for (int M : {100, 200, 400}) {
            const TransformedSystem ts = transform_system(test::rope(M));
            const BacksteppingGains g = backstepping_gains(ts, Eigen::Vector2d(20.0, 9.0), 1.0);
            const BacksteppingResiduals r = backstepping_residuals(g, ts);
            CHECK(r.decoupling_initial == 0.0);
            if (prev > 0.0) {
                MESSAGE("M = " << M << " residual " << r.decoupling << " order " << std::log2(prev / r.decoupling));
                CHECK(std::log2(prev / r.decoupling) > 0.9);
            }
            prev = r.decoupling;
        }
    }
}

TEST_CASE("stabilizing kernel P") {
    const TransformedSystem ts = transform_system(test::rope(200));
    SUBCASE("zero N b gives P = 0") {
        DecouplingMatrix N;
        N.N.assign(201, Eigen::MatrixXd::Zero(2, 2));
        const PKernel P = solve_P_kernel(N, ts.sys, ts.cmap);
        for (const auto& v : P.P.data()) {
            CHECK(v.cwiseAbs().maxCoeff() == 0.0);
        }
    }
    SUBCASE("heavy rope") {
        const BacksteppingGains g = backstepping_gains(ts, Eigen::Vector2d(20.0, 9.0), 0.0);
        for (const auto& v : g.P.P.data()) {
            CHECK(v(0, 1) == 0.0);
            CHECK(v(1, 0) == 0.0);
        }
        for (const auto& v : g.P_inv.data()) {
            CHECK(v(0, 1) == 0.0);
            CHECK(v(1, 0) == 0.0);
        }
        const BacksteppingResiduals r = backstepping_residuals(g, ts);
        CHECK(r.p1 < 1e-6);
        CHECK(r.p2 < 1e-6);
        CHECK(g.warnings.empty());
    }
}

TEST_CASE("backstepping feedback") {
    const TransformedSystem ts = transform_system(test::rope(200));
    const BacksteppingGains g = backstepping_gains(ts, Eigen::Vector2d(20.0, 9.0), 0.3);
    SUBCASE("zero error returns the reference input") {
        const ErrorState e{Eigen::Vector2d::Zero(), {Profile(201, 0.0), Profile(201, 0.0)}};
        CHECK(bs_feedback(g, e, 0.42) == 0.42);
    }
    SUBCASE("no-op gains") {
        BacksteppingGains z = g;
        z.q1cl = z.q1bar;
        for (auto& w : z.w) {
            w.setZero();
        }
        z.r.setZero();
        std::mt19937 rng(1);
        CHECK(bs_feedback(z, random_error(ts.sys.grid, rng), -0.2) == -0.2);
    }
    SUBCASE("feedback enforces the target boundary condition") {
        std::mt19937 rng(17);
        for (int trial = 0; trial < 10; ++trial) {
            ErrorState e = random_error(ts.sys.grid, rng);
            const double ubar_r = 0.1 * trial;
            // eps1(1) = q1bar eps2(1) + u - ubar_r, with u affine in eps1(1)
            e.eps.x1.back() = 0.0;
            const double u0 = bs_feedback(g, e, ubar_r);
            e.eps.x1.back() = 1.0;
            const double beta = bs_feedback(g, e, ubar_r) - u0;
            const double x = (g.q1bar * e.eps.x2.back() + u0 - ubar_r) / (1.0 - beta);
            e.eps.x1.back() = x;
            const PdeProfiles target = target_error(g, e);
            CHECK(std::abs(target.x1.back() - g.q1cl * target.x2.back()) < 1e-12);
        }
    }
    SUBCASE("mismatched error grid") {
        const ErrorState e{Eigen::Vector2d::Zero(), {Profile(51, 0.0), Profile(51, 0.0)}};
        CHECK_THROWS_AS(bs_feedback(g, e, 0.0), InvalidInput);
    }
}
