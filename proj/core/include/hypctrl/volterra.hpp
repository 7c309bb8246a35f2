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

#ifndef HYPCTRL_VOLTERRA_HPP
#define HYPCTRL_VOLTERRA_HPP

#include <cmath>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "hypctrl/errors.hpp"

namespace hypctrl {

/// Composite trapezoid rule over uniformly spaced samples.
double trapezoid(std::span<const double> values, double step);

/// Solves  mu f(t) + int_0^t k(t, s) f(s) ds = g(t)  on the uniform grid t_j = j h,
/// j = 0 .. g.size()-1, by forward substitution with product-trapezoid weights.
///
/// `Mat` is the D x D multiplier/kernel type and `Val` the D x C unknown type;
/// `kernel(j, i)` returns k(t_j, t_i) for i <= j.
template <typename Mat, typename Val, typename Kernel>
    requires(!std::is_arithmetic_v<Mat>)
std::vector<Val> solve_second_kind(const Mat& mu, Kernel&& kernel, const std::vector<Val>& rhs, double h) {
    std::vector<Val> f;
    f.reserve(rhs.size());
    if (rhs.empty()) {
        return f;
    }
    for (std::size_t j = 0; j < rhs.size(); ++j) {
        Val acc = rhs[j];
        if (j > 0) {
            acc.noalias() -= (0.5 * h) * (kernel(j, std::size_t{0}) * f[0]);
            for (std::size_t i = 1; i < j; ++i) {
                acc.noalias() -= h * (kernel(j, i) * f[i]);
            }
        }
        Mat lhs = mu;
        if (j > 0) {
            lhs += (0.5 * h) * kernel(j, j);
        }
        auto lu = lhs.fullPivLu();
        if (!lu.isInvertible()) {
            throw NumericError("Volterra step matrix is singular at node " + std::to_string(j) +
                               "; refine the grid");
        }
        f.push_back(lu.solve(acc));
    }
    return f;
}

/// Scalar convenience overload.
template <typename Kernel>
std::vector<double> solve_second_kind(double mu, Kernel&& kernel, std::span<const double> rhs, double h) {
    std::vector<double> f;
    f.reserve(rhs.size());
    for (std::size_t j = 0; j < rhs.size(); ++j) {
        double acc = rhs[j];
        double lhs = mu;
        if (j > 0) {
            acc -= 0.5 * h * kernel(j, std::size_t{0}) * f[0];
            for (std::size_t i = 1; i < j; ++i) {
                acc -= h * kernel(j, i) * f[i];
            }
            lhs += 0.5 * h * kernel(j, j);
        }
        if (lhs == 0.0 || !std::isfinite(lhs)) {
            throw NumericError("Volterra step multiplier vanishes at node " + std::to_string(j) +
                               "; refine the grid");
        }
        f.push_back(acc / lhs);
    }
    return f;
}

} // namespace hypctrl

#endif // HYPCTRL_VOLTERRA_HPP
