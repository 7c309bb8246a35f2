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

#ifndef HYPCTRL_ERRORS_HPP
#define HYPCTRL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hypctrl {

// Rejected input: malformed tables, non-finite coefficients, mismatched grids.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A structural assumption of the design (controllability, q0 != 0) is violated.
class AssumptionViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iterative or discretized numerics failed (non-convergence, singular step).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hypctrl

#endif // HYPCTRL_ERRORS_HPP
