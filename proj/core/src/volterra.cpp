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

#include "hypctrl/volterra.hpp"

namespace hypctrl {

double trapezoid(std::span<const double> values, double step) {
    if (values.size() < 2) {
        throw InvalidInput("trapezoid needs at least two samples");
    }
    double s = 0.5 * (values.front() + values.back());
    for (std::size_t k = 1; k + 1 < values.size(); ++k) {
        s += values[k];
    }
    return s * step;
}

} // namespace hypctrl
