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

#include "hypctrl/io.hpp"

#include <cstdio>
#include <ostream>

namespace hypctrl {

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_csv_header(std::ostream& os, std::initializer_list<std::string> columns) {
    bool first = true;
    for (const auto& c : columns) {
        os << (first ? "" : ",") << c;
        first = false;
    }
    os << '\n';
}

void write_csv_row(std::ostream& os, std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        os << (i ? "," : "") << format_double(values[i]);
    }
    os << '\n';
}

} // namespace hypctrl
