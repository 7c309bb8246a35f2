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

#ifndef HYPCTRL_IO_HPP
#define HYPCTRL_IO_HPP

#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>

namespace hypctrl {

/// Round-trippable decimal representation of a double.
std::string format_double(double value);

void write_csv_header(std::ostream& os, std::initializer_list<std::string> columns);
void write_csv_row(std::ostream& os, std::span<const double> values);

} // namespace hypctrl

#endif // HYPCTRL_IO_HPP
