// Copyright 2026 The rpd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rpd/spd.hpp"

namespace rpd {

// Dense row-major CSV: one matrix row per line, comma separated, no header.
void write_matrix_csv(std::ostream& out, const Matrix& m);
Matrix read_matrix_csv(std::istream& in);

// {"dim": n, "data": [row-major entries]} for square matrices.
std::string matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const std::string& text);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

/// Parses one CSV cell; leading blanks are allowed, anything else throws
/// IoError naming `what`.
double parse_double(std::string_view cell, std::string_view what);

/// Splits one line on commas and strips a trailing carriage return.
std::vector<std::string> split_csv_line(std::string line);

}  // namespace rpd
