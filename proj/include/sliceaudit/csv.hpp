// Copyright 2026 The sliceaudit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace sliceaudit::csv {

// A parsed RFC-4180 file. `lines[r]` is the 1-based source line on which
// data row r starts, for error messages.
struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;

  // Index of a named header column; throws Error if absent.
  std::size_t column(std::string_view name) const;
  // "<source>:<line>" for row r.
  std::string where(std::size_t r) const;
};

Table parse(std::string_view text, std::string source);
Table read(const std::filesystem::path& path);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest representation that parses back to the same double.
std::string format_double(double value);
// Strict decimal parse; `context` prefixes the error message.
double parse_double(std::string_view text, const std::string& context);

}  // namespace sliceaudit::csv
