// Copyright 2026 The gaitforge Authors
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

#ifndef GAITFORGE_CSV_HPP_
#define GAITFORGE_CSV_HPP_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace gaitforge::csv {

/// Locale-independent, round-trippable-enough formatting ("%.10g"); inf/nan spelled out.
std::string fmt(double value);

/// Joins already formatted fields with commas.
std::string join(const std::vector<std::string>& fields);

struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws ParseError naming the source.
  std::size_t column(std::string_view name) const;
  /// Numeric cell; throws ParseError naming the row (1-based, header = row 1) and column.
  double number(std::size_t row, std::size_t col) const;
  bool boolean(std::size_t row, std::size_t col) const;
  const std::string& text(std::size_t row, std::size_t col) const { return rows.at(row).at(col); }
};

/// Parses comma-separated text with a header line; every row must have the header's width.
Table parse(std::istream& in, const std::string& source);
Table read_file(const std::filesystem::path& path);

}  // namespace gaitforge::csv

#endif  // GAITFORGE_CSV_HPP_
