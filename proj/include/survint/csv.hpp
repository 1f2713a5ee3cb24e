// Copyright 2026 The survint Authors.
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

#ifndef SURVINT_CSV_HPP
#define SURVINT_CSV_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace survint {

/// A header row plus string cells; RFC-4180 quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header, if present.
  [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

/// Parses a whole cell as a double ('.' decimal separator, no locale).
std::optional<double> parse_double(std::string_view cell);

/// Shortest text that reads back to the same double.
std::string format_double(double value);

/// Quotes a cell when it contains a separator, quote or newline.
std::string csv_escape(std::string_view cell);

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells);

}  // namespace survint

#endif
