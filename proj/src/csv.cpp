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

#include "survint/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "survint/error.hpp"

namespace survint {

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) {
      return i;
    }
  }
  return std::nullopt;
}

namespace {

// Reads one record; returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& cells) {
  cells.clear();
  if (in.peek() == std::char_traits<char>::eof()) {
    return false;
  }
  std::string cell;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          cell.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  if (quoted) {
    throw DataError("csv: unterminated quoted field");
  }
  cells.push_back(std::move(cell));
  return any;
}

}  // namespace

CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> cells;
  if (!read_record(in, table.header)) {
    throw DataError("csv: empty input, header row required");
  }
  std::size_t line = 1;
  while (read_record(in, cells)) {
    ++line;
    if (cells.size() == 1 && cells[0].empty()) {
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw DataError("csv: row " + std::to_string(line - 1) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(cells);
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open '" + path.string() + "'");
  }
  return parse_csv(in);
}

std::optional<double> parse_double(std::string_view cell) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) {
    cell.remove_prefix(1);
  }
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) {
    cell.remove_suffix(1);
  }
  if (!cell.empty() && cell.front() == '+') {
    cell.remove_prefix(1);
  }
  if (cell.empty()) {
    return std::nullopt;
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    return std::nullopt;
  }
  return value;
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::string csv_escape(std::string_view cell) {
  if (cell.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(cell);
  }
  std::string out = "\"";
  for (const char c : cell) {
    if (c == '"') {
      out.push_back('"');
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) {
      out << ',';
    }
    out << csv_escape(cells[i]);
  }
  out << '\n';
}

}  // namespace survint
