#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace msz::csv {

/// Header-indexed table of string cells. Line numbers are 1-based file lines.
struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  /// Index of a named column; throws ValidationError naming the file if absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string source = "<memory>");

std::vector<std::string> split_line(std::string_view line);

double to_double(const Table& t, std::size_t row, std::size_t col);
long long to_integer(const Table& t, std::size_t row, std::size_t col);

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double v);

void write_row(std::ostream& os, const std::vector<std::string>& cells);

}  // namespace msz::csv
