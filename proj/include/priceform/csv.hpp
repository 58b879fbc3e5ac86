#pragma once

#include <string>
#include <vector>

namespace priceform::csv {

/// Numeric table with a named header row, the shape every data file of the
/// tool uses.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t columns() const { return header.size(); }

  /// Index of a named column; fails with parse_error when absent.
  std::size_t column(const std::string& name) const;

  /// One column as a vector.
  std::vector<double> values(const std::string& name) const;
};

/// Writes header and rows, comma-separated, newline-terminated, numbers at
/// full decimal round-trip precision (17 significant digits).
void write_table(const std::string& path,
                 const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows);

/// Reads a table back. Malformed content — missing header, ragged rows,
/// non-numeric fields — fails with parse_error naming the file and the
/// 1-based line.
Table read_table(const std::string& path);

}  // namespace priceform::csv
