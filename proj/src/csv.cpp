#include "priceform/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "priceform/errors.hpp"

namespace priceform::csv {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void bad_line(const std::string& path, std::size_t line,
                           const std::string& what) {
  fail(ErrorCode::parse_error,
       path + " line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return c;
  fail(ErrorCode::parse_error, "missing column '" + name + "'");
}

std::vector<double> Table::values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const std::vector<double>& row : rows) out.push_back(row[c]);
  return out;
}

void write_table(const std::string& path,
                 const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out)
    fail(ErrorCode::invalid_argument, "cannot open " + path + " for writing");
  for (std::size_t c = 0; c < header.size(); ++c)
    out << (c ? "," : "") << header[c];
  out << '\n';
  char buffer[64];
  for (const std::vector<double>& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::snprintf(buffer, sizeof buffer, "%.17g", row[c]);
      out << (c ? "," : "") << buffer;
    }
    out << '\n';
  }
  out.close();
  if (!out)
    fail(ErrorCode::invalid_argument, "failed writing " + path);
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::parse_error, "cannot open " + path);
  Table table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (in.eof()) break;
      bad_line(path, line_no, "empty line");
    }
    const std::vector<std::string> fields = split_fields(line);
    if (line_no == 1) {
      for (const std::string& f : fields)
        if (f.empty()) bad_line(path, line_no, "empty header field");
      table.header = fields;
      continue;
    }
    if (fields.size() != table.header.size())
      bad_line(path, line_no,
               "expected " + std::to_string(table.header.size()) +
                   " fields, got " + std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(fields.size());
    for (const std::string& f : fields) {
      if (f.empty()) bad_line(path, line_no, "empty field");
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      if (end != f.c_str() + f.size() || errno == ERANGE)
        bad_line(path, line_no, "not a number: '" + f + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) fail(ErrorCode::parse_error, path + ": empty file");
  return table;
}

}  // namespace priceform::csv
