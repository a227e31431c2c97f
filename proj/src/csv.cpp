#include "vmse/csv.hpp"

#include <cstdio>
#include <sstream>

#include "vmse/error.hpp"

namespace vmse {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& os, std::initializer_list<std::string_view> columns)
    : os_(os), columns_(columns.size()) {
  bool first = true;
  for (auto c : columns) {
    if (!first) os_ << ',';
    os_ << c;
    first = false;
  }
  os_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) { row({}, values); }

void CsvWriter::row(std::initializer_list<std::string_view> text, std::initializer_list<double> values) {
  if (text.size() + values.size() != columns_) {
    throw Error("cli_orchestrator", "csv_schema", "row width does not match header");
  }
  bool first = true;
  for (auto t : text) {
    if (!first) os_ << ',';
    os_ << t;
    first = false;
  }
  for (double v : values) {
    if (!first) os_ << ',';
    os_ << format_number(v);
    first = false;
  }
  os_ << '\n';
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cli_orchestrator", "io", "cannot open '" + path.string() + "' for writing");
  return os;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cli_orchestrator", "io", "cannot open '" + path.string() + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  CsvTable table;
  std::string line;
  if (std::getline(is, line)) table.header = split(line);
  while (std::getline(is, line)) {
    if (!line.empty()) table.rows.push_back(split(line));
  }
  return table;
}

}  // namespace vmse
