#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vmse {

/// Full-precision scientific notation used by every CSV output.
std::string format_number(double v);

/// Header line plus comma-separated rows, LF line endings.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::initializer_list<std::string_view> columns);

  void row(std::initializer_list<double> values);
  /// Row with leading text fields followed by numbers.
  void row(std::initializer_list<std::string_view> text, std::initializer_list<double> values);

 private:
  std::ostream& os_;
  std::size_t columns_;
};

/// Opens `path` for writing (creating parent directories) or throws.
std::ofstream open_output(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace vmse
