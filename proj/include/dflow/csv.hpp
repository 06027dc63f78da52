#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dflow {

struct CsvTable {
  std::vector<std::string> header;  // empty when the file had no header row
  std::size_t cols = 0;
  std::vector<double> values;  // row-major

  std::size_t rows() const { return cols == 0 ? 0 : values.size() / cols; }
};

// Strict numeric CSV reader. A first line whose fields do not all parse as
// numbers is treated as a header. Ragged rows or non-numeric cells raise
// IoError naming the line number.
CsvTable read_csv(const std::filesystem::path& path);

// Writes header + rows with round-trippable "%.17g" formatting.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<double>& values, std::size_t cols);

}  // namespace dflow
