#include "dflow/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

bool parse_double(const std::string& field, double& value) {
  if (field.empty()) return false;
  const char* begin = field.c_str();
  char* end = nullptr;
  value = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  return end == begin + field.size();
}

std::string trimmed(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    line = trimmed(line);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (first) {
      first = false;
      bool numeric = true;
      std::vector<double> row(fields.size());
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (!parse_double(fields[i], row[i])) {
          numeric = false;
          break;
        }
      }
      table.cols = fields.size();
      if (numeric) {
        table.values.insert(table.values.end(), row.begin(), row.end());
      } else {
        table.header = fields;
      }
      continue;
    }
    if (fields.size() != table.cols) {
      throw IoError(path.string() + ":" + std::to_string(line_no) +
                    ": expected " + std::to_string(table.cols) + " fields, got " +
                    std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      double v;
      if (!parse_double(f, v)) {
        throw IoError(path.string() + ":" + std::to_string(line_no) +
                      ": non-numeric field '" + f + "'");
      }
      table.values.push_back(v);
    }
  }
  if (table.cols == 0) throw IoError(path.string() + ": empty file");
  return table;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<double>& values, std::size_t cols) {
  if (cols == 0 || values.size() % cols != 0) {
    throw ContractError("write_csv: values are not a whole number of rows");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  if (!header.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out << ',';
      out << header[i];
    }
    out << '\n';
  }
  char buf[32];
  std::size_t rows = values.size() / cols;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", values[r * cols + c]);
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out.flush()) throw IoError("write failed: " + path.string());
}

}  // namespace dflow
