#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "dflow/csv.hpp"
#include "dflow/errors.hpp"

using namespace dflow;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "dflow_csv_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("write then read round-trips values exactly") {
  fs::path p = temp_file("roundtrip.csv");
  std::vector<double> values = {1.0, -2.5, 0.1, 1e-300, 3.141592653589793, -7e200};
  write_csv(p, {"a", "b", "c"}, values, 3);

  CsvTable t = read_csv(p);
  REQUIRE(t.cols == 3);
  REQUIRE(t.rows() == 2);
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  for (std::size_t i = 0; i < values.size(); ++i) {
    CHECK(t.values[i] == values[i]);  // %.17g is lossless for doubles
  }
}

TEST_CASE("headerless numeric file is read as data from line 1") {
  fs::path p = temp_file("noheader.csv");
  write_text(p, "1,2\n3,4\n");
  CsvTable t = read_csv(p);
  CHECK(t.header.empty());
  REQUIRE(t.rows() == 2);
  CHECK(t.values[0] == 1.0);
  CHECK(t.values[3] == 4.0);
}

TEST_CASE("header row is detected when any field is non-numeric") {
  fs::path p = temp_file("header.csv");
  write_text(p, "x_1,x_2\n0.5,-0.25\n");
  CsvTable t = read_csv(p);
  REQUIRE(t.header.size() == 2);
  CHECK(t.header[0] == "x_1");
  REQUIRE(t.rows() == 1);
  CHECK(t.values[1] == -0.25);
}

TEST_CASE("ragged row raises IoError naming the line") {
  fs::path p = temp_file("ragged.csv");
  write_text(p, "a,b\n1,2\n3\n");
  try {
    read_csv(p);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
}

TEST_CASE("non-numeric cell in a data row raises IoError naming the line") {
  fs::path p = temp_file("badcell.csv");
  write_text(p, "1,2\n3,oops\n");
  try {
    read_csv(p);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    std::string msg = e.what();
    CHECK(msg.find(":2") != std::string::npos);
  }
}

TEST_CASE("missing file raises IoError") {
  CHECK_THROWS_AS(read_csv(temp_file("does_not_exist.csv")), IoError);
}

TEST_CASE("empty file raises IoError") {
  fs::path p = temp_file("empty.csv");
  write_text(p, "");
  CHECK_THROWS_AS(read_csv(p), IoError);
}

TEST_CASE("trailing newline and CRLF line endings are accepted") {
  fs::path p = temp_file("crlf.csv");
  write_text(p, "a,b\r\n1,2\r\n3,4\r\n");
  CsvTable t = read_csv(p);
  REQUIRE(t.rows() == 2);
  CHECK(t.values[2] == 3.0);
}
