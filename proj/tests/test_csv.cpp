#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "stocycle/csv.hpp"
#include "stocycle/errors.hpp"

using namespace stocycle;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto dir = std::filesystem::temp_directory_path() / "stocycle_csv_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path, std::ios::binary) << body;
  return path;
}

}  // namespace

TEST_CASE("RFC-4180 parsing: quotes, embedded separators and line ends") {
  const auto t = parse_csv("a,\"b,c\",d\r\n1,\"he said \"\"hi\"\"\",3\n4,\"x\ny\",6");
  REQUIRE(t.header == std::vector<std::string>{"a", "b,c", "d"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "he said \"hi\"");
  CHECK(t.rows[1][1] == "x\ny");
  CHECK(t.column("d") == 2);
  CHECK_THROWS_AS(t.column("zz"), DataError);
  CHECK_THROWS_AS(parse_csv(""), DataError);
  CHECK_THROWS_AS(parse_csv("a\n\"open"), DataError);
}

TEST_CASE("writing quotes only when needed and round trips") {
  std::ostringstream os;
  write_csv_row(os, {"plain", "with,comma", "with \"quote\"", ""});
  CHECK(os.str() == "plain,\"with,comma\",\"with \"\"quote\"\"\",\r\n");
  const auto back = parse_csv("h1,h2,h3,h4\r\n" + os.str());
  CHECK(back.rows[0] == std::vector<std::string>{"plain", "with,comma", "with \"quote\"", ""});
}

TEST_CASE("round-trip decimal formatting") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789}) {
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("ingest a 48-row series") {
  std::string body = "gdp\n";
  for (int i = 0; i < 48; ++i) body += std::to_string(1.5 + 0.1 * i) + "\n";
  const auto ts = ingest(temp_file("gdp.csv", body), "gdp", 4);
  CHECK(ts.size() == 48);
  CHECK(ts.periods_per_year == 4);
  CHECK(ts.values[47] == doctest::Approx(6.2));
  CHECK(ingest(temp_file("gdp.csv", body), "", 4).size() == 48);
}

TEST_CASE("ingest errors name the problem") {
  CHECK_THROWS_AS(ingest(temp_file("empty.csv", ""), "", 4), DataError);
  CHECK_THROWS_AS(ingest(temp_file("header_only.csv", "y\n"), "y", 4), DataError);
  CHECK_THROWS_WITH_AS(ingest(temp_file("na.csv", "y\n1\n2\nNA\n4\n"), "y", 4),
                       doctest::Contains("row 3"), DataError);
  CHECK_THROWS_WITH_AS(ingest(temp_file("col.csv", "y\n1\n"), "x", 4), doctest::Contains("'x'"), DataError);
  CHECK_THROWS_AS(ingest("/nonexistent/path.csv", "y", 4), DataError);
}
