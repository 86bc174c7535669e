#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "stocycle/model.hpp"

namespace stocycle {

// Round-trip decimal form ("%.17g"); identical bytes for identical doubles.
std::string format_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a named column; throws DataError if absent.
  std::size_t column(std::string_view name) const;
};

// RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
// Throws DataError on unterminated quotes or an empty input.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

// Writes one RFC-4180 record terminated by CRLF; fields are quoted when needed.
void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

// Loads one numeric column as a series. An empty `column` selects the first
// column. Errors (DataError): missing file, missing column, empty data,
// non-numeric or non-finite cell (message names the 1-based data row).
TimeSeries ingest(const std::filesystem::path& path, std::string_view column,
                  int periods_per_year);

}  // namespace stocycle
