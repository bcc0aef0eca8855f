#pragma once

#include <string>
#include <vector>

namespace threshova {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws IngestionError when absent.
  int col(const std::string& name) const;
  bool has_col(const std::string& name) const;
};

// Strict CSV: UTF-8, comma separated, header row required, no quoting needed
// by any of the shipped fixtures (quoted fields are still accepted).
CsvTable read_csv(const std::string& path);

double parse_double(const std::string& s, long row, const std::string& col);

// Shortest round-trip, locale-independent formatting; identical doubles
// always print identically.
std::string format_double(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace threshova
