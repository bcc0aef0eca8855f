#include "threshova/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "threshova/errors.hpp"

namespace threshova {

namespace {

std::vector<std::string> split_line(const std::string& line, long lineno) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted)
    throw IngestionError("unterminated quote on line " + std::to_string(lineno));
  out.push_back(field);
  return out;
}

}  // namespace

int CsvTable::col(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw IngestionError("column '" + name + "' not found in CSV header");
}

bool CsvTable::has_col(const std::string& name) const {
  for (const auto& h : header)
    if (h == name) return true;
  return false;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open CSV file: " + path);
  CsvTable table;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
      line.erase(0, 3);  // strip UTF-8 BOM
    if (line.empty() && in.eof()) break;
    auto fields = split_line(line, lineno);
    if (lineno == 1) {
      table.header = std::move(fields);
      if (table.header.empty() || (table.header.size() == 1 && table.header[0].empty()))
        throw IngestionError("CSV header row is empty: " + path);
    } else {
      if (fields.size() != table.header.size())
        throw IngestionError("row " + std::to_string(lineno) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(table.header.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) throw IngestionError("CSV file has no header row: " + path);
  return table;
}

double parse_double(const std::string& s, long row, const std::string& col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw IngestionError("row " + std::to_string(row) + ", column '" + col +
                         "': cannot parse '" + s + "' as a number");
  return v;
}

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "\n");
  if (!out) throw IngestionError("write failed: " + path);
}

}  // namespace threshova
