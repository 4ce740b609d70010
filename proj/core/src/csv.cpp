#include "oeuvre/csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace oeuvre::csv {
namespace {

bool needs_quoting(const std::string& field) {
  return field.find_first_of(",\"\r\n") != std::string::npos;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string escape_field(const std::string& field) {
  if (!needs_quoting(field)) return field;
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.put(',');
    out << escape_field(fields[i]);
  }
  out.put('\n');
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::optional<std::vector<std::string>> split_record(const std::string& line) {
  std::string raw = line;
  if (!raw.empty() && raw.back() == '\r') raw.pop_back();

  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < raw.size() && raw[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (in_quotes) return std::nullopt;
  fields.push_back(std::move(cur));
  return fields;
}

std::optional<double> parse_double(const std::string& cell) {
  const std::string t = trim(cell);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;  // from_chars rejects a leading plus
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
  return value;
}

NumericTable read_numeric_table(std::istream& in) {
  NumericTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_record(line);
    if (!fields) {
      throw std::runtime_error("csv: unterminated quote at line " +
                               std::to_string(line_no));
    }
    if (table.header.empty()) {
      table.header = std::move(*fields);
      continue;
    }
    if (fields->size() != table.header.size()) {
      throw std::runtime_error("csv: expected " +
                               std::to_string(table.header.size()) +
                               " fields at line " + std::to_string(line_no) +
                               ", got " + std::to_string(fields->size()));
    }
    std::vector<double> row;
    row.reserve(fields->size());
    for (const auto& cell : *fields) {
      const auto value = parse_double(cell);
      if (!value) {
        throw std::runtime_error("csv: non-numeric cell '" + cell +
                                 "' at line " + std::to_string(line_no));
      }
      row.push_back(*value);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) {
    throw std::runtime_error("csv: missing header row");
  }
  return table;
}

NumericTable read_numeric_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("csv: cannot open '" + path + "'");
  }
  return read_numeric_table(in);
}

}  // namespace oeuvre::csv
