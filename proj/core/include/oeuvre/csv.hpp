#pragma once
// Small CSV layer: RFC-4180 writing (UTF-8, '.' decimal), a strict numeric
// table reader for datasets, and a tolerant line splitter for streaming
// input where broken rows are reported rather than fatal.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace oeuvre::csv {

// Quotes a field when it contains a comma, double quote, CR, or LF;
// internal quotes are doubled.
std::string escape_field(const std::string& field);

// Writes one record terminated by '\n', escaping fields as needed.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double x);

// Splits one line into fields, honoring quoted fields and doubled quotes.
// Returns nullopt for a structurally broken line (unterminated quote).
// A trailing CR (from CRLF input) is stripped first.
std::optional<std::vector<std::string>> split_record(const std::string& line);

// Parses a cell as a double; nullopt when the trimmed cell is empty or not
// fully numeric.
std::optional<double> parse_double(const std::string& cell);

struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // rectangular: header.size() wide
};

// Reads a header row plus numeric rows; blank lines are skipped. Throws
// std::runtime_error (with a line number) on ragged rows, non-numeric
// cells, or a missing header.
NumericTable read_numeric_table(std::istream& in);

// File variant; throws std::runtime_error when the file cannot be opened.
NumericTable read_numeric_table_file(const std::string& path);

}  // namespace oeuvre::csv
