#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mplasso/types.hpp"

namespace mplasso {

/// Numeric table with a mandatory header row.
struct CsvTable {
    std::vector<std::string> header;
    Matrix values;
};

/**
 * Parses RFC-4180 text: comma separated, optional double-quoted fields with
 * "" escapes, LF or CRLF line ends. The first record is the header; every
 * other record must have the same field count and hold finite numbers.
 * Errors are ParseError with 1-based line and field column.
 */
CsvTable parse_csv(std::string_view text, const std::string& source);
CsvTable read_csv(const std::string& path);

/// Shortest decimal text that reads back to exactly `v`.
std::string format_double(double v);

/// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

std::string format_csv(const std::vector<std::string>& header, const Matrix& values);
void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& values);

/// Writes rows of preformatted fields after the header; fields are escaped here.
void write_rows(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

void write_text(const std::string& path, const std::string& text);

} // namespace mplasso
