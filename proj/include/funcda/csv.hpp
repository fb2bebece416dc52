#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace funcda {

// One parsed CSV file. Cells hold the unescaped field content exactly as
// written (no trimming). row_lines[i] is the 1-based line the i-th data row
// started on, for error messages.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<size_t> row_lines;

  // Case-insensitive, trimmed header lookup. Empty when absent.
  std::optional<size_t> column(const std::string& name) const;
};

// RFC 4180-style parsing: comma delimiter, double-quote escaping, quoted
// fields may embed commas and newlines. A leading UTF-8 BOM is stripped.
// Lines whose first non-space byte is '#' (outside any quoted field) are
// comments and skipped. Throws IoError for a missing file and ParseError
// (naming the line) for malformed quoting.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& content, const std::string& origin);

std::string csv_escape(const std::string& field);

// Writes header + rows; fields escaped as needed. An optional comment is
// emitted as a '#' line before the header.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows,
               const std::optional<std::string>& comment = std::nullopt);

}  // namespace funcda
