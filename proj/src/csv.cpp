#include "funcda/csv.hpp"

#include <fstream>
#include <sstream>

#include "funcda/errors.hpp"
#include "funcda/text.hpp"

namespace funcda {

std::optional<size_t> CsvTable::column(const std::string& name) const {
  const std::string want = fold(name);
  for (size_t i = 0; i < header.size(); ++i) {
    if (fold(header[i]) == want) return i;
  }
  return std::nullopt;
}

namespace {

bool row_is_comment(const std::vector<std::string>& row) {
  if (row.empty()) return false;
  const std::string t = trim(row[0]);
  return !t.empty() && t[0] == '#';
}

bool row_is_blank(const std::vector<std::string>& row) {
  return row.size() == 1 && trim(row[0]).empty();
}

}  // namespace

CsvTable parse_csv(const std::string& content, const std::string& origin) {
  CsvTable table;
  size_t i = 0;
  size_t line = 1;

  // UTF-8 BOM
  if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;

  bool have_header = false;
  while (i < content.size()) {
    const size_t row_line = line;
    std::vector<std::string> row;
    std::string field;
    bool quoted_field_seen = false;
    bool done_row = false;
    while (!done_row) {
      if (i < content.size() && content[i] == '"' && field.empty() && !quoted_field_seen) {
        // Quoted field.
        quoted_field_seen = true;
        ++i;
        bool closed = false;
        while (i < content.size()) {
          char c = content[i];
          if (c == '"') {
            if (i + 1 < content.size() && content[i + 1] == '"') {
              field.push_back('"');
              i += 2;
            } else {
              ++i;
              closed = true;
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.push_back(c);
            ++i;
          }
        }
        if (!closed) {
          throw ParseError(origin + ": line " + std::to_string(row_line) +
                           ": unterminated quoted field");
        }
        // Only a delimiter or end-of-line may follow a closing quote.
        if (i < content.size() && content[i] != ',' && content[i] != '\n' &&
            content[i] != '\r') {
          throw ParseError(origin + ": line " + std::to_string(line) +
                           ": unexpected character after closing quote");
        }
      }
      if (i >= content.size()) {
        row.push_back(std::move(field));
        done_row = true;
      } else if (content[i] == ',') {
        row.push_back(std::move(field));
        field.clear();
        quoted_field_seen = false;
        ++i;
      } else if (content[i] == '\n' || content[i] == '\r') {
        row.push_back(std::move(field));
        if (content[i] == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
        ++i;
        ++line;
        done_row = true;
      } else {
        if (quoted_field_seen) {
          throw ParseError(origin + ": line " + std::to_string(line) +
                           ": unexpected character after closing quote");
        }
        field.push_back(content[i]);
        ++i;
      }
    }

    if (row_is_blank(row) || row_is_comment(row)) continue;
    if (!have_header) {
      table.header = std::move(row);
      have_header = true;
    } else {
      table.rows.push_back(std::move(row));
      table.row_lines.push_back(row_line);
    }
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path);
}

std::string csv_escape(const std::string& field) {
  bool needs_quotes = false;
  for (char c : field) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quotes = true;
      break;
    }
  }
  if (!field.empty() && (field.front() == ' ' || field.back() == ' ')) needs_quotes = true;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows,
               const std::optional<std::string>& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  if (comment) out << "# " << *comment << "\n";
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(header[i]);
  }
  out << '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(row[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace funcda
