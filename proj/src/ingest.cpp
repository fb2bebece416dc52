#include "funcda/ingest.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "funcda/csv.hpp"
#include "funcda/errors.hpp"
#include "funcda/text.hpp"

namespace funcda {

namespace {

constexpr const char* kOsdrColumns[5] = {
    "name", "component_basis", "sys_name", "subfunction_basis", "parent_subfunction"};

int64_t parse_int_field(const std::string& cell, const std::string& field,
                        const std::string& origin, size_t line) {
  const std::string t = trim(cell);
  int64_t value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError(origin + ": line " + std::to_string(line) + ": field \"" + field +
                     "\" is not an integer: \"" + cell + "\"");
  }
  return value;
}

}  // namespace

std::vector<RawDesignRow> parse_osdr_text(const std::string& content,
                                          const std::string& origin) {
  CsvTable table = parse_csv(content, origin);
  size_t cols[5];
  for (int i = 0; i < 5; ++i) {
    auto idx = table.column(kOsdrColumns[i]);
    if (!idx) {
      throw ParseError(origin + ": header lacks required column \"" +
                       kOsdrColumns[i] + "\"");
    }
    cols[i] = *idx;
  }

  std::vector<RawDesignRow> rows;
  rows.reserve(table.rows.size());
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    auto cell = [&](size_t c) -> std::string {
      return c < cells.size() ? trim(cells[c]) : std::string();
    };
    rows.push_back(RawDesignRow{cell(cols[0]), cell(cols[1]), cell(cols[2]),
                                cell(cols[3]), cell(cols[4])});
  }
  return rows;
}

std::vector<RawDesignRow> parse_osdr_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open OSDR file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_osdr_text(ss.str(), path);
}

std::pair<std::vector<DesignRecord>, CorpusStats> preprocess(
    const std::vector<RawDesignRow>& rows, const Taxonomy& taxonomy) {
  std::vector<DesignRecord> records;
  CorpusStats stats;
  stats.raw_count = static_cast<int64_t>(rows.size());
  std::set<std::string> seen;

  for (const auto& row : rows) {
    // Label: parent_subfunction is already tier-1 in well-formed exports;
    // fall back to the tier-2 map for exports that only carry the
    // subfunction column.
    FunctionLabel label = normalize_label(row.parent_subfunction, taxonomy);
    if (!label.is_in_vocabulary()) label = tier1_of(row.subfunction_basis, taxonomy);

    if (row.name.empty() || row.component_basis.empty() || row.sys_name.empty() ||
        !label.is_in_vocabulary()) {
      ++stats.dropped_incomplete;
      continue;
    }

    DesignRecord rec{row.name, row.component_basis, row.sys_name,
                     row.subfunction_basis, label.cls()};
    const std::string key = fold(rec.part_name) + '\x1f' + fold(rec.component_basis) +
                            '\x1f' + fold(rec.system_name) + '\x1f' +
                            fold(rec.subfunction) + '\x1f' + class_name(rec.label);
    if (!seen.insert(key).second) {
      ++stats.dropped_duplicate;
      continue;
    }
    records.push_back(std::move(rec));
  }
  stats.retained = static_cast<int64_t>(records.size());
  return {std::move(records), stats};
}

std::vector<AbcPartRecord> parse_abc_metadata(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open ABC metadata file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();

  // JSON-lines detection: first meaningful byte is '{'.
  size_t first = content.find_first_not_of(" \t\r\n");
  const bool jsonl = first != std::string::npos && content[first] == '{';

  std::vector<AbcPartRecord> records;
  if (jsonl) {
    std::istringstream lines(content);
    std::string line;
    size_t line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": line " + std::to_string(line_no) + ": " + e.what());
      }
      AbcPartRecord rec;
      try {
        rec.chunk = obj.at("chunk").get<int64_t>();
        rec.assembly_id = obj.at("assembly_id").get<int64_t>();
        rec.assembly_name = obj.at("assembly_name").get<std::string>();
        rec.part_id = obj.at("part_id").get<int64_t>();
        rec.part_name = obj.at("part_name").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": line " + std::to_string(line_no) + ": " + e.what());
      }
      rec.assembly_name = trim(rec.assembly_name);
      rec.part_name = trim(rec.part_name);
      records.push_back(std::move(rec));
    }
    return records;
  }

  CsvTable table = parse_csv(content, path);
  const char* columns[5] = {"chunk", "assembly_id", "assembly_name", "part_id",
                            "part_name"};
  size_t cols[5];
  for (int i = 0; i < 5; ++i) {
    auto idx = table.column(columns[i]);
    if (!idx) {
      throw ParseError(path + ": header lacks required column \"" +
                       std::string(columns[i]) + "\"");
    }
    cols[i] = *idx;
  }
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const size_t line = table.row_lines[r];
    auto cell = [&](size_t c) -> std::string {
      return c < cells.size() ? cells[c] : std::string();
    };
    AbcPartRecord rec;
    rec.chunk = parse_int_field(cell(cols[0]), "chunk", path, line);
    rec.assembly_id = parse_int_field(cell(cols[1]), "assembly_id", path, line);
    rec.assembly_name = trim(cell(cols[2]));
    rec.part_id = parse_int_field(cell(cols[3]), "part_id", path, line);
    rec.part_name = trim(cell(cols[4]));
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<AbcPartRecord> match_abc_to_osdr(const std::vector<AbcPartRecord>& abc,
                                             const std::vector<DesignRecord>& osdr) {
  std::set<std::string> osdr_names;
  for (const auto& rec : osdr) osdr_names.insert(fold(rec.part_name));

  std::vector<AbcPartRecord> matched;
  std::set<std::string> seen;
  for (const auto& rec : abc) {
    if (!osdr_names.count(fold(rec.part_name))) continue;
    const std::string key = fold(rec.part_name) + '\x1f' + fold(rec.assembly_name);
    if (!seen.insert(key).second) continue;
    matched.push_back(rec);
  }
  return matched;
}

void write_design_records(const std::string& path,
                          const std::vector<DesignRecord>& records,
                          const std::optional<std::string>& comment) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(records.size());
  for (const auto& rec : records) {
    rows.push_back({rec.part_name, rec.component_basis, rec.system_name,
                    rec.subfunction, class_name(rec.label)});
  }
  write_csv(path, {"part_name", "component_basis", "system_name", "subfunction", "label"},
            rows, comment);
}

std::vector<DesignRecord> read_design_records(const std::string& path,
                                              const Taxonomy& taxonomy) {
  CsvTable table = read_csv(path);
  const char* columns[5] = {"part_name", "component_basis", "system_name",
                            "subfunction", "label"};
  size_t cols[5];
  for (int i = 0; i < 5; ++i) {
    auto idx = table.column(columns[i]);
    if (!idx) {
      throw ParseError(path + ": header lacks required column \"" +
                       std::string(columns[i]) + "\"");
    }
    cols[i] = *idx;
  }
  std::vector<DesignRecord> records;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    auto cell = [&](size_t c) -> std::string {
      return c < cells.size() ? cells[c] : std::string();
    };
    FunctionLabel label = normalize_label(cell(cols[4]), taxonomy);
    if (!label.is_in_vocabulary()) {
      throw ParseError(path + ": line " + std::to_string(table.row_lines[r]) +
                       ": unknown label \"" + cell(cols[4]) + "\"");
    }
    records.push_back(DesignRecord{cell(cols[0]), cell(cols[1]), cell(cols[2]),
                                   cell(cols[3]), label.cls()});
  }
  return records;
}

void write_abc_records(const std::string& path,
                       const std::vector<AbcPartRecord>& records,
                       const std::optional<std::string>& comment) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(records.size());
  for (const auto& rec : records) {
    rows.push_back({std::to_string(rec.chunk), std::to_string(rec.assembly_id),
                    rec.assembly_name, std::to_string(rec.part_id), rec.part_name});
  }
  write_csv(path, {"chunk", "assembly_id", "assembly_name", "part_id", "part_name"},
            rows, comment);
}

}  // namespace funcda
