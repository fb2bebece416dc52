#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "funcda/taxonomy.hpp"

namespace funcda {

// One raw repository row, cells trimmed but otherwise untouched.
struct RawDesignRow {
  std::string name;
  std::string component_basis;
  std::string sys_name;
  std::string subfunction_basis;
  std::string parent_subfunction;
};

// One preprocessed design record. part_name, component_basis and
// system_name are non-empty and the label is always in-vocabulary.
struct DesignRecord {
  std::string part_name;
  std::string component_basis;
  std::string system_name;
  std::string subfunction;
  FunctionClass label;
};

struct AbcPartRecord {
  int64_t chunk = 0;
  int64_t assembly_id = 0;
  std::string assembly_name;
  int64_t part_id = 0;
  std::string part_name;
};

// Preprocessing tally. raw_count == dropped_incomplete + dropped_duplicate
// + retained always holds.
struct CorpusStats {
  int64_t raw_count = 0;
  int64_t dropped_incomplete = 0;
  int64_t dropped_duplicate = 0;
  int64_t retained = 0;
};

// Reads an OSDR CSV export. The header must name the five columns (any
// order): name, component_basis, sys_name, subfunction_basis,
// parent_subfunction. Cells are whitespace-trimmed; empty cells stay empty.
std::vector<RawDesignRow> parse_osdr_csv(const std::string& path);
std::vector<RawDesignRow> parse_osdr_text(const std::string& content,
                                          const std::string& origin);

// Drops rows with an empty name/basis/system or an unresolvable label, then
// collapses exact duplicates on the folded key (part_name, component_basis,
// system_name, subfunction, label), first occurrence kept. The label comes
// from parent_subfunction when it names a tier-1 class, else from mapping
// subfunction_basis through the hierarchy.
std::pair<std::vector<DesignRecord>, CorpusStats> preprocess(
    const std::vector<RawDesignRow>& rows, const Taxonomy& taxonomy);

// Reads ABC part metadata: CSV with columns chunk, assembly_id,
// assembly_name, part_id, part_name, or JSON-lines objects with the same
// fields (chosen by a leading '{'). Non-integer id fields are errors.
std::vector<AbcPartRecord> parse_abc_metadata(const std::string& path);

// ABC records whose folded part_name appears among the OSDR part names,
// deduplicated on (part_name, assembly_name), input order preserved.
std::vector<AbcPartRecord> match_abc_to_osdr(const std::vector<AbcPartRecord>& abc,
                                             const std::vector<DesignRecord>& osdr);

// DesignRecord CSV artifact (columns part_name, component_basis,
// system_name, subfunction, label).
void write_design_records(const std::string& path,
                          const std::vector<DesignRecord>& records,
                          const std::optional<std::string>& comment = std::nullopt);
std::vector<DesignRecord> read_design_records(const std::string& path,
                                              const Taxonomy& taxonomy);

// AbcPartRecord CSV artifact (Table-style columns chunk, assembly_id,
// assembly_name, part_id, part_name).
void write_abc_records(const std::string& path,
                       const std::vector<AbcPartRecord>& records,
                       const std::optional<std::string>& comment = std::nullopt);

}  // namespace funcda
