#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "funcda/classifier.hpp"
#include "funcda/ingest.hpp"
#include "funcda/taxonomy.hpp"

namespace funcda {

struct UnlabeledPart {
  std::string part_name;
  std::string assembly_name;
  std::optional<int64_t> chunk;
  std::optional<int64_t> assembly_id;
  std::optional<int64_t> part_id;

  bool operator==(const UnlabeledPart&) const = default;
};

UnlabeledPart from_abc(const AbcPartRecord& record);

// label always equals normalize_label(raw_text).
struct AnnotationResult {
  UnlabeledPart part;
  std::string raw_text;
  FunctionLabel label = FunctionLabel::out_of_vocabulary("");
  std::string classifier_id;
  bool cached = false;
};

struct AnnotationReport {
  int64_t total = 0;
  std::map<std::string, int64_t> per_label;  // eight classes + "OutOfVocabulary"
  double in_vocabulary_fraction = 0.0;
};

struct AnnotateOptions {
  int concurrency = 4;
  // JSONL of completed parts, keyed by part identity and classifier id.
  // Written incrementally, so interrupted batches resume where they left
  // off.
  std::optional<std::string> checkpoint_path;
};

// One result per part, input order preserved. Per-part failures (after the
// client's own retries) become out-of-vocabulary results carrying the error
// text; they never abort the batch.
std::vector<AnnotationResult> annotate_batch(const std::vector<UnlabeledPart>& parts,
                                             Classifier& classifier,
                                             const Taxonomy& taxonomy,
                                             const AnnotateOptions& options = {});

AnnotationReport distribution_report(const std::vector<AnnotationResult>& results);

// CSV with columns chunk, assembly_id, assembly_name, part_id, part_name,
// function, raw_output. Missing ids serialize as empty cells.
void export_annotations(const std::vector<AnnotationResult>& results,
                        const std::string& path,
                        const std::optional<std::string>& comment = std::nullopt);
std::vector<AnnotationResult> read_annotations(const std::string& path,
                                               const Taxonomy& taxonomy);

std::string annotation_report_to_json(const AnnotationReport& report,
                                      const std::optional<std::string>& provenance_json = std::nullopt);

}  // namespace funcda
