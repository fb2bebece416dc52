#include "funcda/annotate.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "funcda/csv.hpp"
#include "funcda/errors.hpp"
#include "funcda/text.hpp"

namespace funcda {

UnlabeledPart from_abc(const AbcPartRecord& record) {
  UnlabeledPart part;
  part.part_name = record.part_name;
  part.assembly_name = record.assembly_name;
  part.chunk = record.chunk;
  part.assembly_id = record.assembly_id;
  part.part_id = record.part_id;
  return part;
}

namespace {

std::string opt_to_string(const std::optional<int64_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

std::string part_key(const UnlabeledPart& part) {
  return opt_to_string(part.chunk) + '\x1f' + opt_to_string(part.assembly_id) + '\x1f' +
         opt_to_string(part.part_id) + '\x1f' + fold(part.part_name) + '\x1f' +
         fold(part.assembly_name);
}

std::map<std::string, std::string> load_checkpoint(const std::string& path,
                                                   const std::string& classifier_id) {
  std::map<std::string, std::string> done;
  std::ifstream in(path, std::ios::binary);
  if (!in) return done;  // absent checkpoint: nothing completed yet
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    if (obj.value("classifier", "") != classifier_id) continue;
    done[obj.value("key", "")] = obj.value("raw_text", "");
  }
  return done;
}

}  // namespace

std::vector<AnnotationResult> annotate_batch(const std::vector<UnlabeledPart>& parts,
                                             Classifier& classifier,
                                             const Taxonomy& taxonomy,
                                             const AnnotateOptions& options) {
  const std::string classifier_id = classifier.id();

  std::map<std::string, std::string> completed;
  std::ofstream checkpoint;
  std::mutex checkpoint_mu;
  if (options.checkpoint_path) {
    completed = load_checkpoint(*options.checkpoint_path, classifier_id);
    checkpoint.open(*options.checkpoint_path, std::ios::binary | std::ios::app);
    if (!checkpoint) {
      throw IoError("cannot open checkpoint file: " + *options.checkpoint_path);
    }
  }

  std::vector<AnnotationResult> results(parts.size());

  auto annotate_one = [&](size_t i) {
    AnnotationResult& result = results[i];
    result.part = parts[i];
    result.classifier_id = classifier_id;

    const std::string key = part_key(parts[i]);
    auto it = completed.find(key);
    if (it != completed.end()) {
      result.raw_text = it->second;
      result.cached = true;
    } else {
      try {
        PredictionResult pred =
            classifier.predict(parts[i].part_name, parts[i].assembly_name);
        result.raw_text = pred.raw_text;
        result.cached = pred.cached;
      } catch (const std::exception& e) {
        result.raw_text = std::string("<error: ") + e.what() + ">";
      }
      if (checkpoint.is_open()) {
        nlohmann::ordered_json line = {
            {"key", key}, {"classifier", classifier_id}, {"raw_text", result.raw_text}};
        std::lock_guard<std::mutex> lock(checkpoint_mu);
        checkpoint << line.dump() << '\n' << std::flush;
      }
    }
    result.label = normalize_label(result.raw_text, taxonomy);
  };

  const int workers = std::max(1, options.concurrency);
  if (workers == 1 || parts.size() <= 1) {
    for (size_t i = 0; i < parts.size(); ++i) annotate_one(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < parts.size(); i = next.fetch_add(1)) {
          annotate_one(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  return results;
}

AnnotationReport distribution_report(const std::vector<AnnotationResult>& results) {
  if (results.empty()) throw Error("distribution_report: empty results");

  AnnotationReport report;
  report.total = static_cast<int64_t>(results.size());
  for (FunctionClass c : all_classes()) report.per_label[class_name(c)] = 0;
  report.per_label["OutOfVocabulary"] = 0;

  int64_t oov = 0;
  for (const auto& result : results) {
    if (result.label.is_in_vocabulary()) {
      ++report.per_label[class_name(result.label.cls())];
    } else {
      ++report.per_label["OutOfVocabulary"];
      ++oov;
    }
  }
  report.in_vocabulary_fraction =
      static_cast<double>(report.total - oov) / static_cast<double>(report.total);
  return report;
}

void export_annotations(const std::vector<AnnotationResult>& results,
                        const std::string& path,
                        const std::optional<std::string>& comment) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(results.size());
  for (const auto& r : results) {
    rows.push_back({opt_to_string(r.part.chunk), opt_to_string(r.part.assembly_id),
                    r.part.assembly_name, opt_to_string(r.part.part_id),
                    r.part.part_name, r.label.name(), r.raw_text});
  }
  write_csv(path,
            {"chunk", "assembly_id", "assembly_name", "part_id", "part_name",
             "function", "raw_output"},
            rows, comment);
}

std::vector<AnnotationResult> read_annotations(const std::string& path,
                                               const Taxonomy& taxonomy) {
  CsvTable table = read_csv(path);
  const char* columns[7] = {"chunk", "assembly_id", "assembly_name", "part_id",
                            "part_name", "function", "raw_output"};
  size_t cols[7];
  for (int i = 0; i < 7; ++i) {
    auto idx = table.column(columns[i]);
    if (!idx) {
      throw ParseError(path + ": header lacks required column \"" +
                       std::string(columns[i]) + "\"");
    }
    cols[i] = *idx;
  }
  auto parse_opt = [&](const std::string& cell, size_t line) -> std::optional<int64_t> {
    if (trim(cell).empty()) return std::nullopt;
    try {
      return std::stoll(cell);
    } catch (...) {
      throw ParseError(path + ": line " + std::to_string(line) +
                       ": non-integer id field \"" + cell + "\"");
    }
  };

  std::vector<AnnotationResult> results;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const size_t line = table.row_lines[r];
    auto cell = [&](size_t c) -> std::string {
      return c < cells.size() ? cells[c] : std::string();
    };
    AnnotationResult result;
    result.part.chunk = parse_opt(cell(cols[0]), line);
    result.part.assembly_id = parse_opt(cell(cols[1]), line);
    result.part.assembly_name = cell(cols[2]);
    result.part.part_id = parse_opt(cell(cols[3]), line);
    result.part.part_name = cell(cols[4]);
    result.raw_text = cell(cols[6]);
    result.label = normalize_label(result.raw_text, taxonomy);
    results.push_back(std::move(result));
  }
  return results;
}

std::string annotation_report_to_json(const AnnotationReport& report,
                                      const std::optional<std::string>& provenance_json) {
  nlohmann::ordered_json doc;
  if (provenance_json) {
    doc["provenance"] = nlohmann::ordered_json::parse(*provenance_json);
  }
  doc["total"] = report.total;
  doc["in_vocabulary_fraction"] = report.in_vocabulary_fraction;
  doc["per_label"] = nlohmann::ordered_json::object();
  for (FunctionClass c : all_classes()) {
    doc["per_label"][class_name(c)] = report.per_label.at(class_name(c));
  }
  doc["per_label"]["OutOfVocabulary"] = report.per_label.at("OutOfVocabulary");
  return doc.dump(2) + "\n";
}

}  // namespace funcda
