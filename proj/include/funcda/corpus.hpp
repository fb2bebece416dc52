#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "funcda/ingest.hpp"
#include "funcda/taxonomy.hpp"

namespace funcda {

struct LabeledExample {
  std::string part_name;
  std::string system_name;
  FunctionClass label;

  bool operator==(const LabeledExample&) const = default;
};

struct SplitSpec {
  double test_fraction = 0.10;            // in (0,1)
  double train_subsample_fraction = 1.0;  // in (0,1]
  uint64_t seed = 0;
  bool stratified = true;
};

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
};

// One chat-format training or inference example. assistant_message is the
// canonical label name, or empty for inference examples.
struct ChatExample {
  std::optional<std::string> system_message;
  std::string user_message;
  std::string assistant_message;

  bool operator==(const ChatExample&) const = default;
};

LabeledExample to_labeled(const DesignRecord& record);

// Deterministic seeded split. Stratified mode apportions the test count
// across labels by largest remainder, so each label's test share is within
// one record of test_fraction * support and the total is exactly
// round(test_fraction * N). The training pool is then subsampled to
// train_subsample_fraction, uniform within strata, with the same seeding.
// Record order within each side follows the input order.
DatasetSplit split(const std::vector<LabeledExample>& records, const SplitSpec& spec);

// The classification prompt. {CLASSES} is the eight "Name: Definition"
// pairs in canonical order joined by "; ". Byte-stable for equal inputs.
std::string render_prompt(const std::string& part_name,
                          const std::string& assembly_name,
                          const Taxonomy& taxonomy);

ChatExample to_chat_example(const LabeledExample& example, const Taxonomy& taxonomy,
                            const std::optional<std::string>& system_message = std::nullopt);

// Inference variant: empty assistant message.
ChatExample to_chat_query(const std::string& part_name, const std::string& assembly_name,
                          const Taxonomy& taxonomy,
                          const std::optional<std::string>& system_message = std::nullopt);

// One {"messages":[...]} object per line. An optional header line
// {"provenance":{...}} may precede the examples; readers skip it.
// read_jsonl(write_jsonl(x)) == x.
void write_jsonl(const std::vector<ChatExample>& examples, const std::string& path,
                 const std::optional<std::string>& provenance_json = std::nullopt);
std::string chat_example_to_json_line(const ChatExample& example);
std::vector<ChatExample> read_jsonl(const std::string& path);

std::map<FunctionClass, int64_t> label_histogram(const std::vector<LabeledExample>& records);

// LabeledExample CSV artifact (columns part_name, system_name, label).
void write_labeled_csv(const std::string& path, const std::vector<LabeledExample>& records,
                       const std::optional<std::string>& comment = std::nullopt);
std::vector<LabeledExample> read_labeled_csv(const std::string& path,
                                             const Taxonomy& taxonomy);

}  // namespace funcda
