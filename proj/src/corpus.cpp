#include "funcda/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "funcda/csv.hpp"
#include "funcda/errors.hpp"
#include "funcda/rng.hpp"
#include "funcda/text.hpp"

namespace funcda {

LabeledExample to_labeled(const DesignRecord& record) {
  return LabeledExample{record.part_name, record.system_name, record.label};
}

namespace {

int64_t round_half_up(double x) { return static_cast<int64_t>(std::floor(x + 0.5)); }

// Largest-remainder apportionment of `total_target` across strata with the
// given supports and per-stratum exact shares. Keeps every stratum within
// one of its exact share while the stratum counts sum to total_target.
std::vector<int64_t> apportion(const std::vector<int64_t>& supports, double fraction,
                               int64_t total_target) {
  const size_t k = supports.size();
  std::vector<int64_t> counts(k);
  std::vector<std::pair<double, size_t>> remainders;  // (-frac, index) for stable sort
  int64_t assigned = 0;
  for (size_t i = 0; i < k; ++i) {
    const double exact = fraction * static_cast<double>(supports[i]);
    counts[i] = static_cast<int64_t>(std::floor(exact));
    assigned += counts[i];
    remainders.push_back({-(exact - std::floor(exact)), i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  int64_t leftover = total_target - assigned;
  for (size_t r = 0; r < remainders.size() && leftover > 0; ++r) {
    const size_t i = remainders[r].second;
    if (counts[i] < supports[i]) {
      ++counts[i];
      --leftover;
    }
  }
  return counts;
}

}  // namespace

DatasetSplit split(const std::vector<LabeledExample>& records, const SplitSpec& spec) {
  if (records.empty()) throw Error("split: empty input");
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw ConfigError("split: test_fraction must be in (0,1)");
  }
  if (!(spec.train_subsample_fraction > 0.0 && spec.train_subsample_fraction <= 1.0)) {
    throw ConfigError("split: train_subsample_fraction must be in (0,1]");
  }

  const int64_t n = static_cast<int64_t>(records.size());

  // Strata hold record indices, grouped by label in canonical class order;
  // unstratified splitting is the single-stratum case.
  std::vector<std::vector<size_t>> strata;
  if (spec.stratified) {
    strata.resize(kClassCount);
    for (size_t i = 0; i < records.size(); ++i) {
      strata[static_cast<int>(records[i].label)].push_back(i);
    }
  } else {
    strata.resize(1);
    for (size_t i = 0; i < records.size(); ++i) strata[0].push_back(i);
  }

  std::vector<int64_t> supports;
  for (const auto& s : strata) supports.push_back(static_cast<int64_t>(s.size()));

  const int64_t test_target = round_half_up(spec.test_fraction * static_cast<double>(n));
  std::vector<int64_t> test_counts = apportion(supports, spec.test_fraction, test_target);

  Rng rng(derive_seed(spec.seed, 0x51ull));
  std::vector<size_t> test_idx;
  std::vector<std::vector<size_t>> train_strata(strata.size());
  for (size_t s = 0; s < strata.size(); ++s) {
    std::vector<size_t> idx = strata[s];
    rng.shuffle(idx);
    for (size_t i = 0; i < idx.size(); ++i) {
      if (static_cast<int64_t>(i) < test_counts[s]) test_idx.push_back(idx[i]);
      else train_strata[s].push_back(idx[i]);
    }
  }

  // Subsample the training pool, uniform within strata.
  int64_t pool = 0;
  std::vector<int64_t> pool_supports;
  for (const auto& s : train_strata) {
    pool += static_cast<int64_t>(s.size());
    pool_supports.push_back(static_cast<int64_t>(s.size()));
  }
  std::vector<size_t> train_idx;
  if (spec.train_subsample_fraction >= 1.0) {
    for (const auto& s : train_strata) train_idx.insert(train_idx.end(), s.begin(), s.end());
  } else {
    const int64_t train_target =
        round_half_up(spec.train_subsample_fraction * static_cast<double>(pool));
    std::vector<int64_t> keep =
        apportion(pool_supports, spec.train_subsample_fraction, train_target);
    for (size_t s = 0; s < train_strata.size(); ++s) {
      std::vector<size_t> idx = train_strata[s];
      rng.shuffle(idx);
      idx.resize(static_cast<size_t>(keep[s]));
      train_idx.insert(train_idx.end(), idx.begin(), idx.end());
    }
  }

  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  DatasetSplit out;
  out.test.reserve(test_idx.size());
  out.train.reserve(train_idx.size());
  for (size_t i : test_idx) out.test.push_back(records[i]);
  for (size_t i : train_idx) out.train.push_back(records[i]);
  return out;
}

std::string render_prompt(const std::string& part_name,
                          const std::string& assembly_name,
                          const Taxonomy& taxonomy) {
  if (trim(part_name).empty()) throw Error("render_prompt: empty part name");
  if (trim(assembly_name).empty()) throw Error("render_prompt: empty assembly name");

  std::string classes;
  bool first = true;
  for (FunctionClass c : taxonomy.tier1()) {
    if (!first) classes += "; ";
    first = false;
    classes += class_name(c);
    classes += ": ";
    classes += taxonomy.definition_of(c);
  }
  return "Given the following function classes and their definitions, " + classes +
         ", what is the function of a part " + part_name + " in the system " +
         assembly_name + "?";
}

ChatExample to_chat_example(const LabeledExample& example, const Taxonomy& taxonomy,
                            const std::optional<std::string>& system_message) {
  ChatExample chat;
  chat.system_message = system_message;
  chat.user_message = render_prompt(example.part_name, example.system_name, taxonomy);
  chat.assistant_message = class_name(example.label);
  return chat;
}

ChatExample to_chat_query(const std::string& part_name, const std::string& assembly_name,
                          const Taxonomy& taxonomy,
                          const std::optional<std::string>& system_message) {
  ChatExample chat;
  chat.system_message = system_message;
  chat.user_message = render_prompt(part_name, assembly_name, taxonomy);
  return chat;
}

std::string chat_example_to_json_line(const ChatExample& example) {
  nlohmann::ordered_json messages = nlohmann::ordered_json::array();
  if (example.system_message) {
    messages.push_back({{"role", "system"}, {"content", *example.system_message}});
  }
  messages.push_back({{"role", "user"}, {"content", example.user_message}});
  messages.push_back({{"role", "assistant"}, {"content", example.assistant_message}});
  nlohmann::ordered_json obj = {{"messages", messages}};
  return obj.dump();
}

void write_jsonl(const std::vector<ChatExample>& examples, const std::string& path,
                 const std::optional<std::string>& provenance_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  if (provenance_json) {
    nlohmann::ordered_json header = {
        {"provenance", nlohmann::ordered_json::parse(*provenance_json)}};
    out << header.dump() << '\n';
  }
  for (const auto& ex : examples) out << chat_example_to_json_line(ex) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::vector<ChatExample> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);

  std::vector<ChatExample> examples;
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
    if (obj.is_object() && obj.size() == 1 && obj.contains("provenance")) continue;
    if (!obj.is_object() || !obj.contains("messages") || !obj["messages"].is_array()) {
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ": object lacks \"messages\" array");
    }
    ChatExample ex;
    bool saw_user = false;
    for (const auto& msg : obj["messages"]) {
      const std::string role = msg.value("role", "");
      const std::string content = msg.value("content", "");
      if (role == "system") ex.system_message = content;
      else if (role == "user") {
        ex.user_message = content;
        saw_user = true;
      } else if (role == "assistant") ex.assistant_message = content;
      else {
        throw ParseError(path + ": line " + std::to_string(line_no) +
                         ": unknown role \"" + role + "\"");
      }
    }
    if (!saw_user) {
      throw ParseError(path + ": line " + std::to_string(line_no) +
                       ": no user message");
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

std::map<FunctionClass, int64_t> label_histogram(const std::vector<LabeledExample>& records) {
  std::map<FunctionClass, int64_t> hist;
  for (FunctionClass c : all_classes()) hist[c] = 0;
  for (const auto& rec : records) ++hist[rec.label];
  return hist;
}

void write_labeled_csv(const std::string& path, const std::vector<LabeledExample>& records,
                       const std::optional<std::string>& comment) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(records.size());
  for (const auto& rec : records) {
    rows.push_back({rec.part_name, rec.system_name, class_name(rec.label)});
  }
  write_csv(path, {"part_name", "system_name", "label"}, rows, comment);
}

std::vector<LabeledExample> read_labeled_csv(const std::string& path,
                                             const Taxonomy& taxonomy) {
  CsvTable table = read_csv(path);
  const char* columns[3] = {"part_name", "system_name", "label"};
  size_t cols[3];
  for (int i = 0; i < 3; ++i) {
    auto idx = table.column(columns[i]);
    if (!idx) {
      throw ParseError(path + ": header lacks required column \"" +
                       std::string(columns[i]) + "\"");
    }
    cols[i] = *idx;
  }
  std::vector<LabeledExample> records;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    auto cell = [&](size_t c) -> std::string {
      return c < cells.size() ? cells[c] : std::string();
    };
    FunctionLabel label = normalize_label(cell(cols[2]), taxonomy);
    if (!label.is_in_vocabulary()) {
      throw ParseError(path + ": line " + std::to_string(table.row_lines[r]) +
                       ": unknown label \"" + cell(cols[2]) + "\"");
    }
    records.push_back(LabeledExample{cell(cols[0]), cell(cols[1]), label.cls()});
  }
  return records;
}

}  // namespace funcda
