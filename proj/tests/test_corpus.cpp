#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "funcda/corpus.hpp"
#include "funcda/errors.hpp"
#include "funcda/rng.hpp"

using namespace funcda;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Synthetic corpus with a skewed-but-covering label distribution.
std::vector<LabeledExample> make_corpus(size_t n) {
  std::vector<LabeledExample> records;
  records.reserve(n);
  // Weights loosely echo a repository where Channel and Support dominate.
  const int weights[kClassCount] = {5, 30, 5, 6, 7, 8, 9, 30};
  int total_w = 0;
  for (int w : weights) total_w += w;
  Rng rng(99);
  for (size_t i = 0; i < n; ++i) {
    int pick = static_cast<int>(rng.below(static_cast<uint64_t>(total_w)));
    int cls = 0;
    while (pick >= weights[cls]) {
      pick -= weights[cls];
      ++cls;
    }
    records.push_back(LabeledExample{"part" + std::to_string(i), "system",
                                     static_cast<FunctionClass>(cls)});
  }
  return records;
}

size_t count_occurrences(const std::string& text, const std::string& needle) {
  size_t count = 0;
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("split sizes: 7568 records at 0.10 test fraction") {
  auto records = make_corpus(7568);
  SplitSpec spec;
  spec.test_fraction = 0.10;
  spec.seed = 7;
  DatasetSplit result = split(records, spec);
  CHECK(result.test.size() == 757);   // round(756.8)
  CHECK(result.train.size() == 6811);
}

TEST_CASE("split subsample: 10% of the 6811 training pool is 681") {
  auto records = make_corpus(7568);
  SplitSpec spec;
  spec.test_fraction = 0.10;
  spec.train_subsample_fraction = 0.10;
  spec.seed = 7;
  DatasetSplit result = split(records, spec);
  CHECK(result.test.size() == 757);
  CHECK(result.train.size() == 681);  // round(0.10 * 6811)
}

TEST_CASE("split: 10 records give 1 test, 9 train, disjoint") {
  auto records = make_corpus(10);
  SplitSpec spec;
  spec.test_fraction = 0.10;
  spec.seed = 3;
  DatasetSplit result = split(records, spec);
  CHECK(result.test.size() == 1);
  CHECK(result.train.size() == 9);
  std::set<std::string> names;
  for (const auto& r : result.train) names.insert(r.part_name);
  for (const auto& r : result.test) CHECK(names.count(r.part_name) == 0);
}

TEST_CASE("split determinism and seed sensitivity") {
  auto records = make_corpus(500);
  SplitSpec spec;
  spec.seed = 11;
  DatasetSplit a = split(records, spec);
  DatasetSplit b = split(records, spec);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);

  spec.seed = 12;
  DatasetSplit c = split(records, spec);
  CHECK(a.test != c.test);
}

TEST_CASE("stratified split keeps each label within one of its share") {
  auto records = make_corpus(1000);
  auto support = label_histogram(records);
  SplitSpec spec;
  spec.test_fraction = 0.2;
  spec.seed = 5;
  DatasetSplit result = split(records, spec);
  auto test_hist = label_histogram(result.test);
  for (FunctionClass c : all_classes()) {
    const double exact = spec.test_fraction * static_cast<double>(support[c]);
    CHECK(std::abs(static_cast<double>(test_hist[c]) - exact) <= 1.0);
  }
  CHECK(result.test.size() == 200);
}

TEST_CASE("split partitions the input when no subsampling") {
  auto records = make_corpus(137);
  SplitSpec spec;
  spec.test_fraction = 0.25;
  spec.seed = 2;
  for (bool stratified : {true, false}) {
    spec.stratified = stratified;
    DatasetSplit result = split(records, spec);
    CHECK(result.train.size() + result.test.size() == records.size());
    // Disjoint and covering by part name (names are unique here).
    std::set<std::string> seen;
    for (const auto& r : result.train) CHECK(seen.insert(r.part_name).second);
    for (const auto& r : result.test) CHECK(seen.insert(r.part_name).second);
    CHECK(seen.size() == records.size());
  }
}

TEST_CASE("split rejects bad specs") {
  auto records = make_corpus(10);
  CHECK_THROWS_AS(split({}, SplitSpec{}), Error);
  SplitSpec bad;
  bad.test_fraction = 0.0;
  CHECK_THROWS_AS(split(records, bad), ConfigError);
  bad.test_fraction = 1.0;
  CHECK_THROWS_AS(split(records, bad), ConfigError);
  bad.test_fraction = 0.1;
  bad.train_subsample_fraction = 0.0;
  CHECK_THROWS_AS(split(records, bad), ConfigError);
}

TEST_CASE("render_prompt matches the golden file byte for byte") {
  const std::string prompt = render_prompt("Washer", "Tablet Stand", builtin_taxonomy());
  const std::string golden =
      read_file(std::string(FUNCDA_GOLDEN_DIR) + "/prompt_washer_tablet_stand.txt");
  CHECK(prompt == golden);
}

TEST_CASE("render_prompt contains each definition exactly once") {
  const Taxonomy& tax = builtin_taxonomy();
  const std::string prompt = render_prompt("pedal", "brake system", tax);
  for (FunctionClass c : tax.tier1()) {
    INFO(class_name(c));
    CHECK(count_occurrences(prompt, tax.definition_of(c)) == 1);
    CHECK(count_occurrences(prompt, class_name(c) + ": ") == 1);
  }
  CHECK(prompt.find("what is the function of a part pedal in the system brake system?") !=
        std::string::npos);
  CHECK(count_occurrences(prompt,
                          "Branch: To cause a material or energy to no longer be joined "
                          "or mixed.") == 1);
}

TEST_CASE("render_prompt is byte-stable and rejects empty names") {
  CHECK(render_prompt("x", "y", builtin_taxonomy()) ==
        render_prompt("x", "y", builtin_taxonomy()));
  CHECK_THROWS_AS(render_prompt("", "y", builtin_taxonomy()), Error);
  CHECK_THROWS_AS(render_prompt("x", "  ", builtin_taxonomy()), Error);
}

TEST_CASE("to_chat_example carries the canonical label") {
  const Taxonomy& tax = builtin_taxonomy();
  ChatExample a = to_chat_example({"pedal", "brake system", FunctionClass::Channel}, tax);
  CHECK(a.assistant_message == "Channel");
  CHECK_FALSE(a.system_message.has_value());
  CHECK(a.user_message == render_prompt("pedal", "brake system", tax));

  ChatExample b = to_chat_example({"fin", "brake system", FunctionClass::Branch}, tax);
  CHECK(b.assistant_message == "Branch");

  ChatExample q = to_chat_query("fin", "brake system", tax);
  CHECK(q.assistant_message.empty());

  ChatExample s = to_chat_example({"fin", "brake system", FunctionClass::Branch}, tax,
                                  std::string("be terse"));
  CHECK(s.system_message == "be terse");
}

TEST_CASE("JSONL round-trip is the identity") {
  const Taxonomy& tax = builtin_taxonomy();
  std::vector<ChatExample> examples = {
      to_chat_example({"pedal", "brake system", FunctionClass::Channel}, tax),
      to_chat_example({"washer", "tablet stand", FunctionClass::Support}, tax,
                      std::string("classify parts")),
      to_chat_query("spindle", "front suspension", tax),
  };
  const std::string path = temp_path("funcda_roundtrip.jsonl");
  write_jsonl(examples, path);
  auto loaded = read_jsonl(path);
  CHECK(loaded == examples);

  // Line count equals example count.
  std::istringstream lines(read_file(path));
  std::string line;
  size_t count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == examples.size());
}

TEST_CASE("write_jsonl serialization matches the wire-format golden") {
  // The golden fixture uses bare question prompts; serializing its parsed
  // form must reproduce it byte for byte.
  const std::string golden_path = std::string(FUNCDA_GOLDEN_DIR) + "/upload_train.jsonl";
  auto examples = read_jsonl(golden_path);
  REQUIRE(examples.size() == 2);
  CHECK(examples[0].assistant_message == "Support");
  const std::string path = temp_path("funcda_golden_rewrite.jsonl");
  write_jsonl(examples, path);
  CHECK(read_file(path) == read_file(golden_path));
}

TEST_CASE("read_jsonl errors name the line") {
  const std::string path = temp_path("funcda_bad.jsonl");
  {
    std::ofstream out(path, std::ios::binary);
    out << R"({"messages":[{"role":"user","content":"q"}]})" << "\n";
    out << R"({"turns":[]})" << "\n";
  }
  CHECK_THROWS_WITH_AS(read_jsonl(path), doctest::Contains("line 2"), ParseError);

  {
    std::ofstream out(path, std::ios::binary);
    out << "{not json}\n";
  }
  CHECK_THROWS_WITH_AS(read_jsonl(path), doctest::Contains("line 1"), ParseError);
}

TEST_CASE("read_jsonl skips a provenance header line") {
  const std::string path = temp_path("funcda_prov.jsonl");
  std::vector<ChatExample> examples = {
      to_chat_query("washer", "tablet stand", builtin_taxonomy())};
  write_jsonl(examples, path, R"({"config_hash":"abc","seed":7})");
  auto loaded = read_jsonl(path);
  CHECK(loaded == examples);
  CHECK(read_file(path).find("config_hash") != std::string::npos);
}

TEST_CASE("labeled CSV artifact round-trips") {
  const std::string path = temp_path("funcda_labeled.csv");
  std::vector<LabeledExample> examples = {
      {"washer", "tablet stand", FunctionClass::Support},
      {"spindle", "front suspension", FunctionClass::Channel},
  };
  write_labeled_csv(path, examples, "provenance config_hash=00 seed=0");
  CHECK(read_labeled_csv(path, builtin_taxonomy()) == examples);
}

}  // TEST_SUITE
