#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace funcda {

// The eight top-tier function classes, in canonical order. This order is
// fixed and shared by every part of the pipeline: model weight columns,
// confusion-matrix rows, report listings.
enum class FunctionClass : int {
  Branch = 0,
  Channel,
  Connect,
  ControlMagnitude,
  Convert,
  Provision,
  Signal,
  Support,
};

inline constexpr int kClassCount = 8;

const std::array<FunctionClass, kClassCount>& all_classes();

// Canonical display name, e.g. "Control Magnitude".
const std::string& class_name(FunctionClass c);

// A top-tier label: either one of the eight classes or an out-of-vocabulary
// marker carrying the verbatim text that failed to normalize.
class FunctionLabel {
 public:
  static FunctionLabel in_vocabulary(FunctionClass c) { return FunctionLabel(c); }
  static FunctionLabel out_of_vocabulary(std::string raw);

  bool is_in_vocabulary() const { return cls_.has_value(); }
  FunctionClass cls() const;  // throws Error when out-of-vocabulary
  const std::string& raw_text() const { return raw_; }

  // Canonical class name when in-vocabulary, the raw text otherwise.
  std::string name() const;

  bool operator==(const FunctionLabel& o) const {
    return cls_ == o.cls_ && raw_ == o.raw_;
  }

 private:
  explicit FunctionLabel(FunctionClass c) : cls_(c) {}
  explicit FunctionLabel(std::string raw) : raw_(std::move(raw)) {}

  std::optional<FunctionClass> cls_;
  std::string raw_;
};

struct FunctionDefinition {
  FunctionClass label;
  std::string definition;
};

// Three-tier function hierarchy. Tier 1 is the eight classes above;
// tier 2 maps subfunction names to tier-1 classes; tier 3 maps leaf
// function names to tier-2 subfunctions. Only tier 1 serves as a
// classification label; tiers 2-3 resolve raw repository rows.
// Immutable after construction, safe to share across threads.
class Taxonomy {
 public:
  Taxonomy(std::vector<FunctionDefinition> definitions,
           std::map<std::string, FunctionClass> tier2_to_tier1,
           std::map<std::string, std::string> tier3_to_tier2);

  const std::array<FunctionClass, kClassCount>& tier1() const { return all_classes(); }
  const std::vector<FunctionDefinition>& definitions() const { return definitions_; }
  const std::string& definition_of(FunctionClass c) const;
  const std::map<std::string, FunctionClass>& tier2_to_tier1() const { return tier2_; }
  const std::map<std::string, std::string>& tier3_to_tier2() const { return tier3_; }

 private:
  std::vector<FunctionDefinition> definitions_;   // canonical order, one per class
  std::map<std::string, FunctionClass> tier2_;    // keys folded
  std::map<std::string, std::string> tier3_;      // keys folded
};

// The built-in hierarchy: the eight classes with their standard definitions
// and the functional-basis tier-2/tier-3 membership.
const Taxonomy& builtin_taxonomy();

// Case-insensitive, punctuation/whitespace-trimmed match of raw text against
// the eight class names; underscore and hyphen separators are accepted.
// Total: anything else becomes OutOfVocabulary(raw). No synonym matching.
FunctionLabel normalize_label(std::string_view raw, const Taxonomy& taxonomy);

// Tier-1 class of a tier-2 subfunction name, or OutOfVocabulary when the
// subfunction is unknown.
FunctionLabel tier1_of(std::string_view subfunction, const Taxonomy& taxonomy);

// JSON document form: { "tier1": [{"name","definition"}...], "tier2": {...},
// "tier3": {...} }. Loading validates that tier1 covers exactly the eight
// canonical classes. This is the extension point for alternate tier-2/3 maps
// and definition wordings.
std::string taxonomy_to_json(const Taxonomy& taxonomy);
Taxonomy taxonomy_from_json(const std::string& json_text);
Taxonomy load_taxonomy_file(const std::string& path);

}  // namespace funcda
