#include "funcda/taxonomy.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "funcda/errors.hpp"
#include "funcda/text.hpp"

namespace funcda {

const std::array<FunctionClass, kClassCount>& all_classes() {
  static const std::array<FunctionClass, kClassCount> classes = {
      FunctionClass::Branch,    FunctionClass::Channel,
      FunctionClass::Connect,   FunctionClass::ControlMagnitude,
      FunctionClass::Convert,   FunctionClass::Provision,
      FunctionClass::Signal,    FunctionClass::Support,
  };
  return classes;
}

const std::string& class_name(FunctionClass c) {
  static const std::array<std::string, kClassCount> names = {
      "Branch", "Channel", "Connect", "Control Magnitude",
      "Convert", "Provision", "Signal", "Support",
  };
  return names[static_cast<int>(c)];
}

FunctionLabel FunctionLabel::out_of_vocabulary(std::string raw) {
  return FunctionLabel(std::move(raw));
}

FunctionClass FunctionLabel::cls() const {
  if (!cls_) throw Error("out-of-vocabulary label has no class: \"" + raw_ + "\"");
  return *cls_;
}

std::string FunctionLabel::name() const {
  return cls_ ? class_name(*cls_) : raw_;
}

Taxonomy::Taxonomy(std::vector<FunctionDefinition> definitions,
                   std::map<std::string, FunctionClass> tier2_to_tier1,
                   std::map<std::string, std::string> tier3_to_tier2) {
  if (definitions.size() != kClassCount) {
    throw ConfigError("taxonomy needs exactly " + std::to_string(kClassCount) +
                      " definitions, got " + std::to_string(definitions.size()));
  }
  definitions_.resize(kClassCount);
  std::array<bool, kClassCount> seen{};
  for (auto& d : definitions) {
    const int idx = static_cast<int>(d.label);
    if (seen[idx]) throw ConfigError("duplicate definition for " + class_name(d.label));
    if (trim(d.definition).empty()) {
      throw ConfigError("empty definition for " + class_name(d.label));
    }
    seen[idx] = true;
    definitions_[idx] = std::move(d);
  }
  for (const auto& [sub, cls] : tier2_to_tier1) tier2_[fold(sub)] = cls;
  for (const auto& [leaf, sub] : tier3_to_tier2) {
    const std::string key = fold(sub);
    if (!tier2_.count(key)) {
      throw ConfigError("tier-3 entry \"" + leaf + "\" maps to unknown subfunction \"" +
                        sub + "\"");
    }
    tier3_[fold(leaf)] = key;
  }
}

const std::string& Taxonomy::definition_of(FunctionClass c) const {
  return definitions_[static_cast<int>(c)].definition;
}

const Taxonomy& builtin_taxonomy() {
  static const Taxonomy taxonomy = [] {
    std::vector<FunctionDefinition> defs = {
        {FunctionClass::Branch,
         "To cause a material or energy to no longer be joined or mixed."},
        {FunctionClass::Channel,
         "To cause material or energy to move from one location to another location."},
        {FunctionClass::Connect,
         "To bring two or more energies or materials together."},
        {FunctionClass::ControlMagnitude,
         "To alter or govern the size or amplitude of material or energy."},
        {FunctionClass::Convert,
         "To change from one form of energy or material to another."},
        {FunctionClass::Provision,
         "To accumulate or provide material or energy."},
        {FunctionClass::Signal, "To provide information."},
        {FunctionClass::Support,
         "To firmly fix a material into a defined location or secure energy into a "
         "specific course."},
    };
    // Functional-basis subfunction membership (Stone & Wood lineage).
    std::map<std::string, FunctionClass> tier2 = {
        {"separate", FunctionClass::Branch},
        {"distribute", FunctionClass::Branch},
        {"import", FunctionClass::Channel},
        {"export", FunctionClass::Channel},
        {"transfer", FunctionClass::Channel},
        {"guide", FunctionClass::Channel},
        {"couple", FunctionClass::Connect},
        {"mix", FunctionClass::Connect},
        {"actuate", FunctionClass::ControlMagnitude},
        {"regulate", FunctionClass::ControlMagnitude},
        {"change", FunctionClass::ControlMagnitude},
        {"stop", FunctionClass::ControlMagnitude},
        {"convert", FunctionClass::Convert},
        {"store", FunctionClass::Provision},
        {"supply", FunctionClass::Provision},
        {"sense", FunctionClass::Signal},
        {"indicate", FunctionClass::Signal},
        {"process", FunctionClass::Signal},
        {"stabilize", FunctionClass::Support},
        {"secure", FunctionClass::Support},
        {"position", FunctionClass::Support},
    };
    std::map<std::string, std::string> tier3 = {
        {"divide", "separate"},    {"extract", "separate"},
        {"remove", "separate"},    {"transport", "transfer"},
        {"transmit", "transfer"},  {"translate", "guide"},
        {"rotate", "guide"},       {"allow dof", "guide"},
        {"join", "couple"},        {"link", "couple"},
        {"increase", "regulate"},  {"decrease", "regulate"},
        {"increment", "change"},   {"decrement", "change"},
        {"shape", "change"},       {"condition", "change"},
        {"prevent", "stop"},       {"inhibit", "stop"},
        {"contain", "store"},      {"collect", "store"},
        {"detect", "sense"},       {"measure", "sense"},
        {"track", "indicate"},     {"display", "indicate"},
    };
    return Taxonomy(std::move(defs), std::move(tier2), std::move(tier3));
  }();
  return taxonomy;
}

FunctionLabel normalize_label(std::string_view raw, const Taxonomy& taxonomy) {
  const std::string key = label_key(raw);
  for (FunctionClass c : taxonomy.tier1()) {
    if (key == label_key(class_name(c))) return FunctionLabel::in_vocabulary(c);
  }
  return FunctionLabel::out_of_vocabulary(std::string(raw));
}

FunctionLabel tier1_of(std::string_view subfunction, const Taxonomy& taxonomy) {
  const std::string key = fold(subfunction);
  auto it = taxonomy.tier2_to_tier1().find(key);
  if (it != taxonomy.tier2_to_tier1().end()) {
    return FunctionLabel::in_vocabulary(it->second);
  }
  return FunctionLabel::out_of_vocabulary(std::string(subfunction));
}

std::string taxonomy_to_json(const Taxonomy& taxonomy) {
  nlohmann::ordered_json doc;
  doc["tier1"] = nlohmann::ordered_json::array();
  for (const auto& def : taxonomy.definitions()) {
    doc["tier1"].push_back({{"name", class_name(def.label)},
                            {"definition", def.definition}});
  }
  doc["tier2"] = nlohmann::ordered_json::object();
  for (const auto& [sub, cls] : taxonomy.tier2_to_tier1()) {
    doc["tier2"][sub] = class_name(cls);
  }
  doc["tier3"] = nlohmann::ordered_json::object();
  for (const auto& [leaf, sub] : taxonomy.tier3_to_tier2()) {
    doc["tier3"][leaf] = sub;
  }
  return doc.dump(2) + "\n";
}

Taxonomy taxonomy_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("taxonomy JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("tier1") || !doc["tier1"].is_array()) {
    throw ParseError("taxonomy JSON: missing \"tier1\" array");
  }

  std::vector<FunctionDefinition> defs;
  for (const auto& entry : doc["tier1"]) {
    const std::string name = entry.value("name", "");
    FunctionLabel label = normalize_label(name, builtin_taxonomy());
    if (!label.is_in_vocabulary()) {
      throw ParseError("taxonomy JSON: unknown tier-1 class \"" + name + "\"");
    }
    defs.push_back({label.cls(), entry.value("definition", "")});
  }

  std::map<std::string, FunctionClass> tier2;
  if (doc.contains("tier2")) {
    for (const auto& [sub, cls_name] : doc["tier2"].items()) {
      FunctionLabel label = normalize_label(cls_name.get<std::string>(), builtin_taxonomy());
      if (!label.is_in_vocabulary()) {
        throw ParseError("taxonomy JSON: tier-2 \"" + sub +
                         "\" maps to unknown class \"" + cls_name.get<std::string>() + "\"");
      }
      tier2[sub] = label.cls();
    }
  }

  std::map<std::string, std::string> tier3;
  if (doc.contains("tier3")) {
    for (const auto& [leaf, sub] : doc["tier3"].items()) {
      tier3[leaf] = sub.get<std::string>();
    }
  }
  return Taxonomy(std::move(defs), std::move(tier2), std::move(tier3));
}

Taxonomy load_taxonomy_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open taxonomy file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return taxonomy_from_json(ss.str());
}

}  // namespace funcda
