#pragma once

#include <string>
#include <vector>

#include "funcda/corpus.hpp"

namespace funcda::testsupport {

inline const char* signature_token(int cls) {
  static const char* tokens[kClassCount] = {"alphine", "bravine",  "charlique", "deltaque",
                                            "echoline", "foxtrine", "golfique",  "hoteline"};
  return tokens[cls];
}

// Linearly separable corpus: every example of class c carries one signature
// token unique to c in its part name; everything else is shared noise.
inline std::vector<LabeledExample> separable_corpus(int per_class) {
  std::vector<LabeledExample> examples;
  examples.reserve(static_cast<size_t>(per_class) * kClassCount);
  for (int c = 0; c < kClassCount; ++c) {
    for (int i = 0; i < per_class; ++i) {
      examples.push_back(LabeledExample{
          std::string(signature_token(c)) + " unit " + std::to_string(i), "testrig",
          static_cast<FunctionClass>(c)});
    }
  }
  return examples;
}

}  // namespace funcda::testsupport
