#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace funcda {

// Hashed bag-of-token-n-grams configuration. dim counts the bias slot:
// index 0 is fixed at 1 and token n-grams hash into [1, dim).
struct FeaturizerConfig {
  int dim = 4096;
  int ngram_min = 1;
  int ngram_max = 2;
  uint64_t hash_seed = 0;

  bool operator==(const FeaturizerConfig&) const = default;
};

// Dense feature vector of length config.dim. Deterministic: equal text and
// config give equal vectors. Tokens are lowercased alphanumeric runs;
// n-grams are joined with a 0x1f separator before hashing.
std::vector<double> featurize(const std::string& text, const FeaturizerConfig& config);

// Bucket a single n-gram key hashes to, exposed for tests.
size_t feature_index(const std::string& ngram_key, const FeaturizerConfig& config);

}  // namespace funcda
