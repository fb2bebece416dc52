#include "funcda/featurizer.hpp"

#include "funcda/errors.hpp"
#include "funcda/hash.hpp"
#include "funcda/text.hpp"

namespace funcda {

size_t feature_index(const std::string& ngram_key, const FeaturizerConfig& config) {
  const uint64_t h = fnv1a64(ngram_key, config.hash_seed);
  return 1 + static_cast<size_t>(h % static_cast<uint64_t>(config.dim - 1));
}

std::vector<double> featurize(const std::string& text, const FeaturizerConfig& config) {
  if (config.dim < 2) throw ConfigError("featurizer dim must be >= 2");
  if (config.ngram_min < 1 || config.ngram_max < config.ngram_min) {
    throw ConfigError("featurizer n-gram sizes must satisfy 1 <= min <= max");
  }

  std::vector<double> vec(static_cast<size_t>(config.dim), 0.0);
  vec[0] = 1.0;  // bias

  const std::vector<std::string> tokens = tokenize(text);
  for (int n = config.ngram_min; n <= config.ngram_max; ++n) {
    if (static_cast<size_t>(n) > tokens.size()) break;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string key;
      for (int j = 0; j < n; ++j) {
        if (j) key.push_back('\x1f');
        key += tokens[i + j];
      }
      vec[feature_index(key, config)] += 1.0;
    }
  }
  return vec;
}

}  // namespace funcda
