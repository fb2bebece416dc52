#include "funcda/classifier.hpp"

#include "funcda/corpus.hpp"
#include "funcda/hash.hpp"

namespace funcda {

NativeClassifier::NativeClassifier(SoftmaxModel model, const Taxonomy& taxonomy)
    : model_(std::move(model)), taxonomy_(taxonomy) {
  // Stable id derived from the weight bytes, so provenance survives
  // save/load round-trips.
  uint64_t h = 0;
  for (double v : model_.weights) {
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&v), sizeof(v)), h);
  }
  id_ = "native-softmax-" + hex64(h).substr(0, 12);
}

PredictionResult NativeClassifier::predict(const std::string& part_name,
                                           const std::string& assembly_name) {
  const std::string prompt = render_prompt(part_name, assembly_name, taxonomy_);
  const std::vector<double> x = featurize(prompt, model_.featurizer);
  std::vector<double> p = softmax_predict(model_, x);

  int best = 0;
  for (int c = 1; c < kClassCount; ++c) {
    if (p[c] > p[best]) best = c;  // strict: ties keep the lower index
  }
  PredictionResult result;
  result.raw_text = class_name(static_cast<FunctionClass>(best));
  result.probabilities = std::move(p);
  return result;
}

}  // namespace funcda
