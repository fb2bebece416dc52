#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "funcda/softmax.hpp"
#include "funcda/taxonomy.hpp"

namespace funcda {

struct PredictionResult {
  std::string raw_text;
  std::optional<std::vector<double>> probabilities;  // canonical class order
  bool cached = false;
};

// A trained classifier: native softmax model or a fine-tuned remote model.
// Implementations must be safe for concurrent predict() calls.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual PredictionResult predict(const std::string& part_name,
                                   const std::string& assembly_name) = 0;
  virtual std::string id() const = 0;
};

// Prediction over a trained softmax model; raw_text is the canonical name
// of the argmax class, ties broken toward the lowest class index.
class NativeClassifier : public Classifier {
 public:
  NativeClassifier(SoftmaxModel model, const Taxonomy& taxonomy);

  PredictionResult predict(const std::string& part_name,
                           const std::string& assembly_name) override;
  std::string id() const override { return id_; }

  const SoftmaxModel& model() const { return model_; }

 private:
  SoftmaxModel model_;
  const Taxonomy& taxonomy_;
  std::string id_;
};

}  // namespace funcda
