#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "funcda/corpus.hpp"
#include "funcda/featurizer.hpp"
#include "funcda/taxonomy.hpp"

namespace funcda {

// Fine-tuning knobs: epoch count E, batch size B and the learning-rate
// multiplier LR. The effective step is LR * base_rate.
struct Hyperparameters {
  int epochs = 10;
  int batch_size = 20;
  double lr_multiplier = 1.0;

  void validate() const;  // throws ConfigError on out-of-range values

  bool operator==(const Hyperparameters&) const = default;
};

// Linear softmax head over hashed prompt features. Weight columns follow
// canonical class order. Immutable once trained; safe to share across
// threads for prediction.
struct SoftmaxModel {
  FeaturizerConfig featurizer;
  std::vector<double> weights;  // row-major dim x kClassCount

  double& w(size_t feature, int cls) { return weights[feature * kClassCount + cls]; }
  double w(size_t feature, int cls) const { return weights[feature * kClassCount + cls]; }
};

struct TrainingTrace {
  std::vector<double> epoch_mean_loss;  // one entry per epoch
  double final_train_accuracy = 0.0;
};

struct TrainOptions {
  double base_rate = 0.1;  // multiplied by hp.lr_multiplier
};

// Numerically stable softmax: p_c = exp(z_c - max z) / sum_j exp(z_j - max z).
std::vector<double> softmax(std::span<const double> logits);

// Class probabilities for one feature vector.
std::vector<double> softmax_predict(const SoftmaxModel& model,
                                    std::span<const double> features);

// Cross-entropy of the true class: -log P(y | x). Non-negative.
double example_loss(const SoftmaxModel& model, std::span<const double> features,
                    FunctionClass y);

// Analytic gradient of the summed batch loss with respect to the weights:
// sum over the batch of x (p - onehot(y))^T. Same layout as model.weights.
std::vector<double> batch_gradient(const SoftmaxModel& model,
                                   const std::vector<std::vector<double>>& features,
                                   const std::vector<FunctionClass>& labels);

// One epoch of mini-batch SGD over a seeded shuffle of the examples; the
// last partial batch is trained too. Returns the mean example loss measured
// before each batch's update. Throws on non-finite gradients.
double sgd_epoch(SoftmaxModel& model, const std::vector<std::vector<double>>& features,
                 const std::vector<FunctionClass>& labels, const Hyperparameters& hp,
                 uint64_t epoch_seed, const TrainOptions& options = {});

// Full training run: featurizes the rendered prompt of every example, zero-
// initializes the weights and runs E epochs. Deterministic given the seed.
std::pair<SoftmaxModel, TrainingTrace> train(const std::vector<LabeledExample>& examples,
                                             const Hyperparameters& hp, uint64_t seed,
                                             const Taxonomy& taxonomy,
                                             const FeaturizerConfig& featurizer = {},
                                             const TrainOptions& options = {});

// Model file: JSON with the featurizer config and weights. Round-trips
// exactly (weights serialized with shortest round-trip formatting). The
// optional provenance JSON is embedded verbatim and ignored on load.
void save_model(const SoftmaxModel& model, const std::string& path,
                const std::optional<std::string>& provenance_json = std::nullopt);
SoftmaxModel load_model(const std::string& path);

}  // namespace funcda
