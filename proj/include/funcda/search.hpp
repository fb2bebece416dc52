#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "funcda/classifier.hpp"
#include "funcda/corpus.hpp"
#include "funcda/eval.hpp"
#include "funcda/softmax.hpp"

namespace funcda {

// Random-search domain: finite choice lists per axis. Sampling is uniform
// without replacement over the Cartesian product.
struct SearchSpace {
  std::vector<int> epoch_choices = {1, 8, 10, 12, 15, 20, 30};
  std::vector<int> batch_choices = {20, 24, 48, 100};
  std::vector<double> lr_choices = {0.5, 0.6, 20.0, 30.0, 40.0};
  int trials = 10;
  uint64_t seed = 0;

  uint64_t product_size() const;
  void validate() const;
};

// Objective metric read off the test-set report when ranking trials.
enum class Objective {
  Accuracy,
  WeightedF1,
  WeightedPrecision,
  WeightedRecall,
  MacroF1,
  MacroPrecision,
  MacroRecall,
  MicroF1,
  MicroPrecision,
  MicroRecall,
};

Objective objective_from_string(const std::string& name);
std::string objective_to_string(Objective objective);
double objective_value(const EvaluationReport& report, Objective objective);

struct SearchTrial {
  Hyperparameters hp;
  std::optional<EvaluationReport> train_report;
  std::optional<EvaluationReport> test_report;
  std::optional<std::string> error;  // set when the trial failed

  bool succeeded() const { return !error.has_value(); }
};

struct SearchReport {
  std::vector<SearchTrial> trials;
  Hyperparameters best;
  Objective objective = Objective::Accuracy;
};

// Builds a trained classifier for one trial. trial_seed is derived from the
// search seed and the trial index, so parallel execution cannot change
// results.
using ClassifierFactory = std::function<std::unique_ptr<Classifier>(
    const Hyperparameters& hp, uint64_t trial_seed,
    const std::vector<LabeledExample>& train)>;

// Seeded sampling without replacement from the Cartesian product, in a
// deterministic order. Errors when trials exceeds the product size.
std::vector<Hyperparameters> sample_configs(const SearchSpace& space);

// Trains and evaluates one classifier per sampled configuration, recording
// a trial per configuration (failures recorded, excluded from selection),
// then selects the best by the objective. parallelism > 1 runs trials
// concurrently; the report order stays the sampled order.
SearchReport run_search(const SearchSpace& space,
                        const std::vector<LabeledExample>& train,
                        const std::vector<LabeledExample>& test,
                        const ClassifierFactory& factory,
                        Objective objective = Objective::Accuracy,
                        const EvalOptions& eval_options = {}, int parallelism = 1);

// Argmax of the objective over the successful trials' test reports; ties
// resolve to the earliest trial.
Hyperparameters select_best(const std::vector<SearchTrial>& trials, Objective objective);

// Factory for the native softmax backend.
ClassifierFactory native_factory(const Taxonomy& taxonomy,
                                 const FeaturizerConfig& featurizer = {},
                                 const TrainOptions& options = {});

// Evaluates a classifier over labeled examples: predict, normalize, pair
// with the truth.
EvaluationReport evaluate_classifier(Classifier& classifier,
                                     const std::vector<LabeledExample>& examples,
                                     const Taxonomy& taxonomy,
                                     const EvalOptions& options = {});

std::string search_report_to_json(const SearchReport& report,
                                  const std::optional<std::string>& provenance_json = std::nullopt);

// Text table with one row per trial: hyperparameters, train metrics block,
// test metrics block.
std::string search_report_to_table(const SearchReport& report);

}  // namespace funcda
