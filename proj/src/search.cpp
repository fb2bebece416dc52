#include "funcda/search.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "funcda/errors.hpp"
#include "funcda/rng.hpp"

namespace funcda {

uint64_t SearchSpace::product_size() const {
  return static_cast<uint64_t>(epoch_choices.size()) * batch_choices.size() *
         lr_choices.size();
}

void SearchSpace::validate() const {
  if (epoch_choices.empty() || batch_choices.empty() || lr_choices.empty()) {
    throw ConfigError("search space: every axis needs at least one choice");
  }
  if (trials < 1) throw ConfigError("search space: trials must be >= 1");
  for (int e : epoch_choices)
    if (e < 1) throw ConfigError("search space: epochs must be >= 1");
  for (int b : batch_choices)
    if (b < 1) throw ConfigError("search space: batch sizes must be >= 1");
  for (double lr : lr_choices)
    if (!(lr > 0.0)) throw ConfigError("search space: learning-rate multipliers must be > 0");
  if (static_cast<uint64_t>(trials) > product_size()) {
    throw ConfigError("search space: trials (" + std::to_string(trials) +
                      ") exceeds the number of distinct configurations (" +
                      std::to_string(product_size()) + ")");
  }
}

Objective objective_from_string(const std::string& name) {
  static const std::unordered_map<std::string, Objective> table = {
      {"accuracy", Objective::Accuracy},
      {"weighted_f1", Objective::WeightedF1},
      {"weighted_precision", Objective::WeightedPrecision},
      {"weighted_recall", Objective::WeightedRecall},
      {"macro_f1", Objective::MacroF1},
      {"macro_precision", Objective::MacroPrecision},
      {"macro_recall", Objective::MacroRecall},
      {"micro_f1", Objective::MicroF1},
      {"micro_precision", Objective::MicroPrecision},
      {"micro_recall", Objective::MicroRecall},
  };
  auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown objective metric: \"" + name + "\"");
  return it->second;
}

std::string objective_to_string(Objective objective) {
  switch (objective) {
    case Objective::Accuracy: return "accuracy";
    case Objective::WeightedF1: return "weighted_f1";
    case Objective::WeightedPrecision: return "weighted_precision";
    case Objective::WeightedRecall: return "weighted_recall";
    case Objective::MacroF1: return "macro_f1";
    case Objective::MacroPrecision: return "macro_precision";
    case Objective::MacroRecall: return "macro_recall";
    case Objective::MicroF1: return "micro_f1";
    case Objective::MicroPrecision: return "micro_precision";
    case Objective::MicroRecall: return "micro_recall";
  }
  return "accuracy";
}

double objective_value(const EvaluationReport& report, Objective objective) {
  switch (objective) {
    case Objective::Accuracy: return report.accuracy;
    case Objective::WeightedF1: return report.weighted.f1;
    case Objective::WeightedPrecision: return report.weighted.precision;
    case Objective::WeightedRecall: return report.weighted.recall;
    case Objective::MacroF1: return report.macro.f1;
    case Objective::MacroPrecision: return report.macro.precision;
    case Objective::MacroRecall: return report.macro.recall;
    case Objective::MicroF1: return report.micro.f1;
    case Objective::MicroPrecision: return report.micro.precision;
    case Objective::MicroRecall: return report.micro.recall;
  }
  return report.accuracy;
}

std::vector<Hyperparameters> sample_configs(const SearchSpace& space) {
  space.validate();
  const uint64_t product = space.product_size();
  const uint64_t lr_n = space.lr_choices.size();
  const uint64_t batch_n = space.batch_choices.size();

  // Sparse Fisher-Yates over flat indices: O(trials) memory however large
  // the product is.
  Rng rng(derive_seed(space.seed, 0xC0FF33ull));
  std::unordered_map<uint64_t, uint64_t> moved;
  std::vector<Hyperparameters> configs;
  configs.reserve(static_cast<size_t>(space.trials));
  for (uint64_t i = 0; i < static_cast<uint64_t>(space.trials); ++i) {
    const uint64_t j = i + rng.below(product - i);
    auto value_of = [&](uint64_t k) {
      auto it = moved.find(k);
      return it == moved.end() ? k : it->second;
    };
    const uint64_t picked = value_of(j);
    moved[j] = value_of(i);

    const uint64_t li = picked % lr_n;
    const uint64_t bi = (picked / lr_n) % batch_n;
    const uint64_t ei = picked / (lr_n * batch_n);
    configs.push_back(Hyperparameters{space.epoch_choices[ei], space.batch_choices[bi],
                                      space.lr_choices[li]});
  }
  return configs;
}

Hyperparameters select_best(const std::vector<SearchTrial>& trials, Objective objective) {
  const SearchTrial* best = nullptr;
  double best_value = 0.0;
  for (const auto& trial : trials) {
    if (!trial.succeeded() || !trial.test_report) continue;
    const double value = objective_value(*trial.test_report, objective);
    if (!best || value > best_value) {  // strict: ties keep the earlier trial
      best = &trial;
      best_value = value;
    }
  }
  if (!best) throw Error("select_best: no successful trials");
  return best->hp;
}

EvaluationReport evaluate_classifier(Classifier& classifier,
                                     const std::vector<LabeledExample>& examples,
                                     const Taxonomy& taxonomy,
                                     const EvalOptions& options) {
  std::vector<LabelPair> pairs;
  pairs.reserve(examples.size());
  for (const auto& ex : examples) {
    const PredictionResult pred = classifier.predict(ex.part_name, ex.system_name);
    pairs.emplace_back(ex.label, normalize_label(pred.raw_text, taxonomy));
  }
  return evaluate(pairs, options);
}

SearchReport run_search(const SearchSpace& space,
                        const std::vector<LabeledExample>& train,
                        const std::vector<LabeledExample>& test,
                        const ClassifierFactory& factory, Objective objective,
                        const EvalOptions& eval_options, int parallelism) {
  if (train.empty() || test.empty()) {
    throw Error("run_search: train and test sets must be non-empty");
  }
  const std::vector<Hyperparameters> configs = sample_configs(space);

  SearchReport report;
  report.objective = objective;
  report.trials.resize(configs.size());

  // The taxonomy is not threaded through here: metrics only need the label
  // pairs, and the factory closes over whatever taxonomy it uses.
  auto run_trial = [&](size_t index) {
    SearchTrial trial;
    trial.hp = configs[index];
    try {
      const uint64_t trial_seed = derive_seed(space.seed, index + 1);
      std::unique_ptr<Classifier> classifier =
          factory(trial.hp, trial_seed, train);
      trial.train_report =
          evaluate_classifier(*classifier, train, builtin_taxonomy(), eval_options);
      trial.test_report =
          evaluate_classifier(*classifier, test, builtin_taxonomy(), eval_options);
    } catch (const std::exception& e) {
      trial.error = e.what();
    }
    report.trials[index] = std::move(trial);
  };

  if (parallelism <= 1) {
    for (size_t i = 0; i < configs.size(); ++i) run_trial(i);
  } else {
    size_t next = 0;
    while (next < configs.size()) {
      std::vector<std::future<void>> batch;
      for (int k = 0; k < parallelism && next < configs.size(); ++k, ++next) {
        batch.push_back(std::async(std::launch::async, run_trial, next));
      }
      for (auto& f : batch) f.get();
    }
  }

  bool any_ok = false;
  std::string causes;
  for (size_t i = 0; i < report.trials.size(); ++i) {
    if (report.trials[i].succeeded()) {
      any_ok = true;
    } else {
      causes += "\n  trial " + std::to_string(i) + ": " + *report.trials[i].error;
    }
  }
  if (!any_ok) throw Error("run_search: every trial failed:" + causes);

  report.best = select_best(report.trials, objective);
  return report;
}

ClassifierFactory native_factory(const Taxonomy& taxonomy,
                                 const FeaturizerConfig& featurizer,
                                 const TrainOptions& options) {
  return [&taxonomy, featurizer, options](const Hyperparameters& hp, uint64_t trial_seed,
                                          const std::vector<LabeledExample>& train_set)
             -> std::unique_ptr<Classifier> {
    auto [model, trace] = train(train_set, hp, trial_seed, taxonomy, featurizer, options);
    (void)trace;
    return std::make_unique<NativeClassifier>(std::move(model), taxonomy);
  };
}

namespace {

nlohmann::ordered_json report_block(const EvaluationReport& r) {
  return {{"accuracy", r.accuracy},
          {"weighted", {{"f1", r.weighted.f1}, {"precision", r.weighted.precision}, {"recall", r.weighted.recall}}},
          {"macro", {{"f1", r.macro.f1}, {"precision", r.macro.precision}, {"recall", r.macro.recall}}},
          {"micro", {{"f1", r.micro.f1}, {"precision", r.micro.precision}, {"recall", r.micro.recall}}}};
}

}  // namespace

std::string search_report_to_json(const SearchReport& report,
                                  const std::optional<std::string>& provenance_json) {
  nlohmann::ordered_json doc;
  if (provenance_json) {
    doc["provenance"] = nlohmann::ordered_json::parse(*provenance_json);
  }
  doc["objective"] = objective_to_string(report.objective);
  doc["best"] = {{"epochs", report.best.epochs},
                 {"batch_size", report.best.batch_size},
                 {"lr_multiplier", report.best.lr_multiplier}};
  doc["trials"] = nlohmann::ordered_json::array();
  for (const auto& trial : report.trials) {
    nlohmann::ordered_json t = {{"epochs", trial.hp.epochs},
                                {"batch_size", trial.hp.batch_size},
                                {"lr_multiplier", trial.hp.lr_multiplier}};
    if (trial.succeeded()) {
      t["train"] = report_block(*trial.train_report);
      t["test"] = report_block(*trial.test_report);
    } else {
      t["error"] = *trial.error;
    }
    doc["trials"].push_back(t);
  }
  return doc.dump(2) + "\n";
}

std::string search_report_to_table(const SearchReport& report) {
  std::ostringstream out;
  out << "Epochs  Batch  LR      | TrainAcc  W-F1  W-P   W-R   M-F1  M-P   M-R   u-F1  u-P   u-R   "
         "| TestAcc  W-F1  W-P   W-R   M-F1  M-P   M-R   u-F1  u-P   u-R\n";
  char buf[512];
  for (const auto& trial : report.trials) {
    if (!trial.succeeded()) {
      std::snprintf(buf, sizeof(buf), "%-7d %-6d %-7.2g | failed: %s\n", trial.hp.epochs,
                    trial.hp.batch_size, trial.hp.lr_multiplier, trial.error->c_str());
      out << buf;
      continue;
    }
    const EvaluationReport& a = *trial.train_report;
    const EvaluationReport& b = *trial.test_report;
    std::snprintf(
        buf, sizeof(buf),
        "%-7d %-6d %-7.2g | %-9.2f %-5.2f %-5.2f %-5.2f %-5.2f %-5.2f %-5.2f %-5.2f %-5.2f %-5.2f "
        "| %-8.2f %-5.2f %-5.2f %-5.2f %-5.2f %-5.2f %-5.2f %-5.2f %-5.2f %-5.2f\n",
        trial.hp.epochs, trial.hp.batch_size, trial.hp.lr_multiplier, a.accuracy,
        a.weighted.f1, a.weighted.precision, a.weighted.recall, a.macro.f1,
        a.macro.precision, a.macro.recall, a.micro.f1, a.micro.precision, a.micro.recall,
        b.accuracy, b.weighted.f1, b.weighted.precision, b.weighted.recall, b.macro.f1,
        b.macro.precision, b.macro.recall, b.micro.f1, b.micro.precision, b.micro.recall);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "best (%s): epochs=%d batch=%d lr=%g\n",
                objective_to_string(report.objective).c_str(), report.best.epochs,
                report.best.batch_size, report.best.lr_multiplier);
  out << buf;
  return out.str();
}

}  // namespace funcda
