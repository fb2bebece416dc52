#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "funcda/taxonomy.hpp"

namespace funcda {

// Rows are the eight true classes; columns are the eight predicted classes
// plus one extra column for out-of-vocabulary predictions. True labels are
// always in-vocabulary.
struct ConfusionMatrix {
  static constexpr int kPredColumns = kClassCount + 1;  // last = out-of-vocabulary

  std::array<std::array<int64_t, kPredColumns>, kClassCount> counts{};

  int64_t total() const;
  int64_t row_sum(FunctionClass c) const;  // support of the true class
  int64_t col_sum(int col) const;
};

struct ClassMetrics {
  FunctionClass label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t support = 0;
};

struct AveragedMetrics {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct EvaluationReport {
  double accuracy = 0.0;
  AveragedMetrics weighted;
  AveragedMetrics macro;
  AveragedMetrics micro;
  std::vector<ClassMetrics> per_class;  // all eight classes, canonical order
  ConfusionMatrix confusion;
  int64_t sample_count = 0;
};

struct EvalOptions {
  // Macro averages divide by the classes present in the ground truth by
  // default; set true to divide by all eight classes.
  bool macro_all_classes = false;
};

using LabelPair = std::pair<FunctionClass, FunctionLabel>;  // (true, predicted)

// Tallies every pair exactly once; out-of-vocabulary predictions land in
// the extra column.
ConfusionMatrix confusion(const std::vector<LabelPair>& pairs);

// Per class: P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); each 0 when
// its denominator is 0. All eight classes are present even with zero
// support.
std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm);

// Full report: accuracy = correct/S; weighted = support-weighted mean;
// macro = unweighted mean (denominator per EvalOptions); micro from global
// TP/FP/FN pools. Out-of-vocabulary predictions count against accuracy and
// recall and are no class's true positive or false positive.
EvaluationReport evaluate(const std::vector<LabelPair>& pairs,
                          const EvalOptions& options = {});

std::string report_to_json(const EvaluationReport& report,
                           const std::optional<std::string>& provenance_json = std::nullopt);

// Fixed-width text table: accuracy plus the weighted/macro/micro triples.
std::string report_to_table(const EvaluationReport& report, const std::string& title);

// CSV export of the confusion matrix for external plotting.
std::string confusion_to_csv(const ConfusionMatrix& cm);

}  // namespace funcda
