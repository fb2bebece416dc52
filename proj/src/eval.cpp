#include "funcda/eval.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "funcda/errors.hpp"

namespace funcda {

int64_t ConfusionMatrix::total() const {
  int64_t t = 0;
  for (const auto& row : counts)
    for (int64_t v : row) t += v;
  return t;
}

int64_t ConfusionMatrix::row_sum(FunctionClass c) const {
  int64_t t = 0;
  for (int64_t v : counts[static_cast<int>(c)]) t += v;
  return t;
}

int64_t ConfusionMatrix::col_sum(int col) const {
  int64_t t = 0;
  for (const auto& row : counts) t += row[col];
  return t;
}

ConfusionMatrix confusion(const std::vector<LabelPair>& pairs) {
  ConfusionMatrix cm;
  for (const auto& [truth, predicted] : pairs) {
    const int row = static_cast<int>(truth);
    const int col = predicted.is_in_vocabulary() ? static_cast<int>(predicted.cls())
                                                 : kClassCount;
    ++cm.counts[row][col];
  }
  return cm;
}

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm) {
  std::vector<ClassMetrics> out;
  out.reserve(kClassCount);
  for (FunctionClass c : all_classes()) {
    const int i = static_cast<int>(c);
    const int64_t tp = cm.counts[i][i];
    const int64_t fp = cm.col_sum(i) - tp;
    const int64_t support = cm.row_sum(c);
    const int64_t fn = support - tp;

    ClassMetrics m;
    m.label = c;
    m.support = support;
    m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    out.push_back(m);
  }
  return out;
}

EvaluationReport evaluate(const std::vector<LabelPair>& pairs, const EvalOptions& options) {
  if (pairs.empty()) throw Error("evaluate: empty pairs");

  EvaluationReport report;
  report.confusion = confusion(pairs);
  report.per_class = per_class_metrics(report.confusion);
  report.sample_count = static_cast<int64_t>(pairs.size());

  const double s = static_cast<double>(report.sample_count);

  int64_t correct = 0;
  for (int i = 0; i < kClassCount; ++i) correct += report.confusion.counts[i][i];
  report.accuracy = static_cast<double>(correct) / s;

  // Weighted: support-weighted mean over classes.
  for (const auto& m : report.per_class) {
    const double w = static_cast<double>(m.support) / s;
    report.weighted.f1 += w * m.f1;
    report.weighted.precision += w * m.precision;
    report.weighted.recall += w * m.recall;
  }

  // Macro: unweighted mean; denominator is the present classes unless
  // macro_all_classes is set.
  int denom = 0;
  for (const auto& m : report.per_class) {
    if (!options.macro_all_classes && m.support == 0) continue;
    ++denom;
    report.macro.f1 += m.f1;
    report.macro.precision += m.precision;
    report.macro.recall += m.recall;
  }
  if (options.macro_all_classes) denom = kClassCount;
  if (denom > 0) {
    report.macro.f1 /= denom;
    report.macro.precision /= denom;
    report.macro.recall /= denom;
  }

  // Micro: global pools. Out-of-vocabulary predictions contribute misses
  // (FN) but no in-vocabulary false positives.
  int64_t tp_pool = correct;
  int64_t fp_pool = 0;
  int64_t fn_pool = 0;
  for (int i = 0; i < kClassCount; ++i) {
    fp_pool += report.confusion.col_sum(i) - report.confusion.counts[i][i];
    fn_pool += report.confusion.row_sum(static_cast<FunctionClass>(i)) -
               report.confusion.counts[i][i];
  }
  report.micro.precision =
      (tp_pool + fp_pool) > 0 ? static_cast<double>(tp_pool) / static_cast<double>(tp_pool + fp_pool) : 0.0;
  report.micro.recall =
      (tp_pool + fn_pool) > 0 ? static_cast<double>(tp_pool) / static_cast<double>(tp_pool + fn_pool) : 0.0;
  report.micro.f1 = (report.micro.precision + report.micro.recall) > 0.0
                        ? 2.0 * report.micro.precision * report.micro.recall /
                              (report.micro.precision + report.micro.recall)
                        : 0.0;
  return report;
}

namespace {

nlohmann::ordered_json averaged_to_json(const AveragedMetrics& m) {
  return {{"f1", m.f1}, {"precision", m.precision}, {"recall", m.recall}};
}

}  // namespace

std::string report_to_json(const EvaluationReport& report,
                           const std::optional<std::string>& provenance_json) {
  nlohmann::ordered_json doc;
  if (provenance_json) {
    doc["provenance"] = nlohmann::ordered_json::parse(*provenance_json);
  }
  doc["accuracy"] = report.accuracy;
  doc["sample_count"] = report.sample_count;
  doc["weighted"] = averaged_to_json(report.weighted);
  doc["macro"] = averaged_to_json(report.macro);
  doc["micro"] = averaged_to_json(report.micro);
  doc["per_class"] = nlohmann::ordered_json::array();
  for (const auto& m : report.per_class) {
    doc["per_class"].push_back({{"label", class_name(m.label)},
                                {"precision", m.precision},
                                {"recall", m.recall},
                                {"f1", m.f1},
                                {"support", m.support}});
  }
  nlohmann::ordered_json cm;
  cm["true_labels"] = nlohmann::ordered_json::array();
  for (FunctionClass c : all_classes()) cm["true_labels"].push_back(class_name(c));
  cm["predicted_labels"] = cm["true_labels"];
  cm["predicted_labels"].push_back("OutOfVocabulary");
  cm["counts"] = nlohmann::ordered_json::array();
  for (const auto& row : report.confusion.counts) {
    nlohmann::ordered_json r = nlohmann::ordered_json::array();
    for (int64_t v : row) r.push_back(v);
    cm["counts"].push_back(r);
  }
  doc["confusion"] = cm;
  return doc.dump(2) + "\n";
}

std::string report_to_table(const EvaluationReport& report, const std::string& title) {
  char buf[256];
  std::ostringstream out;
  out << title << " (" << report.sample_count << " samples)\n";
  out << "Accuracy | Weighted F1  P     R     | Macro F1  P     R     | Micro F1  P     R\n";
  std::snprintf(buf, sizeof(buf),
                "%.2f     | %.2f         %.2f  %.2f  | %.2f      %.2f  %.2f  | %.2f      %.2f  %.2f\n",
                report.accuracy, report.weighted.f1, report.weighted.precision,
                report.weighted.recall, report.macro.f1, report.macro.precision,
                report.macro.recall, report.micro.f1, report.micro.precision,
                report.micro.recall);
  out << buf;
  out << "Per class (P / R / F1 / support):\n";
  for (const auto& m : report.per_class) {
    std::snprintf(buf, sizeof(buf), "  %-18s %.2f  %.2f  %.2f  %lld\n",
                  class_name(m.label).c_str(), m.precision, m.recall, m.f1,
                  static_cast<long long>(m.support));
    out << buf;
  }
  return out.str();
}

std::string confusion_to_csv(const ConfusionMatrix& cm) {
  std::ostringstream out;
  out << "true\\predicted";
  for (FunctionClass c : all_classes()) out << ',' << class_name(c);
  out << ",OutOfVocabulary\n";
  for (FunctionClass c : all_classes()) {
    out << class_name(c);
    for (int64_t v : cm.counts[static_cast<int>(c)]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace funcda
