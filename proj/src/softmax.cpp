#include "funcda/softmax.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "funcda/errors.hpp"
#include "funcda/rng.hpp"

namespace funcda {

void Hyperparameters::validate() const {
  if (epochs < 1) throw ConfigError("hyperparameters: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("hyperparameters: batch_size must be >= 1");
  if (!(lr_multiplier > 0.0)) {
    throw ConfigError("hyperparameters: lr_multiplier must be > 0");
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  double max_z = -std::numeric_limits<double>::infinity();
  for (double z : logits) {
    if (!std::isfinite(z)) throw Error("softmax: non-finite logit");
    max_z = std::max(max_z, z);
  }
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - max_z);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

namespace {

std::vector<double> logits_of(const SoftmaxModel& model, std::span<const double> x) {
  if (x.size() * kClassCount != model.weights.size()) {
    throw Error("softmax_predict: feature dimension mismatch");
  }
  std::vector<double> z(kClassCount, 0.0);
  for (size_t f = 0; f < x.size(); ++f) {
    const double xf = x[f];
    if (xf == 0.0) continue;
    const double* row = &model.weights[f * kClassCount];
    for (int c = 0; c < kClassCount; ++c) z[c] += xf * row[c];
  }
  return z;
}

}  // namespace

std::vector<double> softmax_predict(const SoftmaxModel& model,
                                    std::span<const double> features) {
  return softmax(logits_of(model, features));
}

double example_loss(const SoftmaxModel& model, std::span<const double> features,
                    FunctionClass y) {
  const std::vector<double> z = logits_of(model, features);
  const double zy = z[static_cast<int>(y)];
  double max_z = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - max_z);
  // logsumexp(z) - z_y, computed against the max so the result is exact 0
  // for a fully confident correct prediction.
  return (max_z - zy) + std::log(sum);
}

std::vector<double> batch_gradient(const SoftmaxModel& model,
                                   const std::vector<std::vector<double>>& features,
                                   const std::vector<FunctionClass>& labels) {
  std::vector<double> grad(model.weights.size(), 0.0);
  for (size_t i = 0; i < features.size(); ++i) {
    const auto& x = features[i];
    std::vector<double> p = softmax_predict(model, x);
    p[static_cast<int>(labels[i])] -= 1.0;
    for (size_t f = 0; f < x.size(); ++f) {
      const double xf = x[f];
      if (xf == 0.0) continue;
      double* row = &grad[f * kClassCount];
      for (int c = 0; c < kClassCount; ++c) row[c] += xf * p[c];
    }
  }
  return grad;
}

double sgd_epoch(SoftmaxModel& model, const std::vector<std::vector<double>>& features,
                 const std::vector<FunctionClass>& labels, const Hyperparameters& hp,
                 uint64_t epoch_seed, const TrainOptions& options) {
  hp.validate();
  const size_t n = features.size();
  if (n == 0) throw Error("sgd_epoch: no examples");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(epoch_seed);
  rng.shuffle(order);

  const double rate = options.base_rate * hp.lr_multiplier;
  const size_t batch = static_cast<size_t>(hp.batch_size);
  double loss_sum = 0.0;

  for (size_t start = 0; start < n; start += batch) {
    const size_t end = std::min(start + batch, n);
    std::vector<std::vector<double>> bx;
    std::vector<FunctionClass> by;
    bx.reserve(end - start);
    by.reserve(end - start);
    for (size_t i = start; i < end; ++i) {
      bx.push_back(features[order[i]]);
      by.push_back(labels[order[i]]);
      loss_sum += example_loss(model, features[order[i]], labels[order[i]]);
    }
    const std::vector<double> grad = batch_gradient(model, bx, by);
    for (size_t k = 0; k < grad.size(); ++k) {
      if (!std::isfinite(grad[k])) {
        throw Error("sgd_epoch: non-finite gradient (training diverged; lower the "
                    "learning-rate multiplier)");
      }
      model.weights[k] -= rate * grad[k];
    }
  }
  return loss_sum / static_cast<double>(n);
}

std::pair<SoftmaxModel, TrainingTrace> train(const std::vector<LabeledExample>& examples,
                                             const Hyperparameters& hp, uint64_t seed,
                                             const Taxonomy& taxonomy,
                                             const FeaturizerConfig& featurizer,
                                             const TrainOptions& options) {
  hp.validate();
  if (examples.empty()) throw Error("train: no examples");

  SoftmaxModel model;
  model.featurizer = featurizer;
  model.weights.assign(static_cast<size_t>(featurizer.dim) * kClassCount, 0.0);

  std::vector<std::vector<double>> features;
  std::vector<FunctionClass> labels;
  features.reserve(examples.size());
  labels.reserve(examples.size());
  for (const auto& ex : examples) {
    features.push_back(
        featurize(render_prompt(ex.part_name, ex.system_name, taxonomy), featurizer));
    labels.push_back(ex.label);
  }

  TrainingTrace trace;
  trace.epoch_mean_loss.reserve(static_cast<size_t>(hp.epochs));
  for (int e = 0; e < hp.epochs; ++e) {
    const uint64_t epoch_seed = derive_seed(seed, static_cast<uint64_t>(e) + 1);
    trace.epoch_mean_loss.push_back(
        sgd_epoch(model, features, labels, hp, epoch_seed, options));
  }

  int64_t correct = 0;
  for (size_t i = 0; i < features.size(); ++i) {
    const std::vector<double> p = softmax_predict(model, features[i]);
    const int argmax =
        static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    if (argmax == static_cast<int>(labels[i])) ++correct;
  }
  trace.final_train_accuracy =
      static_cast<double>(correct) / static_cast<double>(features.size());
  return {std::move(model), std::move(trace)};
}

void save_model(const SoftmaxModel& model, const std::string& path,
                const std::optional<std::string>& provenance_json) {
  nlohmann::ordered_json doc;
  if (provenance_json) {
    doc["provenance"] = nlohmann::ordered_json::parse(*provenance_json);
  }
  doc["featurizer"] = {{"dim", model.featurizer.dim},
                       {"ngram_min", model.featurizer.ngram_min},
                       {"ngram_max", model.featurizer.ngram_max},
                       {"hash_seed", model.featurizer.hash_seed}};
  doc["classes"] = nlohmann::ordered_json::array();
  for (FunctionClass c : all_classes()) doc["classes"].push_back(class_name(c));
  doc["weights"] = model.weights;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file: " + path);
  out << doc.dump() << '\n';
  if (!out) throw IoError("write failed: " + path);
}

SoftmaxModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  SoftmaxModel model;
  try {
    const auto& f = doc.at("featurizer");
    model.featurizer.dim = f.at("dim").get<int>();
    model.featurizer.ngram_min = f.at("ngram_min").get<int>();
    model.featurizer.ngram_max = f.at("ngram_max").get<int>();
    model.featurizer.hash_seed = f.at("hash_seed").get<uint64_t>();
    model.weights = doc.at("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (model.weights.size() !=
      static_cast<size_t>(model.featurizer.dim) * kClassCount) {
    throw ParseError(path + ": weight count does not match featurizer dim");
  }
  return model;
}

}  // namespace funcda
