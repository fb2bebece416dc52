#include "funcda/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "funcda/annotate.hpp"
#include "funcda/csv.hpp"
#include "funcda/errors.hpp"
#include "funcda/eval.hpp"
#include "funcda/hash.hpp"
#include "funcda/text.hpp"

namespace fs = std::filesystem;

namespace funcda {

namespace {

void check_keys(const nlohmann::json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("config: unknown key \"" + key + "\" in " + where);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

void ensure_workdir(const PipelineConfig& config) {
  std::error_code ec;
  fs::create_directories(config.workdir, ec);
  if (ec) {
    throw ConfigError("cannot create workdir \"" + config.workdir + "\": " + ec.message());
  }
}

void require_input(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " path not configured");
  if (!fs::exists(path)) throw ConfigError(what + " path does not exist: " + path);
}

std::string provenance_comment(const PipelineConfig& config, uint64_t seed) {
  return "provenance config_hash=" + config_hash(config) + " seed=" + std::to_string(seed);
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config " + path + ": not a JSON object");

  check_keys(doc, "top level",
             {"osdr", "abc", "workdir", "taxonomy", "split", "search", "hyperparameters",
              "featurizer", "backend", "remote", "base_rate", "objective",
              "macro_all_classes", "system_message", "parallel_trials",
              "annotate_concurrency", "checkpoint", "train_seed", "poll_interval_ms",
              "poll_timeout_s"});

  PipelineConfig config;
  try {
    config.osdr_path = doc.value("osdr", "");
    config.abc_path = doc.value("abc", "");
    config.workdir = doc.value("workdir", "work");
    if (doc.contains("taxonomy")) config.taxonomy_path = doc["taxonomy"].get<std::string>();

    if (doc.contains("split")) {
      const auto& s = doc["split"];
      check_keys(s, "\"split\"", {"test_fraction", "subsample", "seed", "stratified"});
      config.split.test_fraction = s.value("test_fraction", config.split.test_fraction);
      config.split.train_subsample_fraction =
          s.value("subsample", config.split.train_subsample_fraction);
      config.split.seed = s.value("seed", config.split.seed);
      config.split.stratified = s.value("stratified", config.split.stratified);
    }
    if (doc.contains("search")) {
      const auto& s = doc["search"];
      check_keys(s, "\"search\"", {"epochs", "batches", "lrs", "trials", "seed"});
      if (s.contains("epochs")) config.search.epoch_choices = s["epochs"].get<std::vector<int>>();
      if (s.contains("batches")) config.search.batch_choices = s["batches"].get<std::vector<int>>();
      if (s.contains("lrs")) config.search.lr_choices = s["lrs"].get<std::vector<double>>();
      config.search.trials = s.value("trials", config.search.trials);
      config.search.seed = s.value("seed", config.search.seed);
    }
    if (doc.contains("hyperparameters")) {
      const auto& h = doc["hyperparameters"];
      check_keys(h, "\"hyperparameters\"", {"epochs", "batch_size", "lr_multiplier"});
      config.hp.epochs = h.value("epochs", config.hp.epochs);
      config.hp.batch_size = h.value("batch_size", config.hp.batch_size);
      config.hp.lr_multiplier = h.value("lr_multiplier", config.hp.lr_multiplier);
    }
    if (doc.contains("featurizer")) {
      const auto& f = doc["featurizer"];
      check_keys(f, "\"featurizer\"", {"dim", "ngram_min", "ngram_max", "hash_seed"});
      config.featurizer.dim = f.value("dim", config.featurizer.dim);
      config.featurizer.ngram_min = f.value("ngram_min", config.featurizer.ngram_min);
      config.featurizer.ngram_max = f.value("ngram_max", config.featurizer.ngram_max);
      config.featurizer.hash_seed = f.value("hash_seed", config.featurizer.hash_seed);
    }
    if (doc.contains("backend")) {
      const std::string kind = doc["backend"].get<std::string>();
      if (kind == "native") config.backend = BackendKind::Native;
      else if (kind == "remote") config.backend = BackendKind::Remote;
      else throw ConfigError("config: backend must be \"native\" or \"remote\"");
    }
    if (doc.contains("remote")) {
      const auto& r = doc["remote"];
      check_keys(r, "\"remote\"",
                 {"base_url", "base_model", "max_attempts", "backoff_initial_ms",
                  "backoff_multiplier", "requests_per_second"});
      config.remote.base_url = r.value("base_url", config.remote.base_url);
      config.remote.base_model = r.value("base_model", config.remote.base_model);
      config.remote.max_attempts = r.value("max_attempts", config.remote.max_attempts);
      config.remote.backoff_initial_ms =
          r.value("backoff_initial_ms", config.remote.backoff_initial_ms);
      config.remote.backoff_multiplier =
          r.value("backoff_multiplier", config.remote.backoff_multiplier);
      config.remote.requests_per_second =
          r.value("requests_per_second", config.remote.requests_per_second);
    }
    config.train_options.base_rate = doc.value("base_rate", config.train_options.base_rate);
    if (doc.contains("objective")) {
      config.objective = objective_from_string(doc["objective"].get<std::string>());
    }
    config.eval_options.macro_all_classes =
        doc.value("macro_all_classes", config.eval_options.macro_all_classes);
    if (doc.contains("system_message")) {
      config.system_message = doc["system_message"].get<std::string>();
    }
    config.parallel_trials = doc.value("parallel_trials", config.parallel_trials);
    config.annotate_concurrency =
        doc.value("annotate_concurrency", config.annotate_concurrency);
    if (doc.contains("checkpoint")) {
      config.checkpoint_path = doc["checkpoint"].get<std::string>();
    }
    config.train_seed = doc.value("train_seed", config.train_seed);
    config.poll_interval_ms = doc.value("poll_interval_ms", config.poll_interval_ms);
    config.poll_timeout_s = doc.value("poll_timeout_s", config.poll_timeout_s);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return config;
}

std::string config_hash(const PipelineConfig& config) {
  // Canonical dump of the semantic parameters. Filesystem locations are
  // excluded so equal-parameter runs hash equal wherever they live.
  nlohmann::ordered_json doc;
  doc["split"] = {{"test_fraction", config.split.test_fraction},
                  {"subsample", config.split.train_subsample_fraction},
                  {"seed", config.split.seed},
                  {"stratified", config.split.stratified}};
  doc["search"] = {{"epochs", config.search.epoch_choices},
                   {"batches", config.search.batch_choices},
                   {"lrs", config.search.lr_choices},
                   {"trials", config.search.trials},
                   {"seed", config.search.seed}};
  doc["hyperparameters"] = {{"epochs", config.hp.epochs},
                            {"batch_size", config.hp.batch_size},
                            {"lr_multiplier", config.hp.lr_multiplier}};
  doc["featurizer"] = {{"dim", config.featurizer.dim},
                       {"ngram_min", config.featurizer.ngram_min},
                       {"ngram_max", config.featurizer.ngram_max},
                       {"hash_seed", config.featurizer.hash_seed}};
  doc["backend"] = config.backend == BackendKind::Native ? "native" : "remote";
  doc["base_model"] = config.remote.base_model;
  doc["base_rate"] = config.train_options.base_rate;
  doc["objective"] = objective_to_string(config.objective);
  doc["macro_all_classes"] = config.eval_options.macro_all_classes;
  doc["system_message"] = config.system_message ? *config.system_message : "";
  doc["train_seed"] = config.train_seed;
  return hex64(fnv1a64(doc.dump()));
}

std::string provenance_json(const PipelineConfig& config, uint64_t seed) {
  nlohmann::ordered_json doc = {{"config_hash", config_hash(config)}, {"seed", seed}};
  return doc.dump();
}

namespace artifact {

namespace {
std::string join(const PipelineConfig& c, const char* name) {
  return (fs::path(c.workdir) / name).string();
}
}  // namespace

std::string osdr_records(const PipelineConfig& c) { return join(c, "01_osdr_records.csv"); }
std::string stats(const PipelineConfig& c) { return join(c, "01_stats.json"); }
std::string matched_abc(const PipelineConfig& c) { return join(c, "02_matched_abc.csv"); }
std::string train_csv(const PipelineConfig& c) { return join(c, "03_train.csv"); }
std::string test_csv(const PipelineConfig& c) { return join(c, "03_test.csv"); }
std::string histogram(const PipelineConfig& c) { return join(c, "03_histogram.json"); }
std::string train_jsonl(const PipelineConfig& c) { return join(c, "04_train.jsonl"); }
std::string test_jsonl(const PipelineConfig& c) { return join(c, "04_test.jsonl"); }
std::string model(const PipelineConfig& c) { return join(c, "05_model.json"); }
std::string train_trace(const PipelineConfig& c) { return join(c, "05_train_trace.json"); }
std::string remote_job(const PipelineConfig& c) { return join(c, "05_remote_job.json"); }
std::string search_report(const PipelineConfig& c) { return join(c, "05_search_report.json"); }
std::string search_table(const PipelineConfig& c) { return join(c, "05_search_table.txt"); }
std::string eval_report(const PipelineConfig& c, const std::string& which) {
  return join(c, ("06_eval_" + which + ".json").c_str());
}
std::string eval_table(const PipelineConfig& c) { return join(c, "06_eval_tables.txt"); }
std::string confusion_csv(const PipelineConfig& c, const std::string& which) {
  return join(c, ("06_confusion_" + which + ".csv").c_str());
}
std::string annotations(const PipelineConfig& c) { return join(c, "07_annotations.csv"); }
std::string annotation_report(const PipelineConfig& c) {
  return join(c, "07_annotation_report.json");
}
std::string report_text(const PipelineConfig& c) { return join(c, "08_report.txt"); }
std::string distribution_csv(const PipelineConfig& c) {
  return join(c, "08_distribution.csv");
}

}  // namespace artifact

const Taxonomy& pipeline_taxonomy(const PipelineConfig& config) {
  if (!config.taxonomy_path) return builtin_taxonomy();
  static std::map<std::string, Taxonomy> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(*config.taxonomy_path);
  if (it == cache.end()) {
    it = cache.emplace(*config.taxonomy_path, load_taxonomy_file(*config.taxonomy_path))
             .first;
  }
  return it->second;
}

void run_ingest(const PipelineConfig& config) {
  require_input(config.osdr_path, "OSDR input");
  ensure_workdir(config);
  const Taxonomy& taxonomy = pipeline_taxonomy(config);

  auto rows = parse_osdr_csv(config.osdr_path);
  auto [records, stats] = preprocess(rows, taxonomy);

  write_design_records(artifact::osdr_records(config), records,
                       provenance_comment(config, config.split.seed));

  nlohmann::ordered_json doc = {
      {"provenance", nlohmann::ordered_json::parse(provenance_json(config, config.split.seed))},
      {"raw_count", stats.raw_count},
      {"dropped_incomplete", stats.dropped_incomplete},
      {"dropped_duplicate", stats.dropped_duplicate},
      {"retained", stats.retained},
  };
  write_file(artifact::stats(config), doc.dump(2) + "\n");
}

void run_match(const PipelineConfig& config) {
  require_input(config.abc_path, "ABC input");
  ensure_workdir(config);
  const Taxonomy& taxonomy = pipeline_taxonomy(config);

  auto abc = parse_abc_metadata(config.abc_path);
  auto osdr = read_design_records(artifact::osdr_records(config), taxonomy);
  auto matched = match_abc_to_osdr(abc, osdr);
  write_abc_records(artifact::matched_abc(config), matched,
                    provenance_comment(config, config.split.seed));
}

void run_split_stage(const PipelineConfig& config) {
  ensure_workdir(config);
  const Taxonomy& taxonomy = pipeline_taxonomy(config);

  auto records = read_design_records(artifact::osdr_records(config), taxonomy);
  std::vector<LabeledExample> examples;
  examples.reserve(records.size());
  for (const auto& rec : records) examples.push_back(to_labeled(rec));

  DatasetSplit result = split(examples, config.split);
  const std::string comment = provenance_comment(config, config.split.seed);
  write_labeled_csv(artifact::train_csv(config), result.train, comment);
  write_labeled_csv(artifact::test_csv(config), result.test, comment);

  nlohmann::ordered_json hist = {
      {"provenance", nlohmann::ordered_json::parse(provenance_json(config, config.split.seed))}};
  for (const char* side : {"train", "test"}) {
    const auto& subset = std::string(side) == "train" ? result.train : result.test;
    nlohmann::ordered_json h;
    for (const auto& [label, count] : label_histogram(subset)) {
      h[class_name(label)] = count;
    }
    hist[side] = h;
  }
  hist["train_count"] = result.train.size();
  hist["test_count"] = result.test.size();
  write_file(artifact::histogram(config), hist.dump(2) + "\n");
}

void run_prepare(const PipelineConfig& config) {
  ensure_workdir(config);
  const Taxonomy& taxonomy = pipeline_taxonomy(config);

  for (const char* side : {"train", "test"}) {
    const bool is_train = std::string(side) == "train";
    auto examples = read_labeled_csv(
        is_train ? artifact::train_csv(config) : artifact::test_csv(config), taxonomy);
    std::vector<ChatExample> chats;
    chats.reserve(examples.size());
    for (const auto& ex : examples) {
      chats.push_back(to_chat_example(ex, taxonomy, config.system_message));
    }
    write_jsonl(chats, is_train ? artifact::train_jsonl(config) : artifact::test_jsonl(config),
                provenance_json(config, config.split.seed));
  }
}

namespace {

void train_native(const PipelineConfig& config) {
  const Taxonomy& taxonomy = pipeline_taxonomy(config);
  auto examples = read_labeled_csv(artifact::train_csv(config), taxonomy);
  auto [model, trace] = train(examples, config.hp, config.train_seed, taxonomy,
                              config.featurizer, config.train_options);
  save_model(model, artifact::model(config), provenance_json(config, config.train_seed));

  nlohmann::ordered_json doc = {
      {"provenance", nlohmann::ordered_json::parse(provenance_json(config, config.train_seed))},
      {"epoch_mean_loss", trace.epoch_mean_loss},
      {"final_train_accuracy", trace.final_train_accuracy},
  };
  write_file(artifact::train_trace(config), doc.dump(2) + "\n");
}

void train_remote(const PipelineConfig& config) {
  RemoteClient client(config.remote);
  const std::string jsonl = read_file(artifact::train_jsonl(config));
  const std::string file_id = client.upload_training_file(jsonl);

  RemoteJobSpec spec{file_id, config.remote.base_model, config.hp};
  const std::string job_id = client.create_finetune_job(spec);

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::seconds(config.poll_timeout_s);
  RemoteJobStatus status;
  for (;;) {
    status = client.poll_job(job_id);
    if (status.state == JobState::Succeeded || status.state == JobState::Failed) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      throw Error("fine-tuning job " + job_id + " still " +
                  job_state_to_string(status.state) + " after " +
                  std::to_string(config.poll_timeout_s) + "s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(config.poll_interval_ms));
  }
  if (status.state == JobState::Failed) {
    throw Error("fine-tuning job " + job_id + " failed: " +
                status.error.value_or("(no detail)"));
  }

  nlohmann::ordered_json doc = {
      {"provenance", nlohmann::ordered_json::parse(provenance_json(config, config.train_seed))},
      {"job_id", job_id},
      {"status", job_state_to_string(status.state)},
      {"fine_tuned_model", *status.fine_tuned_model},
  };
  write_file(artifact::remote_job(config), doc.dump(2) + "\n");
}

std::unique_ptr<Classifier> make_classifier(const PipelineConfig& config) {
  const Taxonomy& taxonomy = pipeline_taxonomy(config);
  if (config.backend == BackendKind::Native) {
    const std::string path = config.model_path.value_or(artifact::model(config));
    return std::make_unique<NativeClassifier>(load_model(path), taxonomy);
  }
  nlohmann::json job;
  try {
    job = nlohmann::json::parse(read_file(artifact::remote_job(config)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(artifact::remote_job(config) + ": " + e.what());
  }
  if (job.value("status", "") != "succeeded") {
    throw Error("remote job is not succeeded; run the train stage first");
  }
  auto client = std::make_shared<RemoteClient>(config.remote);
  return std::make_unique<RemoteClassifier>(std::move(client),
                                            job.at("fine_tuned_model").get<std::string>(),
                                            taxonomy);
}

}  // namespace

void run_train_stage(const PipelineConfig& config) {
  ensure_workdir(config);
  if (config.backend == BackendKind::Native) train_native(config);
  else train_remote(config);
}

void run_search_stage(const PipelineConfig& config) {
  ensure_workdir(config);
  if (config.backend == BackendKind::Remote) {
    throw ConfigError("hyperparameter search runs on the native backend only; "
                      "remote fine-tunes are driven one job at a time via \"train\"");
  }
  const Taxonomy& taxonomy = pipeline_taxonomy(config);
  auto train_set = read_labeled_csv(artifact::train_csv(config), taxonomy);
  auto test_set = read_labeled_csv(artifact::test_csv(config), taxonomy);

  SearchReport report = run_search(
      config.search, train_set, test_set,
      native_factory(taxonomy, config.featurizer, config.train_options), config.objective,
      config.eval_options, config.parallel_trials);

  write_file(artifact::search_report(config),
             search_report_to_json(report, provenance_json(config, config.search.seed)));
  write_file(artifact::search_table(config),
             "# " + provenance_comment(config, config.search.seed) + "\n" +
                 search_report_to_table(report));
}

void run_evaluate_stage(const PipelineConfig& config) {
  ensure_workdir(config);
  const Taxonomy& taxonomy = pipeline_taxonomy(config);
  std::unique_ptr<Classifier> classifier = make_classifier(config);

  std::string tables = "# " + provenance_comment(config, config.train_seed) + "\n";
  for (const char* which : {"train", "test"}) {
    auto examples = read_labeled_csv(std::string(which) == "train"
                                         ? artifact::train_csv(config)
                                         : artifact::test_csv(config),
                                     taxonomy);
    EvaluationReport report =
        evaluate_classifier(*classifier, examples, taxonomy, config.eval_options);
    write_file(artifact::eval_report(config, which),
               report_to_json(report, provenance_json(config, config.train_seed)));
    write_file(artifact::confusion_csv(config, which),
               "# " + provenance_comment(config, config.train_seed) + "\n" +
                   confusion_to_csv(report.confusion));
    tables += report_to_table(report, std::string(which) + " set");
  }
  write_file(artifact::eval_table(config), tables);
}

void run_annotate_stage(const PipelineConfig& config) {
  ensure_workdir(config);
  const Taxonomy& taxonomy = pipeline_taxonomy(config);
  std::unique_ptr<Classifier> classifier = make_classifier(config);

  auto matched =
      parse_abc_metadata(config.annotate_input.value_or(artifact::matched_abc(config)));
  std::vector<UnlabeledPart> parts;
  parts.reserve(matched.size());
  for (const auto& rec : matched) parts.push_back(from_abc(rec));

  AnnotateOptions options;
  options.concurrency = config.annotate_concurrency;
  options.checkpoint_path = config.checkpoint_path;
  auto results = annotate_batch(parts, *classifier, taxonomy, options);

  export_annotations(results, artifact::annotations(config),
                     provenance_comment(config, config.train_seed));
  AnnotationReport report = distribution_report(results);
  write_file(artifact::annotation_report(config),
             annotation_report_to_json(report, provenance_json(config, config.train_seed)));
}

namespace {

// Drop leading '#' provenance lines when embedding one artifact in another.
std::string strip_comment_lines(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty() && trim(line)[0] == '#') continue;
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

void run_report_stage(const PipelineConfig& config) {
  ensure_workdir(config);

  std::string text = "# " + provenance_comment(config, config.split.seed) + "\n";
  bool have_any = false;

  if (fs::exists(artifact::search_table(config))) {
    text += "== Hyperparameter search ==\n";
    text += strip_comment_lines(read_file(artifact::search_table(config)));
    have_any = true;
  }
  if (fs::exists(artifact::eval_table(config))) {
    text += "== Evaluation ==\n";
    text += strip_comment_lines(read_file(artifact::eval_table(config)));
    have_any = true;
  }
  if (fs::exists(artifact::annotation_report(config))) {
    nlohmann::json report =
        nlohmann::json::parse(read_file(artifact::annotation_report(config)));
    text += "== Annotation distribution ==\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& [label, count] : report.at("per_label").items()) {
      text += "  " + label + ": " + std::to_string(count.get<int64_t>()) + "\n";
      rows.push_back({label, std::to_string(count.get<int64_t>())});
    }
    char frac[64];
    std::snprintf(frac, sizeof(frac), "%.4f",
                  report.at("in_vocabulary_fraction").get<double>());
    text += "  in-vocabulary fraction: " + std::string(frac) + "\n";
    write_csv(artifact::distribution_csv(config), {"label", "count"}, rows,
              provenance_comment(config, config.split.seed));
    have_any = true;
  }

  if (!have_any) {
    throw Error("report: no upstream artifacts found in " + config.workdir +
                "; run search/evaluate/annotate first");
  }
  write_file(artifact::report_text(config), text);
}

}  // namespace funcda
