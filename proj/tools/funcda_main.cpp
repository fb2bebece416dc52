// funcda — command-line front end for the function-classification pipeline.
// Stages: ingest -> match -> split -> prepare -> train/search -> evaluate ->
// annotate -> report, each writing stable stage-prefixed artifacts into the
// workdir.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "funcda/errors.hpp"
#include "funcda/hash.hpp"
#include "funcda/ingest.hpp"
#include "funcda/pipeline.hpp"

namespace {

struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> workdir;
  std::optional<std::string> taxonomy;
  std::optional<std::string> osdr;
  std::optional<std::string> abc;
  std::optional<std::string> stats_out;
  std::optional<double> test_fraction;
  std::optional<double> subsample;
  std::optional<uint64_t> seed;
  std::optional<bool> stratified;
  std::optional<std::string> system_message;
  std::optional<std::string> backend;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> lr;
  std::optional<double> base_rate;
  std::optional<uint64_t> train_seed;
  std::optional<int> dim;
  std::optional<std::string> base_model;
  std::optional<std::string> base_url;
  std::optional<int> trials;
  std::optional<uint64_t> search_seed;
  std::vector<int> search_epochs;
  std::vector<int> search_batches;
  std::vector<double> search_lrs;
  std::optional<std::string> objective;
  std::optional<int> parallel_trials;
  std::optional<std::string> report_out;
  std::optional<bool> macro_all_classes;
  std::optional<std::string> model;
  std::optional<std::string> input;
  std::optional<std::string> checkpoint;
  std::optional<int> concurrency;
  std::optional<int> poll_interval_ms;
  std::optional<int> poll_timeout_s;
};

funcda::PipelineConfig build_config(const Overrides& o) {
  funcda::PipelineConfig config;
  if (o.config_path) config = funcda::load_config(*o.config_path);

  if (o.workdir) config.workdir = *o.workdir;
  if (o.taxonomy) config.taxonomy_path = *o.taxonomy;
  if (o.osdr) config.osdr_path = *o.osdr;
  if (o.abc) config.abc_path = *o.abc;
  if (o.test_fraction) config.split.test_fraction = *o.test_fraction;
  if (o.subsample) config.split.train_subsample_fraction = *o.subsample;
  if (o.seed) config.split.seed = *o.seed;
  if (o.stratified) config.split.stratified = *o.stratified;
  if (o.system_message) config.system_message = *o.system_message;
  if (o.backend) {
    if (*o.backend == "native") config.backend = funcda::BackendKind::Native;
    else if (*o.backend == "remote") config.backend = funcda::BackendKind::Remote;
    else throw funcda::ConfigError("--backend must be native or remote");
  }
  if (o.epochs) config.hp.epochs = *o.epochs;
  if (o.batch_size) config.hp.batch_size = *o.batch_size;
  if (o.lr) config.hp.lr_multiplier = *o.lr;
  if (o.base_rate) config.train_options.base_rate = *o.base_rate;
  if (o.train_seed) config.train_seed = *o.train_seed;
  if (o.dim) config.featurizer.dim = *o.dim;
  if (o.base_model) config.remote.base_model = *o.base_model;
  if (o.base_url) config.remote.base_url = *o.base_url;
  if (o.trials) config.search.trials = *o.trials;
  if (o.search_seed) config.search.seed = *o.search_seed;
  if (!o.search_epochs.empty()) config.search.epoch_choices = o.search_epochs;
  if (!o.search_batches.empty()) config.search.batch_choices = o.search_batches;
  if (!o.search_lrs.empty()) config.search.lr_choices = o.search_lrs;
  if (o.objective) config.objective = funcda::objective_from_string(*o.objective);
  if (o.parallel_trials) config.parallel_trials = *o.parallel_trials;
  if (o.macro_all_classes) config.eval_options.macro_all_classes = *o.macro_all_classes;
  if (o.checkpoint) config.checkpoint_path = *o.checkpoint;
  if (o.concurrency) config.annotate_concurrency = *o.concurrency;
  if (o.poll_interval_ms) config.poll_interval_ms = *o.poll_interval_ms;
  if (o.poll_timeout_s) config.poll_timeout_s = *o.poll_timeout_s;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"functional-basis classification pipeline for mechanical assembly parts"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config/--workdir/--taxonomy follow the subcommand

  Overrides o;
  app.add_option("--config", o.config_path, "JSON config file; flags override its values");
  app.add_option("--workdir", o.workdir, "artifact directory (default: work)");
  app.add_option("--taxonomy", o.taxonomy, "alternate taxonomy JSON file");

  auto* ingest = app.add_subcommand("ingest", "parse + preprocess the OSDR export");
  ingest->add_option("--osdr", o.osdr, "OSDR CSV export");
  ingest->add_option("--stats-out", o.stats_out, "also write the stats JSON here");

  auto* match = app.add_subcommand("match", "match ABC part names against OSDR");
  match->add_option("--abc", o.abc, "ABC metadata file (CSV or JSONL)");

  auto* split = app.add_subcommand("split", "train/test split of the design records");
  split->add_option("--test-fraction", o.test_fraction, "test share in (0,1), default 0.1");
  split->add_option("--subsample", o.subsample, "training-pool subsample in (0,1]");
  split->add_option("--seed", o.seed, "split seed");
  split->add_flag("--stratified,!--no-stratified", o.stratified,
                  "stratify by label (default on)");

  auto* prepare = app.add_subcommand("prepare", "render prompts into chat JSONL files");
  prepare->add_option("--system-message", o.system_message,
                      "optional system message for every example");

  auto* train = app.add_subcommand("train", "fine-tune one classifier");
  auto* search = app.add_subcommand("search", "random hyperparameter search");
  auto* evaluate = app.add_subcommand("evaluate", "metrics on the train and test splits");
  auto* annotate = app.add_subcommand("annotate", "label the matched ABC parts");
  app.add_subcommand("report", "combined tables + label distribution");

  for (CLI::App* cmd : {train, search, evaluate, annotate}) {
    cmd->add_option("--backend", o.backend, "native | remote");
    cmd->add_option("--base-rate", o.base_rate,
                    "base learning rate the multiplier scales (default 0.1)");
  }
  train->add_option("--epochs", o.epochs, "epoch count E");
  train->add_option("--batch-size", o.batch_size, "batch size B");
  train->add_option("--lr", o.lr, "learning-rate multiplier LR");
  train->add_option("--train-seed", o.train_seed, "training shuffle seed");
  train->add_option("--dim", o.dim, "feature dimension (native backend)");
  train->add_option("--base-model", o.base_model, "remote base model name");
  train->add_option("--poll-interval-ms", o.poll_interval_ms, "remote job poll interval");
  train->add_option("--poll-timeout-s", o.poll_timeout_s, "remote job poll timeout");

  search->add_option("--trials", o.trials, "number of sampled configurations");
  search->add_option("--search-seed", o.search_seed, "sampling seed");
  search->add_option("--search-epochs", o.search_epochs, "epoch choices")->delimiter(',');
  search->add_option("--search-batches", o.search_batches, "batch-size choices")->delimiter(',');
  search->add_option("--search-lrs", o.search_lrs, "LR-multiplier choices")->delimiter(',');
  search->add_option("--objective", o.objective,
                     "selection metric (accuracy, weighted_f1, macro_f1, ...)");
  search->add_option("--parallel-trials", o.parallel_trials,
                     "concurrent trials (native backend)");
  search->add_option("--report-out", o.report_out, "also write the search report here");

  for (CLI::App* cmd : {search, evaluate}) {
    cmd->add_flag("--macro-all-classes,!--no-macro-all-classes", o.macro_all_classes,
                  "divide macro averages by all 8 classes instead of the present ones");
  }
  for (CLI::App* cmd : {evaluate, annotate}) {
    cmd->add_option("--model", o.model, "native model file (default: workdir artifact)");
  }
  annotate->add_option("--input", o.input, "parts CSV (default: matched-ABC artifact)");
  annotate->add_option("--checkpoint", o.checkpoint, "resumable checkpoint JSONL");
  annotate->add_option("--concurrency", o.concurrency, "in-flight predictions (default 4)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  std::string stage = app.get_subcommands().front()->get_name();
  try {
    funcda::PipelineConfig config = build_config(o);
    if (o.model) config.model_path = *o.model;
    if (o.input) config.annotate_input = *o.input;

    if (stage == "ingest") {
      funcda::run_ingest(config);
      // Stats land in the workdir artifact too; stdout (or --stats-out) is
      // the quick-look channel.
      std::ifstream stats(funcda::artifact::stats(config), std::ios::binary);
      std::stringstream ss;
      ss << stats.rdbuf();
      if (o.stats_out) {
        std::ofstream out(*o.stats_out, std::ios::binary);
        out << ss.str();
      } else {
        std::cout << ss.str();
      }
    } else if (stage == "match") {
      funcda::run_match(config);
    } else if (stage == "split") {
      funcda::run_split_stage(config);
    } else if (stage == "prepare") {
      funcda::run_prepare(config);
    } else if (stage == "train") {
      funcda::run_train_stage(config);
    } else if (stage == "search") {
      funcda::run_search_stage(config);
      if (o.report_out) {
        std::ifstream in(funcda::artifact::search_report(config), std::ios::binary);
        std::ofstream out(*o.report_out, std::ios::binary);
        out << in.rdbuf();
      }
    } else if (stage == "evaluate") {
      funcda::run_evaluate_stage(config);
    } else if (stage == "annotate") {
      funcda::run_annotate_stage(config);
    } else if (stage == "report") {
      funcda::run_report_stage(config);
    }
  } catch (const funcda::ConfigError& e) {
    std::cerr << "funcda " << stage << ": config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "funcda " << stage << ": error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
