#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "funcda/corpus.hpp"
#include "funcda/remote.hpp"
#include "funcda/search.hpp"
#include "funcda/softmax.hpp"

namespace funcda {

enum class BackendKind { Native, Remote };

// Full pipeline configuration: a JSON file (--config) establishes the
// baseline and individual flags override. Secrets never appear here; the
// API key comes from FUNC_DA_API_KEY.
struct PipelineConfig {
  std::string osdr_path;
  std::string abc_path;
  std::string workdir = "work";
  std::optional<std::string> taxonomy_path;

  SplitSpec split;
  SearchSpace search;
  Hyperparameters hp;
  FeaturizerConfig featurizer;
  TrainOptions train_options;
  BackendKind backend = BackendKind::Native;
  RemoteConfig remote = RemoteConfig::from_env();
  Objective objective = Objective::Accuracy;
  EvalOptions eval_options;
  std::optional<std::string> system_message;
  int parallel_trials = 1;
  int annotate_concurrency = 4;
  std::optional<std::string> checkpoint_path;
  uint64_t train_seed = 0;
  int poll_interval_ms = 2000;
  int poll_timeout_s = 3600;

  // CLI overrides for individual stage inputs.
  std::optional<std::string> model_path;      // evaluate/annotate: native model file
  std::optional<std::string> annotate_input;  // annotate: parts CSV
};

PipelineConfig load_config(const std::string& path);

// Hash of the semantic configuration (paths excluded, so runs into
// different directories compare equal). Hex, 16 digits.
std::string config_hash(const PipelineConfig& config);

// {"config_hash": "...", "seed": N} — embedded into every artifact.
std::string provenance_json(const PipelineConfig& config, uint64_t seed);

// Stage runners. Each writes its artifacts into the workdir under a stable
// stage-prefixed name and reads its predecessors' artifacts from there.
void run_ingest(const PipelineConfig& config);
void run_match(const PipelineConfig& config);
void run_split_stage(const PipelineConfig& config);
void run_prepare(const PipelineConfig& config);
void run_train_stage(const PipelineConfig& config);
void run_search_stage(const PipelineConfig& config);
void run_evaluate_stage(const PipelineConfig& config);
void run_annotate_stage(const PipelineConfig& config);
void run_report_stage(const PipelineConfig& config);

// Stable artifact paths inside the workdir.
namespace artifact {
std::string osdr_records(const PipelineConfig& c);
std::string stats(const PipelineConfig& c);
std::string matched_abc(const PipelineConfig& c);
std::string train_csv(const PipelineConfig& c);
std::string test_csv(const PipelineConfig& c);
std::string histogram(const PipelineConfig& c);
std::string train_jsonl(const PipelineConfig& c);
std::string test_jsonl(const PipelineConfig& c);
std::string model(const PipelineConfig& c);
std::string train_trace(const PipelineConfig& c);
std::string remote_job(const PipelineConfig& c);
std::string search_report(const PipelineConfig& c);
std::string search_table(const PipelineConfig& c);
std::string eval_report(const PipelineConfig& c, const std::string& which);
std::string eval_table(const PipelineConfig& c);
std::string confusion_csv(const PipelineConfig& c, const std::string& which);
std::string annotations(const PipelineConfig& c);
std::string annotation_report(const PipelineConfig& c);
std::string report_text(const PipelineConfig& c);
std::string distribution_csv(const PipelineConfig& c);
}  // namespace artifact

// Loads the taxonomy named by the config, or the built-in one.
const Taxonomy& pipeline_taxonomy(const PipelineConfig& config);

}  // namespace funcda
