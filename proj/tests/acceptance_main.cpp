// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// fail. Criterion 6 drives the funcda binary end to end; its path comes from
// FUNCDA_CLI or falls back to the sibling build directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "funcda/annotate.hpp"
#include "funcda/corpus.hpp"
#include "funcda/errors.hpp"
#include "funcda/eval.hpp"
#include "funcda/mock_server.hpp"
#include "funcda/remote.hpp"
#include "funcda/rng.hpp"
#include "funcda/search.hpp"
#include "funcda/softmax.hpp"
#include "support/toy_corpus.hpp"

using namespace funcda;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;
std::string g_argv0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << number << ": " << name;
  if (!detail.empty()) std::cout << " — " << detail;
  std::cout << "\n";
  if (!pass) ++g_failures;
}

void run_criterion(int number, const std::string& name,
                   const std::function<std::string()>& body) {
  try {
    const std::string detail = body();
    report(number, name, true, detail);
  } catch (const std::exception& e) {
    report(number, name, false, e.what());
  }
}

void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string golden(const char* name) {
  return std::string(FUNCDA_GOLDEN_DIR) + "/" + name;
}

std::string fixture(const char* name) {
  return std::string(FUNCDA_FIXTURE_DIR) + "/" + name;
}

FunctionLabel iv(FunctionClass c) { return FunctionLabel::in_vocabulary(c); }

std::vector<LabelPair> random_pairs(Rng& rng, size_t max_s, double oov_rate) {
  const size_t s = 1 + rng.below(max_s);
  std::vector<LabelPair> pairs;
  for (size_t i = 0; i < s; ++i) {
    const auto truth = static_cast<FunctionClass>(rng.below(kClassCount));
    if (rng.unit() < oov_rate) {
      pairs.emplace_back(truth, FunctionLabel::out_of_vocabulary("xyz"));
    } else {
      pairs.emplace_back(truth, iv(static_cast<FunctionClass>(rng.below(kClassCount))));
    }
  }
  return pairs;
}

// --- criterion 1 & 2: independent brute-force metric oracle ---------------

struct BruteMetrics {
  double accuracy, w[3], m[3], u[3];  // triples: f1, precision, recall
};

BruteMetrics brute_force(const std::vector<LabelPair>& pairs, bool macro_all) {
  const double s = static_cast<double>(pairs.size());
  long tp[kClassCount] = {}, fp[kClassCount] = {}, fn[kClassCount] = {}, sup[kClassCount] = {};
  long correct = 0;
  for (const auto& [t, p] : pairs) {
    ++sup[static_cast<int>(t)];
    if (p.is_in_vocabulary() && p.cls() == t) {
      ++correct;
      ++tp[static_cast<int>(t)];
    } else {
      ++fn[static_cast<int>(t)];
      if (p.is_in_vocabulary()) ++fp[static_cast<int>(p.cls())];
    }
  }
  auto safe_div = [](double a, double b) { return b > 0 ? a / b : 0.0; };
  BruteMetrics out{};
  out.accuracy = correct / s;
  long tp_all = 0, fp_all = 0, fn_all = 0;
  int denom = 0;
  for (int c = 0; c < kClassCount; ++c) {
    const double p = safe_div(tp[c], tp[c] + fp[c]);
    const double r = safe_div(tp[c], tp[c] + fn[c]);
    const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    out.w[0] += sup[c] / s * f1;
    out.w[1] += sup[c] / s * p;
    out.w[2] += sup[c] / s * r;
    if (macro_all || sup[c] > 0) {
      ++denom;
      out.m[0] += f1;
      out.m[1] += p;
      out.m[2] += r;
    }
    tp_all += tp[c];
    fp_all += fp[c];
    fn_all += fn[c];
  }
  if (denom > 0) {
    out.m[0] /= denom;
    out.m[1] /= denom;
    out.m[2] /= denom;
  }
  out.u[1] = safe_div(tp_all, tp_all + fp_all);
  out.u[2] = safe_div(tp_all, tp_all + fn_all);
  out.u[0] = out.u[1] + out.u[2] > 0 ? 2 * out.u[1] * out.u[2] / (out.u[1] + out.u[2]) : 0.0;
  return out;
}

// --- criterion 6 helpers ---------------------------------------------------

std::string cli_binary() {
  if (const char* env = std::getenv("FUNCDA_CLI")) return env;
  // Fall back to the build layout: tests/funcda-acceptance next to ../funcda.
  const fs::path self(g_argv0);
  const fs::path sibling = self.parent_path().parent_path() / "funcda";
  if (fs::exists(sibling)) return sibling.string();
  return "funcda";
}

void run_cli(const std::string& args) {
  const std::string cmd = "\"" + cli_binary() + "\" " + args + " > /dev/null";
  const int rc = std::system(cmd.c_str());
  require(rc == 0, "command failed (exit " + std::to_string(rc) + "): " + cmd);
}

void run_full_pipeline(const std::string& workdir) {
  const std::string w = " --workdir \"" + workdir + "\"";
  run_cli("ingest --osdr \"" + fixture("osdr_60.csv") + "\"" + w);
  run_cli("match --abc \"" + fixture("abc_parts.csv") + "\"" + w);
  run_cli("split --test-fraction 0.1 --seed 7" + w);
  run_cli("prepare" + w);
  run_cli("train --backend native --epochs 8 --batch-size 8 --lr 0.02 --train-seed 7 "
          "--dim 1024" + w);
  run_cli("search --trials 2 --search-epochs 2,4 --search-batches 8 "
          "--search-lrs 0.01,0.02 --search-seed 3" + w);
  run_cli("evaluate" + w);
  run_cli("annotate" + w);
  run_cli("report" + w);
}

std::map<std::string, std::string> snapshot(const std::string& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      files[fs::relative(entry.path(), dir).string()] = read_file(entry.path().string());
    }
  }
  return files;
}

}  // namespace

// ---------------------------------------------------------------------------

int main(int, char** argv) {
  g_argv0 = argv[0];

  run_criterion(1, "metric oracle equivalence (1000 random instances, 1e-12)", [] {
    const auto start = Clock::now();
    Rng rng(20240601);
    for (int round = 0; round < 1000; ++round) {
      const bool macro_all = round % 2 == 1;
      auto pairs = random_pairs(rng, 50, round % 3 == 0 ? 0.25 : 0.0);
      EvalOptions options;
      options.macro_all_classes = macro_all;
      EvaluationReport got = evaluate(pairs, options);
      BruteMetrics want = brute_force(pairs, macro_all);
      const double diffs[] = {
          std::abs(got.accuracy - want.accuracy),
          std::abs(got.weighted.f1 - want.w[0]),
          std::abs(got.weighted.precision - want.w[1]),
          std::abs(got.weighted.recall - want.w[2]),
          std::abs(got.macro.f1 - want.m[0]),
          std::abs(got.macro.precision - want.m[1]),
          std::abs(got.macro.recall - want.m[2]),
          std::abs(got.micro.f1 - want.u[0]),
          std::abs(got.micro.precision - want.u[1]),
          std::abs(got.micro.recall - want.u[2]),
      };
      for (double d : diffs) require(d <= 1e-12, "metric mismatch beyond 1e-12");
    }
    const double elapsed = seconds_since(start);
    require(elapsed < 10.0, "took too long");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "1000 instances in %.2fs", elapsed);
    return std::string(buf);
  });

  run_criterion(2, "micro identity equals accuracy without out-of-vocabulary", [] {
    Rng rng(77);
    for (int round = 0; round < 500; ++round) {
      auto pairs = random_pairs(rng, 50, 0.0);
      EvaluationReport report = evaluate(pairs);
      require(report.micro.precision == report.accuracy, "micro P != accuracy");
      require(report.micro.recall == report.accuracy, "micro R != accuracy");
      require(std::abs(report.micro.f1 - report.accuracy) <= 1e-15, "micro F1 != accuracy");
    }
    return std::string("500 cases, exact");
  });

  run_criterion(3, "analytic gradient vs central differences (1e-5 relative)", [] {
    const auto start = Clock::now();
    Rng rng(3333);
    const double h = 1e-4;
    for (int round = 0; round < 100; ++round) {
      FeaturizerConfig config;
      config.dim = 2 + static_cast<int>(rng.below(19));
      SoftmaxModel model;
      model.featurizer = config;
      model.weights.assign(static_cast<size_t>(config.dim) * kClassCount, 0.0);
      for (double& w : model.weights) w = rng.unit() - 0.5;

      const size_t batch = 1 + rng.below(3);
      std::vector<std::vector<double>> xs;
      std::vector<FunctionClass> ys;
      for (size_t b = 0; b < batch; ++b) {
        std::vector<double> x(config.dim, 0.0);
        x[0] = 1.0;
        for (int f = 1; f < config.dim; ++f) x[f] = static_cast<double>(rng.below(3));
        xs.push_back(std::move(x));
        ys.push_back(static_cast<FunctionClass>(rng.below(kClassCount)));
      }
      auto loss_at = [&](const SoftmaxModel& m) {
        double total = 0;
        for (size_t i = 0; i < xs.size(); ++i) total += example_loss(m, xs[i], ys[i]);
        return total;
      };
      const std::vector<double> analytic = batch_gradient(model, xs, ys);
      double diff2 = 0, ana2 = 0, fd2 = 0;
      for (size_t k = 0; k < model.weights.size(); ++k) {
        SoftmaxModel plus = model, minus = model;
        plus.weights[k] += h;
        minus.weights[k] -= h;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2 * h);
        diff2 += (analytic[k] - fd) * (analytic[k] - fd);
        ana2 += analytic[k] * analytic[k];
        fd2 += fd * fd;
      }
      const double rel =
          std::sqrt(diff2) / std::max({std::sqrt(ana2), std::sqrt(fd2), 1e-12});
      require(rel <= 1e-5, "relative gradient error above 1e-5");
    }
    const double elapsed = seconds_since(start);
    require(elapsed < 5.0, "took too long");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "100 instances in %.2fs", elapsed);
    return std::string(buf);
  });

  run_criterion(4, "training reaches accuracy 1.0 on a separable corpus", [] {
    const auto start = Clock::now();
    auto examples = testsupport::separable_corpus(100);  // 800 examples
    Hyperparameters hp;
    hp.epochs = 20;
    hp.batch_size = 10;
    hp.lr_multiplier = 0.01;
    FeaturizerConfig config;
    config.dim = 1024;
    config.ngram_max = 1;
    auto [model, trace] = train(examples, hp, 11, builtin_taxonomy(), config);
    require(trace.final_train_accuracy == 1.0,
            "train accuracy " + std::to_string(trace.final_train_accuracy));
    const double elapsed = seconds_since(start);
    require(elapsed < 30.0, "took too long");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "800 examples, 20 epochs in %.2fs", elapsed);
    return std::string(buf);
  });

  run_criterion(5, "select_best argmax with first-index tie-break (all permutations)", [] {
    // Rigged factory: accuracy keyed on the hyperparameter tuple, realized
    // over a 100-part test set.
    struct Rigged : Classifier {
      explicit Rigged(int cutoff) : cutoff(cutoff) {}
      PredictionResult predict(const std::string& part, const std::string&) override {
        PredictionResult r;
        r.raw_text = std::stoi(part.substr(1)) < cutoff ? "Branch" : "Channel";
        return r;
      }
      std::string id() const override { return "rigged"; }
      int cutoff;
    };
    std::vector<LabeledExample> test_set;
    for (int i = 0; i < 100; ++i) {
      test_set.push_back({"p" + std::to_string(i), "rig", FunctionClass::Branch});
    }
    const std::vector<Hyperparameters> hps = {
        {1, 10, 1.0}, {1, 20, 1.0}, {2, 10, 1.0}, {2, 20, 1.0}};
    const std::vector<int> preset = {42, 37, 42, 41};  // tie at the max

    auto accuracy_of = [&](const Hyperparameters& hp) {
      for (size_t i = 0; i < hps.size(); ++i) {
        if (hps[i] == hp) return preset[i];
      }
      throw Error("unexpected tuple");
    };
    ClassifierFactory factory = [&](const Hyperparameters& hp, uint64_t,
                                    const std::vector<LabeledExample>&) {
      return std::make_unique<Rigged>(accuracy_of(hp));
    };
    SearchSpace space;
    space.epoch_choices = {1, 2};
    space.batch_choices = {10, 20};
    space.lr_choices = {1.0};
    space.trials = 4;
    space.seed = 1;
    SearchReport run = run_search(space, test_set, test_set, factory);
    // The winner must attain the preset maximum.
    require(accuracy_of(run.best) == 42, "run_search missed the argmax");
    // And it must be the earliest max in sampled order.
    for (const auto& trial : run.trials) {
      if (accuracy_of(trial.hp) == 42) {
        require(trial.hp == run.best, "tie not broken by first index");
        break;
      }
    }

    // Exhaustive: every permutation of the four preset trials.
    std::vector<SearchTrial> base;
    for (size_t i = 0; i < hps.size(); ++i) {
      SearchTrial t;
      t.hp = hps[i];
      EvaluationReport r;
      r.accuracy = preset[i] / 100.0;
      r.sample_count = 100;
      t.train_report = r;
      t.test_report = r;
      base.push_back(t);
    }
    std::vector<size_t> order = {0, 1, 2, 3};
    int permutations = 0;
    do {
      std::vector<SearchTrial> trials;
      for (size_t i : order) trials.push_back(base[i]);
      Hyperparameters expected{};
      double best = -1;
      for (const auto& t : trials) {
        if (t.test_report->accuracy > best) {
          best = t.test_report->accuracy;
          expected = t.hp;
        }
      }
      require(select_best(trials, Objective::Accuracy) == expected,
              "permutation gave wrong winner");
      ++permutations;
    } while (std::next_permutation(order.begin(), order.end()));
    require(permutations == 24, "permutation count");
    return std::string("24 permutations + rigged run_search");
  });

  run_criterion(6, "pipeline determinism: byte-identical artifacts across runs", [] {
    const auto start = Clock::now();
    const fs::path base = fs::temp_directory_path() / "funcda_acceptance";
    fs::remove_all(base);
    const std::string run_a = (base / "run_a").string();
    const std::string run_b = (base / "run_b").string();
    run_full_pipeline(run_a);
    run_full_pipeline(run_b);

    auto a = snapshot(run_a);
    auto b = snapshot(run_b);
    require(!a.empty(), "no artifacts produced");
    require(a.size() == b.size(), "artifact sets differ in size");
    for (const auto& [name, bytes] : a) {
      auto it = b.find(name);
      require(it != b.end(), "missing artifact " + name);
      require(it->second == bytes, "artifact differs: " + name);
    }
    const double elapsed = seconds_since(start);
    require(elapsed < 60.0, "took too long");
    fs::remove_all(base);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%zu artifacts identical, %.2fs", a.size(), elapsed);
    return std::string(buf);
  });

  run_criterion(7, "split arithmetic: 7568 -> 681-example training set", [] {
    std::vector<LabeledExample> records;
    Rng rng(5);
    for (int i = 0; i < 7568; ++i) {
      records.push_back({"part" + std::to_string(i), "system",
                         static_cast<FunctionClass>(rng.below(kClassCount))});
    }
    SplitSpec spec;
    spec.test_fraction = 0.10;
    spec.train_subsample_fraction = 0.10;
    spec.seed = 7;
    DatasetSplit result = split(records, spec);
    const auto train_size = static_cast<long>(result.train.size());
    require(std::abs(train_size - 681) <= 1,
            "train size " + std::to_string(train_size));
    return "train size " + std::to_string(train_size) + ", test size " +
           std::to_string(result.test.size());
  });

  run_criterion(8, "wire-contract fidelity against the mock server", [] {
    const auto start = Clock::now();

    // Byte-exact upload of the golden JSONL.
    MockServer server;
    server.set_job_script({"queued", "running", "succeeded"});
    server.start();
    RemoteConfig config;
    config.base_url = server.base_url();
    config.backoff_initial_ms = 2.0;
    config.requests_per_second = 0.0;
    RemoteClient client(config);

    const std::string jsonl = read_file(golden("upload_train.jsonl"));
    const std::string file_id = client.upload_training_file(jsonl);
    auto stored = server.uploaded_file(file_id);
    require(stored.has_value() && *stored == jsonl, "upload not byte-exact");

    // Job lifecycle observed in order.
    Hyperparameters hp{12, 20, 20.0};
    const std::string job_id = client.create_finetune_job({file_id, "gpt-3.5-turbo", hp});
    std::vector<JobState> states;
    for (int i = 0; i < 3; ++i) states.push_back(client.poll_job(job_id).state);
    require(states == std::vector<JobState>{JobState::Queued, JobState::Running,
                                            JobState::Succeeded},
            "lifecycle out of order");

    // 429 twice then 200: exactly three attempts.
    server.script_chat_failures(2, 429, 0.001);
    const int64_t before = client.wire_call_count();
    PredictionResult result = client.chat_predict("ft:mock:" + job_id, "probe");
    require(result.raw_text == "Support", "unexpected reply");
    require(client.wire_call_count() - before == 3,
            "retry count " + std::to_string(client.wire_call_count() - before));

    // Cache: repeated prompt, zero extra wire calls.
    const int64_t cached_before = client.wire_call_count();
    client.chat_predict("ft:mock:" + job_id, "probe");
    require(client.wire_call_count() == cached_before, "cache missed");

    const double elapsed = seconds_since(start);
    require(elapsed < 10.0, "took too long");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "all contracts held in %.2fs", elapsed);
    return std::string(buf);
  });

  run_criterion(9, "prompt golden bytes", [] {
    const std::string prompt = render_prompt("Washer", "Tablet Stand", builtin_taxonomy());
    const std::string want = read_file(golden("prompt_washer_tablet_stand.txt"));
    require(prompt == want, "prompt differs from the golden file");
    const Taxonomy& tax = builtin_taxonomy();
    for (FunctionClass c : tax.tier1()) {
      require(want.find(tax.definition_of(c)) != std::string::npos,
              "golden lacks a definition");
    }
    require(want.find("what is the function of a part Washer in the system Tablet "
                      "Stand?") != std::string::npos,
            "golden lacks the interrogative clause");
    return std::string("byte-equal, all 8 definitions present");
  });

  run_criterion(10, "annotation report: 99 + 1 gives 0.99 exactly", [] {
    std::vector<AnnotationResult> results;
    for (int i = 0; i < 99; ++i) {
      AnnotationResult r;
      r.part.part_name = "p" + std::to_string(i);
      r.part.assembly_name = "rig";
      r.raw_text = i % 2 ? "Channel" : "Support";
      r.label = normalize_label(r.raw_text, builtin_taxonomy());
      results.push_back(r);
    }
    AnnotationResult odd;
    odd.part.part_name = "p99";
    odd.part.assembly_name = "rig";
    odd.raw_text = "conduit";
    odd.label = normalize_label(odd.raw_text, builtin_taxonomy());
    results.push_back(odd);

    AnnotationReport report = distribution_report(results);
    require(report.in_vocabulary_fraction == 0.99, "fraction not exactly 0.99");
    require(report.total == 100, "total");
    require(report.per_label.at("OutOfVocabulary") == 1, "bucket");
    return std::string("in_vocabulary_fraction == 0.99");
  });

  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED"
                                : std::to_string(g_failures) + " CRITERIA FAILED")
            << "\n";
  return g_failures == 0 ? 0 : 1;
}
