#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "funcda/classifier.hpp"
#include "funcda/errors.hpp"
#include "funcda/softmax.hpp"

namespace funcda {

enum class RemoteErrorKind { Auth, RateLimit, Validation, Server, Transport };

// Typed wire failure. retry_after_s carries a server-provided wait when the
// response included one.
class RemoteError : public Error {
 public:
  RemoteError(RemoteErrorKind kind, int status, const std::string& message,
              std::optional<double> retry_after_s = std::nullopt)
      : Error(message), kind(kind), status(status), retry_after_s(retry_after_s) {}

  RemoteErrorKind kind;
  int status;  // 0 for transport failures
  std::optional<double> retry_after_s;
};

enum class JobState { Queued, Running, Succeeded, Failed };

JobState job_state_from_string(const std::string& s);
std::string job_state_to_string(JobState s);

struct RemoteJobSpec {
  std::string training_file_id;
  std::string base_model;
  Hyperparameters hyperparameters;
};

// fine_tuned_model is present exactly when state == Succeeded.
struct RemoteJobStatus {
  std::string job_id;
  JobState state = JobState::Queued;
  std::optional<std::string> fine_tuned_model;
  std::optional<std::string> error;
};

struct RemoteConfig {
  std::string base_url = "http://127.0.0.1:8600";
  std::string api_key;  // bearer token; read from FUNC_DA_API_KEY
  std::string base_model = "gpt-3.5-turbo";
  int max_attempts = 5;
  double backoff_initial_ms = 500.0;
  double backoff_multiplier = 2.0;
  double requests_per_second = 10.0;  // 0 disables rate limiting

  // Environment overrides: FUNC_DA_BASE_URL and FUNC_DA_API_KEY.
  static RemoteConfig from_env();
};

// Spaces outgoing requests at least 1/per_second apart. Shared by all
// threads using one client.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_;
};

// HTTP JSON fine-tuning/inference client. Rate-limited, retrying with
// exponential backoff (rate-limit, server and transport errors retry; auth
// and validation errors do not), and caching chat responses by
// (model id, prompt). Safe for concurrent use.
class RemoteClient {
 public:
  explicit RemoteClient(RemoteConfig config);

  // POST /v1/files, multipart upload of the JSONL bytes. Returns the file id.
  std::string upload_training_file(const std::string& jsonl_bytes,
                                   const std::string& filename = "training.jsonl");

  // POST /v1/fine_tuning/jobs. Returns the job id.
  std::string create_finetune_job(const RemoteJobSpec& spec);

  // GET /v1/fine_tuning/jobs/{id}. Side-effect free.
  RemoteJobStatus poll_job(const std::string& job_id);

  // POST /v1/chat/completions at temperature 0; returns the first choice's
  // message content. Cached: a repeated (model id, prompt) never reaches
  // the wire again.
  PredictionResult chat_predict(const std::string& model_id, const std::string& prompt);

  // Actual HTTP requests issued (cache hits excluded).
  int64_t wire_call_count() const;

  const RemoteConfig& config() const { return config_; }

 private:
  struct HttpResponse {
    int status = 0;
    std::string body;
    std::optional<double> retry_after_s;
  };

  HttpResponse request_with_retries(const std::string& what,
                                    const std::function<HttpResponse()>& send);
  HttpResponse do_post_json(const std::string& path, const std::string& body);
  HttpResponse do_post_multipart(const std::string& path, const std::string& field_name,
                                 const std::string& filename, const std::string& content);
  HttpResponse do_get(const std::string& path);

  RemoteConfig config_;
  RateLimiter limiter_;
  mutable std::mutex cache_mu_;
  std::map<std::string, std::string> cache_;  // (model id \x1f prompt) -> content
  std::atomic<int64_t> wire_calls_{0};
};

// Prediction through a succeeded fine-tuning job's model.
class RemoteClassifier : public Classifier {
 public:
  RemoteClassifier(std::shared_ptr<RemoteClient> client, std::string model_id,
                   const Taxonomy& taxonomy);

  PredictionResult predict(const std::string& part_name,
                           const std::string& assembly_name) override;
  std::string id() const override { return model_id_; }

 private:
  std::shared_ptr<RemoteClient> client_;
  std::string model_id_;
  const Taxonomy& taxonomy_;
};

}  // namespace funcda
