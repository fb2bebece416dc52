#include "funcda/remote.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "funcda/corpus.hpp"

namespace funcda {

JobState job_state_from_string(const std::string& s) {
  if (s == "queued") return JobState::Queued;
  if (s == "running") return JobState::Running;
  if (s == "succeeded") return JobState::Succeeded;
  if (s == "failed") return JobState::Failed;
  throw RemoteError(RemoteErrorKind::Server, 0, "unknown job status: \"" + s + "\"");
}

std::string job_state_to_string(JobState s) {
  switch (s) {
    case JobState::Queued: return "queued";
    case JobState::Running: return "running";
    case JobState::Succeeded: return "succeeded";
    case JobState::Failed: return "failed";
  }
  return "unknown";
}

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig config;
  if (const char* url = std::getenv("FUNC_DA_BASE_URL")) config.base_url = url;
  if (const char* key = std::getenv("FUNC_DA_API_KEY")) config.api_key = key;
  return config;
}

RateLimiter::RateLimiter(double per_second) {
  interval_ = per_second > 0.0
                  ? std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                        std::chrono::duration<double>(1.0 / per_second))
                  : std::chrono::steady_clock::duration::zero();
  next_ = std::chrono::steady_clock::now();
}

void RateLimiter::acquire() {
  if (interval_ == std::chrono::steady_clock::duration::zero()) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard<std::mutex> lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

RemoteClient::RemoteClient(RemoteConfig config)
    : config_(std::move(config)), limiter_(config_.requests_per_second) {}

namespace {

RemoteError classify_failure(int status, const std::string& body,
                             std::optional<double> retry_after) {
  const std::string what = "HTTP " + std::to_string(status) +
                           (body.empty() ? "" : (": " + body));
  if (status == 401 || status == 403) {
    return RemoteError(RemoteErrorKind::Auth, status, what);
  }
  if (status == 429) {
    return RemoteError(RemoteErrorKind::RateLimit, status, what, retry_after);
  }
  if (status >= 400 && status < 500) {
    return RemoteError(RemoteErrorKind::Validation, status, what);
  }
  return RemoteError(RemoteErrorKind::Server, status, what, retry_after);
}

bool retryable(RemoteErrorKind kind) {
  return kind == RemoteErrorKind::RateLimit || kind == RemoteErrorKind::Server ||
         kind == RemoteErrorKind::Transport;
}

std::optional<double> parse_retry_after(const httplib::Result& res) {
  if (!res || !res->has_header("Retry-After")) return std::nullopt;
  try {
    return std::stod(res->get_header_value("Retry-After"));
  } catch (...) {
    return std::nullopt;
  }
}

httplib::Headers auth_headers(const RemoteConfig& config) {
  httplib::Headers headers;
  if (!config.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config.api_key);
  }
  return headers;
}

}  // namespace

RemoteClient::HttpResponse RemoteClient::do_post_json(const std::string& path,
                                                      const std::string& body) {
  httplib::Client cli(config_.base_url);
  cli.set_connection_timeout(10);
  cli.set_read_timeout(60);
  auto res = cli.Post(path, auth_headers(config_), body, "application/json");
  if (!res) {
    throw RemoteError(RemoteErrorKind::Transport, 0,
                      "transport failure: " + httplib::to_string(res.error()));
  }
  return {res->status, res->body, parse_retry_after(res)};
}

RemoteClient::HttpResponse RemoteClient::do_post_multipart(const std::string& path,
                                                           const std::string& field_name,
                                                           const std::string& filename,
                                                           const std::string& content) {
  httplib::Client cli(config_.base_url);
  cli.set_connection_timeout(10);
  cli.set_read_timeout(60);
  httplib::MultipartFormDataItems items = {
      {field_name, content, filename, "application/jsonl"},
      {"purpose", "fine-tune", "", ""},
  };
  auto res = cli.Post(path, auth_headers(config_), items);
  if (!res) {
    throw RemoteError(RemoteErrorKind::Transport, 0,
                      "transport failure: " + httplib::to_string(res.error()));
  }
  return {res->status, res->body, parse_retry_after(res)};
}

RemoteClient::HttpResponse RemoteClient::do_get(const std::string& path) {
  httplib::Client cli(config_.base_url);
  cli.set_connection_timeout(10);
  cli.set_read_timeout(60);
  auto res = cli.Get(path, auth_headers(config_));
  if (!res) {
    throw RemoteError(RemoteErrorKind::Transport, 0,
                      "transport failure: " + httplib::to_string(res.error()));
  }
  return {res->status, res->body, parse_retry_after(res)};
}

RemoteClient::HttpResponse RemoteClient::request_with_retries(
    const std::string& what, const std::function<HttpResponse()>& send) {
  double backoff_ms = config_.backoff_initial_ms;
  for (int attempt = 1;; ++attempt) {
    limiter_.acquire();
    try {
      ++wire_calls_;
      HttpResponse res = send();
      if (res.status >= 200 && res.status < 300) return res;
      throw classify_failure(res.status, res.body, res.retry_after_s);
    } catch (const RemoteError& e) {
      if (!retryable(e.kind) || attempt >= config_.max_attempts) {
        throw RemoteError(e.kind, e.status, what + ": " + e.what() + " (attempt " +
                          std::to_string(attempt) + " of " +
                          std::to_string(config_.max_attempts) + ")",
                          e.retry_after_s);
      }
      const double wait_ms =
          e.retry_after_s ? *e.retry_after_s * 1000.0 : backoff_ms;
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(wait_ms));
      backoff_ms *= config_.backoff_multiplier;
    }
  }
}

std::string RemoteClient::upload_training_file(const std::string& jsonl_bytes,
                                               const std::string& filename) {
  HttpResponse res = request_with_retries("upload training file", [&] {
    return do_post_multipart("/v1/files", "file", filename, jsonl_bytes);
  });
  try {
    return nlohmann::json::parse(res.body).at("id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw RemoteError(RemoteErrorKind::Server, res.status,
                      std::string("malformed file-upload response: ") + e.what());
  }
}

std::string RemoteClient::create_finetune_job(const RemoteJobSpec& spec) {
  spec.hyperparameters.validate();
  nlohmann::ordered_json body = {
      {"training_file", spec.training_file_id},
      {"model", spec.base_model},
      {"hyperparameters",
       {{"n_epochs", spec.hyperparameters.epochs},
        {"batch_size", spec.hyperparameters.batch_size},
        {"learning_rate_multiplier", spec.hyperparameters.lr_multiplier}}},
  };
  HttpResponse res = request_with_retries("create fine-tune job", [&] {
    return do_post_json("/v1/fine_tuning/jobs", body.dump());
  });
  try {
    return nlohmann::json::parse(res.body).at("id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw RemoteError(RemoteErrorKind::Server, res.status,
                      std::string("malformed job-creation response: ") + e.what());
  }
}

RemoteJobStatus RemoteClient::poll_job(const std::string& job_id) {
  HttpResponse res = request_with_retries("poll job", [&] {
    return do_get("/v1/fine_tuning/jobs/" + job_id);
  });
  RemoteJobStatus status;
  try {
    nlohmann::json doc = nlohmann::json::parse(res.body);
    status.job_id = doc.at("id").get<std::string>();
    status.state = job_state_from_string(doc.at("status").get<std::string>());
    if (doc.contains("fine_tuned_model") && !doc["fine_tuned_model"].is_null()) {
      status.fine_tuned_model = doc["fine_tuned_model"].get<std::string>();
    }
    if (doc.contains("error") && !doc["error"].is_null()) {
      status.error = doc["error"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw RemoteError(RemoteErrorKind::Server, res.status,
                      std::string("malformed job-status response: ") + e.what());
  }
  if ((status.state == JobState::Succeeded) != status.fine_tuned_model.has_value()) {
    throw RemoteError(RemoteErrorKind::Server, res.status,
                      "job status \"" + job_state_to_string(status.state) +
                          "\" inconsistent with fine_tuned_model presence");
  }
  return status;
}

PredictionResult RemoteClient::chat_predict(const std::string& model_id,
                                            const std::string& prompt) {
  const std::string key = model_id + '\x1f' + prompt;
  {
    std::lock_guard<std::mutex> lock(cache_mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      PredictionResult cached;
      cached.raw_text = it->second;
      cached.cached = true;
      return cached;
    }
  }

  nlohmann::ordered_json body = {
      {"model", model_id},
      {"messages", {{{"role", "user"}, {"content", prompt}}}},
      {"temperature", 0},
  };
  HttpResponse res = request_with_retries("chat completion", [&] {
    return do_post_json("/v1/chat/completions", body.dump());
  });
  std::string content;
  try {
    content = nlohmann::json::parse(res.body)
                  .at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw RemoteError(RemoteErrorKind::Server, res.status,
                      std::string("malformed chat response: ") + e.what());
  }
  {
    std::lock_guard<std::mutex> lock(cache_mu_);
    cache_.emplace(key, content);
  }
  PredictionResult result;
  result.raw_text = std::move(content);
  return result;
}

int64_t RemoteClient::wire_call_count() const { return wire_calls_.load(); }

RemoteClassifier::RemoteClassifier(std::shared_ptr<RemoteClient> client,
                                   std::string model_id, const Taxonomy& taxonomy)
    : client_(std::move(client)), model_id_(std::move(model_id)), taxonomy_(taxonomy) {}

PredictionResult RemoteClassifier::predict(const std::string& part_name,
                                           const std::string& assembly_name) {
  return client_->chat_predict(model_id_,
                               render_prompt(part_name, assembly_name, taxonomy_));
}

}  // namespace funcda
