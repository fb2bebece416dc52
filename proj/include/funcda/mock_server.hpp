#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace funcda {

// Scriptable in-process stand-in for the fine-tuning provider, implementing
// the same wire protocol as RemoteClient expects. Used by contract tests
// and runnable standalone for manual experiments.
class MockServer {
 public:
  struct LoggedRequest {
    std::string method;
    std::string path;
    std::chrono::steady_clock::time_point time;
  };

  MockServer();
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds 127.0.0.1 (an ephemeral port when 0) and serves on a background
  // thread.
  void start(int port = 0);
  void stop();
  int port() const;
  std::string base_url() const;

  // Requests must carry "Authorization: Bearer <key>"; 401 otherwise.
  void require_api_key(const std::string& key);

  // Status sequence each subsequent job walks through, one state per poll;
  // the final state repeats. Default: queued, running, succeeded.
  void set_job_script(std::vector<std::string> statuses);

  // Fail the next `count` chat completions with `status` (optionally
  // advertising Retry-After seconds) before succeeding.
  void script_chat_failures(int count, int status,
                            std::optional<double> retry_after_s = std::nullopt);

  // Maps the user prompt to the assistant reply. Default replies "Support".
  void set_chat_responder(std::function<std::string(const std::string&)> responder);

  std::optional<std::string> uploaded_file(const std::string& file_id) const;
  std::vector<LoggedRequest> request_log() const;
  int64_t chat_call_count() const;  // completions that reached the handler

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace funcda
