#include "funcda/mock_server.hpp"

#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "funcda/errors.hpp"

namespace funcda {

struct MockServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  mutable std::mutex mu;
  std::optional<std::string> api_key;
  std::vector<std::string> job_script = {"queued", "running", "succeeded"};
  std::map<std::string, std::string> files;                // id -> bytes
  std::map<std::string, std::vector<std::string>> jobs;    // id -> remaining states
  std::map<std::string, std::string> job_last_state;
  int chat_failures_left = 0;
  int chat_failure_status = 429;
  std::optional<double> chat_retry_after;
  std::function<std::string(const std::string&)> chat_responder =
      [](const std::string&) { return "Support"; };
  std::vector<LoggedRequest> log;
  int64_t chat_calls = 0;
  int next_file = 1;
  int next_job = 1;

  void log_request(const httplib::Request& req) {
    std::lock_guard<std::mutex> lock(mu);
    log.push_back({req.method, req.path, std::chrono::steady_clock::now()});
  }

  bool authorized(const httplib::Request& req, httplib::Response& res) {
    std::lock_guard<std::mutex> lock(mu);
    if (!api_key) return true;
    const std::string want = "Bearer " + *api_key;
    if (req.get_header_value("Authorization") == want) return true;
    res.status = 401;
    res.set_content("{\"error\":\"invalid api key\"}", "application/json");
    return false;
  }
};

MockServer::MockServer() : impl_(std::make_unique<Impl>()) {
  auto* impl = impl_.get();

  impl->server.Post("/v1/files", [impl](const httplib::Request& req, httplib::Response& res) {
    impl->log_request(req);
    if (!impl->authorized(req, res)) return;
    if (!req.has_file("file")) {
      res.status = 400;
      res.set_content("{\"error\":\"missing file part\"}", "application/json");
      return;
    }
    const auto& part = req.get_file_value("file");
    std::string id;
    {
      std::lock_guard<std::mutex> lock(impl->mu);
      id = "file-" + std::to_string(impl->next_file++);
      impl->files[id] = part.content;
    }
    nlohmann::ordered_json body = {{"id", id}, {"bytes", part.content.size()}};
    res.set_content(body.dump(), "application/json");
  });

  impl->server.Post("/v1/fine_tuning/jobs",
                    [impl](const httplib::Request& req, httplib::Response& res) {
    impl->log_request(req);
    if (!impl->authorized(req, res)) return;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(req.body);
    } catch (...) {
      res.status = 400;
      res.set_content("{\"error\":\"malformed JSON body\"}", "application/json");
      return;
    }
    if (!doc.contains("training_file") || !doc.contains("model") ||
        !doc.contains("hyperparameters")) {
      res.status = 400;
      res.set_content("{\"error\":\"missing training_file/model/hyperparameters\"}",
                      "application/json");
      return;
    }
    std::string id;
    {
      std::lock_guard<std::mutex> lock(impl->mu);
      if (!impl->files.count(doc["training_file"].get<std::string>())) {
        res.status = 400;
        res.set_content("{\"error\":\"unknown training_file\"}", "application/json");
        return;
      }
      id = "ftjob-" + std::to_string(impl->next_job++);
      impl->jobs[id] = impl->job_script;
      impl->job_last_state[id] = "queued";
    }
    nlohmann::ordered_json body = {{"id", id}, {"status", "queued"}};
    res.set_content(body.dump(), "application/json");
  });

  impl->server.Get(R"(/v1/fine_tuning/jobs/(.+))",
                   [impl](const httplib::Request& req, httplib::Response& res) {
    impl->log_request(req);
    if (!impl->authorized(req, res)) return;
    const std::string id = req.matches[1];
    std::string state;
    {
      std::lock_guard<std::mutex> lock(impl->mu);
      auto it = impl->jobs.find(id);
      if (it == impl->jobs.end()) {
        res.status = 404;
        res.set_content("{\"error\":\"no such job\"}", "application/json");
        return;
      }
      if (!it->second.empty()) {
        state = it->second.front();
        it->second.erase(it->second.begin());
      } else {
        state = impl->job_last_state[id];
      }
      impl->job_last_state[id] = state;
    }
    nlohmann::ordered_json body = {{"id", id}, {"status", state}};
    if (state == "succeeded") body["fine_tuned_model"] = "ft:mock:" + id;
    if (state == "failed") body["error"] = "scripted failure";
    res.set_content(body.dump(), "application/json");
  });

  impl->server.Post("/v1/chat/completions",
                    [impl](const httplib::Request& req, httplib::Response& res) {
    impl->log_request(req);
    if (!impl->authorized(req, res)) return;
    {
      std::lock_guard<std::mutex> lock(impl->mu);
      if (impl->chat_failures_left > 0) {
        --impl->chat_failures_left;
        res.status = impl->chat_failure_status;
        if (impl->chat_retry_after) {
          res.set_header("Retry-After", std::to_string(*impl->chat_retry_after));
        }
        res.set_content("{\"error\":\"scripted failure\"}", "application/json");
        return;
      }
    }
    nlohmann::json doc;
    std::string prompt;
    try {
      doc = nlohmann::json::parse(req.body);
      for (const auto& msg : doc.at("messages")) {
        if (msg.value("role", "") == "user") prompt = msg.value("content", "");
      }
    } catch (...) {
      res.status = 400;
      res.set_content("{\"error\":\"malformed chat body\"}", "application/json");
      return;
    }
    std::string reply;
    {
      std::lock_guard<std::mutex> lock(impl->mu);
      ++impl->chat_calls;
      reply = impl->chat_responder(prompt);
    }
    nlohmann::ordered_json body = {
        {"choices",
         {{{"message", {{"role", "assistant"}, {"content", reply}}},
           {"finish_reason", "stop"}}}},
    };
    res.set_content(body.dump(), "application/json");
  });
}

MockServer::~MockServer() { stop(); }

void MockServer::start(int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", port)) {
      throw Error("mock server: cannot bind port " + std::to_string(port));
    }
    impl_->port = port;
  }
  if (impl_->port <= 0) throw Error("mock server: cannot bind a port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void MockServer::stop() {
  if (impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

int MockServer::port() const { return impl_->port; }

std::string MockServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

void MockServer::require_api_key(const std::string& key) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->api_key = key;
}

void MockServer::set_job_script(std::vector<std::string> statuses) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->job_script = std::move(statuses);
}

void MockServer::script_chat_failures(int count, int status,
                                      std::optional<double> retry_after_s) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->chat_failures_left = count;
  impl_->chat_failure_status = status;
  impl_->chat_retry_after = retry_after_s;
}

void MockServer::set_chat_responder(std::function<std::string(const std::string&)> responder) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->chat_responder = std::move(responder);
}

std::optional<std::string> MockServer::uploaded_file(const std::string& file_id) const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  auto it = impl_->files.find(file_id);
  if (it == impl_->files.end()) return std::nullopt;
  return it->second;
}

std::vector<MockServer::LoggedRequest> MockServer::request_log() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->log;
}

int64_t MockServer::chat_call_count() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->chat_calls;
}

}  // namespace funcda
