#include <doctest.h>

#include <fstream>
#include <sstream>

#include "funcda/corpus.hpp"
#include "funcda/mock_server.hpp"
#include "funcda/remote.hpp"

using namespace funcda;

namespace {

RemoteConfig fast_config(const MockServer& server) {
  RemoteConfig config;
  config.base_url = server.base_url();
  config.backoff_initial_ms = 2.0;
  config.requests_per_second = 0.0;  // no pacing unless a test asks for it
  return config;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("remote") {

TEST_CASE("upload is byte-exact on the server side") {
  MockServer server;
  server.start();
  RemoteClient client(fast_config(server));

  const std::string jsonl = read_file(std::string(FUNCDA_GOLDEN_DIR) + "/upload_train.jsonl");
  const std::string file_id = client.upload_training_file(jsonl);
  CHECK(file_id == "file-1");
  auto stored = server.uploaded_file(file_id);
  REQUIRE(stored.has_value());
  CHECK(*stored == jsonl);
}

TEST_CASE("job lifecycle is observed queued -> running -> succeeded") {
  MockServer server;
  server.set_job_script({"queued", "running", "succeeded"});
  server.start();
  RemoteClient client(fast_config(server));

  const std::string file_id = client.upload_training_file("{}\n");
  Hyperparameters hp{12, 20, 20.0};
  const std::string job_id = client.create_finetune_job({file_id, "gpt-3.5-turbo", hp});

  std::vector<JobState> seen;
  for (int i = 0; i < 3; ++i) seen.push_back(client.poll_job(job_id).state);
  REQUIRE(seen.size() == 3);
  CHECK(seen[0] == JobState::Queued);
  CHECK(seen[1] == JobState::Running);
  CHECK(seen[2] == JobState::Succeeded);

  // Terminal state repeats; the model id rides along only on success.
  RemoteJobStatus status = client.poll_job(job_id);
  CHECK(status.state == JobState::Succeeded);
  REQUIRE(status.fine_tuned_model.has_value());
  CHECK(*status.fine_tuned_model == "ft:mock:" + job_id);
}

TEST_CASE("job creation validates the training file reference") {
  MockServer server;
  server.start();
  RemoteClient client(fast_config(server));
  Hyperparameters hp;
  CHECK_THROWS_AS(client.create_finetune_job({"file-999", "gpt-3.5-turbo", hp}),
                  RemoteError);
  try {
    client.create_finetune_job({"file-999", "gpt-3.5-turbo", hp});
  } catch (const RemoteError& e) {
    CHECK(e.kind == RemoteErrorKind::Validation);
    CHECK(e.status == 400);
  }
}

TEST_CASE("429 twice then 200 succeeds on the third attempt") {
  MockServer server;
  server.script_chat_failures(2, 429, 0.001);
  server.start();
  RemoteClient client(fast_config(server));

  PredictionResult result = client.chat_predict("ft:mock:x", "what is a washer?");
  CHECK(result.raw_text == "Support");
  CHECK_FALSE(result.probabilities.has_value());
  CHECK(client.wire_call_count() == 3);  // 2 failures + 1 success
  CHECK(server.chat_call_count() == 1);  // only the success reached the handler
}

TEST_CASE("retries are capped at max_attempts and surface the last error") {
  MockServer server;
  server.script_chat_failures(100, 503);
  server.start();
  RemoteConfig config = fast_config(server);
  config.max_attempts = 3;
  RemoteClient client(config);

  CHECK_THROWS_AS(client.chat_predict("m", "p"), RemoteError);
  CHECK(client.wire_call_count() == 3);
  server.script_chat_failures(100, 503);
  try {
    client.chat_predict("m", "p2");
  } catch (const RemoteError& e) {
    CHECK(e.kind == RemoteErrorKind::Server);
    CHECK(std::string(e.what()).find("attempt 3 of 3") != std::string::npos);
  }
}

TEST_CASE("auth and validation failures do not retry") {
  MockServer server;
  server.require_api_key("sk-right");
  server.start();
  RemoteConfig config = fast_config(server);
  config.api_key = "sk-wrong";
  RemoteClient client(config);

  CHECK_THROWS_AS(client.chat_predict("m", "p"), RemoteError);
  CHECK(client.wire_call_count() == 1);  // no retries on 401
  try {
    client.chat_predict("m", "p");
  } catch (const RemoteError& e) {
    CHECK(e.kind == RemoteErrorKind::Auth);
    CHECK(e.status == 401);
  }

  RemoteConfig good = fast_config(server);
  good.api_key = "sk-right";
  RemoteClient authed(good);
  CHECK(authed.chat_predict("m", "p").raw_text == "Support");
}

TEST_CASE("identical prompts hit the cache: one wire call") {
  MockServer server;
  server.start();
  RemoteClient client(fast_config(server));

  PredictionResult first = client.chat_predict("m", "same prompt");
  PredictionResult second = client.chat_predict("m", "same prompt");
  CHECK_FALSE(first.cached);
  CHECK(second.cached);
  CHECK(second.raw_text == first.raw_text);
  CHECK(client.wire_call_count() == 1);
  CHECK(server.chat_call_count() == 1);

  // Different model id or prompt misses the cache.
  client.chat_predict("m2", "same prompt");
  client.chat_predict("m", "other prompt");
  CHECK(client.wire_call_count() == 3);
}

TEST_CASE("rate limiter keeps request spacing at or above the interval") {
  MockServer server;
  server.start();
  RemoteConfig config = fast_config(server);
  config.requests_per_second = 20.0;  // 50 ms spacing
  RemoteClient client(config);

  for (int i = 0; i < 4; ++i) {
    client.chat_predict("m", "prompt " + std::to_string(i));
  }
  auto log = server.request_log();
  REQUIRE(log.size() == 4);
  for (size_t i = 1; i < log.size(); ++i) {
    const auto gap = std::chrono::duration_cast<std::chrono::milliseconds>(
        log[i].time - log[i - 1].time);
    CHECK(gap.count() >= 30);  // 50 ms nominal, generous clock tolerance
  }
}

TEST_CASE("remote classifier passes raw model text through") {
  MockServer server;
  server.set_chat_responder([](const std::string& prompt) {
    return prompt.find("Washer") != std::string::npos ? "Support" : "conduit";
  });
  server.start();
  auto client = std::make_shared<RemoteClient>(fast_config(server));
  RemoteClassifier classifier(client, "ft:mock:1", builtin_taxonomy());

  CHECK(classifier.predict("Washer", "Tablet Stand").raw_text == "Support");
  CHECK(classifier.predict("Widget", "Gizmo").raw_text == "conduit");
  CHECK(classifier.id() == "ft:mock:1");
}

TEST_CASE("malformed status transitions are rejected") {
  CHECK_THROWS_AS(job_state_from_string("melted"), RemoteError);
  CHECK(job_state_to_string(JobState::Running) == "running");
}

}  // TEST_SUITE
