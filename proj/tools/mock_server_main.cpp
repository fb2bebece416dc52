// Standalone mock fine-tuning provider; useful for driving the remote
// backend end to end without credentials:
//   funcda-mock-server --port 8600
//   FUNC_DA_BASE_URL=http://127.0.0.1:8600 funcda train --backend remote ...

#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "funcda/mock_server.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scriptable mock fine-tuning provider"};
  int port = 8600;
  std::string api_key;
  std::string reply = "Support";
  app.add_option("--port", port, "listen port (default 8600)");
  app.add_option("--api-key", api_key, "require this bearer token");
  app.add_option("--reply", reply, "assistant reply for every chat completion");
  CLI11_PARSE(app, argc, argv);

  funcda::MockServer server;
  if (!api_key.empty()) server.require_api_key(api_key);
  server.set_chat_responder([reply](const std::string&) { return reply; });
  try {
    server.start(port);
  } catch (const std::exception& e) {
    std::cerr << "funcda-mock-server: " << e.what() << "\n";
    return 1;
  }
  std::cout << "mock provider listening on " << server.base_url() << "\n";

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
  }
  server.stop();
  return 0;
}
