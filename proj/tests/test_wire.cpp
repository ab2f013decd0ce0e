#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "rrf/oracle/wire.hpp"

using namespace rrf;

namespace {

// Local chat-completions stand-in. Evaluation prompts get "Founder k: Yes"
// for every profile mentioning "YES"; everything else echoes a fixed reply.
class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int now = ++in_flight_;
      {
        std::lock_guard lock(mutex_);
        max_in_flight_ = std::max(max_in_flight_, now);
        auth_headers_.push_back(req.get_header_value("Authorization"));
        bodies_.push_back(json::parse(req.body));
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms.load()));
      --in_flight_;
      if (failures_left.load() > 0) {
        --failures_left;
        res.status = failure_status.load();
        res.set_content("{}", "application/json");
        return;
      }
      const auto prompt = json::parse(req.body)["messages"][0]["content"].get<std::string>();
      res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", reply_for(prompt)}}}}}}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int max_in_flight() {
    std::lock_guard lock(mutex_);
    return max_in_flight_;
  }
  std::vector<std::string> auth_headers() {
    std::lock_guard lock(mutex_);
    return auth_headers_;
  }
  std::vector<json> bodies() {
    std::lock_guard lock(mutex_);
    return bodies_;
  }

  std::atomic<int> delay_ms{0};
  std::atomic<int> failures_left{0};
  std::atomic<int> failure_status{500};

 private:
  static std::string reply_for(const std::string& prompt) {
    if (!prompt.starts_with(prompt_marker::kEvaluation)) return "plain reply";
    std::string out;
    int k = 0;
    std::size_t pos = prompt.find("Founder 1:\n");
    while (pos != std::string::npos) {
      const auto next = prompt.find("\nFounder " + std::to_string(k + 2) + ":\n", pos);
      const auto block = prompt.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      out += "Founder " + std::to_string(++k) + (block.find("YES") != std::string::npos ? ": Yes\n" : ": No\n");
      pos = next == std::string::npos ? next : next + 1;
    }
    return out;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> in_flight_{0};
  std::mutex mutex_;
  int max_in_flight_ = 0;
  std::vector<std::string> auth_headers_;
  std::vector<json> bodies_;
};

WireConfig local(const FakeServer& s) {
  ::setenv("RRF_TEST_KEY", "sk-test", 1);
  WireConfig c;
  c.base_url = s.url();
  c.api_key_env = "RRF_TEST_KEY";
  c.backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::seconds(10);
  return c;
}

}  // namespace

TEST(WireBackend, MissingKeyIsConfigError) {
  WireConfig c;
  c.api_key_env = "RRF_TEST_DEFINITELY_UNSET";
  ::unsetenv("RRF_TEST_DEFINITELY_UNSET");
  EXPECT_THROW(WireBackend{c}, ConfigError);
}

TEST(WireBackend, InvalidLimitsAreConfigErrors) {
  ::setenv("RRF_TEST_KEY", "sk-test", 1);
  WireConfig c;
  c.api_key_env = "RRF_TEST_KEY";
  c.parallelism = 0;
  EXPECT_THROW(WireBackend{c}, ConfigError);
  c.parallelism = 1000;
  EXPECT_THROW(WireBackend{c}, ConfigError);
  c.parallelism = 2;
  c.batch_size = 0;
  EXPECT_THROW(WireBackend{c}, ConfigError);
}

TEST(WireBackend, RequestShapeAndBearerToken) {
  FakeServer server;
  auto c = local(server);
  c.temperature = 0.2;
  WireBackend backend(c);
  EXPECT_EQ(backend.complete("hello"), "plain reply");
  const auto bodies = server.bodies();
  ASSERT_EQ(bodies.size(), 1u);
  EXPECT_EQ(bodies[0]["model"], "gpt-4o-mini");
  EXPECT_EQ(bodies[0]["messages"][0]["role"], "user");
  EXPECT_EQ(bodies[0]["messages"][0]["content"], "hello");
  EXPECT_DOUBLE_EQ(bodies[0]["temperature"].get<double>(), 0.2);
  EXPECT_EQ(server.auth_headers()[0], "Bearer sk-test");
}

TEST(WireBackend, TemperatureOmittedByDefault) {
  WireConfig c;
  EXPECT_FALSE(WireBackend::request_body(c, "x").contains("temperature"));
}

TEST(WireBackend, RetriesServerErrorsThenSucceeds) {
  FakeServer server;
  server.failures_left = 2;
  WireBackend backend(local(server));
  EXPECT_EQ(backend.complete("hello"), "plain reply");
  EXPECT_EQ(server.bodies().size(), 3u);
}

TEST(WireBackend, GivesUpAfterRetryBudget) {
  FakeServer server;
  server.failures_left = 10;
  server.failure_status = 429;
  auto c = local(server);
  c.retries = 2;
  WireBackend backend(c);
  EXPECT_THROW(backend.complete("hello"), BackendError);
  EXPECT_EQ(server.bodies().size(), 3u);
}

TEST(WireBackend, ClientErrorsAreNotRetried) {
  FakeServer server;
  server.failures_left = 1;
  server.failure_status = 401;
  WireBackend backend(local(server));
  EXPECT_THROW(backend.complete("hello"), BackendError);
  EXPECT_EQ(server.bodies().size(), 1u);
}

TEST(WireBackend, AnswerBatchKeepsOrderAndBoundsConcurrency) {
  FakeServer server;
  server.delay_ms = 30;
  auto c = local(server);
  c.parallelism = 2;
  c.batch_size = 5;
  WireBackend backend(c);
  std::vector<std::string> profiles;
  BitRow expected;
  for (int i = 0; i < 40; ++i) {
    const bool yes = (i * 7) % 3 == 0;
    profiles.push_back("Education: None\nWork History: " + std::string(yes ? "YES" : "no") + "\n");
    expected.push_back(yes ? 1 : 0);
  }
  EXPECT_EQ(backend.answer_batch("Is it?", profiles), expected);
  EXPECT_EQ(server.bodies().size(), 8u);
  EXPECT_LE(server.max_in_flight(), 2);
  EXPECT_GE(server.max_in_flight(), 1);
}

TEST(WireBackend, UnreachableEndpointIsBackendError) {
  ::setenv("RRF_TEST_KEY", "sk-test", 1);
  WireConfig c;
  c.base_url = "http://127.0.0.1:1";
  c.api_key_env = "RRF_TEST_KEY";
  c.retries = 1;
  c.backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::seconds(2);
  WireBackend backend(c);
  EXPECT_THROW(backend.complete("x"), BackendError);
}
