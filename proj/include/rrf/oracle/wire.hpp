#pragma once

#include <chrono>
#include <cstdlib>
#include <future>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "rrf/error.hpp"
#include "rrf/oracle/backend.hpp"
#include "rrf/oracle/parse.hpp"
#include "rrf/oracle/prompts.hpp"
#include "rrf/oracle/retry.hpp"

namespace rrf {

struct WireConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<double> temperature;  // omitted from requests when unset
  int retries = 3;                    // per request, for transport and parse failures
  std::size_t parallelism = 4;        // in-flight request limit
  std::size_t batch_size = 20;        // founders per evaluation prompt
  std::chrono::milliseconds backoff{500};
  std::chrono::seconds timeout{120};
};

inline constexpr std::ptrdiff_t kMaxParallelism = 256;

// Chat-completions client: POST {model, messages, temperature} with a bearer
// token, reading choices[0].message.content.
class WireBackend : public OracleBackend {
 public:
  explicit WireBackend(WireConfig config)
      : config_(checked(std::move(config))),
        slots_(std::make_unique<std::counting_semaphore<kMaxParallelism>>(
            static_cast<std::ptrdiff_t>(config_.parallelism))) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("API key environment variable " + config_.api_key_env + " is not set");
    }
    api_key_ = key;
  }

  static WireConfig checked(WireConfig config) {
    if (config.parallelism < 1 || config.parallelism > static_cast<std::size_t>(kMaxParallelism)) {
      throw ConfigError("parallelism must lie in [1, " + std::to_string(kMaxParallelism) + "]");
    }
    if (config.batch_size < 1) throw ConfigError("evaluation batch size must be at least 1");
    if (config.retries < 0) throw ConfigError("retries must be non-negative");
    return config;
  }

  static json request_body(const WireConfig& config, const std::string& prompt) {
    json body{{"model", config.model}, {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}};
    if (config.temperature) body["temperature"] = *config.temperature;
    return body;
  }

  std::string complete(const std::string& prompt) override {
    const auto body = request_body(config_, prompt).dump();
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(config_.backoff * (1 << std::min(attempt - 1, 6)));
      httplib::Result res = [&] {
        Slot slot(*slots_);
        httplib::Client client(config_.base_url);
        client.set_bearer_token_auth(api_key_);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        client.set_write_timeout(config_.timeout);
        return client.Post(config_.path, body, "application/json");
      }();
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw BackendError("HTTP " + std::to_string(res->status) + " from " + config_.base_url + config_.path + ": " +
                           res->body.substr(0, 500));
      }
      return extract_content(res->body);
    }
    throw BackendError("request failed after " + std::to_string(config_.retries + 1) + " attempts: " + last_error);
  }

  // One evaluation prompt per batch of founders; batches run concurrently
  // within the in-flight limit and are reassembled in input order.
  BitRow answer_batch(const std::string& question, std::span<const std::string> profiles) override {
    std::vector<std::future<BitRow>> parts;
    for (std::size_t start = 0; start < profiles.size(); start += config_.batch_size) {
      const auto chunk = profiles.subspan(start, std::min(config_.batch_size, profiles.size() - start));
      parts.push_back(std::async(std::launch::async, [this, &question, chunk] {
        const auto prompt = build_evaluation_prompt(question, chunk);
        return complete_with_retries(*this, prompt, config_.retries,
                                     [n = chunk.size()](const std::string& r) { return parse_answers(r, n); });
      }));
    }
    BitRow out;
    out.reserve(profiles.size());
    std::exception_ptr first_error;
    for (auto& part : parts) {
      try {
        const auto answers = part.get();
        out.insert(out.end(), answers.begin(), answers.end());
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
  }

  const WireConfig& config() const { return config_; }

 private:
  struct Slot {
    explicit Slot(std::counting_semaphore<kMaxParallelism>& s) : sem(s) { sem.acquire(); }
    ~Slot() { sem.release(); }
    std::counting_semaphore<kMaxParallelism>& sem;
  };

  static std::string extract_content(const std::string& body) {
    try {
      const auto j = json::parse(body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw MalformedResponse(std::string("unexpected completion payload: ") + e.what(), body);
    }
  }

  WireConfig config_;
  std::string api_key_;
  std::unique_ptr<std::counting_semaphore<kMaxParallelism>> slots_;
};

}  // namespace rrf
