#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

namespace badx {

struct HttpResponse {
  int status = 0;  // 0 = transport failure (connect/read error)
  std::string body;
};

// Backoff schedule for 429/5xx/transport failures: attempt k (0-based)
// sleeps base_delay_ms * 2^k, equal-jittered, before retrying.
struct RetryPolicy {
  int max_attempts = 5;
  int base_delay_ms = 1000;
  std::uint64_t jitter_seed = 42;
  // Injected for tests; nullptr sleeps for real.
  std::function<void(int /*ms*/)> sleeper;
};

// One-shot JSON POST. url = scheme://host[:port][/path]. Returns status 0
// (not an exception) on transport failure so the retry wrapper can decide.
HttpResponse http_post_json(const std::string& url, const std::string& body,
                            const std::map<std::string, std::string>& headers);

// Retrying POST. Retries transport failures, 429 and 5xx per the policy and
// returns the final response; all other statuses return immediately.
// on_attempt sees every attempt's response, in order (transcript hook).
HttpResponse http_post_json_with_retry(
    const std::string& url, const std::string& body,
    const std::map<std::string, std::string>& headers,
    const RetryPolicy& policy,
    const std::function<void(const HttpResponse&)>& on_attempt = {});

}  // namespace badx
