// The only translation unit that sees the bundled HTTP library.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <chrono>
#include <thread>

#include "badx/error.hpp"
#include "badx/hash.hpp"
#include "badx/http_transport.hpp"

namespace badx {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // leading '/'
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorKind::Config, "URL has no scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse http_post_json(const std::string& url, const std::string& body,
                            const std::map<std::string, std::string>& headers) {
  SplitUrl parts = split_url(url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(120, 0);
  client.set_write_timeout(30, 0);

  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  auto result = client.Post(parts.path, hdrs, body, "application/json");
  if (!result) return {0, httplib::to_string(result.error())};
  return {result->status, result->body};
}

HttpResponse http_post_json_with_retry(
    const std::string& url, const std::string& body,
    const std::map<std::string, std::string>& headers,
    const RetryPolicy& policy,
    const std::function<void(const HttpResponse&)>& on_attempt) {
  SplitMix64 jitter(policy.jitter_seed);
  HttpResponse last;
  int attempts = policy.max_attempts > 0 ? policy.max_attempts : 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    last = http_post_json(url, body, headers);
    if (on_attempt) on_attempt(last);
    bool retryable = last.status == 0 || last.status == 429 ||
                     (last.status >= 500 && last.status <= 599);
    if (!retryable || attempt + 1 == attempts) return last;

    // Equal jitter: half the exponential step fixed, half uniform random.
    double step = static_cast<double>(policy.base_delay_ms) *
                  static_cast<double>(1ull << attempt);
    int delay_ms =
        static_cast<int>(step / 2.0 + jitter.next_double() * step / 2.0);
    if (policy.sleeper)
      policy.sleeper(delay_ms);
    else
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
  }
  return last;
}

}  // namespace badx
