#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>

namespace pai {

struct HttpRequest {
  std::string method = "GET";
  std::string url;
  std::string body;
  std::string content_type;
  std::chrono::milliseconds timeout{30000};
};

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;
};

/// Injected network boundary. Implementations throw ErrorKind::Transport when
/// no HTTP response was obtained (refused connection, timeout, bad URL).
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport (http and https).
class HttplibTransport : public Transport {
 public:
  HttpResponse send(const HttpRequest& request) override;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
};

/// Resends on transport errors and on 429/502/503/504 until the attempts are
/// used up. The last response is returned (or the last error rethrown).
/// `sleep` defaults to std::this_thread::sleep_for.
HttpResponse send_with_retry(Transport& transport, const HttpRequest& request, const RetryPolicy& policy,
                             const std::function<void(std::chrono::milliseconds)>& sleep = {});

struct ParsedUrl {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 0;
  std::string target;  // path plus query, at least "/"
};
ParsedUrl parse_url(const std::string& url);

/// RFC 3986 percent-encoding; unreserved characters and those in `keep` pass through.
std::string url_encode(const std::string& text, const std::string& keep = "");

}  // namespace pai
