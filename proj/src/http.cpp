#include "pai/http.hpp"

#include <httplib.h>

#include <cctype>
#include <regex>
#include <thread>

#include "pai/error.hpp"

namespace pai {

ParsedUrl parse_url(const std::string& url) {
  static const std::regex re(R"(^(https?)://([^/:?#]+)(?::(\d+))?([^#]*)$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(ErrorKind::Transport, "unsupported URL: " + url);
  ParsedUrl out;
  out.scheme = m[1].str();
  for (auto& c : out.scheme) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  out.host = m[2].str();
  out.port = m[3].matched ? std::stoi(m[3].str()) : (out.scheme == "https" ? 443 : 80);
  out.target = m[4].str();
  if (out.target.empty() || out.target[0] != '/') out.target = "/" + out.target;
  return out;
}

std::string url_encode(const std::string& text, const std::string& keep) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || keep.find(char(c)) != std::string::npos) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

HttpResponse HttplibTransport::send(const HttpRequest& request) {
  const ParsedUrl url = parse_url(request.url);
  httplib::Client client(url.scheme + "://" + url.host + ":" + std::to_string(url.port));
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  client.set_follow_location(true);

  httplib::Result res = request.method == "POST"
                            ? client.Post(url.target, request.body, request.content_type)
                            : client.Get(url.target);
  if (!res) {
    throw Error(ErrorKind::Transport,
                request.method + " " + request.url + " failed: " + httplib::to_string(res.error()));
  }
  HttpResponse out;
  out.status = res->status;
  out.body = res->body;
  out.content_type = res->get_header_value("Content-Type");
  return out;
}

HttpResponse send_with_retry(Transport& transport, const HttpRequest& request, const RetryPolicy& policy,
                             const std::function<void(std::chrono::milliseconds)>& sleep) {
  auto pause = sleep ? sleep : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  const int attempts = std::max(1, policy.max_attempts);
  auto backoff = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    const bool last = attempt >= attempts;
    try {
      HttpResponse res = transport.send(request);
      const bool transient = res.status == 429 || res.status == 502 || res.status == 503 || res.status == 504;
      if (!transient || last) return res;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Transport || last) throw;
    }
    pause(backoff);
    backoff = std::chrono::milliseconds(static_cast<long>(backoff.count() * policy.multiplier));
  }
}

}  // namespace pai
