#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "harvest/clock.hpp"
#include "harvest/error.hpp"
#include "harvest/url.hpp"

namespace harvest {

struct FetchPolicy {
  Duration per_host_delay = std::chrono::seconds(1);
  Duration timeout = std::chrono::seconds(30);
  int max_retries = 2;  // transport errors and 5xx only
  std::size_t max_body_bytes = 8u << 20;
  std::string user_agent = "focused-harvest/0.1";
  bool respect_robots = true;
};

// Header names are lowercased by transports.
using HeaderMap = std::map<std::string, std::string>;

struct HttpResponse {
  int status = 0;
  HeaderMap headers;
  std::string body;  // raw bytes, at most the requested limit

  const std::string* header(std::string_view name) const;
};

class TransportFailure : public Error {
 public:
  using Error::Error;
};

class TransportTimeout : public TransportFailure {
 public:
  using TransportFailure::TransportFailure;
};

/// One HTTP GET, no redirect handling. Throws TransportFailure.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse get(const Url& url, const HeaderMap& headers, Duration timeout,
                           std::size_t max_body_bytes) = 0;
};

/// HTTP/1.1 over cpp-httplib; https when built with OpenSSL.
class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse get(const Url& url, const HeaderMap& headers, Duration timeout,
                   std::size_t max_body_bytes) override;
};

enum class FetchErrorKind { RobotsDenied, Timeout, TooManyRedirects, TransportError, NonHtml };

std::string_view to_string(FetchErrorKind kind);

class FetchError : public Error {
 public:
  FetchError(FetchErrorKind kind, std::string url, const std::string& detail);
  FetchErrorKind kind() const noexcept { return kind_; }
  const std::string& url() const noexcept { return url_; }

 private:
  FetchErrorKind kind_;
  std::string url_;
};

struct FetchedPage {
  std::string requested_url;
  std::string final_url;
  int status = 0;
  std::string content_type;
  std::string body_text;  // UTF-8
  TimePoint fetched_at;
};

struct RequestLogEntry {
  std::string url;
  std::string host;  // authority
  TimePoint started_at;
  TimePoint completed_at;
  int status = 0;  // 0 on transport failure
};

/// Parsed robots.txt restricted to the group that applies to one user agent.
/// Matching is longest-pattern-wins between Allow and Disallow (Allow wins
/// ties), with '*' wildcards and a trailing '$' anchor.
class RobotsRules {
 public:
  static RobotsRules parse(std::string_view robots_txt, std::string_view user_agent);
  static RobotsRules allow_all() { return {}; }

  bool allowed(std::string_view path_and_query) const;

 private:
  struct Rule {
    std::string pattern;
    bool allow = false;
  };
  std::vector<Rule> rules_;
};

/// robots.txt cache for one harvest run, keyed by origin.
class RobotsCache {
 public:
  std::optional<RobotsRules> find(const std::string& origin) const;
  void store(const std::string& origin, RobotsRules rules);

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, RobotsRules> rules_;
};

/// HTTP retrieval with politeness. Requests to one host are serialized and
/// spaced by per_host_delay measured from the previous request's completion;
/// different hosts proceed in parallel. Thread-safe.
class Fetcher {
 public:
  Fetcher(HttpTransport& transport, Clock& clock, FetchPolicy policy = {});

  /// GETs an HTML page, following up to five redirects. Text is decoded from
  /// the Content-Type charset, else a <meta> charset in the first 1024 bytes,
  /// else UTF-8 with replacement characters, and truncated to max_body_bytes.
  /// Non-2xx final statuses are returned, not thrown. Throws FetchError.
  FetchedPage fetch(const std::string& url, RobotsCache& robots);

  /// Consults (and caches) /robots.txt of the URL's origin. Any failure to
  /// obtain robots.txt means allowed.
  bool check_robots(const Url& url, RobotsCache& robots);

  /// Called after every HTTP request made, robots.txt included.
  void set_request_observer(std::function<void(const RequestLogEntry&)> observer);

  const FetchPolicy& policy() const { return policy_; }
  Clock& clock() { return clock_; }

 private:
  struct HostSlot {
    std::mutex mu;
    std::optional<TimePoint> last_completed;
  };

  HttpResponse request(const Url& url, std::string_view accept);
  HttpResponse request_with_retries(const Url& url, std::string_view accept);
  HostSlot& slot(const std::string& authority);

  HttpTransport& transport_;
  Clock& clock_;
  FetchPolicy policy_;
  std::mutex slots_mu_;
  std::unordered_map<std::string, std::unique_ptr<HostSlot>> slots_;
  std::mutex observer_mu_;
  std::function<void(const RequestLogEntry&)> observer_;
};

/// Decodes bytes in the named charset to UTF-8. Invalid sequences and unknown
/// charsets produce U+FFFD / a UTF-8 interpretation respectively.
std::string decode_to_utf8(std::string_view bytes, std::string_view charset);

/// charset parameter of a Content-Type value, lowercased, or "".
std::string charset_from_content_type(std::string_view content_type);

/// <meta charset> or http-equiv content charset within the first 1024 bytes.
std::string charset_from_meta(std::string_view body);

}  // namespace harvest
