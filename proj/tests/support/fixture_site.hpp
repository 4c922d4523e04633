#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "harvest/fetcher.hpp"
#include "harvest/target.hpp"

namespace httplib {
class Server;
}

namespace harvest::testing {

std::filesystem::path fixture_dir();
std::string read_bytes(const std::filesystem::path& path);

struct FixturePage {
  std::string body;  // raw bytes as served
  std::string content_type;
};

/// The committed fixture site: path-and-query -> page.
class FixtureSite {
 public:
  static FixtureSite load(const std::filesystem::path& dir = fixture_dir() / "site");

  const FixturePage* find(const std::string& path_and_query) const;
  const std::string& start_path() const { return start_path_; }
  const std::map<std::string, FixturePage>& pages() const { return pages_; }
  void put(std::string path_and_query, FixturePage page) { pages_[std::move(path_and_query)] = std::move(page); }

 private:
  std::map<std::string, FixturePage> pages_;
  std::string start_path_;
};

/// committed manifest.json with "{origin}"-relative URLs expanded.
nlohmann::json load_manifest(const std::string& origin);

/// targets.json with "{origin}" substituted, parsed by parse_config.
std::vector<HarvestTarget> load_targets(const std::string& origin);
std::string targets_document(const std::string& origin);

/// "/x" -> origin + "/x"; absolute URLs unchanged.
std::string expand(const std::string& origin, const std::string& url);

/// In-memory transport. Requests for `authority` are answered from a
/// FixtureSite (404 when absent); any other host fails like an unreachable
/// server. Per-URL handlers take precedence.
class FixtureTransport final : public HttpTransport {
 public:
  using Handler = std::function<HttpResponse(const Url&)>;

  FixtureTransport(FixtureSite site, std::string authority);

  HttpResponse get(const Url& url, const HeaderMap& headers, Duration timeout, std::size_t max_body_bytes) override;

  void on(const std::string& url, Handler handler);
  std::vector<std::string> requested() const;
  std::vector<HeaderMap> request_headers() const;

 private:
  FixtureSite site_;
  std::string authority_;
  std::map<std::string, Handler> handlers_;
  mutable std::mutex mu_;
  std::vector<std::string> requested_;
  std::vector<HeaderMap> headers_;
};

/// The fixture site on a real loopback HTTP server, port chosen by the OS.
class FixtureServer {
 public:
  explicit FixtureServer(FixtureSite site = FixtureSite::load());
  ~FixtureServer();

  FixtureServer(const FixtureServer&) = delete;
  FixtureServer& operator=(const FixtureServer&) = delete;

  std::string origin() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::string authority() const { return "127.0.0.1:" + std::to_string(port_); }
  int port() const { return port_; }

 private:
  FixtureSite site_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
};

/// Request log collected through Fetcher::set_request_observer.
class RequestLog {
 public:
  void attach(Fetcher& fetcher);
  std::vector<RequestLogEntry> entries() const;

 private:
  mutable std::mutex mu_;
  std::vector<RequestLogEntry> entries_;
};

}  // namespace harvest::testing
