#include <httplib.h>

#include "harvest/fetcher.hpp"

namespace harvest {

HttpResponse HttplibTransport::get(const Url& url, const HeaderMap& headers, Duration timeout,
                                   std::size_t max_body_bytes) {
  httplib::Client client(url.origin());
  client.set_follow_location(false);
  client.set_url_encode(false);
  client.set_keep_alive(false);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers request_headers;
  for (const auto& [k, v] : headers) request_headers.emplace(k, v);

  HttpResponse out;
  bool truncated = false;
  auto on_response = [&](const httplib::Response& r) {
    out.status = r.status;
    for (const auto& [k, v] : r.headers) {
      std::string key = k;
      for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.headers.emplace(std::move(key), v);
    }
    return true;
  };
  auto on_data = [&](const char* data, std::size_t len) {
    const std::size_t room = max_body_bytes - out.body.size();
    out.body.append(data, std::min(room, len));
    if (len >= room) {
      truncated = true;
      return false;
    }
    return true;
  };

  auto result = client.Get(url.path_and_query(), request_headers, on_response, on_data);
  if (!result) {
    const auto err = result.error();
    if (err == httplib::Error::Canceled && truncated) return out;
    if (err == httplib::Error::ConnectionTimeout) {
      throw TransportTimeout("timed out connecting to " + url.authority());
    }
    if (err == httplib::Error::Read && out.status != 0) {
      // a read timeout after headers arrived
      throw TransportTimeout("timed out reading from " + url.authority());
    }
    throw TransportFailure(httplib::to_string(err) + " (" + url.authority() + ")");
  }
  return out;
}

}  // namespace harvest
