#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace harvest {

/// Components of an absolute http(s) URL. Produced only by parse_http_url,
/// which also canonicalizes, so str() of a parsed Url is always canonical.
struct Url {
  std::string scheme;  // "http" or "https"
  std::string userinfo;
  std::string host;
  std::optional<std::uint16_t> port;  // absent when it is the scheme default
  std::string path;                   // never empty, starts with '/'
  std::optional<std::string> query;   // without the leading '?'

  std::string str() const;
  // host[:port], the unit of per-host politeness.
  std::string authority() const;
  std::string origin() const;  // scheme://authority
  std::string path_and_query() const;
  std::uint16_t effective_port() const;
};

/// Canonicalizes an absolute http(s) URL. std::nullopt for anything else.
std::optional<Url> parse_http_url(std::string_view absolute);

/// Resolves href against base and canonicalizes the result:
///  - relative references and dot segments are resolved
///  - scheme and host lowercased, default ports (80/443) dropped
///  - the fragment is removed
///  - the query is kept byte-for-byte (order included); only characters that
///    cannot appear in a URL at all are percent-encoded
///  - percent-encoded unreserved characters in the path are decoded, other
///    escapes get uppercase hex
/// Returns std::nullopt ("ignore this link") for empty hrefs, non-http(s)
/// schemes and anything unparsable. The result is a fixed point.
std::optional<std::string> normalize_url(std::string_view base, std::string_view href);

/// normalize_url for an already-absolute URL.
std::optional<std::string> normalize_url(std::string_view absolute);

/// Host comparison used for the default title rule: case-insensitive, port
/// ignored, a leading "www." label ignored.
bool same_site(std::string_view url_a, std::string_view url_b);

}  // namespace harvest
