#include "harvest/url.hpp"

#include <algorithm>
#include <charconv>

namespace harvest {

namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_hex(char c) { return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F'); }

int hex_value(char c) {
  if (is_digit(c)) return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return c - 'A' + 10;
}

char to_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }
char to_upper(char c) { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), to_lower);
  return out;
}

bool is_unreserved(char c) {
  return is_alpha(c) || is_digit(c) || c == '-' || c == '.' || c == '_' || c == '~';
}

// Bytes that can never appear literally in a URL.
bool must_escape(unsigned char c) {
  if (c <= 0x20 || c >= 0x7F) return true;
  switch (c) {
    case '"': case '<': case '>': case '\\': case '^': case '`': case '{': case '|': case '}':
      return true;
    default:
      return false;
  }
}

void append_escape(std::string& out, unsigned char c) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  out += '%';
  out += kHex[c >> 4];
  out += kHex[c & 0xF];
}

// Escapes illegal bytes and stray '%'. When `path` is set, escapes of
// unreserved characters are decoded and the rest uppercased; otherwise
// existing escapes are left byte-for-byte.
std::string canonical_component(std::string_view in, bool path) {
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto c = static_cast<unsigned char>(in[i]);
    if (c == '%') {
      if (i + 2 < in.size() && is_hex(in[i + 1]) && is_hex(in[i + 2])) {
        if (path) {
          const char decoded = static_cast<char>(hex_value(in[i + 1]) * 16 + hex_value(in[i + 2]));
          if (is_unreserved(decoded)) {
            out += decoded;
          } else {
            out += '%';
            out += to_upper(in[i + 1]);
            out += to_upper(in[i + 2]);
          }
        } else {
          out.append(in.substr(i, 3));
        }
        i += 2;
      } else {
        append_escape(out, c);
      }
    } else if (must_escape(c)) {
      append_escape(out, c);
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

// RFC 3986 section 5.2.4.
std::string remove_dot_segments(std::string_view input) {
  std::string in(input);
  std::string out;
  while (!in.empty()) {
    if (in.starts_with("../")) {
      in.erase(0, 3);
    } else if (in.starts_with("./")) {
      in.erase(0, 2);
    } else if (in.starts_with("/./")) {
      in.erase(0, 2);
    } else if (in == "/.") {
      in = "/";
    } else if (in.starts_with("/../") || in == "/..") {
      in = in == "/.." ? "/" : in.substr(3);
      const auto slash = out.rfind('/');
      out.erase(slash == std::string::npos ? 0 : slash);
    } else if (in == "." || in == "..") {
      in.clear();
    } else {
      const auto next = in.find('/', in.front() == '/' ? 1 : 0);
      const auto seg_end = next == std::string::npos ? in.size() : next;
      out.append(in, 0, seg_end);
      in.erase(0, seg_end);
    }
  }
  return out;
}

// Generic split of a URI reference (RFC 3986 appendix B).
struct Reference {
  std::optional<std::string> scheme;
  std::optional<std::string> authority;
  std::string path;
  std::optional<std::string> query;
};

Reference split_reference(std::string_view s) {
  Reference r;
  std::size_t i = 0;
  // scheme
  if (!s.empty() && is_alpha(s[0])) {
    std::size_t j = 1;
    while (j < s.size() && (is_alpha(s[j]) || is_digit(s[j]) || s[j] == '+' || s[j] == '-' || s[j] == '.')) ++j;
    if (j < s.size() && s[j] == ':') {
      r.scheme = lowercase(s.substr(0, j));
      i = j + 1;
    }
  }
  // drop the fragment up front
  const auto hash = s.find('#', i);
  if (hash != std::string_view::npos) s = s.substr(0, hash);
  if (s.substr(i).starts_with("//")) {
    const auto start = i + 2;
    auto end = s.find_first_of("/?", start);
    if (end == std::string_view::npos) end = s.size();
    r.authority = std::string(s.substr(start, end - start));
    i = end;
  }
  auto q = s.find('?', i);
  if (q == std::string_view::npos) {
    r.path = std::string(s.substr(i));
  } else {
    r.path = std::string(s.substr(i, q - i));
    r.query = std::string(s.substr(q + 1));
  }
  return r;
}

std::string merge_paths(const Url& base, const std::string& ref_path) {
  const auto slash = base.path.rfind('/');
  if (slash == std::string::npos) return "/" + ref_path;
  return base.path.substr(0, slash + 1) + ref_path;
}

bool valid_host_char(char c) { return is_alpha(c) || is_digit(c) || c == '-' || c == '.' || c == '_'; }

// Fills userinfo/host/port of `out` from an authority. False if invalid.
bool parse_authority(std::string_view authority, Url& out) {
  const auto at = authority.rfind('@');
  if (at != std::string_view::npos) {
    out.userinfo = canonical_component(authority.substr(0, at), false);
    authority.remove_prefix(at + 1);
  } else {
    out.userinfo.clear();
  }
  std::string_view host = authority;
  std::string_view port;
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) return false;
    host = authority.substr(0, close + 1);
    const auto rest = authority.substr(close + 1);
    if (!rest.empty()) {
      if (rest.front() != ':') return false;
      port = rest.substr(1);
    }
    for (char c : host.substr(1, host.size() - 2)) {
      if (!is_hex(c) && c != ':' && c != '.') return false;
    }
    if (host.size() <= 2) return false;
  } else {
    const auto colon = authority.rfind(':');
    if (colon != std::string_view::npos) {
      host = authority.substr(0, colon);
      port = authority.substr(colon + 1);
    }
    if (host.empty() || !std::all_of(host.begin(), host.end(), valid_host_char)) return false;
  }
  out.host = lowercase(host);
  out.port.reset();
  if (!port.empty()) {
    if (!std::all_of(port.begin(), port.end(), is_digit) || port.size() > 5) return false;
    unsigned value = 0;
    std::from_chars(port.data(), port.data() + port.size(), value);
    if (value > 65535) return false;
    const unsigned default_port = out.scheme == "https" ? 443 : 80;
    if (value != default_port) out.port = static_cast<std::uint16_t>(value);
  }
  return true;
}

// Browsers drop tab/CR/LF anywhere and C0 controls/space at either end.
std::string strip_tabs_and_space(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != '\t' && c != '\n' && c != '\r') out += c;
  }
  auto is_edge = [](char c) { return static_cast<unsigned char>(c) <= 0x20; };
  auto first = std::find_if_not(out.begin(), out.end(), is_edge);
  auto last = std::find_if_not(out.rbegin(), out.rend(), is_edge).base();
  if (first >= last) return {};
  return std::string(first, last);
}

bool is_http_scheme(const std::optional<std::string>& s) { return s && (*s == "http" || *s == "https"); }

std::optional<Url> finish(Url url, const std::string& raw_path, const std::optional<std::string>& raw_query) {
  std::string path = canonical_component(remove_dot_segments(raw_path), true);
  // decoding %2E may have produced new dot segments
  path = remove_dot_segments(path);
  if (path.empty() || path.front() != '/') path.insert(path.begin(), '/');
  url.path = std::move(path);
  if (raw_query) {
    url.query = canonical_component(*raw_query, false);
  } else {
    url.query.reset();
  }
  return url;
}

}  // namespace

std::string Url::authority() const {
  std::string out = host;
  if (port) out += ":" + std::to_string(*port);
  return out;
}

std::string Url::origin() const { return scheme + "://" + authority(); }

std::string Url::path_and_query() const {
  if (!query) return path;
  return path + "?" + *query;
}

std::uint16_t Url::effective_port() const {
  if (port) return *port;
  return scheme == "https" ? 443 : 80;
}

std::string Url::str() const {
  std::string out = scheme + "://";
  if (!userinfo.empty()) out += userinfo + "@";
  out += authority();
  out += path_and_query();
  return out;
}

std::optional<Url> parse_http_url(std::string_view absolute) {
  const std::string cleaned = strip_tabs_and_space(absolute);
  if (cleaned.empty()) return std::nullopt;
  const Reference ref = split_reference(cleaned);
  if (!is_http_scheme(ref.scheme) || !ref.authority) return std::nullopt;
  Url url;
  url.scheme = *ref.scheme;
  if (!parse_authority(*ref.authority, url)) return std::nullopt;
  return finish(std::move(url), ref.path, ref.query);
}

std::optional<std::string> normalize_url(std::string_view base_str, std::string_view href) {
  const auto base = parse_http_url(base_str);
  if (!base) return std::nullopt;
  const std::string cleaned = strip_tabs_and_space(href);
  if (cleaned.empty()) return std::nullopt;

  const Reference ref = split_reference(cleaned);
  Url target;
  std::string path;
  std::optional<std::string> query;

  if (ref.scheme) {
    if (!is_http_scheme(ref.scheme) || !ref.authority) return std::nullopt;
    target.scheme = *ref.scheme;
    if (!parse_authority(*ref.authority, target)) return std::nullopt;
    path = ref.path;
    query = ref.query;
  } else if (ref.authority) {
    target.scheme = base->scheme;
    if (!parse_authority(*ref.authority, target)) return std::nullopt;
    path = ref.path;
    query = ref.query;
  } else {
    target = *base;
    if (ref.path.empty()) {
      path = base->path;
      query = ref.query ? ref.query : base->query;
    } else {
      path = ref.path.front() == '/' ? ref.path : merge_paths(*base, ref.path);
      query = ref.query;
    }
  }
  auto url = finish(std::move(target), path, query);
  if (!url) return std::nullopt;
  return url->str();
}

std::optional<std::string> normalize_url(std::string_view absolute) {
  auto url = parse_http_url(absolute);
  if (!url) return std::nullopt;
  return url->str();
}

bool same_site(std::string_view a, std::string_view b) {
  auto ua = parse_http_url(a);
  auto ub = parse_http_url(b);
  if (!ua || !ub) return false;
  auto strip_www = [](std::string_view h) {
    if (h.starts_with("www.")) h.remove_prefix(4);
    return h;
  };
  return strip_www(ua->host) == strip_www(ub->host);
}

}  // namespace harvest
