#include "harvest/fetcher.hpp"

#include <iconv.h>

#include <algorithm>
#include <array>
#include <cerrno>

#include "harvest/html.hpp"

namespace harvest {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool is_redirect(int status) {
  return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

constexpr int kMaxRedirects = 5;
constexpr std::string_view kHtmlAccept = "text/html,application/xhtml+xml";

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

constexpr std::string_view kReplacement = "\xEF\xBF\xBD";

// Valid UTF-8 passes through; each invalid byte becomes U+FFFD.
std::string sanitize_utf8(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    const auto c = static_cast<unsigned char>(in[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if (c < 0x80) {
      out += static_cast<char>(c);
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2, cp = c & 0x1F, min = 0x80;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3, cp = c & 0x0F, min = 0x800;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4, cp = c & 0x07, min = 0x10000;
    }
    bool ok = len > 0 && i + len <= in.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(in[i + k]);
      if ((cc & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (ok && (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))) ok = false;
    if (ok) {
      out.append(in.substr(i, len));
      i += len;
    } else {
      out += kReplacement;
      ++i;
    }
  }
  return out;
}

// windows-1252 bytes 0x80..0x9F; all other bytes map to the same code point.
constexpr std::array<char16_t, 32> kCp1252High = {
    0x20AC, 0xFFFD, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0xFFFD, 0x017D, 0xFFFD, 0xFFFD, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0xFFFD, 0x017E, 0x0178};

std::string decode_cp1252(std::string_view in) {
  std::string out;
  out.reserve(in.size() + in.size() / 4);
  for (unsigned char c : in) {
    if (c >= 0x80 && c < 0xA0) {
      append_utf8(out, kCp1252High[c - 0x80]);
    } else {
      append_utf8(out, c);
    }
  }
  return out;
}

std::optional<std::string> decode_iconv(std::string_view in, const std::string& charset) {
  iconv_t cd = iconv_open("UTF-8", charset.c_str());
  if (cd == reinterpret_cast<iconv_t>(-1)) return std::nullopt;
  std::string out;
  std::string input(in);
  char* src = input.data();
  std::size_t src_left = input.size();
  std::array<char, 4096> buf{};
  while (src_left > 0) {
    char* dst = buf.data();
    std::size_t dst_left = buf.size();
    const std::size_t rc = iconv(cd, &src, &src_left, &dst, &dst_left);
    out.append(buf.data(), buf.size() - dst_left);
    if (rc == static_cast<std::size_t>(-1)) {
      if (errno == E2BIG) continue;
      // EILSEQ / EINVAL: replace one byte and resynchronize
      out += kReplacement;
      ++src;
      --src_left;
      iconv(cd, nullptr, nullptr, nullptr, nullptr);
    }
  }
  iconv_close(cd);
  return sanitize_utf8(out);
}

// Cuts at a code point boundary so the result is at most `limit` bytes.
void truncate_utf8(std::string& s, std::size_t limit) {
  if (s.size() <= limit) return;
  std::size_t cut = limit;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  s.resize(cut);
}

// '*' matches any run, a trailing '$' anchors at the end.
bool robots_pattern_matches(std::string_view pattern, std::string_view path) {
  bool anchored = false;
  if (!pattern.empty() && pattern.back() == '$') {
    anchored = true;
    pattern.remove_suffix(1);
  }
  // iterative wildcard match with backtracking to the last '*'
  std::size_t p = 0, s = 0;
  std::size_t star = std::string_view::npos, star_s = 0;
  while (true) {
    if (p == pattern.size()) {
      if (!anchored || s == path.size()) return true;
    } else if (pattern[p] == '*') {
      star = p++;
      star_s = s;
      continue;
    } else if (s < path.size() && pattern[p] == path[s]) {
      ++p, ++s;
      continue;
    }
    if (star == std::string_view::npos || star_s >= path.size()) return false;
    p = star + 1;
    s = ++star_s;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(FetchErrorKind kind) {
  switch (kind) {
    case FetchErrorKind::RobotsDenied: return "robots_denied";
    case FetchErrorKind::Timeout: return "timeout";
    case FetchErrorKind::TooManyRedirects: return "too_many_redirects";
    case FetchErrorKind::TransportError: return "transport_error";
    case FetchErrorKind::NonHtml: return "non_html";
  }
  return "transport_error";
}

FetchError::FetchError(FetchErrorKind kind, std::string url, const std::string& detail)
    : Error(std::string(to_string(kind)) + (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      url_(std::move(url)) {}

const std::string* HttpResponse::header(std::string_view name) const {
  auto it = headers.find(lowercase(name));
  return it == headers.end() ? nullptr : &it->second;
}

std::string charset_from_content_type(std::string_view content_type) {
  const std::string lower = lowercase(content_type);
  const auto at = lower.find("charset=");
  if (at == std::string::npos) return {};
  std::string_view v = std::string_view(lower).substr(at + 8);
  v = v.substr(0, v.find(';'));
  v = trim(v);
  if (!v.empty() && (v.front() == '"' || v.front() == '\'')) v.remove_prefix(1);
  if (!v.empty() && (v.back() == '"' || v.back() == '\'')) v.remove_suffix(1);
  return std::string(trim(v));
}

std::string charset_from_meta(std::string_view body) {
  html::Tokenizer tk(body.substr(0, std::min<std::size_t>(body.size(), 1024)));
  while (auto tok = tk.next()) {
    if (tok->kind != html::TokenKind::StartTag || tok->name != "meta") continue;
    if (const auto* cs = tok->attribute("charset")) return lowercase(trim(*cs));
    const auto* equiv = tok->attribute("http-equiv");
    const auto* content = tok->attribute("content");
    if (equiv && content && lowercase(trim(*equiv)) == "content-type") {
      auto cs = charset_from_content_type(*content);
      if (!cs.empty()) return cs;
    }
  }
  return {};
}

std::string decode_to_utf8(std::string_view bytes, std::string_view charset) {
  const std::string cs = lowercase(trim(charset));
  if (cs.empty() || cs == "utf-8" || cs == "utf8" || cs == "unicode-1-1-utf-8") return sanitize_utf8(bytes);
  // Per the WHATWG encoding table these labels all mean windows-1252.
  static constexpr std::string_view kCp1252Labels[] = {
      "windows-1252", "cp1252", "x-cp1252", "iso-8859-1", "iso8859-1", "iso_8859-1", "latin1",
      "latin-1", "l1", "us-ascii", "ascii", "iso-ir-100", "cp819", "ibm819"};
  if (std::find(std::begin(kCp1252Labels), std::end(kCp1252Labels), cs) != std::end(kCp1252Labels)) {
    return decode_cp1252(bytes);
  }
  if (auto converted = decode_iconv(bytes, cs)) return *converted;
  return sanitize_utf8(bytes);
}

// ---------------------------------------------------------------------------
// robots.txt

RobotsRules RobotsRules::parse(std::string_view text, std::string_view user_agent) {
  struct Group {
    std::vector<std::string> agents;
    std::vector<Rule> rules;
  };
  std::vector<Group> groups;
  bool last_was_agent = false;

  while (!text.empty()) {
    auto eol = text.find_first_of("\r\n");
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    line = line.substr(0, line.find('#'));
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string field = lowercase(trim(line.substr(0, colon)));
    const std::string value(trim(line.substr(colon + 1)));
    if (field == "user-agent") {
      if (!last_was_agent || groups.empty()) groups.emplace_back();
      groups.back().agents.push_back(lowercase(value));
      last_was_agent = true;
    } else if (field == "allow" || field == "disallow") {
      last_was_agent = false;
      if (groups.empty()) continue;  // rules before any user-agent line
      if (value.empty()) continue;   // "Disallow:" allows everything
      groups.back().rules.push_back({value, field == "allow"});
    } else {
      last_was_agent = false;
    }
  }

  // The most specific group naming our agent wins; otherwise '*'.
  const std::string ua = lowercase(user_agent);
  std::size_t best_len = 0;
  for (const auto& g : groups) {
    for (const auto& a : g.agents) {
      if (a != "*" && !a.empty() && ua.find(a) != std::string::npos) best_len = std::max(best_len, a.size());
    }
  }
  RobotsRules out;
  for (const auto& g : groups) {
    const bool match = std::any_of(g.agents.begin(), g.agents.end(), [&](const std::string& a) {
      if (best_len == 0) return a == "*";
      return a != "*" && a.size() == best_len && ua.find(a) != std::string::npos;
    });
    if (match) out.rules_.insert(out.rules_.end(), g.rules.begin(), g.rules.end());
  }
  return out;
}

bool RobotsRules::allowed(std::string_view path_and_query) const {
  if (path_and_query == "/robots.txt") return true;
  std::size_t best = 0;
  bool verdict = true;
  bool any = false;
  for (const auto& r : rules_) {
    if (!robots_pattern_matches(r.pattern, path_and_query)) continue;
    const std::size_t len = r.pattern.size();
    if (!any || len > best || (len == best && r.allow)) {
      best = len;
      verdict = r.allow;
      any = true;
    }
  }
  return verdict;
}

std::optional<RobotsRules> RobotsCache::find(const std::string& origin) const {
  std::lock_guard lock(mu_);
  auto it = rules_.find(origin);
  if (it == rules_.end()) return std::nullopt;
  return it->second;
}

void RobotsCache::store(const std::string& origin, RobotsRules rules) {
  std::lock_guard lock(mu_);
  rules_.insert_or_assign(origin, std::move(rules));
}

// ---------------------------------------------------------------------------
// Fetcher

Fetcher::Fetcher(HttpTransport& transport, Clock& clock, FetchPolicy policy)
    : transport_(transport), clock_(clock), policy_(std::move(policy)) {}

void Fetcher::set_request_observer(std::function<void(const RequestLogEntry&)> observer) {
  std::lock_guard lock(observer_mu_);
  observer_ = std::move(observer);
}

Fetcher::HostSlot& Fetcher::slot(const std::string& authority) {
  std::lock_guard lock(slots_mu_);
  auto& s = slots_[authority];
  if (!s) s = std::make_unique<HostSlot>();
  return *s;
}

HttpResponse Fetcher::request(const Url& url, std::string_view accept) {
  HostSlot& host = slot(url.authority());
  std::lock_guard gate(host.mu);
  if (host.last_completed) clock_.sleep_until(*host.last_completed + policy_.per_host_delay);

  RequestLogEntry entry;
  entry.url = url.str();
  entry.host = url.authority();
  entry.started_at = clock_.now();
  HeaderMap headers{{"User-Agent", policy_.user_agent}, {"Accept", std::string(accept)}};
  auto finish = [&](int status) {
    entry.completed_at = clock_.now();
    entry.status = status;
    host.last_completed = entry.completed_at;
    std::function<void(const RequestLogEntry&)> observer;
    {
      std::lock_guard lock(observer_mu_);
      observer = observer_;
    }
    if (observer) observer(entry);
  };
  try {
    HttpResponse resp = transport_.get(url, headers, policy_.timeout, policy_.max_body_bytes);
    if (resp.body.size() > policy_.max_body_bytes) resp.body.resize(policy_.max_body_bytes);
    finish(resp.status);
    return resp;
  } catch (...) {
    finish(0);
    throw;
  }
}

HttpResponse Fetcher::request_with_retries(const Url& url, std::string_view accept) {
  const int attempts = 1 + std::max(0, policy_.max_retries);
  for (int attempt = 1;; ++attempt) {
    try {
      HttpResponse resp = request(url, accept);
      if (resp.status >= 500 && resp.status <= 599 && attempt < attempts) continue;
      return resp;
    } catch (const TransportFailure&) {
      if (attempt >= attempts) throw;
    }
  }
}

bool Fetcher::check_robots(const Url& url, RobotsCache& robots) {
  const std::string origin = url.origin();
  if (auto cached = robots.find(origin)) return cached->allowed(url.path_and_query());

  RobotsRules rules = RobotsRules::allow_all();
  try {
    auto current = parse_http_url(origin + "/robots.txt");
    for (int hop = 0; current && hop <= kMaxRedirects; ++hop) {
      HttpResponse resp = request(*current, "text/plain");
      if (is_redirect(resp.status)) {
        const auto* loc = resp.header("location");
        auto next = loc ? parse_http_url(normalize_url(current->str(), *loc).value_or("")) : std::nullopt;
        current = next;
        continue;
      }
      if (resp.status >= 200 && resp.status < 300) {
        rules = RobotsRules::parse(sanitize_utf8(resp.body), policy_.user_agent);
      }
      break;
    }
  } catch (const TransportFailure&) {
    // unreachable robots.txt: allowed
  }
  robots.store(origin, rules);
  return rules.allowed(url.path_and_query());
}

FetchedPage Fetcher::fetch(const std::string& url, RobotsCache& robots) {
  auto current = parse_http_url(url);
  if (!current) throw FetchError(FetchErrorKind::TransportError, url, "not an http(s) URL");

  for (int hop = 0;; ++hop) {
    if (policy_.respect_robots && !check_robots(*current, robots)) {
      throw FetchError(FetchErrorKind::RobotsDenied, current->str(), "disallowed by robots.txt");
    }
    HttpResponse resp;
    try {
      resp = request_with_retries(*current, kHtmlAccept);
    } catch (const TransportTimeout& e) {
      throw FetchError(FetchErrorKind::Timeout, current->str(), e.what());
    } catch (const TransportFailure& e) {
      throw FetchError(FetchErrorKind::TransportError, current->str(), e.what());
    }

    if (is_redirect(resp.status)) {
      const auto* loc = resp.header("location");
      if (!loc) throw FetchError(FetchErrorKind::TransportError, current->str(), "redirect without Location");
      if (hop >= kMaxRedirects) {
        throw FetchError(FetchErrorKind::TooManyRedirects, url, "more than 5 redirects");
      }
      auto next = normalize_url(current->str(), *loc);
      auto parsed = next ? parse_http_url(*next) : std::nullopt;
      if (!parsed) throw FetchError(FetchErrorKind::TransportError, current->str(), "bad redirect: " + *loc);
      current = std::move(parsed);
      continue;
    }

    FetchedPage page;
    page.requested_url = url;
    page.final_url = current->str();
    page.status = resp.status;
    page.fetched_at = clock_.now();
    if (const auto* ct = resp.header("content-type")) page.content_type = *ct;

    const std::string mime = lowercase(trim(std::string_view(page.content_type).substr(0, page.content_type.find(';'))));
    if (resp.status >= 200 && resp.status < 300 && !mime.empty() && mime != "text/html" &&
        mime != "application/xhtml+xml") {
      throw FetchError(FetchErrorKind::NonHtml, page.final_url, page.content_type);
    }

    std::string charset = charset_from_content_type(page.content_type);
    if (charset.empty()) charset = charset_from_meta(resp.body);
    page.body_text = decode_to_utf8(resp.body, charset);
    truncate_utf8(page.body_text, policy_.max_body_bytes);
    return page;
  }
}

}  // namespace harvest
