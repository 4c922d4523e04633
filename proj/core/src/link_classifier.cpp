#include "harvest/link_classifier.hpp"

#include <algorithm>

#include "harvest/url.hpp"

namespace harvest {

std::string_view to_string(LinkClass c) {
  switch (c) {
    case LinkClass::Paging: return "paging";
    case LinkClass::Title: return "title";
    case LinkClass::Ignore: return "ignore";
  }
  return "ignore";
}

namespace {

bool contains_ci(std::string_view haystack, std::string_view needle) {
  auto eq = [](char a, char b) {
    auto lower = [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; };
    return lower(a) == lower(b);
  };
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(), eq) != haystack.end();
}

bool keywords_match(const Anchor& anchor, const Criterion& c) {
  if (c.keywords.empty()) return true;
  return std::any_of(c.keywords.begin(), c.keywords.end(), [&](const std::string& kw) {
    switch (c.scope) {
      case MatchScope::UrlOnly: return contains_ci(anchor.href, kw);
      case MatchScope::AnchorTextOnly: return contains_ci(anchor.text, kw);
      case MatchScope::Both: return contains_ci(anchor.href, kw) || contains_ci(anchor.text, kw);
    }
    return false;
  });
}

bool structure_matches(const Anchor& anchor, const Criterion& c) {
  if (c.separator.empty()) return true;
  const auto url = parse_http_url(anchor.href);
  if (!url || !url->query) return false;
  std::string_view query = *url->query;
  int parts = 0;
  while (true) {
    const auto at = query.find(c.separator);
    const auto part = query.substr(0, at);
    if (!part.empty()) ++parts;
    if (at == std::string_view::npos) break;
    query.remove_prefix(at + c.separator.size());
  }
  return parts == c.param_count;
}

}  // namespace

bool match_criterion(const Anchor& anchor, const Criterion& criterion) {
  return keywords_match(anchor, criterion) && structure_matches(anchor, criterion);
}

LinkClass classify_link(const Anchor& anchor, int page_depth, const HarvestTarget& target) {
  if (page_depth >= target.depth) return LinkClass::Ignore;
  if (match_criterion(anchor, target.paging_criterion)) return LinkClass::Paging;
  const bool title = target.title_criterion ? match_criterion(anchor, target.title_criterion->criterion)
                                            : anchor.host_matches_target;
  return title ? LinkClass::Title : LinkClass::Ignore;
}

}  // namespace harvest
