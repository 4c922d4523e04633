#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace harvest {

enum class LinkKind { Image, FullText, Other };

// Which text of an anchor a criterion's keywords are matched against.
enum class MatchScope { UrlOnly, AnchorTextOnly, Both };

std::string_view to_string(LinkKind kind);
std::string_view to_string(MatchScope scope);
std::optional<LinkKind> parse_link_kind(std::string_view s);
std::optional<MatchScope> parse_match_scope(std::string_view s);

// Seed values for HarvestTarget::content_type. Any non-empty tag is accepted.
namespace content_type {
inline constexpr std::string_view kInstitution = "institution";
inline constexpr std::string_view kPerson = "person";
inline constexpr std::string_view kPublication = "publication";
inline constexpr std::string_view kActivity = "activity";
inline constexpr std::string_view kNews = "news";
inline constexpr std::string_view kIpr = "ipr";
}  // namespace content_type

/// Keyword and query-structure matcher shared by the paging criterion and
/// every link rule.
///
/// keywords are case-insensitive substrings; an empty list matches anything.
/// When separator is non-empty the href's query must split into exactly
/// param_count non-empty parts.
struct Criterion {
  std::vector<std::string> keywords;
  std::string separator;
  int param_count = 0;
  MatchScope scope = MatchScope::UrlOnly;

  bool operator==(const Criterion&) const = default;
};

using PagingCriterion = Criterion;

struct LinkRule {
  LinkKind kind = LinkKind::Other;
  Criterion criterion;

  bool operator==(const LinkRule&) const = default;
};

/// Address of the content box: the ordinal-th `tag_name` start tag counted
/// from the top of the page (nested occurrences included).
struct FocusPoint {
  std::string tag_name;
  int ordinal = 1;

  bool operator==(const FocusPoint&) const = default;
};

struct HarvestTarget {
  std::string id;
  std::string institution_id;
  std::string content_type;
  std::string start_url;
  int depth = 0;
  PagingCriterion paging_criterion;
  std::optional<LinkRule> title_criterion;
  FocusPoint focus_point;
  std::vector<LinkRule> content_link_rules;
  std::chrono::seconds reharvest_period{86400};
  int max_pages = 1000;
  bool enabled = true;

  bool operator==(const HarvestTarget&) const = default;
};

struct Violation {
  std::string field;
  std::string message;

  bool operator==(const Violation&) const = default;
};

/// Every broken invariant of one target, in field order. Empty means valid.
std::vector<Violation> validate_target(const HarvestTarget& target);

/// validate_target over a set, each violation's field prefixed with the
/// target's index, plus duplicate-id violations.
std::vector<Violation> validate_targets(std::span<const HarvestTarget> targets);

/// Parses the JSON configuration document. Rejects the whole document on the
/// first syntax error, schema error, duplicate id or invalid target.
/// Throws ConfigError.
std::vector<HarvestTarget> parse_config(std::string_view document);

std::string serialize_config(std::span<const HarvestTarget> targets);

// JSON mapping of the configuration schema, shared with the HTTP API.
// from_json throws ConfigError for schema problems (no validation).
void to_json(nlohmann::json& j, const HarvestTarget& target);
void from_json(const nlohmann::json& j, HarvestTarget& target);
void to_json(nlohmann::json& j, const Violation& v);

}  // namespace harvest
