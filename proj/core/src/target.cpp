#include "harvest/target.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "harvest/error.hpp"
#include "harvest/url.hpp"

namespace harvest {

std::string_view to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::Image: return "image";
    case LinkKind::FullText: return "full_text";
    case LinkKind::Other: return "other";
  }
  return "other";
}

std::string_view to_string(MatchScope scope) {
  switch (scope) {
    case MatchScope::UrlOnly: return "url_only";
    case MatchScope::AnchorTextOnly: return "anchor_text_only";
    case MatchScope::Both: return "both";
  }
  return "url_only";
}

std::optional<LinkKind> parse_link_kind(std::string_view s) {
  if (s == "image") return LinkKind::Image;
  if (s == "full_text") return LinkKind::FullText;
  if (s == "other") return LinkKind::Other;
  return std::nullopt;
}

std::optional<MatchScope> parse_match_scope(std::string_view s) {
  if (s == "url_only") return MatchScope::UrlOnly;
  if (s == "anchor_text_only") return MatchScope::AnchorTextOnly;
  if (s == "both") return MatchScope::Both;
  return std::nullopt;
}

namespace {

void check_criterion(const Criterion& c, const std::string& prefix, std::vector<Violation>& out) {
  if (c.param_count < 0) {
    out.push_back({prefix + "param_count", "param_count must be ≥ 0"});
  } else if (!c.separator.empty() && c.param_count < 1) {
    out.push_back({prefix + "param_count", "param_count must be ≥ 1 when separator set"});
  }
}

bool valid_tag_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
  });
}

}  // namespace

std::vector<Violation> validate_target(const HarvestTarget& t) {
  std::vector<Violation> out;
  if (t.id.empty()) out.push_back({"id", "id must be non-empty"});
  if (t.content_type.empty()) out.push_back({"content_type", "content_type must be non-empty"});
  if (!parse_http_url(t.start_url)) {
    out.push_back({"start_url", "start_url must be an absolute http(s) URL"});
  }
  if (t.depth < 0) out.push_back({"depth", "depth must be ≥ 0"});
  check_criterion(t.paging_criterion, "paging_criterion.", out);
  if (t.title_criterion) check_criterion(t.title_criterion->criterion, "title_criterion.", out);
  if (!valid_tag_name(t.focus_point.tag_name)) {
    out.push_back({"focus_point.tag_name", "tag_name must be non-empty ASCII letters/digits"});
  }
  if (t.focus_point.ordinal < 1) out.push_back({"focus_point.ordinal", "ordinal must be ≥ 1"});
  for (std::size_t i = 0; i < t.content_link_rules.size(); ++i) {
    check_criterion(t.content_link_rules[i].criterion,
                    "content_link_rules[" + std::to_string(i) + "].", out);
  }
  if (t.reharvest_period.count() <= 0) {
    out.push_back({"reharvest_period_s", "reharvest_period must be > 0"});
  }
  if (t.max_pages < 1) out.push_back({"max_pages", "max_pages must be ≥ 1"});
  return out;
}

std::vector<Violation> validate_targets(std::span<const HarvestTarget> targets) {
  std::vector<Violation> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::string prefix = "[" + std::to_string(i) + "].";
    for (auto& v : validate_target(targets[i])) out.push_back({prefix + v.field, v.message});
    if (!targets[i].id.empty() && !ids.insert(targets[i].id).second) {
      out.push_back({prefix + "id", "duplicate id \"" + targets[i].id + "\""});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON mapping

namespace {

template <class Json>
Json criterion_fields(const Criterion& c) {
  Json j = Json::object();
  j["keywords"] = c.keywords;
  j["separator"] = c.separator;
  j["param_count"] = c.param_count;
  j["scope"] = std::string(to_string(c.scope));
  return j;
}

template <class Json>
Json rule_to_json(const LinkRule& r) {
  Json j = Json::object();
  j["kind"] = std::string(to_string(r.kind));
  const Json fields = criterion_fields<Json>(r.criterion);
  for (auto it = fields.begin(); it != fields.end(); ++it) j[it.key()] = *it;
  return j;
}

template <class Json>
Json target_to_json(const HarvestTarget& t) {
  Json j = Json::object();
  j["id"] = t.id;
  j["institution_id"] = t.institution_id;
  j["content_type"] = t.content_type;
  j["start_url"] = t.start_url;
  j["depth"] = t.depth;
  j["paging_criterion"] = criterion_fields<Json>(t.paging_criterion);
  j["title_criterion"] = t.title_criterion ? rule_to_json<Json>(*t.title_criterion) : Json(nullptr);
  j["focus_point"] = Json{{"tag_name", t.focus_point.tag_name}, {"ordinal", t.focus_point.ordinal}};
  Json rules = Json::array();
  for (const auto& r : t.content_link_rules) rules.push_back(rule_to_json<Json>(r));
  j["content_link_rules"] = std::move(rules);
  j["reharvest_period_s"] = static_cast<std::int64_t>(t.reharvest_period.count());
  j["max_pages"] = t.max_pages;
  j["enabled"] = t.enabled;
  return j;
}

// Strict object reader: every expected key present with the right type, and
// no unexpected keys.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
  }

  const nlohmann::json& require(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) fail(path_, std::string("missing field \"") + key + "\"");
    return *it;
  }

  const nlohmann::json* optional(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string string(const char* key) {
    const auto& v = require(key);
    if (!v.is_string()) fail(where(key), "expected a string");
    return v.get<std::string>();
  }

  std::int64_t integer(const char* key, std::int64_t lo, std::int64_t hi) {
    const auto& v = require(key);
    if (!v.is_number_integer()) fail(where(key), "expected an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(hi)) {
      fail(where(key), "integer out of range");
    }
    const auto n = v.get<std::int64_t>();
    if (n < lo || n > hi) fail(where(key), "integer out of range");
    return n;
  }

  int int32(const char* key) {
    return static_cast<int>(
        integer(key, std::numeric_limits<int>::min(), std::numeric_limits<int>::max()));
  }

  bool boolean(const char* key) {
    const auto& v = require(key);
    if (!v.is_boolean()) fail(where(key), "expected a boolean");
    return v.get<bool>();
  }

  std::vector<std::string> strings(const char* key) {
    const auto& v = require(key);
    if (!v.is_array()) fail(where(key), "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) fail(where(key), "expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::string where(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) fail(path_, "unknown field \"" + it.key() + "\"");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_criterion_fields(ObjectReader& r, const std::string& path, Criterion& c) {
  c.keywords = r.strings("keywords");
  c.separator = r.string("separator");
  c.param_count = r.int32("param_count");
  const auto scope = r.string("scope");
  auto parsed = parse_match_scope(scope);
  if (!parsed) ObjectReader::fail(path + ".scope", "unknown scope \"" + scope + "\"");
  c.scope = *parsed;
}

Criterion criterion_from_json(const nlohmann::json& j, const std::string& path) {
  ObjectReader r(j, path);
  Criterion c;
  read_criterion_fields(r, path, c);
  r.finish();
  return c;
}

LinkRule rule_from_json(const nlohmann::json& j, const std::string& path) {
  ObjectReader r(j, path);
  LinkRule rule;
  const auto kind = r.string("kind");
  auto parsed = parse_link_kind(kind);
  if (!parsed) ObjectReader::fail(path + ".kind", "unknown kind \"" + kind + "\"");
  rule.kind = *parsed;
  read_criterion_fields(r, path, rule.criterion);
  r.finish();
  return rule;
}

HarvestTarget target_from_json(const nlohmann::json& j, const std::string& path) {
  ObjectReader r(j, path);
  HarvestTarget t;
  t.id = r.string("id");
  t.institution_id = r.string("institution_id");
  t.content_type = r.string("content_type");
  t.start_url = r.string("start_url");
  t.depth = r.int32("depth");
  t.paging_criterion = criterion_from_json(r.require("paging_criterion"), path + ".paging_criterion");
  if (const auto* title = r.optional("title_criterion")) {
    t.title_criterion = rule_from_json(*title, path + ".title_criterion");
  }
  {
    const std::string fp_path = path + ".focus_point";
    ObjectReader fp(r.require("focus_point"), fp_path);
    t.focus_point.tag_name = fp.string("tag_name");
    t.focus_point.ordinal = fp.int32("ordinal");
    fp.finish();
  }
  const auto& rules = r.require("content_link_rules");
  if (!rules.is_array()) ObjectReader::fail(path + ".content_link_rules", "expected an array");
  for (std::size_t i = 0; i < rules.size(); ++i) {
    t.content_link_rules.push_back(
        rule_from_json(rules[i], path + ".content_link_rules[" + std::to_string(i) + "]"));
  }
  t.reharvest_period = std::chrono::seconds(r.integer(
      "reharvest_period_s", std::numeric_limits<std::int64_t>::min(), std::numeric_limits<std::int64_t>::max()));
  t.max_pages = r.int32("max_pages");
  t.enabled = r.boolean("enabled");
  r.finish();
  return t;
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view doc, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  const std::size_t stop = std::min(byte > 0 ? byte - 1 : 0, doc.size());
  for (std::size_t i = 0; i < stop; ++i) {
    if (doc[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

void to_json(nlohmann::json& j, const HarvestTarget& target) { j = target_to_json<nlohmann::json>(target); }

void from_json(const nlohmann::json& j, HarvestTarget& target) { target = target_from_json(j, "target"); }

void to_json(nlohmann::json& j, const Violation& v) { j = {{"field", v.field}, {"message", v.message}}; }

std::vector<HarvestTarget> parse_config(std::string_view document) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(document.begin(), document.end());
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = line_and_column(document, e.byte);
    throw ConfigError("syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                          ": " + e.what(),
                      line, col);
  }
  if (!root.is_array()) throw ConfigError("configuration must be a JSON array of targets");

  std::vector<HarvestTarget> targets;
  targets.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    targets.push_back(target_from_json(root[i], "[" + std::to_string(i) + "]"));
  }
  const auto violations = validate_targets(targets);
  if (!violations.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& v : violations) msg += "\n  " + v.field + ": " + v.message;
    throw ConfigError(msg);
  }
  return targets;
}

std::string serialize_config(std::span<const HarvestTarget> targets) {
  nlohmann::ordered_json root = nlohmann::ordered_json::array();
  for (const auto& t : targets) root.push_back(target_to_json<nlohmann::ordered_json>(t));
  return root.dump(2, ' ', false, nlohmann::ordered_json::error_handler_t::replace) + "\n";
}

}  // namespace harvest
