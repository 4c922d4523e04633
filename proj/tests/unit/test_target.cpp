#include <doctest.h>

#include <nlohmann/json.hpp>

#include "generators.hpp"
#include "harvest/error.hpp"
#include "harvest/target.hpp"
#include "sample_target.hpp"

using namespace harvest;
using harvest::testing::sample_target;

TEST_CASE("a well-formed target has no violations") { CHECK(validate_target(sample_target()).empty()); }

TEST_CASE("negative depth is reported") {
  auto t = sample_target();
  t.depth = -1;
  const auto v = validate_target(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "depth");
  CHECK(v[0].message == "depth must be ≥ 0");
}

TEST_CASE("separator without a parameter count is reported") {
  auto t = sample_target();
  t.paging_criterion.separator = "&";
  t.paging_criterion.param_count = 0;
  const auto v = validate_target(t);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "paging_criterion.param_count");
  CHECK(v[0].message == "param_count must be ≥ 1 when separator set");
}

TEST_CASE("violations come in field order") {
  auto t = sample_target();
  t.max_pages = 0;
  t.start_url = "ftp://ex.org/";
  t.id = "";
  t.focus_point.ordinal = 0;
  const auto v = validate_target(t);
  REQUIRE(v.size() == 4);
  CHECK(v[0].field == "id");
  CHECK(v[1].field == "start_url");
  CHECK(v[2].field == "focus_point.ordinal");
  CHECK(v[3].field == "max_pages");
}

namespace {

// Each mutation breaks exactly one invariant and names the field it breaks.
struct Mutation {
  const char* field;
  void (*apply)(HarvestTarget&);
};

const Mutation kMutations[] = {
    {"id", [](HarvestTarget& t) { t.id.clear(); }},
    {"content_type", [](HarvestTarget& t) { t.content_type.clear(); }},
    {"start_url", [](HarvestTarget& t) { t.start_url = "mailto:x@ex.org"; }},
    {"start_url", [](HarvestTarget& t) { t.start_url = "/relative/only"; }},
    {"depth", [](HarvestTarget& t) { t.depth = -3; }},
    {"paging_criterion.param_count", [](HarvestTarget& t) { t.paging_criterion.separator = ";"; }},
    {"paging_criterion.param_count", [](HarvestTarget& t) { t.paging_criterion.param_count = -1; }},
    {"title_criterion.param_count",
     [](HarvestTarget& t) { t.title_criterion = LinkRule{LinkKind::Other, {{}, "&", 0, MatchScope::Both}}; }},
    {"focus_point.tag_name", [](HarvestTarget& t) { t.focus_point.tag_name = ""; }},
    {"focus_point.tag_name", [](HarvestTarget& t) { t.focus_point.tag_name = "my-box"; }},
    {"focus_point.ordinal", [](HarvestTarget& t) { t.focus_point.ordinal = 0; }},
    {"content_link_rules[1].param_count", [](HarvestTarget& t) { t.content_link_rules[1].criterion.separator = "&"; }},
    {"reharvest_period_s", [](HarvestTarget& t) { t.reharvest_period = std::chrono::seconds(0); }},
    {"max_pages", [](HarvestTarget& t) { t.max_pages = 0; }},
};

HarvestTarget random_valid_target(harvest::testing::Rng& rng, int index) {
  std::uniform_int_distribution<int> small(0, 4);
  auto t = sample_target();
  t.id = "target-" + std::to_string(index);
  t.institution_id = small(rng) ? "inst-" + std::to_string(small(rng)) : "";
  static const std::string_view kTypes[] = {content_type::kInstitution, content_type::kPerson,
                                            content_type::kPublication, content_type::kActivity,
                                            content_type::kNews,        content_type::kIpr};
  t.content_type = std::string(kTypes[small(rng) % 6]);
  t.start_url = "https://site" + std::to_string(small(rng)) + ".example/p?x=" + std::to_string(index);
  t.depth = small(rng);
  t.paging_criterion.keywords = {"page=", "Next \"»\""};
  if (small(rng) > 2) {
    t.paging_criterion.separator = "&";
    t.paging_criterion.param_count = 1 + small(rng);
  }
  t.paging_criterion.scope = static_cast<MatchScope>(small(rng) % 3);
  if (small(rng) > 1) t.title_criterion = LinkRule{LinkKind::Other, {{"view"}, "", 0, MatchScope::Both}};
  t.focus_point = {small(rng) % 2 ? "table" : "DIV", 1 + small(rng)};
  t.content_link_rules.resize(small(rng) % 3);
  t.reharvest_period = std::chrono::seconds(1 + small(rng) * 3600);
  t.max_pages = 1 + small(rng) * 100;
  t.enabled = small(rng) % 2;
  return t;
}

}  // namespace

TEST_CASE("each single-invariant mutation yields exactly that violation") {
  for (const auto& m : kMutations) {
    auto t = sample_target();
    m.apply(t);
    const auto v = validate_target(t);
    INFO("mutation of ", m.field);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == m.field);
  }
}

TEST_CASE("random valid targets stay valid under no mutation and fail under each one") {
  harvest::testing::Rng rng(0x7a96e7);
  for (int i = 0; i < 200; ++i) {
    auto t = random_valid_target(rng, i);
    REQUIRE(validate_target(t).empty());
    const auto& m = kMutations[static_cast<std::size_t>(i) % std::size(kMutations)];
    if (std::string_view(m.field).starts_with("content_link_rules") && t.content_link_rules.size() < 2) continue;
    if (std::string_view(m.field).starts_with("paging_criterion") && !t.paging_criterion.separator.empty() &&
        m.apply == kMutations[5].apply) {
      continue;  // separator already set with a count: the mutation is not a violation here
    }
    m.apply(t);
    const auto v = validate_target(t);
    INFO("target ", i, " mutation of ", m.field);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == m.field);
  }
}

TEST_CASE("empty configuration parses to no targets") {
  CHECK(parse_config("[]").empty());
  CHECK(parse_config("  [ ]\n").empty());
}

TEST_CASE("publication target with a table focus point") {
  const auto targets = parse_config(R"([
  {
    "id": "lipi-pub",
    "institution_id": "lipi",
    "content_type": "publication",
    "start_url": "http://ex.org/pub/list?page=1",
    "depth": 2,
    "paging_criterion": {"keywords": ["page="], "separator": "&", "param_count": 1, "scope": "url_only"},
    "title_criterion": null,
    "focus_point": {"tag_name": "table", "ordinal": 3},
    "content_link_rules": [{"kind": "full_text", "keywords": [".pdf"], "separator": "", "param_count": 0, "scope": "both"}],
    "reharvest_period_s": 604800,
    "max_pages": 500,
    "enabled": true
  }
])");
  REQUIRE(targets.size() == 1);
  const auto& t = targets[0];
  CHECK(t.id == "lipi-pub");
  CHECK(t.content_type == content_type::kPublication);
  CHECK(t.depth == 2);
  CHECK(t.focus_point.tag_name == "table");
  CHECK(t.focus_point.ordinal == 3);
  CHECK(!t.title_criterion.has_value());
  CHECK(t.paging_criterion.separator == "&");
  CHECK(t.reharvest_period == std::chrono::seconds(604800));
  REQUIRE(t.content_link_rules.size() == 1);
  CHECK(t.content_link_rules[0].kind == LinkKind::FullText);
  CHECK(t.content_link_rules[0].criterion.scope == MatchScope::Both);
}

TEST_CASE("duplicate ids reject the whole document") {
  std::vector<HarvestTarget> two = {sample_target(), sample_target()};
  const std::string doc = serialize_config(two);
  try {
    parse_config(doc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("duplicate id \"t1\"") != std::string::npos);
  }
}

TEST_CASE("syntax errors carry a line and column") {
  try {
    parse_config("[\n  {\"id\": \"a\",,}\n]");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() > 0);
    CHECK(std::string(e.what()).starts_with("syntax error at line 2"));
  }
}

TEST_CASE("schema problems are rejected with the offending path") {
  auto doc = nlohmann::json::parse(serialize_config(std::vector<HarvestTarget>{sample_target()}));
  SUBCASE("unknown field") {
    doc[0]["colour"] = "red";
    CHECK_THROWS_WITH_AS(parse_config(doc.dump()), doctest::Contains("unknown field \"colour\""), ConfigError);
  }
  SUBCASE("missing field") {
    doc[0].erase("max_pages");
    CHECK_THROWS_WITH_AS(parse_config(doc.dump()), doctest::Contains("missing field \"max_pages\""), ConfigError);
  }
  SUBCASE("wrong type") {
    doc[0]["depth"] = "2";
    CHECK_THROWS_WITH_AS(parse_config(doc.dump()), doctest::Contains("[0].depth"), ConfigError);
  }
  SUBCASE("unknown enumeration value") {
    doc[0]["paging_criterion"]["scope"] = "URL_ONLY";
    CHECK_THROWS_AS(parse_config(doc.dump()), ConfigError);
  }
  SUBCASE("violation inside an otherwise valid document") {
    doc[0]["depth"] = -1;
    CHECK_THROWS_WITH_AS(parse_config(doc.dump()), doctest::Contains("depth must be ≥ 0"), ConfigError);
  }
  SUBCASE("not an array") { CHECK_THROWS_AS(parse_config(doc[0].dump()), ConfigError); }
}

TEST_CASE("serialized field names and enumerations") {
  auto t = sample_target();
  t.title_criterion = LinkRule{LinkKind::Other, {{"detail"}, "", 0, MatchScope::AnchorTextOnly}};
  const auto j = nlohmann::json::parse(serialize_config(std::vector<HarvestTarget>{t}))[0];
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  std::sort(keys.begin(), keys.end());
  CHECK(keys == std::vector<std::string>{"content_link_rules", "content_type", "depth", "enabled", "focus_point",
                                         "id", "institution_id", "max_pages", "paging_criterion",
                                         "reharvest_period_s", "start_url", "title_criterion"});
  CHECK(j["reharvest_period_s"] == 3600);
  CHECK(j["paging_criterion"]["scope"] == "url_only");
  CHECK(j["title_criterion"]["scope"] == "anchor_text_only");
  CHECK(j["title_criterion"]["kind"] == "other");
  CHECK(j["content_link_rules"][0]["kind"] == "full_text");
  CHECK(j["content_link_rules"][1]["kind"] == "image");
}

TEST_CASE("serialized documents keep the declared field order") {
  const std::string doc = serialize_config(std::vector<HarvestTarget>{sample_target()});
  const auto pos = [&](const char* key) { return doc.find(std::string("\"") + key + "\""); };
  CHECK(pos("id") < pos("institution_id"));
  CHECK(pos("institution_id") < pos("content_type"));
  CHECK(pos("start_url") < pos("depth"));
  CHECK(pos("content_link_rules") < pos("reharvest_period_s"));
  CHECK(pos("max_pages") < pos("enabled"));
}

TEST_CASE("parse after serialize is the identity on random valid sets") {
  harvest::testing::Rng rng(20240611);
  for (int round = 0; round < 100; ++round) {
    std::vector<HarvestTarget> set;
    const int n = std::uniform_int_distribution<int>(0, 6)(rng);
    for (int i = 0; i < n; ++i) set.push_back(random_valid_target(rng, round * 10 + i));
    const std::string doc = serialize_config(set);
    const auto back = parse_config(doc);
    REQUIRE(back == set);
    CHECK(serialize_config(back) == doc);
  }
}

TEST_CASE("set validation prefixes fields with the target index") {
  std::vector<HarvestTarget> set = {sample_target(), sample_target()};
  set[1].id = "t2";
  set[1].max_pages = 0;
  const auto v = validate_targets(set);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "[1].max_pages");
}
