#include <doctest.h>

#include <algorithm>

#include "agreement.hpp"
#include "generators.hpp"
#include "harvest/extractor.hpp"
#include "sample_target.hpp"

using namespace harvest;
using harvest::testing::sample_target;

namespace {

const std::string kNested = "<table><tr><td>A<table><tr><td>B</td></tr></table></td></tr></table>";

HtmlDocument page(std::string raw, std::string base = "http://ex.org/d/") { return {std::move(raw), std::move(base)}; }

}  // namespace

TEST_CASE("the second table counts nested occurrences") {
  const auto box = locate_box(page(kNested), {"table", 2});
  CHECK(box.inner == "<table><tr><td>B</td></tr></table>");
  CHECK(strip_tags(box.inner) == "B");
  CHECK_FALSE(box.unclosed);
  CHECK(strip_tags(locate_box(page(kNested), {"table", 1}).inner) == "A B");
}

TEST_CASE("an ordinal past the last occurrence reports how many exist") {
  try {
    locate_box(page(kNested), {"table", 5});
    FAIL("expected BoxNotFound");
  } catch (const BoxNotFound& e) {
    CHECK(e.found_count() == 2);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  CHECK_THROWS_AS(locate_box(page("<p>no tables</p>"), {"table", 1}), BoxNotFound);
}

TEST_CASE("the focus tag name is case-insensitive") {
  CHECK(locate_box(page("<DIV>x</DIV>"), {"div", 1}).inner == "<DIV>x</DIV>");
  CHECK(locate_box(page("<div>x</div>"), {"DIV", 1}).inner == "<div>x</div>");
}

TEST_CASE("a void focus element is just its tag") {
  const auto box = locate_box(page("<p>a<hr class=x>b</p>"), {"hr", 1});
  CHECK(box.inner == "<hr class=x>");
  CHECK(strip_tags(box.inner).empty());
}

TEST_CASE("fragment offsets address the source") {
  testing::Rng rng(0x0ff5);
  for (int i = 0; i < 300; ++i) {
    const auto doc = page(testing::random_document(rng));
    for (const char* tag : {"table", "div", "td", "p"}) {
      for (int n = 1;; ++n) {
        BoxFragment box;
        try {
          box = locate_box(doc, {tag, n});
        } catch (const BoxNotFound& e) {
          CHECK(e.found_count() == static_cast<std::size_t>(n - 1));
          break;
        }
        REQUIRE(box.start_offset < box.end_offset);
        REQUIRE(box.end_offset <= doc.raw.size());
        CHECK(doc.raw.substr(box.start_offset, box.end_offset - box.start_offset) == box.inner);
        CHECK(box.inner.front() == '<');
        CHECK(box.inner.back() == '>');
      }
    }
  }
}

TEST_CASE("anchors are resolved against the base URL") {
  const auto anchors = extract_anchors(page(R"(<a href="x.html">Go</a>)"));
  REQUIRE(anchors.size() == 1);
  CHECK(anchors[0] == Anchor{"http://ex.org/d/x.html", "Go", true});
}

TEST_CASE("anchor extraction drops rejected hrefs and keeps document order") {
  const auto anchors = extract_anchors(page(R"html(<p><a href="/b">B <i>two</i></a>
      <a href="javascript:go()">js</a> <a name="n">no href</a>
      <a href="mailto:x@ex.org">mail</a><a href="HTTP://Other.Test:80/c#f">C</a><a href="">empty</a>)html"),
                                       "http://www.ex.org/start");
  REQUIRE(anchors.size() == 2);
  CHECK(anchors[0] == Anchor{"http://ex.org/b", "B two", true});
  CHECK(anchors[1] == Anchor{"http://other.test/c", "C", false});
}

TEST_CASE("an unclosed anchor ends at the next anchor") {
  const auto anchors = extract_anchors(page(R"(<a href="1">one <a href="2">two</a>)"));
  REQUIRE(anchors.size() == 2);
  CHECK(anchors[0].text == "one");
  CHECK(anchors[1].text == "two");
}

TEST_CASE("the first list page has ten usable anchors") {
  const auto site = testing::FixtureSite::load();
  const auto* list1 = site.find("/section/list?page=1");
  REQUIRE(list1);
  const auto anchors = extract_anchors(page(testing::decoded_body(*list1), "http://fixture.test/section/list?page=1"));
  CHECK(anchors.size() == 10);
  CHECK(std::count_if(anchors.begin(), anchors.end(), [](const Anchor& a) { return !a.host_matches_target; }) == 2);
}

TEST_CASE("a record carries the target's identity and the text's hash") {
  auto t = sample_target();
  t.focus_point = {"table", 1};
  const auto now = from_unix_seconds(1'700'000'000);
  const auto rec = extract_record(page("<table><tr><td>Qu&amp;A</td></tr></table>", "http://ex.org/p/1"), t, now);
  CHECK(rec.target_id == "t1");
  CHECK(rec.content_type == "publication");
  CHECK(rec.source_url == "http://ex.org/p/1");
  CHECK(rec.clean_text == "Qu&A");
  CHECK(rec.harvested_at == 1'700'000'000);
  CHECK(rec.content_hash == fnv1a64("Qu&A"));
}

TEST_CASE("asset links take the kind of the first matching rule") {
  auto t = sample_target();
  t.focus_point = {"div", 1};
  const auto rec = extract_record(page(R"(<div>
      <a href="scan.pdf.jpg">both</a>
      <img src="photo.JPG"><img src="plain.png">
      <a href="files/paper.pdf">pdf</a><a href="./files/paper.pdf#p2">again</a>
      <a href="https://cdn.test/x.jpg">cdn</a></div><a href="outside.pdf">out</a>)"),
                                  t, TimePoint{});
  const std::vector<AssetLink> expected = {{"http://ex.org/d/scan.pdf.jpg", LinkKind::FullText},
                                           {"http://ex.org/d/photo.JPG", LinkKind::Image},
                                           {"http://ex.org/d/files/paper.pdf", LinkKind::FullText},
                                           {"https://cdn.test/x.jpg", LinkKind::Image}};
  CHECK(rec.asset_links == expected);
}

TEST_CASE("rule order decides between overlapping rules") {
  auto t = sample_target();
  t.focus_point = {"div", 1};
  std::swap(t.content_link_rules[0], t.content_link_rules[1]);
  const auto rec = extract_record(page(R"(<div><a href="scan.pdf.jpg">x</a></div>)"), t, TimePoint{});
  REQUIRE(rec.asset_links.size() == 1);
  CHECK(rec.asset_links[0].kind == LinkKind::Image);
}

TEST_CASE("a missing box propagates BoxNotFound") {
  CHECK_THROWS_AS(extract_record(page("<p>x</p>"), sample_target(), TimePoint{}), BoxNotFound);
}

TEST_CASE("the fixture records match the committed manifest") {
  const std::string origin = "http://fixture.test";
  const auto site = testing::FixtureSite::load();
  const auto manifest = testing::load_manifest(origin);
  const auto target = testing::load_targets(origin).at(0);
  REQUIRE(manifest.at("records").size() == 9);
  for (const auto& r : manifest.at("records")) {
    const std::string url = r.at("source_url");
    INFO(url);
    const auto* p = site.find(url.substr(origin.size()));
    REQUIRE(p);
    const auto rec = extract_record(page(testing::decoded_body(*p), url), target, TimePoint{});
    CHECK(rec.clean_text == r.at("clean_text").get<std::string>());
    std::vector<AssetLink> expected;
    for (const auto& a : r.at("asset_links")) {
      expected.push_back({a.at("url"), *parse_link_kind(a.at("kind").get<std::string>())});
    }
    CHECK(rec.asset_links == expected);
  }
}

TEST_CASE("locate_box and strip_tags agree with the oracle tree on every fixture page") {
  const auto site = testing::FixtureSite::load();
  std::size_t compared = 0;
  for (const auto& [path, p] : site.pages()) {
    if (p.content_type.find("html") == std::string::npos) continue;
    INFO(path);
    const auto problems = testing::oracle_disagreements(testing::decoded_body(p), &compared);
    for (const auto& problem : problems) FAIL_CHECK(problem);
  }
  CHECK(compared > 200);
  MESSAGE(compared, " boxes compared");
}

TEST_CASE("locate_box and strip_tags agree with the oracle tree on generated documents") {
  testing::Rng rng(0xd0c5);
  std::size_t compared = 0;
  for (int i = 0; i < 500; ++i) {
    const auto doc = testing::random_document(rng);
    const auto problems = testing::oracle_disagreements(doc, &compared);
    if (!problems.empty()) {
      INFO(doc);
      for (const auto& problem : problems) FAIL_CHECK(problem);
    }
  }
  CHECK(compared > 5000);
  MESSAGE(compared, " boxes compared");
}

TEST_CASE("malformed markup corpus") {
  const auto cases = testing::load_malformed_cases();
  REQUIRE(cases.size() >= 20);
  for (const auto& c : cases) {
    INFO(c.name);
    BoxFragment box;
    REQUIRE_NOTHROW(box = locate_box(page(c.html), {c.tag, c.ordinal}));
    CHECK(strip_tags(box.inner) == c.text);
    CHECK(box.unclosed == c.unclosed);
    bool flagged = !c.unclosed;
    auto t = sample_target();
    t.focus_point = {c.tag, c.ordinal};
    CHECK(extract_record(page(c.html), t, TimePoint{}, &flagged).clean_text == c.text);
    CHECK(flagged == c.unclosed);
  }
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}
