#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "harvest/extractor.hpp"
#include "harvest/index_store.hpp"
#include "harvest/url.hpp"

namespace {

using namespace harvest;

// A list page of `rows` rows inside the second of three tables.
std::string list_page(int rows) {
  std::string html = "<html><head><title>bench</title><script>var x = '<table>';</script></head><body>";
  html += "<table><tr><td>nav</td></tr></table><table>";
  for (int i = 0; i < rows; ++i) {
    html += "<tr><td><a href=\"/article/" + std::to_string(i) + ".html\">Article &amp; entry " + std::to_string(i) +
            "</a></td><td><!-- note -->Lorem ipsum <b>dolor</b> sit&nbsp;amet</td></tr>";
  }
  html += "</table><table><tr><td>footer</td></tr></table></body></html>";
  return html;
}

void BM_LocateBox(benchmark::State& state) {
  const HtmlDocument doc{list_page(static_cast<int>(state.range(0))), "http://bench.test/"};
  for (auto _ : state) benchmark::DoNotOptimize(locate_box(doc, {"table", 2}));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * doc.raw.size()));
}
BENCHMARK(BM_LocateBox)->Arg(10)->Arg(100)->Arg(1000);

void BM_StripTags(benchmark::State& state) {
  const std::string html = list_page(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(strip_tags(html));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * html.size()));
}
BENCHMARK(BM_StripTags)->Arg(10)->Arg(100)->Arg(1000);

void BM_ExtractAnchors(benchmark::State& state) {
  const HtmlDocument doc{list_page(static_cast<int>(state.range(0))), "http://bench.test/list/"};
  for (auto _ : state) benchmark::DoNotOptimize(extract_anchors(doc));
}
BENCHMARK(BM_ExtractAnchors)->Arg(100);

void BM_NormalizeUrl(benchmark::State& state) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"http://ex.org/a/b/c.html", "../../d/./e.html?page=2#frag"},
      {"http://ex.org/", "HTTP://WWW.EX.ORG:80/%7euser/a%2fb"},
      {"https://ex.org/x/", "//cdn.ex.org/img/p.jpg"},
      {"http://ex.org/list?page=1", "?page=2&sort=asc"},
  };
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [base, href] = cases[i++ % cases.size()];
    benchmark::DoNotOptimize(normalize_url(base, href));
  }
}
BENCHMARK(BM_NormalizeUrl);

void BM_Search(benchmark::State& state) {
  IndexStore store;
  std::mt19937_64 rng(42);
  const std::vector<std::string> words = {"quantum", "harvest", "library", "journal", "data", "model",
                                          "tropical", "forest", "river", "survey", "method", "result"};
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  for (int d = 0; d < state.range(0); ++d) {
    ExtractedRecord r;
    r.target_id = "t" + std::to_string(d % 4);
    r.source_url = "http://bench.test/doc/" + std::to_string(d);
    r.content_type = "publication";
    for (int w = 0; w < 60; ++w) r.clean_text += words[pick(rng)] + " ";
    r.content_hash = fnv1a64(r.clean_text);
    store.upsert(r, TimePoint{});
  }
  for (auto _ : state) benchmark::DoNotOptimize(store.search("forest survey method", 20));
}
BENCHMARK(BM_Search)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
