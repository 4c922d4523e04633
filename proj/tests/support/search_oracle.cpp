#include "search_oracle.hpp"

#include <locale.h>
#include <wctype.h>

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace harvest::testing {
namespace {

locale_t utf8_locale() {
  static const locale_t loc = [] {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      if (locale_t l = newlocale(LC_ALL_MASK, name, nullptr)) return l;
    }
    throw std::runtime_error("no UTF-8 locale available for the search oracle");
  }();
  return loc;
}

// Splits UTF-8 into code point byte ranges; malformed bytes become U+FFFD.
std::vector<std::pair<char32_t, std::string>> code_points(const std::string& s) {
  std::vector<std::pair<char32_t, std::string>> out;
  for (std::size_t i = 0; i < s.size();) {
    const unsigned char b = s[i];
    const int len = b < 0x80 ? 1 : b >= 0xF0 && b < 0xF8 ? 4 : b >= 0xE0 ? 3 : b >= 0xC0 ? 2 : 0;
    if (len == 0 || i + len > s.size() || (len > 1 && b >= 0xF8)) {
      out.emplace_back(0xFFFD, "\xEF\xBF\xBD");
      ++i;
      continue;
    }
    char32_t cp = len == 1 ? b : b & (0x7F >> len);
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.emplace_back(cp, s.substr(i, len));
    i += len;
  }
  return out;
}

std::string encode(char32_t cp) {
  std::string out;
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
  return out;
}

}  // namespace

std::vector<std::string> scan_words(const std::string& text) {
  std::vector<std::string> words;
  std::string word;
  for (const auto& [cp, bytes] : code_points(text)) {
    if (iswalnum_l(static_cast<wint_t>(cp), utf8_locale())) {
      word += encode(static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), utf8_locale())));
    } else if (!word.empty()) {
      words.push_back(word);
      word.clear();
    }
  }
  if (!word.empty()) words.push_back(word);
  return words;
}

std::vector<ScanHit> linear_scan(const std::vector<IndexedDocument>& docs, const std::string& query,
                                 std::size_t limit) {
  const auto q = scan_words(query);
  const std::set<std::string> terms(q.begin(), q.end());
  std::vector<ScanHit> hits;
  if (terms.empty()) return hits;
  for (const auto& d : docs) {
    std::map<std::string, int> tf;
    for (const auto& w : scan_words(d.record.clean_text)) ++tf[w];
    double score = 0;
    bool all = true;
    for (const auto& t : terms) {
      const auto it = tf.find(t);
      if (it == tf.end()) {
        all = false;
        break;
      }
      score += it->second;
    }
    if (all) hits.push_back({d.record.source_url, d.record.target_id, score});
  }
  std::sort(hits.begin(), hits.end(), [](const ScanHit& a, const ScanHit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.source_url != b.source_url) return a.source_url < b.source_url;
    return a.target_id < b.target_id;
  });
  if (hits.size() > limit) hits.resize(limit);
  return hits;
}

std::vector<ScanHit> as_scan_hits(const std::vector<SearchHit>& hits) {
  std::vector<ScanHit> out;
  for (const auto& h : hits) out.push_back({h.source_url, h.target_id, h.score});
  return out;
}

}  // namespace harvest::testing
