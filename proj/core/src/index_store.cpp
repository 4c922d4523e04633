#include "harvest/index_store.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <locale>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace harvest {

std::string_view to_string(UpsertResult r) {
  switch (r) {
    case UpsertResult::Inserted: return "inserted";
    case UpsertResult::Updated: return "updated";
    case UpsertResult::Unchanged: return "unchanged";
  }
  return "unchanged";
}

namespace {

constexpr std::size_t kSnippetChars = 200;
constexpr std::size_t kSnippetLead = 60;

// Decodes one code point at s[i]; advances i. Invalid bytes yield U+FFFD.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto c = static_cast<unsigned char>(s[i]);
  std::size_t len = c < 0x80 ? 1 : (c & 0xE0) == 0xC0 ? 2 : (c & 0xF0) == 0xE0 ? 3 : (c & 0xF8) == 0xF0 ? 4 : 0;
  if (len == 0 || i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
  for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
  i += len;
  return cp;
}

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

// Unicode classification from the C.UTF-8 locale when the system has it.
class CharClass {
 public:
  CharClass() {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      try {
        locale_ = std::locale(name);
        facet_ = &std::use_facet<std::ctype<wchar_t>>(locale_);
        return;
      } catch (const std::runtime_error&) {
      }
    }
  }

  bool alnum(char32_t cp) const {
    if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    if (facet_) return facet_->is(std::ctype_base::alnum, static_cast<wchar_t>(cp));
    return cp != 0xA0 && cp != 0xFFFD;
  }

  char32_t lower(char32_t cp) const {
    if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
    if (facet_) return static_cast<char32_t>(facet_->tolower(static_cast<wchar_t>(cp)));
    return cp;
  }

 private:
  std::locale locale_;
  const std::ctype<wchar_t>* facet_ = nullptr;
};

const CharClass& char_class() {
  static const CharClass cc;
  return cc;
}

struct TokenPos {
  std::string token;
  std::size_t begin;  // byte offset
};

std::vector<TokenPos> tokenize_with_offsets(std::string_view text) {
  const auto& cc = char_class();
  std::vector<TokenPos> out;
  std::string current;
  std::size_t begin = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t at = i;
    const char32_t cp = next_code_point(text, i);
    if (cc.alnum(cp)) {
      if (current.empty()) begin = at;
      append_utf8(current, cc.lower(cp));
    } else if (!current.empty()) {
      out.push_back({std::move(current), begin});
      current.clear();
    }
  }
  if (!current.empty()) out.push_back({std::move(current), begin});
  return out;
}

// Up to kSnippetChars code points starting a little before byte offset `at`.
std::string snippet_around(std::string_view text, std::size_t at) {
  std::vector<std::size_t> starts;  // code point start offsets
  for (std::size_t i = 0; i < text.size();) {
    starts.push_back(i);
    next_code_point(text, i);
  }
  const auto idx = static_cast<std::size_t>(std::lower_bound(starts.begin(), starts.end(), at) - starts.begin());
  const std::size_t first = idx > kSnippetLead ? idx - kSnippetLead : 0;
  const std::size_t last = std::min(starts.size(), first + kSnippetChars);
  const std::size_t b = first < starts.size() ? starts[first] : text.size();
  const std::size_t e = last < starts.size() ? starts[last] : text.size();
  return std::string(text.substr(b, e - b));
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::ordered_json doc_to_json(const IndexedDocument& d) {
  nlohmann::ordered_json links = nlohmann::ordered_json::array();
  for (const auto& l : d.record.asset_links) {
    links.push_back({{"url", l.url}, {"kind", std::string(to_string(l.kind))}});
  }
  nlohmann::ordered_json j;
  j["target_id"] = d.record.target_id;
  j["source_url"] = d.record.source_url;
  j["content_type"] = d.record.content_type;
  j["clean_text"] = d.record.clean_text;
  j["asset_links"] = std::move(links);
  j["first_seen"] = d.first_seen;
  j["last_seen"] = d.last_seen;
  j["version"] = d.version;
  j["content_hash"] = hash_hex(d.record.content_hash);
  return j;
}

IndexedDocument doc_from_json(const nlohmann::json& j) {
  IndexedDocument d;
  d.record.target_id = j.at("target_id").get<std::string>();
  d.record.source_url = j.at("source_url").get<std::string>();
  d.record.content_type = j.at("content_type").get<std::string>();
  d.record.clean_text = j.at("clean_text").get<std::string>();
  for (const auto& l : j.at("asset_links")) {
    auto kind = parse_link_kind(l.at("kind").get<std::string>());
    if (!kind) throw StorageError("unknown asset link kind");
    d.record.asset_links.push_back({l.at("url").get<std::string>(), *kind});
  }
  d.first_seen = j.at("first_seen").get<std::int64_t>();
  d.last_seen = j.at("last_seen").get<std::int64_t>();
  d.version = j.at("version").get<int>();
  const auto hex = j.at("content_hash").get<std::string>();
  std::uint64_t h = 0;
  auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), h, 16);
  if (ec != std::errc() || ptr != hex.data() + hex.size() || hex.size() != 16) {
    throw StorageError("bad content_hash \"" + hex + "\"");
  }
  if (h != fnv1a64(d.record.clean_text)) throw StorageError("content_hash does not match clean_text");
  d.record.content_hash = h;
  d.record.harvested_at = d.last_seen;
  if (d.version < 1 || d.last_seen < d.first_seen) throw StorageError("inconsistent document versioning");
  return d;
}

std::string tombstone_line(const std::string& target_id, const std::string& source_url) {
  nlohmann::ordered_json j;
  j["target_id"] = target_id;
  j["source_url"] = source_url;
  j["deleted"] = true;
  return j.dump() + "\n";
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_with_offsets(text)) out.push_back(std::move(t.token));
  return out;
}

std::string to_jsonl_line(const IndexedDocument& doc) {
  return doc_to_json(doc).dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) + "\n";
}

std::size_t IndexStore::KeyHash::operator()(const Key& k) const {
  return std::hash<std::string>{}(k.first) * 31 ^ std::hash<std::string>{}(k.second);
}

IndexStore::IndexStore(std::filesystem::path store_file) : store_file_(std::move(store_file)) {
  if (std::filesystem::exists(*store_file_)) {
    std::ifstream in(*store_file_, std::ios::binary);
    if (!in) throw StorageError("cannot read store " + store_file_->string());
    load_lines(in, true);
  }
  log_.open(*store_file_, std::ios::binary | std::ios::app);
  if (!log_) throw StorageError("cannot open store " + store_file_->string() + " for append");
}

void IndexStore::append(const std::string& line) {
  if (!store_file_) return;
  log_ << line;
  log_.flush();
  if (!log_) throw StorageError("write to store " + store_file_->string() + " failed");
}

std::size_t IndexStore::load_lines(std::istream& in, bool tolerate_torn_tail) {
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t applied = 0;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::string_view line(content.data() + pos, (complete ? nl : content.size()) - pos);
    ++line_no;
    if (!line.empty()) {
      try {
        const auto j = nlohmann::json::parse(line);
        if (j.value("deleted", false)) {
          apply_tombstone({j.at("target_id").get<std::string>(), j.at("source_url").get<std::string>()});
        } else {
          apply(doc_from_json(j));
        }
        ++applied;
      } catch (const std::exception& e) {
        if (tolerate_torn_tail && !complete && store_file_) {
          // interrupted append: drop the partial line
          std::filesystem::resize_file(*store_file_, pos);
          break;
        }
        throw StorageError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (!complete) break;
    pos = nl + 1;
  }
  return applied;
}

void IndexStore::index_terms(DocId id) {
  std::unordered_map<std::string, std::uint32_t> tf;
  for (auto& t : tokenize(slots_[id].doc.record.clean_text)) ++tf[t];
  for (auto& [term, n] : tf) postings_[term][id] = n;
}

void IndexStore::unindex_terms(DocId id) {
  for (auto& t : tokenize(slots_[id].doc.record.clean_text)) {
    auto it = postings_.find(t);
    if (it == postings_.end()) continue;
    it->second.erase(id);
    if (it->second.empty()) postings_.erase(it);
  }
}

void IndexStore::apply(IndexedDocument doc) {
  Key key{doc.record.target_id, doc.record.source_url};
  auto it = by_key_.find(key);
  if (it == by_key_.end()) {
    const auto id = static_cast<DocId>(slots_.size());
    slots_.push_back({std::move(doc), true});
    by_key_.emplace(std::move(key), id);
    index_terms(id);
    return;
  }
  Slot& slot = slots_[it->second];
  const bool reindex = !slot.live || slot.doc.record.content_hash != doc.record.content_hash;
  if (slot.live && reindex) unindex_terms(it->second);
  slot.doc = std::move(doc);
  slot.live = true;
  if (reindex) index_terms(it->second);
}

void IndexStore::apply_tombstone(const Key& key) {
  auto it = by_key_.find(key);
  if (it == by_key_.end() || !slots_[it->second].live) return;
  unindex_terms(it->second);
  slots_[it->second].live = false;
}

UpsertResult IndexStore::upsert(const ExtractedRecord& record, TimePoint now) {
  std::unique_lock lock(mu_);
  const std::int64_t t = to_unix_seconds(now);
  IndexedDocument doc;
  doc.record = record;
  doc.record.content_hash = fnv1a64(record.clean_text);

  UpsertResult result = UpsertResult::Inserted;
  auto it = by_key_.find({record.target_id, record.source_url});
  if (it != by_key_.end() && slots_[it->second].live) {
    const IndexedDocument& old = slots_[it->second].doc;
    if (old.record.content_hash == doc.record.content_hash) {
      result = UpsertResult::Unchanged;
      doc = old;
      doc.last_seen = std::max(old.last_seen, t);
    } else {
      result = UpsertResult::Updated;
      doc.first_seen = old.first_seen;
      doc.last_seen = std::max(old.last_seen, t);
      doc.version = old.version + 1;
    }
  } else {
    doc.first_seen = t;
    doc.last_seen = t;
    doc.version = 1;
  }
  doc.record.harvested_at = doc.last_seen;
  append(to_jsonl_line(doc));
  apply(std::move(doc));
  return result;
}

std::size_t IndexStore::remove_target(const std::string& target_id) {
  std::unique_lock lock(mu_);
  std::vector<Key> keys;
  for (const auto& [key, id] : by_key_) {
    if (key.first == target_id && slots_[id].live) keys.push_back(key);
  }
  std::sort(keys.begin(), keys.end());
  for (const auto& key : keys) {
    append(tombstone_line(key.first, key.second));
    apply_tombstone(key);
  }
  return keys.size();
}

std::vector<SearchHit> IndexStore::search(std::string_view query, std::size_t limit) const {
  const auto tokens_with_pos = tokenize(query);
  std::set<std::string> terms(tokens_with_pos.begin(), tokens_with_pos.end());
  if (terms.empty() || limit == 0) return {};

  std::shared_lock lock(mu_);
  std::vector<const std::unordered_map<DocId, std::uint32_t>*> lists;
  for (const auto& t : terms) {
    auto it = postings_.find(t);
    if (it == postings_.end()) return {};
    lists.push_back(&it->second);
  }
  std::sort(lists.begin(), lists.end(), [](auto* a, auto* b) { return a->size() < b->size(); });

  std::vector<std::pair<DocId, double>> matches;
  for (const auto& [id, tf0] : *lists.front()) {
    double score = tf0;
    bool all = true;
    for (std::size_t k = 1; k < lists.size() && all; ++k) {
      auto it = lists[k]->find(id);
      if (it == lists[k]->end()) {
        all = false;
      } else {
        score += it->second;
      }
    }
    if (all) matches.emplace_back(id, score);
  }
  const auto ranked_before = [this](const std::pair<DocId, double>& a, const std::pair<DocId, double>& b) {
    if (a.second != b.second) return a.second > b.second;
    const auto& ra = slots_[a.first].doc.record;
    const auto& rb = slots_[b.first].doc.record;
    if (ra.source_url != rb.source_url) return ra.source_url < rb.source_url;
    return ra.target_id < rb.target_id;
  };
  const std::size_t n = std::min(limit, matches.size());
  std::partial_sort(matches.begin(), matches.begin() + static_cast<std::ptrdiff_t>(n), matches.end(), ranked_before);

  std::vector<SearchHit> hits;
  hits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = slots_[matches[i].first].doc.record;
    SearchHit hit;
    hit.source_url = rec.source_url;
    hit.target_id = rec.target_id;
    hit.content_type = rec.content_type;
    hit.score = matches[i].second;
    for (const auto& tp : tokenize_with_offsets(rec.clean_text)) {
      if (terms.contains(tp.token)) {
        hit.snippet = snippet_around(rec.clean_text, tp.begin);
        break;
      }
    }
    hits.push_back(std::move(hit));
  }
  return hits;
}

std::vector<IndexedDocument> IndexStore::documents() const {
  std::shared_lock lock(mu_);
  std::vector<IndexedDocument> out;
  for (const auto& s : slots_) {
    if (s.live) out.push_back(s.doc);
  }
  std::sort(out.begin(), out.end(), [](const IndexedDocument& a, const IndexedDocument& b) {
    return std::tie(a.record.target_id, a.record.source_url) < std::tie(b.record.target_id, b.record.source_url);
  });
  return out;
}

std::optional<IndexedDocument> IndexStore::find(const std::string& target_id, const std::string& source_url) const {
  std::shared_lock lock(mu_);
  auto it = by_key_.find({target_id, source_url});
  if (it == by_key_.end() || !slots_[it->second].live) return std::nullopt;
  return slots_[it->second].doc;
}

std::size_t IndexStore::export_jsonl(std::ostream& out) const {
  const auto docs = documents();
  for (const auto& d : docs) out << to_jsonl_line(d);
  return docs.size();
}

std::size_t IndexStore::export_jsonl(const std::filesystem::path& destination) const {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write " + destination.string());
  const std::size_t n = export_jsonl(out);
  out.flush();
  if (!out) throw StorageError("write to " + destination.string() + " failed");
  return n;
}

std::size_t IndexStore::import_jsonl(std::istream& in) {
  std::unique_lock lock(mu_);
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<IndexedDocument> docs;
  std::size_t line_no = 0;
  std::istringstream lines(content);
  for (std::string line; std::getline(lines, line);) {
    ++line_no;
    if (line.empty()) continue;
    try {
      docs.push_back(doc_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw StorageError("import line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (auto& d : docs) {
    append(to_jsonl_line(d));
    apply(std::move(d));
  }
  return docs.size();
}

IndexStats IndexStore::stats() const {
  std::shared_lock lock(mu_);
  IndexStats s;
  for (const auto& slot : slots_) {
    if (!slot.live) continue;
    ++s.documents;
    ++s.by_target[slot.doc.record.target_id];
    ++s.by_content_type[slot.doc.record.content_type];
  }
  return s;
}

std::size_t IndexStore::size() const {
  std::shared_lock lock(mu_);
  return static_cast<std::size_t>(std::count_if(slots_.begin(), slots_.end(), [](const Slot& s) { return s.live; }));
}

}  // namespace harvest
