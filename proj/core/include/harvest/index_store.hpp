#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "harvest/clock.hpp"
#include "harvest/extractor.hpp"
#include "harvest/harvester.hpp"

namespace harvest {

struct IndexedDocument {
  ExtractedRecord record;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
  int version = 1;

  bool operator==(const IndexedDocument&) const = default;
};

struct SearchHit {
  std::string source_url;
  std::string target_id;
  std::string content_type;
  double score = 0;
  std::string snippet;

  bool operator==(const SearchHit&) const = default;
};

enum class UpsertResult { Inserted, Updated, Unchanged };

std::string_view to_string(UpsertResult r);

struct IndexStats {
  std::size_t documents = 0;
  std::map<std::string, std::size_t> by_target;
  std::map<std::string, std::size_t> by_content_type;
};

/// Lowercased runs of letters and digits (Unicode aware).
std::vector<std::string> tokenize(std::string_view text);

/// One export / store-file line for a document.
std::string to_jsonl_line(const IndexedDocument& doc);

/// Documents keyed by (target_id, source_url) with an in-memory inverted
/// index. With a store file, every change is appended as a JSON line and the
/// file is replayed on open; the last line for a key wins. Store and export
/// files share one format, so an export is itself a loadable store.
///
/// One writer, many readers: searches never see a half-applied upsert.
class IndexStore {
 public:
  IndexStore() = default;
  // Throws StorageError.
  explicit IndexStore(std::filesystem::path store_file);

  IndexStore(const IndexStore&) = delete;
  IndexStore& operator=(const IndexStore&) = delete;

  UpsertResult upsert(const ExtractedRecord& record, TimePoint now);

  /// Tombstones every document of a target. Returns how many.
  std::size_t remove_target(const std::string& target_id);

  /// Conjunctive match over the query's distinct tokens; score is the summed
  /// term frequency. Ordered by score desc, source_url asc.
  std::vector<SearchHit> search(std::string_view query, std::size_t limit) const;

  /// Live documents ordered by (target_id, source_url).
  std::vector<IndexedDocument> documents() const;
  std::optional<IndexedDocument> find(const std::string& target_id, const std::string& source_url) const;

  std::size_t export_jsonl(std::ostream& out) const;
  std::size_t export_jsonl(const std::filesystem::path& destination) const;  // throws StorageError

  /// Loads JSON lines (export format) as documents, replacing same keys.
  std::size_t import_jsonl(std::istream& in);

  IndexStats stats() const;
  std::size_t size() const;

 private:
  using Key = std::pair<std::string, std::string>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  struct Slot {
    IndexedDocument doc;
    bool live = false;
  };
  using DocId = std::uint32_t;

  void apply(IndexedDocument doc);
  void apply_tombstone(const Key& key);
  void index_terms(DocId id);
  void unindex_terms(DocId id);
  void append(const std::string& line);
  std::size_t load_lines(std::istream& in, bool tolerate_torn_tail);

  mutable std::shared_mutex mu_;
  std::optional<std::filesystem::path> store_file_;
  std::ofstream log_;
  std::vector<Slot> slots_;
  std::unordered_map<Key, DocId, KeyHash> by_key_;
  // term -> (doc -> term frequency)
  std::unordered_map<std::string, std::unordered_map<DocId, std::uint32_t>> postings_;
};

/// RecordSink that upserts into a store.
class StoreSink final : public RecordSink {
 public:
  StoreSink(IndexStore& store, Clock& clock) : store_(store), clock_(clock) {}
  void accept(const ExtractedRecord& record) override { store_.upsert(record, clock_.now()); }

 private:
  IndexStore& store_;
  Clock& clock_;
};

}  // namespace harvest
