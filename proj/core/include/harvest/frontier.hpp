#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <unordered_set>

namespace harvest {

struct FrontierEntry {
  std::string url;  // canonical
  int depth = 0;

  bool operator==(const FrontierEntry&) const = default;
};

// Breadth-first queue with a per-run visited set. A URL is accepted once;
// later enqueues of the same URL are rejected whatever their depth.
class Frontier {
 public:
  bool enqueue(FrontierEntry entry);

  // FIFO. std::nullopt once the queue is exhausted.
  std::optional<FrontierEntry> next();

  // Marks a URL as seen without queueing it (used for redirect targets).
  // Returns false if it was already seen.
  bool mark_seen(const std::string& url);

  bool seen(const std::string& url) const { return seen_.contains(url); }
  std::size_t pending() const { return queue_.size(); }
  std::size_t seen_count() const { return seen_.size(); }

 private:
  std::deque<FrontierEntry> queue_;
  std::unordered_set<std::string> seen_;
};

}  // namespace harvest
