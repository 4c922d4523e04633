#include "harvest/frontier.hpp"

namespace harvest {

bool Frontier::enqueue(FrontierEntry entry) {
  if (!seen_.insert(entry.url).second) return false;
  queue_.push_back(std::move(entry));
  return true;
}

std::optional<FrontierEntry> Frontier::next() {
  if (queue_.empty()) return std::nullopt;
  FrontierEntry e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

bool Frontier::mark_seen(const std::string& url) { return seen_.insert(url).second; }

}  // namespace harvest
