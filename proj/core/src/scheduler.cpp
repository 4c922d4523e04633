#include "harvest/scheduler.hpp"

#include <algorithm>

#include "harvest/error.hpp"

namespace harvest {

void Scheduler::add(const std::string& target_id, std::chrono::seconds period, bool enabled,
                    TimePoint registered_at) {
  ScheduleEntry e;
  e.target_id = target_id;
  e.next_run = registered_at;
  e.period = period;
  e.enabled = enabled;
  entries_.insert_or_assign(target_id, std::move(e));
}

void Scheduler::update(const std::string& target_id, std::chrono::seconds period, bool enabled) {
  auto& e = get(target_id);
  e.period = period;
  e.enabled = enabled;
}

void Scheduler::remove(const std::string& target_id) { entries_.erase(target_id); }

std::vector<std::string> Scheduler::due(TimePoint now) const {
  std::vector<const ScheduleEntry*> ready;
  for (const auto& [id, e] : entries_) {
    if (e.enabled && !e.running && e.next_run <= now) ready.push_back(&e);
  }
  // entries_ iterates in id order, so a stable sort by time keeps the id tie-break
  std::stable_sort(ready.begin(), ready.end(),
                   [](const ScheduleEntry* a, const ScheduleEntry* b) { return a->next_run < b->next_run; });
  std::vector<std::string> out;
  out.reserve(ready.size());
  for (const auto* e : ready) out.push_back(e->target_id);
  return out;
}

const ScheduleEntry& Scheduler::mark_run(const std::string& target_id, TimePoint run_started_at) {
  auto& e = get(target_id);
  e.next_run = std::max(e.next_run, run_started_at + Duration(e.period));
  return e;
}

void Scheduler::set_running(const std::string& target_id, bool running) { get(target_id).running = running; }

void Scheduler::record_report(const std::string& target_id, const RunSummary& summary) {
  get(target_id).last_report = summary;
}

const ScheduleEntry* Scheduler::find(const std::string& target_id) const {
  auto it = entries_.find(target_id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::optional<TimePoint> Scheduler::next_wakeup() const {
  std::optional<TimePoint> best;
  for (const auto& [id, e] : entries_) {
    if (!e.enabled || e.running) continue;
    if (!best || e.next_run < *best) best = e.next_run;
  }
  return best;
}

ScheduleEntry& Scheduler::get(const std::string& target_id) {
  auto it = entries_.find(target_id);
  if (it == entries_.end()) throw UnknownTarget(target_id);
  return it->second;
}

}  // namespace harvest
