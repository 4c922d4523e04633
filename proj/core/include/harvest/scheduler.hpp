#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harvest/clock.hpp"

namespace harvest {

struct RunSummary {
  TimePoint started_at;
  TimePoint finished_at;
  std::size_t pages_fetched = 0;
  std::size_t records_extracted = 0;
  std::size_t errors = 0;
  // How far behind schedule the run started.
  Duration lateness{0};
};

struct ScheduleEntry {
  std::string target_id;
  TimePoint next_run;
  std::chrono::seconds period{0};
  bool enabled = true;
  bool running = false;
  std::optional<RunSummary> last_report;
};

/// Re-harvest bookkeeping. Runs are anchored to their start time:
/// next_run = started_at + period. Not thread-safe; the orchestrator
/// serializes access.
class Scheduler {
 public:
  // First run is due immediately (next_run = registered_at).
  void add(const std::string& target_id, std::chrono::seconds period, bool enabled,
           TimePoint registered_at);
  void update(const std::string& target_id, std::chrono::seconds period, bool enabled);
  void remove(const std::string& target_id);

  /// Enabled, not running entries with next_run <= now, by next_run then id.
  std::vector<std::string> due(TimePoint now) const;

  /// Throws UnknownTarget.
  const ScheduleEntry& mark_run(const std::string& target_id, TimePoint run_started_at);
  void set_running(const std::string& target_id, bool running);
  void record_report(const std::string& target_id, const RunSummary& summary);

  const ScheduleEntry* find(const std::string& target_id) const;
  std::optional<TimePoint> next_wakeup() const;
  std::size_t size() const { return entries_.size(); }

 private:
  ScheduleEntry& get(const std::string& target_id);

  std::map<std::string, ScheduleEntry> entries_;
};

}  // namespace harvest
