#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "harvest/clock.hpp"
#include "harvest/extractor.hpp"
#include "harvest/fetcher.hpp"
#include "harvest/frontier.hpp"
#include "harvest/target.hpp"

namespace harvest {

/// Destination of extracted records. accept() throwing aborts the run.
class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void accept(const ExtractedRecord& record) = 0;
};

class VectorSink final : public RecordSink {
 public:
  void accept(const ExtractedRecord& record) override { records.push_back(record); }
  std::vector<ExtractedRecord> records;
};

enum class StopReason { Exhausted, MaxPages, Aborted };

std::string_view to_string(StopReason r);

struct HarvestIssue {
  std::string url;
  std::string description;

  bool operator==(const HarvestIssue&) const = default;
};

struct HarvestReport {
  std::string target_id;
  TimePoint started_at;
  TimePoint finished_at;
  std::size_t pages_fetched = 0;
  std::size_t records_extracted = 0;
  std::size_t links_ignored = 0;
  std::vector<HarvestIssue> errors;
  std::vector<HarvestIssue> warnings;
  StopReason stopped_reason = StopReason::Exhausted;
};

void to_json(nlohmann::json& j, const HarvestReport& report);

struct HarvestHooks {
  // A page was fetched (or its fetch attempted) at the given depth.
  std::function<void(const FrontierEntry&)> on_page;
};

/// Runs one target: breadth-first from start_url, following paging links at
/// the same depth and title links one level down, extracting a record from
/// every page at exactly target.depth. Page-level failures become report
/// errors; only a failing sink aborts the run.
HarvestReport harvest_target(const HarvestTarget& target, Fetcher& fetcher, RecordSink& sink,
                             Clock& clock, const HarvestHooks& hooks = {});

}  // namespace harvest
