#include "harvest/harvester.hpp"

#include <nlohmann/json.hpp>

#include "harvest/link_classifier.hpp"
#include "harvest/url.hpp"

namespace harvest {

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::Exhausted: return "exhausted";
    case StopReason::MaxPages: return "max_pages";
    case StopReason::Aborted: return "aborted";
  }
  return "exhausted";
}

void to_json(nlohmann::json& j, const HarvestReport& r) {
  auto issues = [](const std::vector<HarvestIssue>& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : list) arr.push_back({{"url", e.url}, {"error", e.description}});
    return arr;
  };
  j = {{"target_id", r.target_id},
       {"started_at", to_unix_seconds(r.started_at)},
       {"finished_at", to_unix_seconds(r.finished_at)},
       {"pages_fetched", r.pages_fetched},
       {"records_extracted", r.records_extracted},
       {"links_ignored", r.links_ignored},
       {"errors", issues(r.errors)},
       {"warnings", issues(r.warnings)},
       {"stopped_reason", std::string(to_string(r.stopped_reason))}};
}

HarvestReport harvest_target(const HarvestTarget& target, Fetcher& fetcher, RecordSink& sink, Clock& clock,
                             const HarvestHooks& hooks) {
  HarvestReport report;
  report.target_id = target.id;
  report.started_at = clock.now();

  Frontier frontier;
  RobotsCache robots;
  if (auto start = normalize_url(target.start_url)) {
    frontier.enqueue({*start, 0});
  } else {
    report.errors.push_back({target.start_url, "start_url is not an absolute http(s) URL"});
  }

  while (true) {
    if (frontier.pending() > 0 && report.pages_fetched >= static_cast<std::size_t>(target.max_pages)) {
      report.stopped_reason = StopReason::MaxPages;
      break;
    }
    auto entry = frontier.next();
    if (!entry) {
      report.stopped_reason = StopReason::Exhausted;
      break;
    }

    FetchedPage page;
    try {
      page = fetcher.fetch(entry->url, robots);
    } catch (const FetchError& e) {
      // robots-denied URLs were never requested
      if (e.kind() != FetchErrorKind::RobotsDenied) {
        ++report.pages_fetched;
        if (hooks.on_page) hooks.on_page(*entry);
      }
      report.errors.push_back({entry->url, e.what()});
      continue;
    }
    ++report.pages_fetched;
    if (hooks.on_page) hooks.on_page(*entry);

    if (page.final_url != entry->url && !frontier.mark_seen(page.final_url)) {
      report.warnings.push_back({entry->url, "redirected to already visited " + page.final_url});
      continue;
    }
    if (page.status < 200 || page.status >= 300) {
      report.errors.push_back({entry->url, "HTTP " + std::to_string(page.status)});
      continue;
    }

    const HtmlDocument doc{std::move(page.body_text), page.final_url};
    if (entry->depth >= target.depth) {
      ExtractedRecord record;
      bool unclosed = false;
      try {
        record = extract_record(doc, target, clock.now(), &unclosed);
      } catch (const BoxNotFound& e) {
        report.errors.push_back({entry->url, e.what()});
        continue;
      }
      if (unclosed) {
        report.warnings.push_back({entry->url, "focus box not closed; cut at enclosing element"});
      }
      try {
        sink.accept(record);
      } catch (const std::exception& e) {
        report.errors.push_back({entry->url, std::string("record sink failed: ") + e.what()});
        report.stopped_reason = StopReason::Aborted;
        break;
      }
      ++report.records_extracted;
      continue;
    }

    for (const Anchor& anchor : extract_anchors(doc, target.start_url)) {
      switch (classify_link(anchor, entry->depth, target)) {
        case LinkClass::Paging:
          frontier.enqueue({anchor.href, entry->depth});
          break;
        case LinkClass::Title:
          frontier.enqueue({anchor.href, entry->depth + 1});
          break;
        case LinkClass::Ignore:
          ++report.links_ignored;
          break;
      }
    }
  }

  report.finished_at = clock.now();
  return report;
}

}  // namespace harvest
