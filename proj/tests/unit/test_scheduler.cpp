#include <doctest.h>

#include "generators.hpp"
#include "harvest/error.hpp"
#include "harvest/scheduler.hpp"
#include "schedule_sim.hpp"

using namespace harvest;
using namespace std::chrono_literals;
using harvest::testing::simulate_schedule;

namespace {

const TimePoint T0 = from_unix_seconds(1'700'000'000);

std::size_t count_for(const std::vector<testing::Dispatch>& d, const std::string& id) {
  return std::count_if(d.begin(), d.end(), [&](const testing::Dispatch& x) { return x.target_id == id; });
}

}  // namespace

TEST_CASE("a new entry is due immediately") {
  Scheduler s;
  s.add("a", 1h, true, T0);
  CHECK(s.due(T0) == std::vector<std::string>{"a"});
  CHECK(s.due(T0 - 1s).empty());
  CHECK(s.next_wakeup() == T0);
}

TEST_CASE("the next run is anchored to the start of the last one") {
  Scheduler s;
  s.add("a", 1h, true, T0);
  CHECK(s.mark_run("a", T0 + 5min).next_run == T0 + 1h + 5min);
  CHECK(s.due(T0 + 1h).empty());
  CHECK(s.due(T0 + 1h + 5min) == std::vector<std::string>{"a"});
}

TEST_CASE("an early trigger does not pull the schedule earlier") {
  Scheduler s;
  s.add("a", 6h, true, T0);
  s.mark_run("a", T0);
  s.mark_run("a", T0 + 1h);
  CHECK(s.find("a")->next_run == T0 + 7h);
  s.add("b", 6h, true, T0);
  s.mark_run("b", T0);
  s.mark_run("b", T0 - 1h);
  CHECK(s.find("b")->next_run == T0 + 6h);
}

TEST_CASE("running and disabled entries are never due") {
  Scheduler s;
  s.add("a", 1h, true, T0);
  s.add("b", 1h, false, T0);
  s.set_running("a", true);
  CHECK(s.due(T0 + 10h).empty());
  CHECK_FALSE(s.next_wakeup().has_value());
  s.set_running("a", false);
  s.update("b", 2h, true);
  CHECK(s.due(T0) == std::vector<std::string>{"a", "b"});
  CHECK(s.find("b")->period == 2h);
}

TEST_CASE("due entries come in time order, then id order") {
  Scheduler s;
  s.add("c", 1h, true, T0);
  s.add("b", 1h, true, T0 + 1s);
  s.add("a", 1h, true, T0);
  CHECK(s.due(T0 + 1s) == std::vector<std::string>{"a", "c", "b"});
}

TEST_CASE("unknown ids throw") {
  Scheduler s;
  CHECK_THROWS_AS(s.mark_run("x", T0), UnknownTarget);
  CHECK_THROWS_AS(s.set_running("x", true), UnknownTarget);
  CHECK_THROWS_AS(s.update("x", 1h, true), UnknownTarget);
  CHECK_THROWS_AS(s.record_report("x", {}), UnknownTarget);
  CHECK(s.find("x") == nullptr);
  s.remove("x");
  s.add("x", 1h, true, T0);
  CHECK(s.size() == 1);
  s.remove("x");
  CHECK(s.size() == 0);
}

TEST_CASE("the last report is kept") {
  Scheduler s;
  s.add("a", 1h, true, T0);
  s.record_report("a", RunSummary{T0, T0 + 2s, 3, 1, 0, 250ms});
  REQUIRE(s.find("a")->last_report);
  CHECK(s.find("a")->last_report->pages_fetched == 3);
  CHECK(s.find("a")->last_report->lateness == 250ms);
}

TEST_CASE("a day of hourly and six-hourly targets") {
  Scheduler s;
  s.add("hourly", 1h, true, T0);
  s.add("six", 6h, true, T0);
  const auto d = simulate_schedule(s, T0, 24h, [](const std::string&, int) { return 2min; });
  CHECK(count_for(d, "hourly") == 25);
  CHECK(count_for(d, "six") == 5);
  CHECK_FALSE(testing::runs_overlap(d));
  for (const auto& x : d) CHECK((x.started - T0) % (x.target_id == "hourly" ? 1h : 6h) == 0ms);
}

TEST_CASE("runs longer than the period never overlap and start right after the previous one") {
  Scheduler s;
  s.add("slow", 1h, true, T0);
  const auto d = simulate_schedule(s, T0, 24h, [](const std::string&, int) { return 90min; });
  CHECK_FALSE(testing::runs_overlap(d));
  REQUIRE(d.size() >= 2);
  for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i].started == d[i - 1].finished);
  CHECK(d.size() == 17);  // starts at 0, 1.5h, ..., 24h
}

TEST_CASE("random periods and run lengths keep the schedule invariants") {
  testing::Rng rng(0x5c4ed);
  std::uniform_int_distribution<int> period_min(1, 600), run_min(0, 900), targets(1, 6);
  for (int round = 0; round < 200; ++round) {
    Scheduler s;
    std::map<std::string, std::chrono::seconds> periods;
    for (int i = targets(rng); i > 0; --i) {
      const std::string id = "t" + std::to_string(i);
      periods[id] = std::chrono::minutes(period_min(rng));
      s.add(id, periods[id], true, T0);
    }
    std::map<std::string, std::vector<Duration>> lengths;
    const auto d = simulate_schedule(s, T0, 48h, [&](const std::string& id, int) {
      lengths[id].push_back(std::chrono::minutes(run_min(rng)));
      return lengths[id].back();
    });
    CHECK_FALSE(testing::runs_overlap(d));
    std::map<std::string, const testing::Dispatch*> prev;
    for (const auto& x : d) {
      if (const auto* p = prev[x.target_id]) {
        // next start is the later of "period after the previous start" and "previous finish"
        CHECK(x.started == std::max(p->started + periods[x.target_id], p->finished));
      } else {
        CHECK(x.started == T0);
      }
      prev[x.target_id] = &x;
    }
  }
}
