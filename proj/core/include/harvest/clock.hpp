#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>

namespace harvest {

using Duration = std::chrono::milliseconds;
using TimePoint = std::chrono::sys_time<Duration>;

inline std::int64_t to_unix_seconds(TimePoint t) {
  return std::chrono::floor<std::chrono::seconds>(t).time_since_epoch().count();
}

inline TimePoint from_unix_seconds(std::int64_t s) {
  return TimePoint{std::chrono::seconds{s}};
}

/// Time source injected into everything that waits or timestamps. Tests use
/// SimulatedClock so politeness delays and schedules run instantly.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimePoint now() const = 0;
  virtual void sleep_until(TimePoint deadline) = 0;

  void sleep_for(Duration d) { sleep_until(now() + d); }
};

class SystemClock final : public Clock {
 public:
  TimePoint now() const override;
  void sleep_until(TimePoint deadline) override;
};

/// Virtual time. sleep_until() jumps forward instead of blocking; time never
/// moves backwards.
class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(TimePoint start = TimePoint{}) : now_(start) {}

  TimePoint now() const override;
  void sleep_until(TimePoint deadline) override;
  void advance(Duration d);

 private:
  mutable std::mutex mu_;
  TimePoint now_;
};

}  // namespace harvest
