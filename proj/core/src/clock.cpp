#include "harvest/clock.hpp"

#include <algorithm>
#include <thread>

namespace harvest {

TimePoint SystemClock::now() const {
  return std::chrono::time_point_cast<Duration>(std::chrono::system_clock::now());
}

void SystemClock::sleep_until(TimePoint deadline) {
  const auto remaining = deadline - now();
  if (remaining > Duration::zero()) std::this_thread::sleep_for(remaining);
}

TimePoint SimulatedClock::now() const {
  std::lock_guard lock(mu_);
  return now_;
}

void SimulatedClock::sleep_until(TimePoint deadline) {
  std::lock_guard lock(mu_);
  now_ = std::max(now_, deadline);
}

void SimulatedClock::advance(Duration d) {
  std::lock_guard lock(mu_);
  if (d > Duration::zero()) now_ += d;
}

}  // namespace harvest
