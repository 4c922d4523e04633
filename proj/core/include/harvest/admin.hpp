#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "harvest/clock.hpp"
#include "harvest/fetcher.hpp"
#include "harvest/harvester.hpp"
#include "harvest/index_store.hpp"
#include "harvest/scheduler.hpp"
#include "harvest/target.hpp"

namespace httplib {
class Server;
}

namespace harvest {

enum class JobState { Idle, Queued, Running, Failed };

std::string_view to_string(JobState s);

struct JobStatus {
  std::string target_id;
  JobState state = JobState::Idle;
  std::optional<HarvestReport> last_report;
  TimePoint next_run;
};

void to_json(nlohmann::json& j, const JobStatus& status);

struct OrchestratorOptions {
  int workers = 4;
  // When set, the target set is rewritten here after every accepted mutation.
  std::optional<std::filesystem::path> config_path;
};

/// Owns the target set, the schedule and the job states, and runs harvests on
/// a bounded worker pool. Every mutation is serialized through one lock and
/// validated before it is accepted.
class Orchestrator {
 public:
  Orchestrator(std::vector<HarvestTarget> targets, IndexStore& store, Fetcher& fetcher, Clock& clock,
               OrchestratorOptions options = {});
  ~Orchestrator();

  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  std::vector<HarvestTarget> targets() const;
  std::optional<HarvestTarget> target(const std::string& id) const;

  // Return the violations that prevented the change; empty on success.
  std::vector<Violation> create(const HarvestTarget& target);
  // Throws UnknownTarget.
  std::vector<Violation> replace(const std::string& id, const HarvestTarget& target);
  // Removes the target and tombstones its documents. Throws UnknownTarget.
  void remove(const std::string& id);

  /// Idle/Failed -> Queued. Already Queued/Running: returns the current
  /// status unchanged. Throws UnknownTarget, TargetDisabled.
  JobStatus trigger(const std::string& id);
  JobStatus status(const std::string& id) const;  // throws UnknownTarget

  /// Queues every due target. Returns the ids queued.
  std::vector<std::string> tick();

  /// Blocks until no job is queued or running.
  void wait_idle();

  /// Background loop calling tick() until stop(). Uses the real passage of
  /// `poll` between ticks.
  void start_scheduler(Duration poll = std::chrono::seconds(1));
  void stop();

  IndexStore& store() { return store_; }

 private:
  struct Job {
    JobState state = JobState::Idle;
    std::optional<HarvestReport> last_report;
  };

  void enqueue_locked(const std::string& id);
  void worker_loop(std::stop_token st);
  void run_job(const std::string& id);
  void persist_locked() const;
  std::vector<Violation> check_locked(const HarvestTarget& t, const std::string* replacing) const;
  JobStatus status_locked(const std::string& id) const;

  IndexStore& store_;
  Fetcher& fetcher_;
  Clock& clock_;
  OrchestratorOptions options_;

  mutable std::mutex mu_;
  std::condition_variable_any work_cv_;
  std::condition_variable idle_cv_;
  std::map<std::string, HarvestTarget> targets_;
  std::map<std::string, Job> jobs_;
  Scheduler scheduler_;
  std::deque<std::string> queue_;
  std::size_t active_ = 0;

  std::vector<std::jthread> workers_;
  std::jthread scheduler_thread_;
  std::condition_variable_any scheduler_cv_;
};

/// REST JSON API over an orchestrator:
///   GET/POST /api/targets, GET/PUT/DELETE /api/targets/{id},
///   POST /api/targets/{id}/harvest, GET /api/targets/{id}/status,
///   GET /api/search?q=&limit=, GET /api/stats
class AdminServer {
 public:
  explicit AdminServer(Orchestrator& orchestrator);
  ~AdminServer();

  AdminServer(const AdminServer&) = delete;
  AdminServer& operator=(const AdminServer&) = delete;

  /// Serve a static UI bundle at "/".
  bool mount_ui(const std::filesystem::path& dir);

  /// port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen();
  void stop();

 private:
  void install_routes();

  Orchestrator& orchestrator_;
  std::unique_ptr<httplib::Server> server_;
};

/// "host:port" -> (host, port). Throws ConfigError.
std::pair<std::string, int> parse_bind_address(const std::string& address);

}  // namespace harvest
