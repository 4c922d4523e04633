#include "harvest/admin.hpp"

#include <charconv>
#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "harvest/error.hpp"

namespace harvest {

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::Idle: return "idle";
    case JobState::Queued: return "queued";
    case JobState::Running: return "running";
    case JobState::Failed: return "failed";
  }
  return "idle";
}

void to_json(nlohmann::json& j, const JobStatus& status) {
  j = {{"target_id", status.target_id},
       {"state", std::string(to_string(status.state))},
       {"last_report", status.last_report ? nlohmann::json(*status.last_report) : nlohmann::json(nullptr)},
       {"next_run", to_unix_seconds(status.next_run)}};
}

Orchestrator::Orchestrator(std::vector<HarvestTarget> targets, IndexStore& store, Fetcher& fetcher, Clock& clock,
                           OrchestratorOptions options)
    : store_(store), fetcher_(fetcher), clock_(clock), options_(std::move(options)) {
  if (auto violations = validate_targets(targets); !violations.empty()) {
    throw ConfigError("invalid target set: " + violations.front().field + ": " + violations.front().message);
  }
  const TimePoint now = clock_.now();
  for (auto& t : targets) {
    scheduler_.add(t.id, t.reharvest_period, t.enabled, now);
    jobs_[t.id];
    targets_.emplace(t.id, std::move(t));
  }
  const int n = std::max(1, options_.workers);
  for (int i = 0; i < n; ++i) {
    workers_.emplace_back([this](std::stop_token st) { worker_loop(st); });
  }
}

Orchestrator::~Orchestrator() { stop(); }

std::vector<HarvestTarget> Orchestrator::targets() const {
  std::lock_guard lock(mu_);
  std::vector<HarvestTarget> out;
  out.reserve(targets_.size());
  for (const auto& [id, t] : targets_) out.push_back(t);
  return out;
}

std::optional<HarvestTarget> Orchestrator::target(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = targets_.find(id);
  if (it == targets_.end()) return std::nullopt;
  return it->second;
}

std::vector<Violation> Orchestrator::check_locked(const HarvestTarget& t, const std::string* replacing) const {
  auto violations = validate_target(t);
  if (replacing) {
    if (t.id != *replacing) violations.push_back({"id", "id cannot change (expected \"" + *replacing + "\")"});
  } else if (targets_.contains(t.id)) {
    violations.push_back({"id", "duplicate id \"" + t.id + "\""});
  }
  return violations;
}

std::vector<Violation> Orchestrator::create(const HarvestTarget& target) {
  std::lock_guard lock(mu_);
  auto violations = check_locked(target, nullptr);
  if (!violations.empty()) return violations;
  targets_.emplace(target.id, target);
  jobs_[target.id];
  scheduler_.add(target.id, target.reharvest_period, target.enabled, clock_.now());
  persist_locked();
  scheduler_cv_.notify_all();
  return {};
}

std::vector<Violation> Orchestrator::replace(const std::string& id, const HarvestTarget& target) {
  std::lock_guard lock(mu_);
  auto it = targets_.find(id);
  if (it == targets_.end()) throw UnknownTarget(id);
  auto violations = check_locked(target, &id);
  if (!violations.empty()) return violations;
  it->second = target;
  scheduler_.update(id, target.reharvest_period, target.enabled);
  persist_locked();
  scheduler_cv_.notify_all();
  return {};
}

void Orchestrator::remove(const std::string& id) {
  {
    std::lock_guard lock(mu_);
    if (targets_.erase(id) == 0) throw UnknownTarget(id);
    jobs_.erase(id);
    scheduler_.remove(id);
    std::erase(queue_, id);
    persist_locked();
    idle_cv_.notify_all();
  }
  store_.remove_target(id);
}

void Orchestrator::enqueue_locked(const std::string& id) {
  jobs_[id].state = JobState::Queued;
  scheduler_.set_running(id, true);
  queue_.push_back(id);
  work_cv_.notify_one();
}

JobStatus Orchestrator::trigger(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = targets_.find(id);
  if (it == targets_.end()) throw UnknownTarget(id);
  if (!it->second.enabled) throw TargetDisabled(id);
  const JobState state = jobs_[id].state;
  if (state == JobState::Idle || state == JobState::Failed) enqueue_locked(id);
  return status_locked(id);
}

JobStatus Orchestrator::status_locked(const std::string& id) const {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw UnknownTarget(id);
  JobStatus s;
  s.target_id = id;
  s.state = it->second.state;
  s.last_report = it->second.last_report;
  if (const auto* entry = scheduler_.find(id)) s.next_run = entry->next_run;
  return s;
}

JobStatus Orchestrator::status(const std::string& id) const {
  std::lock_guard lock(mu_);
  return status_locked(id);
}

std::vector<std::string> Orchestrator::tick() {
  std::lock_guard lock(mu_);
  auto due = scheduler_.due(clock_.now());
  for (const auto& id : due) enqueue_locked(id);
  return due;
}

void Orchestrator::wait_idle() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && active_ == 0; });
}

void Orchestrator::worker_loop(std::stop_token st) {
  while (true) {
    std::string id;
    {
      std::unique_lock lock(mu_);
      if (!work_cv_.wait(lock, st, [this] { return !queue_.empty(); })) return;
      id = std::move(queue_.front());
      queue_.pop_front();
      ++active_;
    }
    run_job(id);
    {
      std::lock_guard lock(mu_);
      --active_;
    }
    idle_cv_.notify_all();
  }
}

void Orchestrator::run_job(const std::string& id) {
  HarvestTarget target;
  TimePoint started;
  Duration lateness{0};
  {
    std::lock_guard lock(mu_);
    auto it = targets_.find(id);
    if (it == targets_.end()) return;
    target = it->second;
    jobs_[id].state = JobState::Running;
    started = clock_.now();
    if (const auto* entry = scheduler_.find(id)) {
      lateness = std::max(Duration{0}, started - entry->next_run);
    }
    scheduler_.mark_run(id, started);
  }

  HarvestReport report;
  bool failed = false;
  try {
    StoreSink sink(store_, clock_);
    report = harvest_target(target, fetcher_, sink, clock_);
    failed = report.stopped_reason == StopReason::Aborted;
  } catch (const std::exception& e) {
    report.target_id = id;
    report.started_at = started;
    report.finished_at = clock_.now();
    report.errors.push_back({target.start_url, e.what()});
    report.stopped_reason = StopReason::Aborted;
    failed = true;
  }

  std::unique_lock lock(mu_);
  auto job = jobs_.find(id);
  if (job == jobs_.end()) {
    // removed while running: drop whatever this run stored after the tombstones
    lock.unlock();
    store_.remove_target(id);
    return;
  }
  job->second.state = failed ? JobState::Failed : JobState::Idle;
  job->second.last_report = report;
  scheduler_.set_running(id, false);
  scheduler_.record_report(id, RunSummary{report.started_at, report.finished_at, report.pages_fetched,
                                          report.records_extracted, report.errors.size(), lateness});
  scheduler_cv_.notify_all();
}

void Orchestrator::persist_locked() const {
  if (!options_.config_path) return;
  std::vector<HarvestTarget> all;
  for (const auto& [id, t] : targets_) all.push_back(t);
  const auto& path = *options_.config_path;
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << serialize_config(all);
    out.flush();
    if (!out) throw StorageError("cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot replace " + path.string() + ": " + ec.message());
}

void Orchestrator::start_scheduler(Duration poll) {
  if (scheduler_thread_.joinable()) return;
  scheduler_thread_ = std::jthread([this, poll](std::stop_token st) {
    while (!st.stop_requested()) {
      tick();
      std::unique_lock lock(mu_);
      scheduler_cv_.wait_for(lock, st, poll, [] { return false; });
    }
  });
}

void Orchestrator::stop() {
  if (scheduler_thread_.joinable()) {
    scheduler_thread_.request_stop();
    scheduler_thread_.join();
  }
  for (auto& w : workers_) w.request_stop();
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
}

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

// Parses a request body into a target. On failure fills `res` (400 for
// malformed JSON, 422 for a schema mismatch) and returns nullopt.
std::optional<HarvestTarget> read_target(const httplib::Request& req, httplib::Response& res) {
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    send_error(res, 400, std::string("malformed JSON: ") + e.what());
    return std::nullopt;
  }
  try {
    return body.get<HarvestTarget>();
  } catch (const ConfigError& e) {
    // "target.depth: expected an integer" -> field "depth"
    std::string what = e.what();
    std::string field;
    const auto colon = what.find(": ");
    if (colon != std::string::npos) {
      field = what.substr(0, colon);
      what = what.substr(colon + 2);
      field = field == "target" ? "" : field.substr(field.find('.') + 1);
    }
    send_json(res, 422, nlohmann::json::array({Violation{field, what}}));
    return std::nullopt;
  }
}

}  // namespace

AdminServer::AdminServer(Orchestrator& orchestrator)
    : orchestrator_(orchestrator), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

AdminServer::~AdminServer() { stop(); }

bool AdminServer::mount_ui(const std::filesystem::path& dir) { return server_->set_mount_point("/", dir.string()); }

int AdminServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool AdminServer::listen() { return server_->listen_after_bind(); }

void AdminServer::stop() {
  if (server_) server_->stop();
}

void AdminServer::install_routes() {
  auto& srv = *server_;
  Orchestrator& orch = orchestrator_;

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const UnknownTarget& e) {
      send_error(res, 404, e.what());
    } catch (const TargetDisabled& e) {
      send_error(res, 409, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    } catch (...) {
      send_error(res, 500, "internal error");
    }
  });

  srv.Get("/api/targets", [&orch](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, orch.targets());
  });

  srv.Post("/api/targets", [&orch](const httplib::Request& req, httplib::Response& res) {
    auto target = read_target(req, res);
    if (!target) return;
    if (auto violations = orch.create(*target); !violations.empty()) {
      send_json(res, 422, violations);
      return;
    }
    res.set_header("Location", "/api/targets/" + target->id);
    send_json(res, 201, *target);
  });

  static const char* kTarget = R"(/api/targets/([^/]+))";

  srv.Get(kTarget, [&orch](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto target = orch.target(id);
    if (!target) throw UnknownTarget(id);
    send_json(res, 200, *target);
  });

  srv.Put(kTarget, [&orch](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    if (!orch.target(id)) throw UnknownTarget(id);
    auto target = read_target(req, res);
    if (!target) return;
    if (auto violations = orch.replace(id, *target); !violations.empty()) {
      send_json(res, 422, violations);
      return;
    }
    send_json(res, 200, *target);
  });

  srv.Delete(kTarget, [&orch](const httplib::Request& req, httplib::Response& res) {
    orch.remove(req.matches[1]);
    res.status = 204;
  });

  srv.Post(R"(/api/targets/([^/]+)/harvest)", [&orch](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, orch.trigger(req.matches[1]));
  });

  srv.Get(R"(/api/targets/([^/]+)/status)", [&orch](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, orch.status(req.matches[1]));
  });

  srv.Get("/api/search", [&orch](const httplib::Request& req, httplib::Response& res) {
    std::size_t limit = 20;
    if (req.has_param("limit")) {
      const std::string raw = req.get_param_value("limit");
      auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), limit);
      if (ec != std::errc() || ptr != raw.data() + raw.size()) {
        send_error(res, 400, "limit must be a non-negative integer");
        return;
      }
    }
    nlohmann::json hits = nlohmann::json::array();
    for (const auto& h : orch.store().search(req.get_param_value("q"), limit)) {
      hits.push_back({{"source_url", h.source_url},
                      {"target_id", h.target_id},
                      {"content_type", h.content_type},
                      {"score", h.score},
                      {"snippet", h.snippet}});
    }
    send_json(res, 200, hits);
  });

  srv.Get("/api/stats", [&orch](const httplib::Request&, httplib::Response& res) {
    const auto s = orch.store().stats();
    send_json(res, 200, {{"documents", s.documents}, {"by_target", s.by_target}, {"by_content_type", s.by_content_type}});
  });
}

std::pair<std::string, int> parse_bind_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw ConfigError("bind address must be host:port, got \"" + address + "\"");
  std::string host = address.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  if (host.empty()) throw ConfigError("bind address has an empty host");
  const std::string port_text = address.substr(colon + 1);
  int port = -1;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (port_text.empty() || ec != std::errc() || ptr != port_text.data() + port_text.size() || port < 0 ||
      port > 65535) {
    throw ConfigError("bind address has an invalid port \"" + port_text + "\"");
  }
  return {host, port};
}

}  // namespace harvest
