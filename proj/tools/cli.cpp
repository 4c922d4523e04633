#include "cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "harvest/admin.hpp"
#include "harvest/error.hpp"
#include "harvest/fetcher.hpp"
#include "harvest/index_store.hpp"
#include "harvest/target.hpp"

namespace harvest::cli {
namespace {

struct Options {
  std::string config;
  std::string config_positional;
  std::string target_id;
  std::string bind = "127.0.0.1:8080";
  std::string store;
  std::string ui_dir;
  std::string query;
  std::string export_store;
  std::string export_out;
  std::string user_agent = FetchPolicy{}.user_agent;
  long long delay_ms = std::chrono::duration_cast<std::chrono::milliseconds>(FetchPolicy{}.per_host_delay).count();
  long long timeout_s = std::chrono::duration_cast<std::chrono::seconds>(FetchPolicy{}.timeout).count();
  int workers = 4;
  std::size_t limit = 20;
  bool no_robots = false;
};

// Environment values win over the flags of the same meaning.
void apply_env(Options& o) {
  if (const char* v = std::getenv("HARVEST_CONFIG"); v && *v) o.config = v;
  if (const char* v = std::getenv("HARVEST_BIND"); v && *v) o.bind = v;
  if (const char* v = std::getenv("HARVEST_STORE"); v && *v) o.store = v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<HarvestTarget> load_config(const std::string& path) {
  if (path.empty()) throw ConfigError("no configuration given (--config or HARVEST_CONFIG)");
  return parse_config(read_file(path));
}

FetchPolicy policy_from(const Options& o) {
  FetchPolicy p;
  p.per_host_delay = std::chrono::milliseconds(o.delay_ms);
  p.timeout = std::chrono::seconds(o.timeout_s);
  p.user_agent = o.user_agent;
  p.respect_robots = !o.no_robots;
  return p;
}

std::unique_ptr<IndexStore> open_store(const std::string& path) {
  if (path.empty()) return std::make_unique<IndexStore>();
  return std::make_unique<IndexStore>(std::filesystem::path(path));
}

std::unique_ptr<IndexStore> open_existing_store(const std::string& path) {
  if (path.empty()) throw StorageError("no store given (--store or HARVEST_STORE)");
  if (!std::filesystem::is_regular_file(path)) throw StorageError("store " + path + " does not exist");
  return std::make_unique<IndexStore>(std::filesystem::path(path));
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  const std::string path = o.config.empty() ? o.config_positional : o.config;
  try {
    const auto targets = load_config(path);
    out << "ok: " << targets.size() << (targets.size() == 1 ? " target\n" : " targets\n");
    return 0;
  } catch (const ConfigError& e) {
    err << path << ": " << e.what() << "\n";
    return 1;
  }
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  auto targets = load_config(o.config);
  auto it = std::find_if(targets.begin(), targets.end(), [&](const HarvestTarget& t) { return t.id == o.target_id; });
  if (it == targets.end()) {
    err << "unknown target: " << o.target_id << "\n";
    return 1;
  }
  auto store = open_store(o.store);
  SystemClock clock;
  HttplibTransport transport;
  Fetcher fetcher(transport, clock, policy_from(o));
  Orchestrator orchestrator({*it}, *store, fetcher, clock, OrchestratorOptions{1, std::nullopt});
  orchestrator.trigger(o.target_id);
  orchestrator.wait_idle();
  const JobStatus status = orchestrator.status(o.target_id);
  orchestrator.stop();
  if (!status.last_report) {
    err << "run produced no report\n";
    return 1;
  }
  out << nlohmann::json(*status.last_report).dump(2) << "\n";
  for (const auto& e : status.last_report->errors) err << "error: " << e.url << ": " << e.description << "\n";
  return status.state == JobState::Failed ? 1 : 0;
}

int cmd_serve(const Options& o, std::ostream& err) {
  const auto [host, port] = parse_bind_address(o.bind);
  auto targets = load_config(o.config);

  // Signals are taken synchronously by a watcher thread; block them before
  // any other thread exists so every thread inherits the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto store = open_store(o.store);
  SystemClock clock;
  HttplibTransport transport;
  Fetcher fetcher(transport, clock, policy_from(o));
  Orchestrator orchestrator(std::move(targets), *store, fetcher, clock,
                            OrchestratorOptions{o.workers, std::filesystem::path(o.config)});
  AdminServer server(orchestrator);
  if (!o.ui_dir.empty() && !server.mount_ui(o.ui_dir)) {
    err << "cannot serve UI from " << o.ui_dir << "\n";
    return 1;
  }
  const int bound = server.bind(host, port);
  if (bound < 0) {
    err << "cannot bind " << o.bind << "\n";
    return 1;
  }
  err << "listening on " << host << ":" << bound << "\n";
  orchestrator.start_scheduler();

  std::atomic<bool> done{false};
  std::thread watcher([&] {
    const timespec poll{0, 200'000'000};
    while (!done.load()) {
      if (sigtimedwait(&signals, nullptr, &poll) > 0) {
        server.stop();
        return;
      }
    }
  });
  const bool ok = server.listen();
  done = true;
  watcher.join();
  orchestrator.stop();
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  return ok ? 0 : 1;
}

int cmd_search(const Options& o, std::ostream& out) {
  auto store = open_existing_store(o.store);
  nlohmann::json hits = nlohmann::json::array();
  for (const auto& h : store->search(o.query, o.limit)) {
    hits.push_back({{"source_url", h.source_url},
                    {"target_id", h.target_id},
                    {"content_type", h.content_type},
                    {"score", h.score},
                    {"snippet", h.snippet}});
  }
  out << hits.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
  return 0;
}

int cmd_export(const Options& o, std::ostream& out) {
  auto store = open_existing_store(o.store.empty() ? o.export_store : o.store);
  const std::size_t n = store->export_jsonl(std::filesystem::path(o.export_out));
  out << "exported " << n << (n == 1 ? " document to " : " documents to ") << o.export_out << "\n";
  return 0;
}

void add_fetch_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--delay", o.delay_ms, "Per-host delay between requests in milliseconds")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--timeout", o.timeout_s, "Request timeout in seconds")->check(CLI::PositiveNumber);
  cmd->add_option("--user-agent", o.user_agent, "User-Agent header and robots.txt agent");
  cmd->add_flag("--no-robots", o.no_robots, "Ignore robots.txt");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Focused web harvester"};
  app.name("harvestctl");
  app.require_subcommand(1);

  auto* validate = app.add_subcommand("validate", "Check a configuration file");
  validate->add_option("config", o.config_positional, "Configuration file");

  auto* run = app.add_subcommand("run", "Harvest one target once and print its report");
  run->add_option("--target", o.target_id, "Target id")->required();
  run->add_option("--config", o.config, "Configuration file");
  run->add_option("--store", o.store, "Store file to upsert records into");
  add_fetch_flags(run, o);

  auto* serve = app.add_subcommand("serve", "Run the admin API, scheduler and workers");
  serve->add_option("--config", o.config, "Configuration file (rewritten on changes)");
  serve->add_option("--bind", o.bind, "host:port to listen on");
  serve->add_option("--store", o.store, "Store file");
  serve->add_option("--workers", o.workers, "Concurrent harvest workers")->check(CLI::PositiveNumber);
  serve->add_option("--ui", o.ui_dir, "Static UI bundle served at /");
  add_fetch_flags(serve, o);

  auto* search = app.add_subcommand("search", "Query a store file");
  search->add_option("query", o.query, "Query text")->required();
  search->add_option("--store", o.store, "Store file");
  search->add_option("--limit", o.limit, "Maximum hits")->check(CLI::NonNegativeNumber);

  auto* exp = app.add_subcommand("export", "Write a store's live documents as JSON lines");
  exp->add_option("store", o.export_store, "Store file")->required();
  exp->add_option("out", o.export_out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  apply_env(o);

  try {
    if (*validate) {
      if (o.config.empty() && o.config_positional.empty()) {
        err << "validate: no configuration given\n";
        return 2;
      }
      return cmd_validate(o, out, err);
    }
    if (*run) return cmd_run(o, out, err);
    if (*serve) return cmd_serve(o, err);
    if (*search) return cmd_search(o, out);
    if (*exp) return cmd_export(o, out);
  } catch (const std::exception& e) {
    err << app.get_subcommands().front()->get_name() << ": " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace harvest::cli
