#pragma once

#include "vce/config.hpp"
#include "vce/engine.hpp"
#include "vce/error.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace httplib {
class Server;
}

namespace vce::service {

constexpr double kSessionIdleLimitS = 30.0 * 60.0;

struct TaskDescriptor {
  std::string id;
  ExperimentConfig config;
  std::string instructions;  // HTML shown to workers
  bool closed = false;
};

// Append-only persistence for one task directory:
//   task.json, world.geojson, actions.jsonl (committed sessions),
//   registry.json (atomic snapshot), sessions/<id>.jsonl (live journals).
class FileJournal : public ExperimentJournal {
 public:
  explicit FileJournal(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void on_action(const ActionLogEntry& entry) override;
  void on_commit(const Session& session, std::span<const ActionLogEntry> log, const TabooRegistry& registry) override;
  void on_abandon(const Session& session) override;

  std::filesystem::path live_path(const std::string& session_id) const;

 private:
  std::filesystem::path dir_;
};

struct Response {
  int status = 200;
  nlohmann::json body = nlohmann::json::object();
};

class Service {
 public:
  using Clock = std::function<double()>;

  // Loads and replays every task found under `data_dir`.
  explicit Service(std::filesystem::path data_dir, Clock clock = {});

  // Transport-independent entry point; the HTTP server forwards every request here.
  Response handle(const std::string& method, const std::string& path, const std::string& body);

  // Registers catch-all routes on `server`.
  void install(httplib::Server& server);

  std::size_t task_count() const;
  // Direct access for tests and tools; callers must not hold it across requests.
  const Experiment& experiment(const std::string& task_id) const;

 private:
  struct Task {
    TaskDescriptor descriptor;
    std::unique_ptr<FileJournal> journal;
    std::unique_ptr<Experiment> experiment;
    std::mutex mutex;
  };

  Task& task(const std::string& id) const;
  Task& task_of_session(const std::string& session_id) const;
  void load_task(const std::filesystem::path& dir);
  void save_descriptor(const Task& t) const;

  Response create_task(const nlohmann::json& body);
  nlohmann::json describe(const Task& t) const;
  nlohmann::json view(const Task& t, const Session& s) const;

  std::filesystem::path root_;
  Clock clock_;
  mutable std::mutex tasks_mutex_;
  std::map<std::string, std::unique_ptr<Task>> tasks_;
  std::uint64_t next_task_ = 1;
};

int http_status(ErrorCode code);

// Blocks until the server stops.
int serve(Service& service, const std::string& host, int port);

}  // namespace vce::service
