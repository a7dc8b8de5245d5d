#pragma once

#include "vce/aggregation.hpp"
#include "vce/engine.hpp"
#include "vce/world.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace vce {

enum class PolicyKind { RandomExplorer, GreedyExplorer };

struct WorkerPolicy {
  PolicyKind kind = PolicyKind::RandomExplorer;
  double detection_prob = 0.7;     // per sighting
  double heading_noise_deg = 2.0;  // std-dev of aiming noise
  double backtrack_avoid_prob = 0.8;
  int max_attempts_per_poi = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Schedule {
  enum class Kind { Sequential, Interleaved } kind = Kind::Sequential;
  int width = 1;  // sessions run round-robin when interleaved
};

Schedule parse_schedule(const std::string& text);  // "seq" | "interleaved:K"
std::string to_string(const Schedule& s);

struct SimParams {
  ClockCosts costs;
  int step_cap = 5000;
  int max_sessions = 0;  // 0: four times num_executions
  int n_policy_seeds = 1;
};

struct ExperimentConfig {
  WorldParams world;
  std::optional<std::string> world_file;
  TaskConfig task;
  TabooConfig taboo;  // used only with the taboo strategy
  AggregationParams aggregation;
  Schedule schedule;
  WorkerPolicy policy;
  SimParams sim;
  std::uint64_t seed = 1;

  std::optional<TabooConfig> taboo_if_enabled() const {
    return task.strategy == Strategy::Taboo ? std::optional<TabooConfig>(taboo) : std::nullopt;
  }
  void validate() const;
};

// `key = value` lines; `#` starts a comment. Unknown keys are a ParseError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical rendering of every key; parse_config(dump_config(c)) == c.
std::string dump_config(const ExperimentConfig& cfg);

Strategy parse_strategy(const std::string& text);

}  // namespace vce
