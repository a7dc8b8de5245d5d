#include "vce/config.hpp"

#include "vce/error.hpp"
#include "vce/io.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace vce {

void WorkerPolicy::validate() const {
  if (detection_prob < 0.0 || detection_prob > 1.0 || backtrack_avoid_prob < 0.0 || backtrack_avoid_prob > 1.0 ||
      heading_noise_deg < 0.0 || max_attempts_per_poi < 1) {
    throw Error(ErrorCode::InvalidParams, "invalid worker policy");
  }
}

void ExperimentConfig::validate() const {
  task.validate();
  if (task.strategy == Strategy::Taboo) taboo.validate();
  aggregation.validate();
  policy.validate();
  if (schedule.width < 1 || sim.step_cap < 1 || sim.max_sessions < 0 || sim.n_policy_seeds < 1) {
    throw Error(ErrorCode::InvalidParams, "invalid simulation parameters");
  }
}

Schedule parse_schedule(const std::string& text) {
  if (text == "seq" || text == "sequential") return {};
  const std::string prefix = "interleaved:";
  if (text.rfind(prefix, 0) == 0) {
    try {
      std::size_t used = 0;
      const int k = std::stoi(text.substr(prefix.size()), &used);
      if (used == text.size() - prefix.size() && k >= 1) return {Schedule::Kind::Interleaved, k};
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::ParseError, "bad schedule '" + text + "' (expected seq or interleaved:K)");
}

std::string to_string(const Schedule& s) {
  return s.kind == Schedule::Kind::Sequential ? "seq" : "interleaved:" + std::to_string(s.width);
}

Strategy parse_strategy(const std::string& text) {
  if (text == "basic") return Strategy::Basic;
  if (text == "taboo") return Strategy::Taboo;
  throw Error(ErrorCode::ParseError, "bad strategy '" + text + "' (expected basic or taboo)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ParseError, "key '" + key + "' expects a number, got '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ParseError, "key '" + key + "' expects an integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::ParseError, "key '" + key + "' expects true/false, got '" + v + "'");
}

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&t](const std::string& key, std::function<double&(ExperimentConfig&)> ref) {
      t[key] = [ref](ExperimentConfig& c, const std::string& k, const std::string& v) { ref(c) = to_double(k, v); };
    };
    auto integer = [&t](const std::string& key, std::function<int&(ExperimentConfig&)> ref) {
      t[key] = [ref](ExperimentConfig& c, const std::string& k, const std::string& v) {
        ref(c) = static_cast<int>(to_int(k, v));
      };
    };
    auto seed = [&t](const std::string& key, std::function<std::uint64_t&(ExperimentConfig&)> ref) {
      t[key] = [ref](ExperimentConfig& c, const std::string& k, const std::string& v) {
        const long long i = to_int(k, v);
        if (i < 0) throw Error(ErrorCode::ParseError, "key '" + k + "' must be non-negative");
        ref(c) = static_cast<std::uint64_t>(i);
      };
    };

    t["world.file"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.world_file = v.empty() ? std::nullopt : std::optional<std::string>(v);
    };
    integer("world.rows", [](auto& c) -> int& { return c.world.grid_rows; });
    integer("world.cols", [](auto& c) -> int& { return c.world.grid_cols; });
    real("world.spacing_m", [](auto& c) -> double& { return c.world.spacing_m; });
    integer("world.segments_per_block", [](auto& c) -> int& { return c.world.segments_per_block; });
    integer("world.n_pois", [](auto& c) -> int& { return c.world.n_pois; });
    real("world.sight_radius_m", [](auto& c) -> double& { return c.world.sight_radius_m; });
    seed("world.seed", [](auto& c) -> std::uint64_t& { return c.world.seed; });
    t["world.origin_lat"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.world.origin = GeoPoint(to_double(k, v), c.world.origin.lon);
    };
    t["world.origin_lon"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.world.origin = GeoPoint(c.world.origin.lat, to_double(k, v));
    };
    real("world.jump_range_m", [](auto& c) -> double& { return c.world.jump_range_m; });
    real("world.poi_offset_min_m", [](auto& c) -> double& { return c.world.poi_offset_min_m; });
    real("world.poi_offset_max_m", [](auto& c) -> double& { return c.world.poi_offset_max_m; });
    real("world.min_poi_separation_m", [](auto& c) -> double& { return c.world.min_poi_separation_m; });
    real("world.aoi_margin_m", [](auto& c) -> double& { return c.world.aoi_margin_m; });
    integer("world.outer_blocks", [](auto& c) -> int& { return c.world.outer_blocks; });
    t["world.name"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.world.name = v; };

    t["task.strategy"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.task.strategy = parse_strategy(v);
    };
    integer("task.num_executions", [](auto& c) -> int& { return c.task.num_executions; });
    integer("task.num_instances", [](auto& c) -> int& { return c.task.num_instances; });
    real("task.reward", [](auto& c) -> double& { return c.task.reward; });
    real("task.delta_m", [](auto& c) -> double& { return c.task.delta_m; });
    real("task.duplicate_radius_m", [](auto& c) -> double& { return c.task.duplicate_radius_m; });
    t["task.allow_repeat"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.task.allow_repeat = to_bool(k, v);
    };

    integer("taboo.threshold", [](auto& c) -> int& { return c.taboo.taboo_threshold; });
    real("taboo.escape_distance_m", [](auto& c) -> double& { return c.taboo.escape_distance_m; });
    real("taboo.escape_time_s", [](auto& c) -> double& { return c.taboo.escape_time_s; });
    real("taboo.radius_m", [](auto& c) -> double& { return c.taboo.taboo_radius_m; });
    t["taboo.escape_mode"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v == "and") c.taboo.escape_mode = EscapeMode::And;
      else if (v == "or") c.taboo.escape_mode = EscapeMode::Or;
      else throw Error(ErrorCode::ParseError, "key '" + k + "' expects and/or");
    };

    real("aggregation.eps_m", [](auto& c) -> double& { return c.aggregation.eps_m; });
    integer("aggregation.min_pts", [](auto& c) -> int& { return c.aggregation.min_pts; });

    seed("sim.seed", [](auto& c) -> std::uint64_t& { return c.seed; });
    t["sim.schedule"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.schedule = parse_schedule(v);
    };
    t["sim.policy"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v == "random") c.policy.kind = PolicyKind::RandomExplorer;
      else if (v == "greedy") c.policy.kind = PolicyKind::GreedyExplorer;
      else throw Error(ErrorCode::ParseError, "key '" + k + "' expects random/greedy");
    };
    real("sim.detection_prob", [](auto& c) -> double& { return c.policy.detection_prob; });
    real("sim.heading_noise_deg", [](auto& c) -> double& { return c.policy.heading_noise_deg; });
    real("sim.backtrack_avoid_prob", [](auto& c) -> double& { return c.policy.backtrack_avoid_prob; });
    integer("sim.max_attempts_per_poi", [](auto& c) -> int& { return c.policy.max_attempts_per_poi; });
    integer("sim.step_cap", [](auto& c) -> int& { return c.sim.step_cap; });
    integer("sim.max_sessions", [](auto& c) -> int& { return c.sim.max_sessions; });
    integer("sim.n_policy_seeds", [](auto& c) -> int& { return c.sim.n_policy_seeds; });
    real("sim.move_s", [](auto& c) -> double& { return c.sim.costs.move_s; });
    real("sim.shot_s", [](auto& c) -> double& { return c.sim.costs.shot_s; });
    real("sim.submit_s", [](auto& c) -> double& { return c.sim.costs.submit_s; });
    real("sim.discard_s", [](auto& c) -> double& { return c.sim.costs.discard_s; });
    return t;
  }();
  return table;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(io::read_file(path)); }

std::string dump_config(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "# world\n";
  o << "world.file = " << c.world_file.value_or("") << "\n";
  o << "world.rows = " << c.world.grid_rows << "\n";
  o << "world.cols = " << c.world.grid_cols << "\n";
  o << "world.spacing_m = " << num(c.world.spacing_m) << "\n";
  o << "world.segments_per_block = " << c.world.segments_per_block << "\n";
  o << "world.n_pois = " << c.world.n_pois << "\n";
  o << "world.sight_radius_m = " << num(c.world.sight_radius_m) << "\n";
  o << "world.seed = " << c.world.seed << "\n";
  o << "world.origin_lat = " << num(c.world.origin.lat) << "\n";
  o << "world.origin_lon = " << num(c.world.origin.lon) << "\n";
  o << "world.jump_range_m = " << num(c.world.jump_range_m) << "\n";
  o << "world.poi_offset_min_m = " << num(c.world.poi_offset_min_m) << "\n";
  o << "world.poi_offset_max_m = " << num(c.world.poi_offset_max_m) << "\n";
  o << "world.min_poi_separation_m = " << num(c.world.min_poi_separation_m) << "\n";
  o << "world.aoi_margin_m = " << num(c.world.aoi_margin_m) << "\n";
  o << "world.outer_blocks = " << c.world.outer_blocks << "\n";
  o << "world.name = " << c.world.name << "\n";
  o << "# task\n";
  o << "task.strategy = " << to_string(c.task.strategy) << "\n";
  o << "task.num_executions = " << c.task.num_executions << "\n";
  o << "task.num_instances = " << c.task.num_instances << "\n";
  o << "task.reward = " << num(c.task.reward) << "\n";
  o << "task.delta_m = " << num(c.task.delta_m) << "\n";
  o << "task.duplicate_radius_m = " << num(c.task.duplicate_radius_m) << "\n";
  o << "task.allow_repeat = " << (c.task.allow_repeat ? "true" : "false") << "\n";
  o << "# taboo\n";
  o << "taboo.threshold = " << c.taboo.taboo_threshold << "\n";
  o << "taboo.escape_distance_m = " << num(c.taboo.escape_distance_m) << "\n";
  o << "taboo.escape_time_s = " << num(c.taboo.escape_time_s) << "\n";
  o << "taboo.radius_m = " << num(c.taboo.taboo_radius_m) << "\n";
  o << "taboo.escape_mode = " << (c.taboo.escape_mode == EscapeMode::And ? "and" : "or") << "\n";
  o << "# aggregation\n";
  o << "aggregation.eps_m = " << num(c.aggregation.eps_m) << "\n";
  o << "aggregation.min_pts = " << c.aggregation.min_pts << "\n";
  o << "# simulation\n";
  o << "sim.seed = " << c.seed << "\n";
  o << "sim.schedule = " << to_string(c.schedule) << "\n";
  o << "sim.policy = " << (c.policy.kind == PolicyKind::RandomExplorer ? "random" : "greedy") << "\n";
  o << "sim.detection_prob = " << num(c.policy.detection_prob) << "\n";
  o << "sim.heading_noise_deg = " << num(c.policy.heading_noise_deg) << "\n";
  o << "sim.backtrack_avoid_prob = " << num(c.policy.backtrack_avoid_prob) << "\n";
  o << "sim.max_attempts_per_poi = " << c.policy.max_attempts_per_poi << "\n";
  o << "sim.step_cap = " << c.sim.step_cap << "\n";
  o << "sim.max_sessions = " << c.sim.max_sessions << "\n";
  o << "sim.n_policy_seeds = " << c.sim.n_policy_seeds << "\n";
  o << "sim.move_s = " << num(c.sim.costs.move_s) << "\n";
  o << "sim.shot_s = " << num(c.sim.costs.shot_s) << "\n";
  o << "sim.submit_s = " << num(c.sim.costs.submit_s) << "\n";
  o << "sim.discard_s = " << num(c.sim.costs.discard_s) << "\n";
  return o.str();
}

}  // namespace vce
