#include "vce/cli.hpp"

#include "vce/config.hpp"
#include "vce/error.hpp"
#include "vce/evaluation.hpp"
#include "vce/geojson.hpp"
#include "vce/io.hpp"
#include "vce/service.hpp"
#include "vce/sim.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <optional>

namespace vce::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string in;
  std::string strategy;
  std::string schedule;
  std::string format;
  std::string a;
  std::string b;
  double threshold_m = 10.0;
  int samples = 200;
  bool dedup = false;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;
};

ExperimentConfig base_config(const Options& o) {
  return o.config.empty() ? ExperimentConfig{} : load_config(o.config);
}

json read_json(const fs::path& path) {
  auto j = json::parse(io::read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ParseError, "not valid JSON: " + path.string());
  return j;
}

// A run-sim output directory, or a bare actions.jsonl with a world beside it.
struct Bundle {
  fs::path dir;
  std::optional<ExperimentConfig> config;
  std::vector<ActionLogEntry> log;

  World world() const { return geojson::world_from_geojson(read_json(dir / "world.geojson")); }
};

Bundle load_bundle(const fs::path& in) {
  Bundle b;
  fs::path log_path = in;
  if (fs::is_directory(in)) {
    b.dir = in;
    log_path = in / "actions.jsonl";
  } else {
    b.dir = in.parent_path().empty() ? fs::path(".") : in.parent_path();
  }
  if (!fs::exists(log_path)) throw Error(ErrorCode::IoError, "no action log at " + log_path.string());
  b.log = parse_jsonl(io::read_file(log_path));
  if (fs::exists(b.dir / "config.cfg")) b.config = load_config(b.dir / "config.cfg");
  return b;
}

AggregationParams aggregation_for(const Options& o, const std::optional<ExperimentConfig>& bundled) {
  if (!o.config.empty()) return load_config(o.config).aggregation;
  return bundled ? bundled->aggregation : AggregationParams{};
}

std::vector<Detection> flatten(const std::vector<std::vector<Detection>>& executions) {
  std::vector<Detection> all;
  for (const auto& e : executions) all.insert(all.end(), e.begin(), e.end());
  return all;
}

void emit(const Options& o, const std::string& content, std::ostream& out) {
  if (o.out.empty()) out << content;
  else io::write_file(o.out, content);
}

void require_format(const Options& o, std::initializer_list<const char*> allowed) {
  if (o.format.empty()) return;
  for (const char* f : allowed) {
    if (o.format == f) return;
  }
  throw CLI::ValidationError("--format", "unsupported format '" + o.format + "' for this command");
}

int cmd_gen_world(const Options& o, std::ostream& out) {
  require_format(o, {"geojson"});
  ExperimentConfig cfg = base_config(o);
  if (o.seed) cfg.world.seed = *o.seed;
  const World world = generate_synthetic_world(cfg.world);
  const fs::path dir = o.out;
  io::write_file(dir / "world.geojson", geojson::world_to_geojson(world).dump(1) + "\n");
  io::write_file(dir / "truth.geojson", geojson::map_to_geojson(geojson::truth_map(world)).dump(1) + "\n");
  out << "nodes," << world.graph().size() << "\npois," << world.pois().size() << "\n";
  return kExitOk;
}

int cmd_run_sim(const Options& o, std::ostream& out) {
  ExperimentConfig cfg = base_config(o);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.strategy.empty()) cfg.task.strategy = parse_strategy(o.strategy);
  if (!o.schedule.empty()) cfg.schedule = parse_schedule(o.schedule);
  cfg.validate();
  const auto results = run_replicates(cfg);
  for (const auto& r : results) {
    const fs::path dir = results.size() == 1 ? fs::path(o.out) : fs::path(o.out) / ("seed_" + std::to_string(r.config.seed));
    write_bundle(r, dir);
    out << summary_csv(r);
  }
  return kExitOk;
}

int cmd_aggregate(const Options& o, std::ostream& out) {
  require_format(o, {"geojson", "csv"});
  std::vector<Detection> detections;
  std::optional<ExperimentConfig> bundled;
  const fs::path in = o.in;
  if (in.extension() == ".geojson" || in.extension() == ".json") {
    detections = geojson::detections_from_geojson(read_json(in));
  } else {
    Bundle b = load_bundle(in);
    bundled = b.config;
    detections = flatten(executions_from_log(b.log));
  }
  const auto clusters = consolidate(detections, aggregation_for(o, bundled));
  if (o.format == "csv") {
    std::string csv = "cluster_id,lat,lon,n_detections,distinct_workers\n";
    for (const auto& c : clusters) {
      csv += std::to_string(c.id) + "," + io::fixed(c.centroid.lat, 9) + "," + io::fixed(c.centroid.lon, 9) + "," +
             std::to_string(c.members.size()) + "," + std::to_string(c.distinct_workers) + "\n";
    }
    emit(o, csv, out);
  } else {
    emit(o, geojson::clusters_to_geojson(clusters).dump(1) + "\n", out);
  }
  return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
  require_format(o, {"csv"});
  const PoIMap a = geojson::map_from_geojson(read_json(o.a), fs::path(o.a).stem().string());
  const PoIMap b = geojson::map_from_geojson(read_json(o.b), fs::path(o.b).stem().string());
  const auto cmp = match_maps(a, b, o.threshold_m);
  emit(o, comparison_csv_header() + comparison_csv_row(a.name, b.name, cmp), out);
  return kExitOk;
}

int cmd_sample_curve(const Options& o, std::ostream& out) {
  require_format(o, {"csv"});
  Bundle b = load_bundle(o.in);
  const auto curve = sampling_curve(executions_from_log(b.log), aggregation_for(o, b.config), o.samples, o.seed.value_or(1));
  emit(o, sampling_curve_csv(curve), out);
  return kExitOk;
}

int cmd_coverage(const Options& o, std::ostream& out, std::ostream& err) {
  require_format(o, {"csv"});
  Bundle b = load_bundle(o.in);
  const World world = b.world();
  const auto report = coverage(world.graph(), visits_from_log(b.log));
  const std::string csv = geojson::heatmap_csv(world.graph(), o.dedup ? report.heatmap_dedup : report.heatmap);
  if (o.out.empty()) {
    out << csv;
    err << "coverage_percent," << io::fixed(report.percent, 4) << "\n";
  } else {
    io::write_file(o.out, csv);
    out << "coverage_percent," << io::fixed(report.percent, 4) << "\n";
  }
  return kExitOk;
}

std::optional<TabooConfig> taboo_for(const Options& o, const std::optional<ExperimentConfig>& bundled) {
  if (!o.config.empty()) return load_config(o.config).taboo_if_enabled();
  return bundled ? bundled->taboo_if_enabled() : std::nullopt;
}

int cmd_behavior(const Options& o, std::ostream& out) {
  require_format(o, {"csv"});
  Bundle b = load_bundle(o.in);
  const auto stats = behavior_stats(b.log, taboo_for(o, b.config));
  if (o.out.empty()) {
    out << behavior_csv(stats);
    return kExitOk;
  }
  const fs::path dir = o.out;
  io::write_file(dir / "behavior.csv", behavior_csv(stats));
  io::write_file(dir / "steps_after_detection.csv", steps_after_csv(stats));
  io::write_file(dir / "interface_errors.csv", error_histogram_csv(stats));
  io::write_file(dir / "escape_scatter.csv", escape_scatter_csv(stats));
  return kExitOk;
}

int cmd_plot_data(const Options& o, std::ostream& out) {
  require_format(o, {"csv"});
  Bundle b = load_bundle(o.in);
  const auto params = aggregation_for(o, b.config);
  const auto executions = executions_from_log(b.log);
  const auto clusters = consolidate(flatten(executions), params);
  const auto stats = behavior_stats(b.log, taboo_for(o, b.config));
  const fs::path dir = o.out;
  io::write_file(dir / "cumulative.csv", cumulative_csv(cumulative_by_completion(executions, params)));
  io::write_file(dir / "detections_per_confirmed.csv", detections_per_confirmed_csv(detections_per_confirmed(clusters)));
  io::write_file(dir / "sampling_curve.csv", sampling_curve_csv(sampling_curve(executions, params, o.samples, o.seed.value_or(1))));
  io::write_file(dir / "behavior.csv", behavior_csv(stats));
  io::write_file(dir / "steps_after_detection.csv", steps_after_csv(stats));
  io::write_file(dir / "interface_errors.csv", error_histogram_csv(stats));
  io::write_file(dir / "escape_scatter.csv", escape_scatter_csv(stats));
  if (fs::exists(b.dir / "world.geojson")) {
    const World world = b.world();
    const auto report = coverage(world.graph(), visits_from_log(b.log));
    io::write_file(dir / "heatmap.csv", geojson::heatmap_csv(world.graph(), report.heatmap));
  }
  out << "wrote plot data to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_serve(const Options& o) {
  std::string data = o.data_dir;
  if (data.empty()) {
    const char* env = std::getenv("VCE_DATA_DIR");
    data = env && *env ? env : "vce-data";
  }
  service::Service svc(data);
  return service::serve(svc, o.host, o.port);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Virtual city exploration: task engine, simulator and analysis tools", "vce"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* c) { c->add_option("--config", o.config, "experiment config file"); };
  auto add_seed = [&](CLI::App* c, const char* help) { c->add_option("--seed", o.seed, help); };
  auto add_format = [&](CLI::App* c) { c->add_option("--format", o.format, "output format (geojson|csv)"); };

  auto* gen = app.add_subcommand("gen-world", "generate a synthetic world");
  add_config(gen);
  add_seed(gen, "world seed");
  gen->add_option("--out", o.out, "output directory")->required();
  add_format(gen);

  auto* sim = app.add_subcommand("run-sim", "run a simulated experiment and write a result bundle");
  add_config(sim);
  add_seed(sim, "simulation seed");
  sim->add_option("--strategy", o.strategy, "basic|taboo")->check(CLI::IsMember({"basic", "taboo"}));
  sim->add_option("--schedule", o.schedule, "seq|interleaved:K");
  sim->add_option("--out", o.out, "bundle directory")->required();

  auto* agg = app.add_subcommand("aggregate", "cluster detections into confirmed PoIs");
  agg->add_option("--in", o.in, "bundle directory, actions.jsonl or detections.geojson")->required();
  add_config(agg);
  agg->add_option("--out", o.out, "output file (default stdout)");
  add_format(agg);

  auto* cmp = app.add_subcommand("compare", "compare two PoI maps");
  cmp->add_option("--a", o.a, "map A (GeoJSON)")->required();
  cmp->add_option("--b", o.b, "map B (GeoJSON)")->required();
  cmp->add_option("--threshold", o.threshold_m, "match threshold in meters");
  cmp->add_option("--out", o.out, "output CSV (default stdout)");
  add_format(cmp);

  auto* curve = app.add_subcommand("sample-curve", "confirmed PoIs versus number of executions");
  curve->add_option("--in", o.in, "bundle directory or actions.jsonl")->required();
  add_config(curve);
  add_seed(curve, "sampling seed");
  curve->add_option("--samples", o.samples, "subsets drawn per n")->check(CLI::PositiveNumber);
  curve->add_option("--out", o.out, "output CSV (default stdout)");
  add_format(curve);

  auto* cov = app.add_subcommand("coverage", "explored-node coverage and visit heatmap");
  cov->add_option("--in", o.in, "bundle directory or actions.jsonl")->required();
  cov->add_flag("--dedup", o.dedup, "count each session once per node");
  cov->add_option("--out", o.out, "heatmap CSV (default stdout)");
  add_format(cov);

  auto* beh = app.add_subcommand("behavior", "per-session time, distance, steps and interface errors");
  beh->add_option("--in", o.in, "bundle directory or actions.jsonl")->required();
  add_config(beh);
  beh->add_option("--out", o.out, "output directory (default: behavior table on stdout)");
  add_format(beh);

  auto* srv = app.add_subcommand("serve", "run the HTTP service");
  srv->add_option("--host", o.host, "bind address");
  srv->add_option("--port", o.port, "port")->check(CLI::Range(1, 65535));
  srv->add_option("--data", o.data_dir, "store directory (default $VCE_DATA_DIR or ./vce-data)");

  auto* plot = app.add_subcommand("plot-data", "write every chart's data as CSV");
  plot->add_option("--in", o.in, "bundle directory")->required();
  add_config(plot);
  add_seed(plot, "sampling seed");
  plot->add_option("--samples", o.samples, "subsets drawn per n for the sampling curve")->check(CLI::PositiveNumber);
  plot->add_option("--out", o.out, "output directory")->required();
  add_format(plot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << "error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_world(o, out);
    if (sim->parsed()) return cmd_run_sim(o, out);
    if (agg->parsed()) return cmd_aggregate(o, out);
    if (cmp->parsed()) return cmd_compare(o, out);
    if (curve->parsed()) return cmd_sample_curve(o, out);
    if (cov->parsed()) return cmd_coverage(o, out, err);
    if (beh->parsed()) return cmd_behavior(o, out);
    if (srv->parsed()) return cmd_serve(o);
    if (plot->parsed()) return cmd_plot_data(o, out);
  } catch (const CLI::ValidationError& e) {
    err << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace vce::cli
