// umem: command-line front end for the mobility estimation pipeline.
//
//   umem synth  --out DIR [--zones N] [--side-km L] [--population P]
//               [--poi-density D] [--network grid|jitter|sparse] [--seed S]
//   umem run    SCENARIO [--set key=value]... [--seed S] [--out DIR] [--threads T] [--no-cache]
//   umem gwpc   SCENARIO [--csv]         stages 1-2
//   umem trips  SCENARIO                 stages 1-3
//   umem assign SCENARIO --trips FILE    stage 4 from a trip dump
//   umem check  SCENARIO                 validate config and input data
//
// Exit codes: 0 success, 1 validation failure, 2 runtime failure,
// 3 conservation-check failure.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "umem/pipeline.hpp"
#include "umem/synth.hpp"

namespace {

using namespace umem;
using namespace umem::io;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitConservation = 3;

struct CommonOptions {
  std::string scenario;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("scenario", o.scenario, "Scenario JSON file")->required();
  cmd->add_option("--set", o.overrides, "Override a config key (dotted.key=value)");
  cmd->add_option("--seed", o.seed, "Override rng_seed");
  cmd->add_option("--out", o.out, "Override output_dir");
  cmd->add_option("--threads", o.threads, "Worker thread cap (default: UMEM_THREADS or all cores)");
}

ScenarioConfig load(const CommonOptions& o, bool require_files = true) {
  auto overrides = o.overrides;
  if (o.seed) overrides.push_back("rng_seed=" + std::to_string(*o.seed));
  if (o.out) overrides.push_back("output_dir=" + nlohmann::json(*o.out).dump());
  if (o.threads) overrides.push_back("threads=" + std::to_string(*o.threads));
  return load_scenario(o.scenario, overrides, require_files);
}

int finish(const RunReport& report, const fs::path& out_dir) {
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& c : report.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " residual=" << c.residual << " tol=" << c.tolerance << '\n';
  std::cout << "outputs written to " << out_dir.string() << '\n';
  return report.all_checks_pass() ? kExitOk : kExitConservation;
}

int cmd_run(const CommonOptions& o, bool no_cache) {
  const auto cfg = load(o);
  const auto result = run_pipeline(cfg, !no_cache);
  std::cout << "zones=" << result.area.grid.size() << " trips=" << result.report.counts.at("trips")
            << " path_flows=" << result.flows.size() << (result.report.gwpc_cache_hit ? " (gwpc cache hit)" : "") << '\n';
  return finish(result.report, cfg.output_dir);
}

int cmd_gwpc(const CommonOptions& o, bool csv) {
  const auto cfg = load(o);
  fs::create_directories(cfg.output_dir);
  RunReport report;
  const auto area = run_area_stage(cfg, report);
  const auto g = run_potential_stage(cfg, area.grid, report);
  write_grid_csv(cfg.output_dir / "grid.csv", area.grid);
  if (csv) write_gwpc_csv(cfg.output_dir / "gwpc.csv", g);
  write_report(cfg.output_dir / "report.json", report);
  return finish(report, cfg.output_dir);
}

int cmd_trips(const CommonOptions& o) {
  const auto cfg = load(o);
  fs::create_directories(cfg.output_dir);
  RunReport report;
  const auto area = run_area_stage(cfg, report);
  const auto g = run_potential_stage(cfg, area.grid, report);
  const auto trips = run_trip_stage(cfg, area.grid, g, report);
  write_grid_csv(cfg.output_dir / "grid.csv", area.grid);
  write_trips_csv(cfg.output_dir / "trips.csv", trips, cfg.modalities);
  write_report(cfg.output_dir / "report.json", report);
  return finish(report, cfg.output_dir);
}

int cmd_assign(const CommonOptions& o, const std::string& trips_path) {
  const auto cfg = load(o);
  fs::create_directories(cfg.output_dir);
  RunReport report;
  const auto area = run_area_stage(cfg, report);
  const auto trips = run_stage("assign", [&] { return read_trips_csv(trips_path, cfg.modalities); });
  for (const auto& [origin, list] : trips)
    if (origin >= area.grid.size()) throw StageError("assign", InputError("trip origin outside the grid"), true);
  const auto net = run_stage("assign", [&] { return read_network_csv(cfg.nodes_path, cfg.segments_path); });
  const auto s = run_assign_stage(cfg, area.grid, trips, net, report);
  write_loads_csv(cfg.output_dir / "loads.csv", *s.loads);
  write_loads_geojson(cfg.output_dir / "loads.geojson", *s.loads);
  write_report(cfg.output_dir / "report.json", report);
  return finish(report, cfg.output_dir);
}

int cmd_check(const CommonOptions& o) {
  const auto cfg = load(o);
  const auto clusters = read_clusters_geojson(cfg.clusters_path);
  const auto pois = read_pois_csv(cfg.pois_path);
  const auto net = read_network_csv(cfg.nodes_path, cfg.segments_path);
  validate_modalities(cfg.modalities);
  cfg.evolution.validate();
  std::cout << "ok: " << clusters.size() << " clusters, " << pois.size() << " POIs, " << net.nodes().size()
            << " nodes, " << net.segments().size() << " segments (" << net.component_count() << " components)\n";
  return kExitOk;
}

int cmd_synth(const SynthSpec& spec, const std::string& out) {
  const auto path = write_synth_scenario(spec, out);
  std::cout << "scenario written to " << path.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mobility flow estimation from population, POI and road network data"};
  app.require_subcommand(1);

  SynthSpec spec;
  std::string synth_out, network = "grid";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--zones", spec.zones_per_side, "Zones per side of the square area");
  synth->add_option("--side-km", spec.side_length_km, "Zone side length in km");
  synth->add_option("--population", spec.population, "Total population");
  synth->add_option("--poi-density", spec.poi_density_per_km2, "POIs per km^2");
  synth->add_option("--network", network, "Road network style: grid, jitter or sparse");
  synth->add_option("--seed", spec.seed, "Random seed");

  CommonOptions run_o, gwpc_o, trips_o, assign_o, check_o;
  bool no_cache = false, csv = false;
  std::string trips_file;
  auto* run = app.add_subcommand("run", "Run the full pipeline");
  add_common(run, run_o);
  run->add_flag("--no-cache", no_cache, "Ignore and do not write the GWPC cache");
  auto* gwpc = app.add_subcommand("gwpc", "Build the potential graph (stages 1-2)");
  add_common(gwpc, gwpc_o);
  gwpc->add_flag("--csv", csv, "Also write gwpc.csv");
  auto* trips = app.add_subcommand("trips", "Generate trips (stages 1-3)");
  add_common(trips, trips_o);
  auto* assign = app.add_subcommand("assign", "Assign a trip dump to the road network (stage 4)");
  add_common(assign, assign_o);
  assign->add_option("--trips", trips_file, "Trip dump CSV")->required();
  auto* check = app.add_subcommand("check", "Validate the scenario and its input files");
  add_common(check, check_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*synth) {
      spec.network = parse_network_style(network);
      return cmd_synth(spec, synth_out);
    }
    if (*run) return cmd_run(run_o, no_cache);
    if (*gwpc) return cmd_gwpc(gwpc_o, csv);
    if (*trips) return cmd_trips(trips_o);
    if (*assign) return cmd_assign(assign_o, trips_file);
    if (*check) return cmd_check(check_o);
  } catch (const ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kExitValidation;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.input_problem() ? kExitValidation : kExitRuntime;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
