#pragma once

// Orchestration of the four stages (area + demand, potential graph, trip
// evolution, assignment) with conservation checks and run reporting.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "umem/assign.hpp"
#include "umem/config.hpp"
#include "umem/demand.hpp"
#include "umem/formats.hpp"
#include "umem/potential.hpp"
#include "umem/spatial.hpp"
#include "umem/tripgen.hpp"

namespace umem::io {

/// A module error tagged with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::exception& cause, bool input_problem)
      : Error("[" + stage + "] " + cause.what()), stage_(std::move(stage)), input_problem_(input_problem) {}
  const std::string& stage() const { return stage_; }
  bool input_problem() const { return input_problem_; }

 private:
  std::string stage_;
  bool input_problem_;
};

template <class F>
auto run_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const InputError& e) {
    throw StageError(stage, e, true);
  } catch (const ParameterError& e) {
    throw StageError(stage, e, true);
  } catch (const std::exception& e) {
    throw StageError(stage, e, false);
  }
}

struct ConservationCheck {
  std::string name;
  bool passed = false;
  double residual = 0.0;
  double tolerance = 0.0;
};

struct RunReport {
  std::map<std::string, double> timings_s;
  std::map<std::string, double> counts;
  std::map<std::string, double> diagnostics;
  std::vector<ConservationCheck> checks;
  std::vector<std::string> warnings;
  bool gwpc_cache_hit = false;

  bool all_checks_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const ConservationCheck& c) { return c.passed; });
  }

  void check(std::string name, double residual, double tolerance) {
    checks.push_back({std::move(name), residual <= tolerance, residual, tolerance});
  }

  json to_json() const {
    json j;
    j["timings_s"] = timings_s;
    j["counts"] = counts;
    j["diagnostics"] = diagnostics;
    j["warnings"] = warnings;
    j["gwpc_cache_hit"] = gwpc_cache_hit;
    j["checks"] = json::array();
    for (const auto& c : checks)
      j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"residual", c.residual}, {"tolerance", c.tolerance}});
    j["all_checks_pass"] = all_checks_pass();
    return j;
  }
};

inline constexpr double kConservationTolerance = 1e-9;

class StageTimer {
 public:
  StageTimer(RunReport& r, std::string name) : report_(r), name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    report_.timings_s[name_] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  RunReport& report_;
  std::string name_;
  std::chrono::steady_clock::time_point t0_;
};

// --- stage 1 ----------------------------------------------------------------

struct AreaStage {
  std::vector<LivingCluster> clusters;
  TargetArea area;
  ZoneGrid grid;
  DemandWeights weights;
  std::vector<PoiCategory> categories;
  PoiRejects rejects;
};

inline AreaStage run_area_stage(const ScenarioConfig& cfg, RunReport& report) {
  StageTimer timer(report, "1_area_demand");
  AreaStage s;
  run_stage("spatial", [&] {
    s.clusters = read_clusters_geojson(cfg.clusters_path);
    const double margin = cfg.margin_m ? *cfg.margin_m : pte_margin(cfg.pte(), cfg.margin_profile());
    s.area = build_target_area(s.clusters, margin);
    s.grid = assign_population(make_grid(s.area, cfg.side_length_km), s.clusters);
    return 0;
  });
  run_stage("demand", [&] {
    s.weights = normalize_weights(cfg.alpha_poi, cfg.top_k);
    const auto pois = read_pois_csv(cfg.pois_path);
    s.categories = bin_pois(s.grid, pois, cfg.category_ranks, s.rejects);
    s.grid = aggregate_wpo(std::move(s.grid), s.categories, s.weights, &s.rejects);
    report.counts["pois"] = static_cast<double>(pois.size());
    return 0;
  });

  KahanSum cluster_pop, zone_pop, weight_sum, wpo_expected, wpo_total;
  for (const auto& c : s.clusters) cluster_pop += c.population;
  for (const auto& z : s.grid.zones) {
    zone_pop += z.population;
    wpo_total += z.wpo;
  }
  for (double p : s.weights.probabilities) weight_sum += p;
  for (const auto& cat : s.categories)
    for (const auto& [zone, count] : cat.count_per_zone) wpo_expected += s.weights.weight(cat.rank_z) * count;

  report.check("population_conservation", relative_residual(zone_pop.value(), cluster_pop.value()), kConservationTolerance);
  report.check("demand_weight_normalization", std::fabs(weight_sum.value() - 1.0), kConservationTolerance);
  report.check("wpo_total", relative_residual(wpo_total.value(), wpo_expected.value()), kConservationTolerance);
  report.counts["clusters"] = static_cast<double>(s.clusters.size());
  report.counts["zones"] = static_cast<double>(s.grid.size());
  report.counts["active_zones"] = static_cast<double>(s.grid.active_count());
  report.counts["population"] = zone_pop.value();
  report.counts["total_wpo"] = wpo_total.value();
  report.diagnostics["target_area_margin_m"] = s.area.margin_m;
  report.diagnostics["poi_rejects_outside_grid"] = static_cast<double>(s.rejects.outside_grid);
  report.diagnostics["poi_rejects_inactive_zone"] = static_cast<double>(s.rejects.inactive_zone);
  report.diagnostics["poi_rejects_unranked_category"] = static_cast<double>(s.rejects.unranked_category);
  if (s.rejects.total() > 0)
    report.warnings.push_back(std::to_string(s.rejects.total()) + " POIs were ignored (see diagnostics)");
  return s;
}

// --- stage 2 ----------------------------------------------------------------

inline fs::path gwpc_cache_path(const fs::path& out_dir, std::uint64_t key) {
  std::ostringstream name;
  name << "gwpc_cache_" << std::hex << key << ".bin";
  return out_dir / name.str();
}

inline PotentialGraph run_potential_stage(const ScenarioConfig& cfg, const ZoneGrid& grid, RunReport& report,
                                          bool use_cache = true) {
  StageTimer timer(report, "2_potential");
  return run_stage("potential", [&] {
    const auto params = RadiationParams::from_grid(grid);
    const auto key = gwpc_cache_key(grid, params);
    const auto path = gwpc_cache_path(cfg.output_dir, key);
    report.diagnostics["radiation_alpha"] = params.alpha;
    report.diagnostics["n_total"] = params.n_total;
    report.diagnostics["n_avg"] = params.n_avg;
    if (use_cache) {
      if (auto cached = read_gwpc_binary(path, key)) {
        report.gwpc_cache_hit = true;
        return std::move(*cached);
      }
    }
    GwpcStats stats;
    auto g = build_gwpc(grid, params, cfg.worker_threads(), &stats);
    report.counts["gwpc_pairs"] = static_cast<double>(stats.pairs_evaluated);
    report.diagnostics["gwpc_saturated_origins"] = static_cast<double>(stats.saturated_origins);
    if (use_cache) write_gwpc_binary(path, g, key);
    return g;
  });
}

// --- stage 3 ----------------------------------------------------------------

inline TripSet run_trip_stage(const ScenarioConfig& cfg, const ZoneGrid& grid, const PotentialGraph& gwpc,
                              RunReport& report) {
  StageTimer timer(report, "3_trips");
  return run_stage("tripgen", [&] {
    GenerationStats stats;
    const auto behavior = cfg.behavior_model();
    auto trips = generate_all(grid, gwpc, cfg.evolution, behavior, cfg.modalities, cfg.worker_threads(), &stats);
    report.counts["origins"] = static_cast<double>(stats.origins);
    report.counts["trips"] = static_cast<double>(stats.trips);
    report.diagnostics["origins_without_trips"] = static_cast<double>(stats.origins_without_trips);
    if (stats.trips == 0) report.warnings.push_back("no trip met the realisticity threshold; all flows are zero");
    for (std::size_t m = 0; m < cfg.modalities.size(); ++m)
      report.diagnostics["travel_time_budget_h_" + cfg.modalities[m].name] =
          travel_time_budget_h(cfg.modalities[m], behavior.pte);
    return trips;
  });
}

// --- stage 4 ----------------------------------------------------------------

struct AssignStage {
  std::vector<PathFlow> flows;
  std::optional<LoadMap> loads;
};

inline AssignStage run_assign_stage(const ScenarioConfig& cfg, const ZoneGrid& grid, const TripSet& trips,
                                    const RoadNetwork& net, RunReport& report) {
  StageTimer timer(report, "4_assign");
  AssignStage s;
  run_stage("assign", [&] {
    FlowDiagnostics fd;
    s.flows = path_flows(trips, grid, cfg.modalities, &fd);
    const auto rs = route_flows(s.flows, trips, grid, net, cfg.worker_threads());
    s.loads.emplace(accumulate_loads(s.flows, net));
    report.counts["path_flows"] = static_cast<double>(s.flows.size());
    report.counts["routed_trips"] = static_cast<double>(rs.routed);
    report.counts["dropped_trips"] = static_cast<double>(rs.dropped);
    report.diagnostics["dropped_flow"] = rs.dropped_flow;
    report.diagnostics["zero_realisticity_groups"] = static_cast<double>(fd.zero_realisticity_groups);
    report.diagnostics["road_components"] = static_cast<double>(net.component_count());
    return 0;
  });

  // Per (origin, modality): sum of path flows against alpha_mod * population.
  std::map<std::pair<std::size_t, std::size_t>, KahanSum> group;
  KahanSum all, routed, dropped, path_km, unassigned;
  for (const auto& f : s.flows) {
    group[{f.origin_zone, f.modality}] += f.flow;
    all += f.flow;
    (f.routed ? routed : dropped) += f.flow;
    if (f.routed) path_km += f.flow * f.route_length_m;
  }
  double worst = 0.0;
  for (const auto& [key, sum] : group)
    worst = std::max(worst, relative_residual(sum.value(), cfg.modalities[key.second].share * grid.zones[key.first].population));
  for (const auto& z : grid.zones) {
    if (!z.active || !(z.population > 0.0)) continue;
    for (std::size_t m = 0; m < cfg.modalities.size(); ++m)
      if (!group.contains({z.index, m})) unassigned += cfg.modalities[m].share * z.population;
  }
  report.check("flow_conservation", worst, kConservationTolerance);
  report.check("flow_reconciliation", relative_residual(routed.value() + dropped.value(), all.value()),
               kConservationTolerance);

  KahanSum seg_km;
  const auto segs = net.segments();
  for (std::size_t i = 0; i < segs.size(); ++i) seg_km += s.loads->flow_at(i) * segs[i].length_m;
  const double vkm_residual = path_km.value() == 0.0 && seg_km.value() == 0.0
                                  ? 0.0
                                  : relative_residual(seg_km.value(), path_km.value());
  report.check("vehicle_km_identity", vkm_residual, kConservationTolerance);
  report.counts["total_flow"] = all.value();
  report.counts["routed_flow"] = routed.value();
  report.diagnostics["unassigned_population"] = unassigned.value();
  report.diagnostics["vehicle_km"] = seg_km.value() / 1000.0;
  return s;
}

// --- full run ---------------------------------------------------------------

struct PipelineResult {
  RunReport report;
  AreaStage area;
  PotentialGraph gwpc;
  TripSet trips;
  RoadNetwork network;
  std::vector<PathFlow> flows;
  std::vector<double> segment_loads;  // aligned with network.segments()
};

inline void write_report(const fs::path& path, const RunReport& report) {
  open_out(path) << report.to_json().dump(2) << '\n';
}

/// Runs all four stages and writes grid.csv, trips.csv, loads.csv,
/// loads.geojson and report.json (plus the GWPC cache) to the output dir.
inline PipelineResult run_pipeline(const ScenarioConfig& cfg, bool use_cache = true) {
  PipelineResult r;
  fs::create_directories(cfg.output_dir);
  r.area = run_area_stage(cfg, r.report);
  r.gwpc = run_potential_stage(cfg, r.area.grid, r.report, use_cache);
  r.trips = run_trip_stage(cfg, r.area.grid, r.gwpc, r.report);
  r.network = run_stage("assign", [&] { return read_network_csv(cfg.nodes_path, cfg.segments_path); });
  r.report.counts["road_nodes"] = static_cast<double>(r.network.nodes().size());
  r.report.counts["road_segments"] = static_cast<double>(r.network.segments().size());
  auto assigned = run_assign_stage(cfg, r.area.grid, r.trips, r.network, r.report);

  write_grid_csv(cfg.output_dir / "grid.csv", r.area.grid);
  write_trips_csv(cfg.output_dir / "trips.csv", r.trips, cfg.modalities);
  write_loads_csv(cfg.output_dir / "loads.csv", *assigned.loads);
  write_loads_geojson(cfg.output_dir / "loads.geojson", *assigned.loads);
  write_report(cfg.output_dir / "report.json", r.report);
  for (std::size_t i = 0; i < assigned.loads->size(); ++i) r.segment_loads.push_back(assigned.loads->flow_at(i));
  r.flows = std::move(assigned.flows);
  return r;
}

}  // namespace umem::io
