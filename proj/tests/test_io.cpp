#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "umem/pipeline.hpp"
#include "umem/synth.hpp"

using namespace umem;
using namespace umem::io;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::path(::testing::TempDir()) / ("umem_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const json kMinimal = {{"inputs", {{"clusters", "c.geojson"}, {"pois", "p.csv"}, {"nodes", "n.csv"}, {"segments", "s.csv"}}},
                       {"demand", {{"category_ranks", {"shop", "school"}}}}};

std::vector<std::string> problems_of(const json& doc) {
  try {
    parse_scenario(doc, ".", false);
  } catch (const ValidationError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& ps, const std::string& needle) {
  for (const auto& p : ps)
    if (p.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Config, MinimalDefaults) {
  const auto cfg = parse_scenario(kMinimal, "/base", false);
  EXPECT_EQ(cfg.side_length_km, 1.0);
  EXPECT_EQ(cfg.alpha_poi, 1.0);
  EXPECT_EQ(cfg.top_k, 10u);
  EXPECT_EQ(cfg.modalities.size(), 3u);
  EXPECT_EQ(cfg.evolution.p_trip_min, 1e-6);
  EXPECT_EQ(cfg.clusters_path, fs::path("/base/c.geojson"));
  EXPECT_EQ(cfg.output_dir, fs::path("/base/out"));
}

TEST(Config, NamesInvalidKey) {
  auto doc = kMinimal;
  doc["demand"]["alpha_poi"] = 0.0;
  EXPECT_TRUE(mentions(problems_of(doc), "demand.alpha_poi"));
}

TEST(Config, SuggestsNearestKey) {
  auto doc = kMinimal;
  doc["demand"]["alpha_pio"] = 1.0;
  EXPECT_TRUE(mentions(problems_of(doc), "did you mean 'alpha_poi'"));
}

TEST(Config, CollectsAllProblems) {
  auto doc = kMinimal;
  doc["grid"] = {{"side_length_km", -1.0}};
  doc["demand"]["top_k"] = 0;
  doc["bogus"] = 1;
  EXPECT_GE(problems_of(doc).size(), 3u);
}

TEST(Config, MissingFilesReported) {
  EXPECT_THROW(parse_scenario(kMinimal, scratch("missing"), true), ValidationError);
}

TEST(Config, Overrides) {
  auto doc = kMinimal;
  apply_overrides(doc, {"demand.top_k=5", "behavior.pte.family=lognormal", "rng_seed=9"});
  const auto cfg = parse_scenario(doc, ".", false);
  EXPECT_EQ(cfg.top_k, 5u);
  EXPECT_EQ(cfg.pte_family, "lognormal");
  EXPECT_EQ(cfg.evolution.rng_seed, 9u);
}

TEST(Synth, DeterministicAndLoadable) {
  SynthSpec spec;
  const auto a = scratch("synth_a"), b = scratch("synth_b");
  write_synth_scenario(spec, a);
  write_synth_scenario(spec, b);
  for (const char* f : {"clusters.geojson", "pois.csv", "nodes.csv", "segments.csv", "scenario.json"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_NO_THROW(load_scenario(a / "scenario.json"));
}

TEST(Synth, LatticeEdgeCount) {
  for (std::size_t n : {2u, 5u, 9u}) {
    SynthSpec spec;
    spec.zones_per_side = n;
    const auto sc = make_synth_scenario(spec);
    EXPECT_EQ(sc.network.segments().size(), 2 * n * (n - 1));
    for (const auto& s : sc.network.segments()) EXPECT_TRUE(s.bidirectional);
    EXPECT_EQ(sc.network.component_count(), 1u);
  }
}

TEST(Pipeline, SmallScenarioPasses) {
  const auto dir = scratch("run5");
  const auto path = write_synth_scenario(SynthSpec{}, dir);
  const auto r = run_pipeline(load_scenario(path));
  EXPECT_TRUE(r.report.all_checks_pass());
  EXPECT_GT(r.report.counts.at("trips"), 0.0);
  for (const char* f : {"grid.csv", "trips.csv", "loads.csv", "loads.geojson", "report.json"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
}

TEST(Pipeline, ImpossibleThresholdWarns) {
  const auto dir = scratch("run_pmin");
  const auto path = write_synth_scenario(SynthSpec{}, dir);
  const auto r = run_pipeline(load_scenario(path, {"evolution.p_trip_min=1.0"}));
  EXPECT_TRUE(r.flows.empty());
  EXPECT_FALSE(r.report.warnings.empty());
  for (double l : r.segment_loads) EXPECT_EQ(l, 0.0);
}

TEST(Pipeline, CachedRerunIdentical) {
  const auto dir = scratch("run_cache");
  const auto path = write_synth_scenario(SynthSpec{}, dir);
  const auto first = run_pipeline(load_scenario(path));
  const auto trips = slurp(dir / "out" / "trips.csv"), loads = slurp(dir / "out" / "loads.csv");
  const auto second = run_pipeline(load_scenario(path));
  EXPECT_FALSE(first.report.gwpc_cache_hit);
  EXPECT_TRUE(second.report.gwpc_cache_hit);
  EXPECT_EQ(first.gwpc, second.gwpc);
  EXPECT_EQ(trips, slurp(dir / "out" / "trips.csv"));
  EXPECT_EQ(loads, slurp(dir / "out" / "loads.csv"));
}

TEST(Formats, RoundTrips) {
  const auto dir = scratch("formats");
  const auto path = write_synth_scenario(SynthSpec{}, dir);
  const auto cfg = load_scenario(path);
  const auto r = run_pipeline(cfg);
  const auto out = cfg.output_dir;

  const auto grid = read_grid_csv(out / "grid.csv");
  ASSERT_EQ(grid.size(), r.area.grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(grid.zones[i].population, r.area.grid.zones[i].population);
    EXPECT_EQ(grid.zones[i].wpo, r.area.grid.zones[i].wpo);
    EXPECT_EQ(grid.zones[i].centroid.x, r.area.grid.zones[i].centroid.x);
  }

  write_gwpc_csv(out / "gwpc.csv", r.gwpc);
  EXPECT_EQ(read_gwpc_csv(out / "gwpc.csv"), r.gwpc);
  write_gwpc_binary(out / "g.bin", r.gwpc, 77);
  EXPECT_EQ(read_gwpc_binary(out / "g.bin", 77), r.gwpc);
  EXPECT_FALSE(read_gwpc_binary(out / "g.bin", 78).has_value());

  const auto trips = read_trips_csv(out / "trips.csv", cfg.modalities);
  write_trips_csv(out / "trips2.csv", trips, cfg.modalities);
  EXPECT_EQ(slurp(out / "trips.csv"), slurp(out / "trips2.csv"));

  const auto loads = read_loads_csv(out / "loads.csv");
  ASSERT_EQ(loads.size(), r.segment_loads.size());
  for (std::size_t i = 0; i < loads.size(); ++i) EXPECT_EQ(loads[i].second, r.segment_loads[i]);

  const auto net = read_network_csv(cfg.nodes_path, cfg.segments_path);
  write_network_csv(out / "n2.csv", out / "s2.csv", net);
  EXPECT_EQ(slurp(cfg.nodes_path), slurp(out / "n2.csv"));
  EXPECT_EQ(slurp(cfg.segments_path), slurp(out / "s2.csv"));

  const auto clusters = read_clusters_geojson(cfg.clusters_path);
  write_clusters_geojson(out / "c2.geojson", clusters);
  EXPECT_EQ(slurp(cfg.clusters_path), slurp(out / "c2.geojson"));
  const auto pois = read_pois_csv(cfg.pois_path);
  write_pois_csv(out / "p2.csv", pois);
  EXPECT_EQ(slurp(cfg.pois_path), slurp(out / "p2.csv"));
}

TEST(Formats, MalformedCsvRejected) {
  const auto dir = scratch("bad");
  open_out(dir / "pois.csv") << "x,y,category\n1,oops,shop\n";
  EXPECT_THROW(read_pois_csv(dir / "pois.csv"), InputError);
  open_out(dir / "pois2.csv") << "a,b\n";
  EXPECT_THROW(read_pois_csv(dir / "pois2.csv"), InputError);
}
