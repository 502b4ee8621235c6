#pragma once

// Synthetic desk-scale scenarios: block-shaped living clusters tiling an
// n x n zone square, ranked POIs, and a lattice road network.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "umem/formats.hpp"

namespace umem::io {

enum class NetworkStyle { Grid, Jitter, Sparse };

inline NetworkStyle parse_network_style(const std::string& s) {
  if (s == "grid") return NetworkStyle::Grid;
  if (s == "jitter") return NetworkStyle::Jitter;
  if (s == "sparse") return NetworkStyle::Sparse;
  throw ParameterError("network style must be grid, jitter or sparse (got '" + s + "')");
}

struct SynthSpec {
  std::size_t zones_per_side = 5;
  double side_length_km = 1.0;
  double population = 10000.0;
  double poi_density_per_km2 = 1.0;
  NetworkStyle network = NetworkStyle::Grid;
  std::uint64_t seed = 1;

  void validate() const {
    umem::detail::require(zones_per_side >= 2, "synth: zones per side must be >= 2");
    umem::detail::require(side_length_km > 0.0, "synth: side length must be > 0");
    umem::detail::require(population > 0.0, "synth: population must be > 0");
    umem::detail::require(poi_density_per_km2 > 0.0, "synth: POI density must be > 0");
  }
};

inline const std::vector<std::string>& synth_categories() {
  static const std::vector<std::string> c = {"supermarket", "school",  "workplace", "pharmacy",
                                             "bakery",      "doctor",  "restaurant", "bank",
                                             "gym",         "library", "cinema",    "museum"};
  return c;
}

struct SynthScenario {
  std::vector<LivingCluster> clusters;
  std::vector<Poi> pois;
  RoadNetwork network;
  json config;
};

inline SynthScenario make_synth_scenario(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(mix64(spec.seed));
  const std::size_t n = spec.zones_per_side;
  const double l = spec.side_length_km * 1000.0;
  SynthScenario sc;

  // Clusters: blocks of b x b cells tiling the square.
  const std::size_t b = std::max<std::size_t>(1, n / 4);
  std::vector<double> weights;
  for (std::size_t r0 = 0; r0 < n; r0 += b) {
    for (std::size_t c0 = 0; c0 < n; c0 += b) {
      const std::size_t r1 = std::min(n, r0 + b), c1 = std::min(n, c0 + b);
      LivingCluster c;
      c.boundary = make_rectangle(static_cast<double>(c0) * l, static_cast<double>(r0) * l,
                                  static_cast<double>(c1) * l, static_cast<double>(r1) * l);
      sc.clusters.push_back(std::move(c));
      // Roughly a quarter of the blocks are sparsely settled.
      const double u = uniform01(rng);
      weights.push_back(u < 0.25 ? 0.05 * uniform01(rng) : 0.2 + uniform01(rng));
    }
  }
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  for (std::size_t i = 0; i < sc.clusters.size(); ++i) sc.clusters[i].population = spec.population * weights[i] / wsum;

  // POIs: 70% inside blocks chosen by population, 30% uniform.
  const double side = static_cast<double>(n) * l;
  const auto n_pois = static_cast<std::size_t>(
      std::max(1.0, std::round(spec.poi_density_per_km2 * std::pow(side / 1000.0, 2))));
  const auto& cats = synth_categories();
  for (std::size_t i = 0; i < n_pois; ++i) {
    GeoPoint p;
    if (uniform01(rng) < 0.7) {
      double u = uniform01(rng) * wsum;
      std::size_t k = 0;
      while (k + 1 < weights.size() && u >= weights[k]) u -= weights[k++];
      Box env;
      bg::envelope(sc.clusters[k].boundary, env);
      p = {env.min_corner().x() + uniform01(rng) * (env.max_corner().x() - env.min_corner().x()),
           env.min_corner().y() + uniform01(rng) * (env.max_corner().y() - env.min_corner().y())};
    } else {
      p = {uniform01(rng) * side, uniform01(rng) * side};
    }
    // Category frequency follows rank: lower ranks are more common.
    double norm = 0.0;
    for (std::size_t z = 1; z <= cats.size(); ++z) norm += 1.0 / static_cast<double>(z);
    double u = uniform01(rng) * norm;
    std::size_t k = 0;
    while (k + 1 < cats.size() && u >= 1.0 / static_cast<double>(k + 1)) {
      u -= 1.0 / static_cast<double>(k + 1);
      ++k;
    }
    sc.pois.push_back({p, cats[k]});
  }

  // Road lattice through the zone centroids.
  std::vector<RoadNode> nodes;
  const auto node_id = [n](std::size_t col, std::size_t row) { return static_cast<NodeId>(row * n + col + 1); };
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n; ++col) {
      GeoPoint p{(static_cast<double>(col) + 0.5) * l, (static_cast<double>(row) + 0.5) * l};
      if (spec.network == NetworkStyle::Jitter) {
        p.x += (uniform01(rng) - 0.5) * 0.4 * l;
        p.y += (uniform01(rng) - 0.5) * 0.4 * l;
      }
      nodes.push_back({node_id(col, row), p});
    }
  }
  std::vector<RoadSegment> segs;
  SegmentId next_id = 1;
  const auto connect = [&](std::size_t c0, std::size_t r0, std::size_t c1, std::size_t r1) {
    const auto& a = nodes[r0 * n + c0];
    const auto& bnode = nodes[r1 * n + c1];
    double len = distance(a.location, bnode.location);
    bool bidirectional = true;
    if (spec.network == NetworkStyle::Jitter) {
      len *= 1.0 + 0.2 * uniform01(rng);
      bidirectional = uniform01(rng) >= 0.1;
    }
    if (spec.network == NetworkStyle::Sparse && uniform01(rng) < 0.25) return;
    segs.push_back({next_id++, a.id, bnode.id, len, bidirectional});
  };
  for (std::size_t row = 0; row < n; ++row)
    for (std::size_t col = 0; col < n; ++col) {
      if (col + 1 < n) connect(col, row, col + 1, row);
      if (row + 1 < n) connect(col, row, col, row + 1);
    }
  sc.network = RoadNetwork(std::move(nodes), std::move(segs));

  json modalities = json::array();
  for (const auto& m : default_modalities())
    modalities.push_back({{"name", m.name}, {"energy_rate", m.energy_rate_kj_per_km}, {"share", m.share}, {"speed", m.speed_km_h}});
  sc.config = {
      {"inputs", {{"clusters", "clusters.geojson"}, {"pois", "pois.csv"}, {"nodes", "nodes.csv"}, {"segments", "segments.csv"}}},
      {"grid", {{"side_length_km", spec.side_length_km}}},
      {"area", {{"margin_m", 0.0}}},
      {"demand", {{"alpha_poi", 1.0}, {"top_k", 10}, {"category_ranks", cats}}},
      {"behavior",
       {{"levy", {{"mu", 0.0}, {"c", 1.0}}},
        {"pte", {{"family", "exponential"}, {"median_kj", PteDistribution::kAnchorMedianKj}}},
        {"motif", {{"p_e", 0.2}, {"gamma_r", 2.0}, {"gamma_e", 2.0}}},
        {"modalities", modalities}}},
      {"evolution", {{"p_trip_min", 1e-6}, {"max_intermediate_zones", 5}, {"candidates_per_origin", 32}, {"k_for_sk", 2}}},
      {"rng_seed", spec.seed},
      {"output_dir", "out"},
  };
  return sc;
}

/// Writes clusters.geojson, pois.csv, nodes.csv, segments.csv and
/// scenario.json into `dir`; returns the scenario file path.
inline fs::path write_synth_scenario(const SynthSpec& spec, const fs::path& dir) {
  const auto sc = make_synth_scenario(spec);
  fs::create_directories(dir);
  write_clusters_geojson(dir / "clusters.geojson", sc.clusters);
  write_pois_csv(dir / "pois.csv", sc.pois);
  write_network_csv(dir / "nodes.csv", dir / "segments.csv", sc.network);
  open_out(dir / "scenario.json") << sc.config.dump(2) << '\n';
  return dir / "scenario.json";
}

}  // namespace umem::io
