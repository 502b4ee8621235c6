#pragma once

// Zipf-ranked POI demand weights and their aggregation into zone
// opportunity mass (WPO).

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "umem/error.hpp"
#include "umem/numeric.hpp"
#include "umem/spatial.hpp"

namespace umem {

/// Commutation probability of the POI category ranked `rank_z`:
/// c * z^-(1 + 1/alpha).
inline double poi_probability(long long rank_z, double alpha_poi, double c_poi) {
  if (rank_z < 1) throw ParameterError("poi_probability: rank must be >= 1");
  detail::require(std::isfinite(alpha_poi) && alpha_poi > 0.0, "poi_probability: alpha_poi must be > 0");
  detail::require(std::isfinite(c_poi) && c_poi > 0.0, "poi_probability: c_poi must be > 0");
  return c_poi * std::pow(static_cast<double>(rank_z), -(1.0 + 1.0 / alpha_poi));
}

/// Rank-size visiting frequency z^-alpha (unnormalized).
inline double visiting_frequency(long long rank, double alpha) {
  if (rank < 1) throw ParameterError("visiting_frequency: rank must be >= 1");
  detail::require(std::isfinite(alpha) && alpha > 0.0, "visiting_frequency: alpha must be > 0");
  return std::pow(static_cast<double>(rank), -alpha);
}

struct DemandWeights {
  double alpha_poi = 1.0;
  double c_poi = 1.0;
  std::size_t top_k = 10;
  std::vector<double> probabilities;  // probabilities[z - 1] for z = 1..top_k

  /// Weight of a rank; zero beyond top_k.
  double weight(long long rank) const {
    if (rank < 1) throw ParameterError("DemandWeights: rank must be >= 1");
    const auto r = static_cast<std::size_t>(rank);
    return r <= top_k ? probabilities[r - 1] : 0.0;
  }
};

/// Chooses c_poi so that ranks 1..top_k sum to one.
inline DemandWeights normalize_weights(double alpha_poi, std::size_t top_k) {
  detail::require(top_k >= 1, "normalize_weights: top_k must be >= 1");
  detail::require(std::isfinite(alpha_poi) && alpha_poi > 0.0, "normalize_weights: alpha_poi must be > 0");
  DemandWeights w;
  w.alpha_poi = alpha_poi;
  w.top_k = top_k;
  KahanSum total;
  for (std::size_t z = 1; z <= top_k; ++z) total += poi_probability(static_cast<long long>(z), alpha_poi, 1.0);
  w.c_poi = 1.0 / total.value();
  w.probabilities.reserve(top_k);
  for (std::size_t z = 1; z <= top_k; ++z)
    w.probabilities.push_back(poi_probability(static_cast<long long>(z), alpha_poi, w.c_poi));
  return w;
}

struct PoiCategory {
  std::string name;
  long long rank_z = 1;
  std::map<std::size_t, double> count_per_zone;
};

struct Poi {
  GeoPoint location;
  std::string category;
};

struct PoiRejects {
  std::size_t outside_grid = 0;
  std::size_t inactive_zone = 0;
  std::size_t unranked_category = 0;

  std::size_t total() const { return outside_grid + inactive_zone + unranked_category; }
};

/// Bins POI points into per-category zone counts. `category_ranks` lists
/// category names in importance order (rank 1 first). POIs outside the
/// grid, in inactive zones, or of an unranked category are counted in
/// `rejects` and ignored.
inline std::vector<PoiCategory> bin_pois(const ZoneGrid& grid, std::span<const Poi> pois,
                                         std::span<const std::string> category_ranks, PoiRejects& rejects) {
  std::vector<PoiCategory> cats;
  std::map<std::string, std::size_t> by_name;
  for (std::size_t i = 0; i < category_ranks.size(); ++i) {
    if (by_name.contains(category_ranks[i]))
      throw InputError("duplicate POI category in rank list: " + category_ranks[i]);
    by_name[category_ranks[i]] = i;
    cats.push_back({category_ranks[i], static_cast<long long>(i + 1), {}});
  }
  for (const auto& poi : pois) {
    const auto it = by_name.find(poi.category);
    if (it == by_name.end()) {
      ++rejects.unranked_category;
      continue;
    }
    const auto zone = grid.locate(poi.location);
    if (!zone) {
      ++rejects.outside_grid;
      continue;
    }
    if (!grid.zones[*zone].active) {
      ++rejects.inactive_zone;
      continue;
    }
    cats[it->second].count_per_zone[*zone] += 1.0;
  }
  return cats;
}

/// zone.wpo = sum over categories of weight(rank) * count in zone.
/// Counts in inactive or out-of-range zones are skipped and reported.
inline ZoneGrid aggregate_wpo(ZoneGrid grid, std::span<const PoiCategory> categories, const DemandWeights& weights,
                              PoiRejects* rejects = nullptr) {
  for (auto& z : grid.zones) z.wpo = 0.0;
  for (const auto& cat : categories) {
    const double w = weights.weight(cat.rank_z);
    for (const auto& [zone, count] : cat.count_per_zone) {
      if (count < 0.0 || !std::isfinite(count)) throw InputError("aggregate_wpo: POI counts must be >= 0");
      if (zone >= grid.size()) {
        if (rejects) rejects->outside_grid += static_cast<std::size_t>(count);
        continue;
      }
      if (!grid.zones[zone].active) {
        if (rejects) rejects->inactive_zone += static_cast<std::size_t>(count);
        continue;
      }
      grid.zones[zone].wpo += w * count;
    }
  }
  return grid;
}

}  // namespace umem
