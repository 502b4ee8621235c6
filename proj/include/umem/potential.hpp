#pragma once

// Geospatial weighted potential graph for commutation (GWPC): zone-to-zone
// visitation probabilities from the opportunity-weighted extended radiation
// model, plus the exponential-decay gravity model as a baseline.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "umem/error.hpp"
#include "umem/numeric.hpp"
#include "umem/parallel.hpp"
#include "umem/spatial.hpp"

namespace umem {

/// Scale exponent for zones of side l km: (l / 36)^1.33.
inline double radiation_alpha(double side_length_km) {
  detail::require(std::isfinite(side_length_km) && side_length_km > 0.0, "radiation_alpha: l must be > 0");
  return std::pow(side_length_km / 36.0, 1.33);
}

struct RadiationParams {
  double alpha = 1.0;
  double n_total = 0.0;  // total WPO in the target area
  double n_avg = 0.0;    // n_total / z_zones
  std::size_t z_zones = 1;

  static RadiationParams from_grid(const ZoneGrid& grid) {
    RadiationParams p;
    p.alpha = radiation_alpha(grid.side_length_km);
    KahanSum total;
    for (const auto& z : grid.zones) total += z.wpo;
    p.n_total = total.value();
    p.z_zones = grid.size();
    p.n_avg = p.n_total / static_cast<double>(p.z_zones);
    return p;
  }
};

namespace detail {

inline double survival_term(double x, double alpha) { return 1.0 / (1.0 + std::pow(x, alpha)); }

}  // namespace detail

/// Normalized survival function <P_>(x)>, equal to 1 at n_avg and 0 at
/// n_total. x is clamped into [n_avg, n_total].
inline double p_greater(double x, const RadiationParams& p) {
  if (!std::isfinite(x) || x < 0.0) throw ParameterError("p_greater: x must be finite and >= 0");
  const double tail = detail::survival_term(p.n_total, p.alpha);
  const double denom = detail::survival_term(p.n_avg, p.alpha) - tail;
  if (!(denom > 0.0)) throw DegenerateError("p_greater: n_total equals n_avg; normalization is degenerate");
  const double xc = std::clamp(x, p.n_avg, p.n_total);
  return (detail::survival_term(xc, p.alpha) - tail) / denom;
}

struct RadiationResult {
  double probability = 0.0;
  bool origin_saturated = false;  // P_>(n_oz) == 0; probability forced to 0
};

/// Probability that a trip from an origin with mass n_oz ends in a
/// destination with mass n_dz, given s_track mass strictly closer.
inline RadiationResult radiation_probability_ex(double n_oz, double n_dz, double s_track, const RadiationParams& p) {
  if (!(n_oz >= 0.0 && n_dz >= 0.0 && s_track >= 0.0) || !std::isfinite(n_oz + n_dz + s_track))
    throw ParameterError("radiation_probability: masses must be finite and >= 0");
  const double base = p_greater(n_oz, p);
  if (base == 0.0) return {0.0, true};
  const double num = p_greater(n_oz + s_track, p) - p_greater(n_oz + n_dz + s_track, p);
  return {std::clamp(num / base, 0.0, 1.0), false};
}

inline double radiation_probability(double n_oz, double n_dz, double s_track, const RadiationParams& p) {
  return radiation_probability_ex(n_oz, n_dz, s_track, p).probability;
}

/// Opportunity mass of zones whose centroid is strictly closer to the
/// origin than the destination is, excluding origin and destination.
inline double s_track(const ZoneGrid& grid, std::size_t origin, std::size_t dest) {
  if (origin >= grid.size() || dest >= grid.size()) throw InputError("s_track: zone index out of range");
  if (origin == dest) throw ParameterError("s_track: origin and destination must differ");
  const long long radius2 = grid.cell_distance2(origin, dest);
  KahanSum s;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k == origin || k == dest) continue;
    if (grid.cell_distance2(origin, k) < radius2) s += grid.zones[k].wpo;
  }
  return s.value();
}

/// Dense origin x destination matrix of radiation probabilities.
class PotentialGraph {
 public:
  PotentialGraph() = default;
  PotentialGraph(std::size_t n, double side_length_km, double alpha)
      : n_(n), side_length_km_(side_length_km), alpha_(alpha), p_(n * n, 0.0) {}

  std::size_t n_zones() const { return n_; }
  double side_length_km() const { return side_length_km_; }
  double alpha() const { return alpha_; }

  double at(std::size_t origin, std::size_t dest) const { return p_[origin * n_ + dest]; }
  double& at(std::size_t origin, std::size_t dest) { return p_[origin * n_ + dest]; }

  std::span<const double> row(std::size_t origin) const { return {p_.data() + origin * n_, n_}; }
  std::span<double> row(std::size_t origin) { return {p_.data() + origin * n_, n_}; }
  std::span<const double> data() const { return p_; }
  std::span<double> data() { return p_; }

  friend bool operator==(const PotentialGraph&, const PotentialGraph&) = default;

 private:
  std::size_t n_ = 0;
  double side_length_km_ = 0.0;
  double alpha_ = 0.0;
  std::vector<double> p_;
};

struct GwpcStats {
  std::size_t pairs_evaluated = 0;
  std::size_t saturated_origins = 0;
};

/// Evaluates the radiation probability for every ordered zone pair.
/// Rows are computed independently, optionally in parallel.
inline PotentialGraph build_gwpc(const ZoneGrid& grid, const RadiationParams& params, unsigned threads = 1,
                                 GwpcStats* stats = nullptr) {
  std::size_t active_with_mass = 0;
  for (const auto& z : grid.zones)
    if (z.active && z.wpo > 0.0) ++active_with_mass;
  if (grid.active_count() < 2) throw InputError("build_gwpc: need at least two active zones");
  if (!(params.n_total > 0.0) || active_with_mass == 0) throw InputError("build_gwpc: grid has no opportunity mass");

  // Cell offsets sorted by distance; shared by every origin.
  struct Offset {
    long long d2, dc, dr;
  };
  std::vector<Offset> offsets;
  const auto nc = static_cast<long long>(grid.n_cols), nr = static_cast<long long>(grid.n_rows);
  offsets.reserve(static_cast<std::size_t>((2 * nc - 1) * (2 * nr - 1)));
  for (long long dr = -(nr - 1); dr <= nr - 1; ++dr)
    for (long long dc = -(nc - 1); dc <= nc - 1; ++dc)
      if (dc != 0 || dr != 0) offsets.push_back({dc * dc + dr * dr, dc, dr});
  std::sort(offsets.begin(), offsets.end(), [](const Offset& a, const Offset& b) {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    if (a.dr != b.dr) return a.dr < b.dr;
    return a.dc < b.dc;
  });

  const std::size_t n = grid.size();
  PotentialGraph g(n, grid.side_length_km, params.alpha);
  std::atomic<std::size_t> pairs{0}, saturated{0};

  parallel_for(n, threads, [&](std::size_t o) {
    const auto oc = static_cast<long long>(grid.zones[o].col), orow = static_cast<long long>(grid.zones[o].row);
    const double n_oz = grid.zones[o].wpo;
    auto row = g.row(o);
    KahanSum closer;  // mass of zones strictly closer than the current ring
    std::size_t local_pairs = 0;
    bool sat = false;
    std::size_t i = 0;
    while (i < offsets.size()) {
      const long long ring = offsets[i].d2;
      KahanSum ring_mass;
      const double s = closer.value();
      for (; i < offsets.size() && offsets[i].d2 == ring; ++i) {
        const long long c = oc + offsets[i].dc, r = orow + offsets[i].dr;
        if (c < 0 || r < 0 || c >= nc || r >= nr) continue;
        const std::size_t d = grid.index_of(static_cast<std::size_t>(c), static_cast<std::size_t>(r));
        const double n_dz = grid.zones[d].wpo;
        const auto res = radiation_probability_ex(n_oz, n_dz, s, params);
        row[d] = res.probability;
        sat = sat || res.origin_saturated;
        ring_mass += n_dz;
        ++local_pairs;
      }
      closer.merge(ring_mass);
    }
    pairs += local_pairs;
    if (sat) ++saturated;
  });

  if (stats) {
    stats->pairs_evaluated = pairs.load();
    stats->saturated_origins = saturated.load();
  }
  return g;
}

/// Gravity-model weight p_i p_j exp(-beta d). Diagnostic baseline only.
inline double gravity_probability(double pop_i, double pop_j, double d_km, double beta) {
  detail::require(pop_i >= 0.0 && pop_j >= 0.0, "gravity_probability: populations must be >= 0");
  detail::require(d_km >= 0.0, "gravity_probability: distance must be >= 0");
  detail::require(beta > 0.0, "gravity_probability: beta must be > 0");
  return pop_i * pop_j * std::exp(-beta * d_km);
}

/// Content hash of everything that determines a GWPC.
inline std::uint64_t gwpc_cache_key(const ZoneGrid& grid, const RadiationParams& params) {
  Fnv1a h;
  h.value(grid.n_cols);
  h.value(grid.n_rows);
  h.value(grid.side_length_km);
  h.value(grid.origin.x);
  h.value(grid.origin.y);
  for (const auto& z : grid.zones) {
    h.value(z.wpo);
    h.value(static_cast<std::uint8_t>(z.active));
  }
  h.value(params.alpha);
  h.value(params.n_total);
  h.value(params.n_avg);
  h.value(params.z_zones);
  return h.digest();
}

}  // namespace umem
