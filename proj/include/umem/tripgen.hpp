#pragma once

// Daily trip evolution: trips grow one zone at a time from a home zone,
// each step is scored by the four-factor realisticity product, and steps
// falling below the threshold are rejected. Trips always close at home.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "umem/behavior.hpp"
#include "umem/error.hpp"
#include "umem/numeric.hpp"
#include "umem/parallel.hpp"
#include "umem/potential.hpp"
#include "umem/spatial.hpp"

namespace umem {

struct TripFactors {
  double p_pte = 1.0;
  double p_motif = 1.0;
  double p_er = 1.0;
  double p_lf = 1.0;

  double product() const { return p_pte * p_motif * p_er * p_lf; }
};

struct Trip {
  std::size_t origin_zone = 0;
  std::vector<std::size_t> zone_sequence;
  bool closed = false;
  TripFactors factors;
  double p_trip = 0.0;
  std::size_t modality = 0;  // index into the scenario's modality list
  double total_distance_km = 0.0;

  std::size_t distinct_locations() const {
    return std::set<std::size_t>(zone_sequence.begin(), zone_sequence.end()).size();
  }
};

// Radiation factor of the closing leg back home. Returning home is imposed
// rather than chosen among opportunities, so by default it contributes 1;
// Gwpc multiplies in the potential-graph entry like any other leg. Distance
// and energy of the closing leg always count.
enum class ReturnLegMode { Forced, Gwpc };

struct EvolutionConfig {
  double p_trip_min = 1e-6;
  ReturnLegMode return_leg = ReturnLegMode::Forced;
  std::size_t max_intermediate_zones = 5;
  std::size_t candidates_per_origin = 32;
  std::uint64_t rng_seed = 42;
  std::size_t k_for_sk = 2;

  void validate() const {
    detail::require(p_trip_min > 0.0 && p_trip_min <= 1.0, "evolution.p_trip_min must be in (0, 1]");
    detail::require(max_intermediate_zones >= 1, "evolution.max_intermediate_zones must be >= 1");
    detail::require(candidates_per_origin >= 1, "evolution.candidates_per_origin must be >= 1");
    detail::require(k_for_sk >= 1, "evolution.k_for_sk must be >= 1");
  }
};

/// Exploration ratio of one day's zone sequence; visit counts are the
/// occurrences of each zone in the sequence, coordinates in km.
inline double sequence_exploration_ratio(const ZoneGrid& grid, std::span<const std::size_t> seq, std::size_t k) {
  std::vector<VisitedLocation> locs;
  std::vector<std::size_t> ids;
  for (std::size_t z : seq) {
    const auto it = std::find(ids.begin(), ids.end(), z);
    if (it != ids.end()) {
      locs[static_cast<std::size_t>(it - ids.begin())].visits += 1.0;
      continue;
    }
    ids.push_back(z);
    const auto& zone = grid.zones[z];
    locs.push_back({static_cast<double>(zone.col) * grid.side_length_km,
                    static_cast<double>(zone.row) * grid.side_length_km, 1.0});
  }
  return exploration_ratio(locs, k);
}

/// Scores zone sequences for one modality. The running products for the
/// radiation and Lévy factors extend a prefix; the energy and motif
/// factors are recomputed at every step.
class TripScorer {
 public:
  TripScorer(const ZoneGrid& grid, const PotentialGraph& gwpc, const BehaviorModel& behavior,
             const ModalityProfile& modality, std::size_t k_for_sk, ReturnLegMode return_leg = ReturnLegMode::Forced)
      : grid_(grid), gwpc_(gwpc), behavior_(behavior), modality_(modality), k_(k_for_sk), return_leg_(return_leg) {
    if (gwpc.n_zones() != grid.size()) throw InputError("TripScorer: GWPC size does not match the grid");
  }

  /// Prefix state; append() multiplies in one leg.
  struct Prefix {
    std::vector<std::size_t> zones;
    double p_er = 1.0;
    double p_lf = 1.0;
    double distance_km = 0.0;
  };

  Prefix start(std::size_t home) const {
    check_zone(home);
    return Prefix{{home}, 1.0, 1.0, 0.0};
  }

  void append(Prefix& pre, std::size_t next) const {
    check_zone(next);
    const std::size_t last = pre.zones.back();
    const double d = grid_.centroid_distance_km(last, next);
    const bool closing = next == pre.zones.front() && pre.zones.size() >= 2;
    if (!closing || return_leg_ == ReturnLegMode::Gwpc) pre.p_er *= gwpc_.at(last, next);
    pre.p_lf *= behavior_.leg_factor(d);
    pre.distance_km += d;
    pre.zones.push_back(next);
  }

  TripFactors factors(const Prefix& pre) const {
    TripFactors f;
    f.p_er = pre.p_er;
    f.p_lf = pre.p_lf;
    f.p_pte = behavior_.energy_factor(pre.distance_km, modality_);
    f.p_motif = behavior_.motif(sequence_exploration_ratio(grid_, pre.zones, k_));
    return f;
  }

  /// Scores a whole sequence from scratch.
  Trip score(std::span<const std::size_t> seq, std::size_t modality_index = 0) const {
    if (seq.size() < 2) throw InputError("trip_realisticity: a trip needs at least two zones");
    Prefix pre = start(seq.front());
    for (std::size_t i = 1; i < seq.size(); ++i) append(pre, seq[i]);
    return to_trip(pre, modality_index);
  }

  Trip to_trip(const Prefix& pre, std::size_t modality_index) const {
    Trip t;
    t.origin_zone = pre.zones.front();
    t.zone_sequence = pre.zones;
    t.closed = pre.zones.size() >= 3 && pre.zones.back() == pre.zones.front();
    t.factors = factors(pre);
    t.p_trip = t.factors.product();
    t.modality = modality_index;
    t.total_distance_km = pre.distance_km;
    return t;
  }

 private:
  void check_zone(std::size_t z) const {
    if (z >= grid_.size()) throw InputError("trip zone index out of range");
  }

  const ZoneGrid& grid_;
  const PotentialGraph& gwpc_;
  const BehaviorModel& behavior_;
  const ModalityProfile& modality_;
  std::size_t k_;
  ReturnLegMode return_leg_;
};

/// Recomputes every factor of `trip` from its zone sequence.
inline Trip trip_realisticity(const Trip& trip, const PotentialGraph& gwpc, const ZoneGrid& grid,
                              const BehaviorModel& behavior, const ModalityProfile& modality, std::size_t k_for_sk,
                              ReturnLegMode return_leg = ReturnLegMode::Forced) {
  const TripScorer scorer(grid, gwpc, behavior, modality, k_for_sk, return_leg);
  return scorer.score(trip.zone_sequence, trip.modality);
}

struct EvolutionStats {
  std::size_t steps_accepted = 0;
  std::size_t steps_rejected = 0;
  std::size_t closures_rejected = 0;
  std::size_t duplicates = 0;
};

/// Grows `cfg.candidates_per_origin` independent chains from `origin`.
/// Each step draws the next zone proportionally to the GWPC row of the
/// current zone (home and the current zone excluded); a step whose open
/// realisticity falls below the threshold ends the chain. After every
/// accepted step the chain is closed at home, re-scored and, if it still
/// meets the threshold, emitted. Output is deduplicated and sorted by zone
/// sequence.
inline std::vector<Trip> evolve_trips(std::size_t origin, const PotentialGraph& gwpc, const ZoneGrid& grid,
                                      const EvolutionConfig& cfg, const BehaviorModel& behavior,
                                      const ModalityProfile& modality, std::size_t modality_index = 0,
                                      EvolutionStats* stats = nullptr) {
  cfg.validate();
  if (origin >= grid.size()) throw InputError("evolve_trips: origin zone out of range");
  if (!grid.zones[origin].active || !(grid.zones[origin].population > 0.0))
    throw InputError("evolve_trips: origin zone is inactive or unpopulated");

  const TripScorer scorer(grid, gwpc, behavior, modality, cfg.k_for_sk, cfg.return_leg);
  std::mt19937_64 rng(substream_seed(cfg.rng_seed, origin, modality_index));
  EvolutionStats local;
  std::map<std::vector<std::size_t>, Trip> emitted;
  std::vector<double> cumulative(grid.size());

  for (std::size_t chain = 0; chain < cfg.candidates_per_origin; ++chain) {
    auto pre = scorer.start(origin);
    for (std::size_t step = 0; step < cfg.max_intermediate_zones; ++step) {
      const std::size_t cur = pre.zones.back();
      const auto row = gwpc.row(cur);
      double total = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j != cur && j != origin) total += row[j];
        cumulative[j] = total;
      }
      if (!(total > 0.0)) break;
      const double u = uniform01(rng) * total;
      auto next = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      next = std::min(next, grid.size() - 1);
      // upper_bound may land on a zero-weight slot only through rounding.
      while (next > 0 && (next == cur || next == origin || row[next] == 0.0)) --next;
      if (next == cur || next == origin || row[next] == 0.0) break;

      auto extended = pre;
      scorer.append(extended, next);
      if (scorer.factors(extended).product() < cfg.p_trip_min) {
        ++local.steps_rejected;
        break;
      }
      ++local.steps_accepted;
      pre = std::move(extended);

      auto closed = pre;
      scorer.append(closed, origin);
      Trip trip = scorer.to_trip(closed, modality_index);
      if (trip.p_trip < cfg.p_trip_min) {
        ++local.closures_rejected;
        continue;
      }
      if (!emitted.emplace(trip.zone_sequence, trip).second) ++local.duplicates;
    }
  }

  if (stats) *stats = local;
  std::vector<Trip> out;
  out.reserve(emitted.size());
  for (auto& [seq, trip] : emitted) out.push_back(std::move(trip));
  return out;
}

using TripSet = std::map<std::size_t, std::vector<Trip>>;

struct GenerationStats {
  std::size_t origins = 0;
  std::size_t origins_without_trips = 0;
  std::size_t trips = 0;
};

/// Runs evolve_trips for every populated zone and every modality. Each
/// (origin, modality) pair has its own RNG substream and result slot, so
/// results are independent of thread count and iteration order.
inline TripSet generate_all(const ZoneGrid& grid, const PotentialGraph& gwpc, const EvolutionConfig& cfg,
                            const BehaviorModel& behavior, std::span<const ModalityProfile> modalities,
                            unsigned threads = 1, GenerationStats* stats = nullptr) {
  cfg.validate();
  if (modalities.empty()) throw ParameterError("generate_all: no modalities");
  std::vector<std::size_t> origins;
  for (const auto& z : grid.zones)
    if (z.active && z.population > 0.0) origins.push_back(z.index);
  if (origins.empty()) throw InputError("generate_all: grid has no populated zone");

  const std::size_t m = modalities.size();
  std::vector<std::vector<Trip>> slots(origins.size() * m);
  parallel_for(slots.size(), threads, [&](std::size_t slot) {
    const std::size_t oi = slot / m, mi = slot % m;
    slots[slot] = evolve_trips(origins[oi], gwpc, grid, cfg, behavior, modalities[mi], mi);
  });

  TripSet out;
  GenerationStats local;
  local.origins = origins.size();
  for (std::size_t oi = 0; oi < origins.size(); ++oi) {
    auto& list = out[origins[oi]];
    for (std::size_t mi = 0; mi < m; ++mi) {
      auto& s = slots[oi * m + mi];
      std::move(s.begin(), s.end(), std::back_inserter(list));
    }
    local.trips += list.size();
    if (list.empty()) ++local.origins_without_trips;
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace umem
