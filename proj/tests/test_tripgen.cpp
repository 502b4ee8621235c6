#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "oracles.hpp"
#include "support.hpp"
#include "umem/tripgen.hpp"

using namespace umem;

namespace {

struct Fixture {
  ZoneGrid grid;
  PotentialGraph gwpc;
  BehaviorModel behavior;
  std::vector<ModalityProfile> modalities = default_modalities();
};

Fixture make_fixture(ZoneGrid g) {
  Fixture f;
  f.grid = std::move(g);
  f.gwpc = build_gwpc(f.grid, RadiationParams::from_grid(f.grid));
  f.behavior.bin_width_km = f.grid.side_length_km;
  return f;
}

double oracle_p_trip(const Fixture& f, const std::vector<std::size_t>& seq, const ModalityProfile& m,
                     ReturnLegMode mode) {
  return oracle::trip_probability(f.grid, f.gwpc, seq, m.energy_rate_kj_per_km, mode == ReturnLegMode::Forced);
}

}  // namespace

TEST(TripRealisticity, TwoLegHandExpansion) {
  const auto f = make_fixture(test::make_test_grid(2, 1, 1.0, {2.0, 2.0}));
  const auto& walk = f.modalities[0];
  Trip t;
  t.zone_sequence = {0, 1, 0};
  const double lf = levy_pdf(1.0, {});
  const double pte = std::exp(-walk.energy_rate_kj_per_km * 2.0 * std::log(2.0) / 615.0);
  const double er = f.gwpc.at(0, 1);
  ASSERT_EQ(er, f.gwpc.at(1, 0));

  const auto gw = trip_realisticity(t, f.gwpc, f.grid, f.behavior, walk, 2, ReturnLegMode::Gwpc);
  EXPECT_NEAR(gw.p_trip, pte * 0.8 * er * er * lf * lf, 1e-15);
  EXPECT_NEAR(gw.factors.p_motif, 0.8, 1e-15);
  EXPECT_TRUE(gw.closed);

  const auto forced = trip_realisticity(t, f.gwpc, f.grid, f.behavior, walk, 2, ReturnLegMode::Forced);
  EXPECT_NEAR(forced.p_trip, pte * 0.8 * er * lf * lf, 1e-15);
}

TEST(TripRealisticity, FarTripHasTinyEnergyFactor) {
  std::vector<double> w(25, 1.0);
  const auto f = make_fixture(test::make_test_grid(25, 1, 10.0, w));
  Trip t;
  t.zone_sequence = {0, 24, 0};
  const auto walk = f.modalities[0];
  const auto r = trip_realisticity(t, f.gwpc, f.grid, f.behavior, walk, 2);
  EXPECT_GT(walk.energy_rate_kj_per_km * r.total_distance_km, f.behavior.pte.quantile(0.999));
  EXPECT_LT(r.factors.p_pte, 1e-3);
}

TEST(Evolve, ThresholdOneGivesNothing) {
  std::mt19937_64 rng(1);
  const auto f = make_fixture(test::random_grid(rng, 3, 3));
  EvolutionConfig cfg;
  cfg.p_trip_min = 1.0;
  EXPECT_TRUE(evolve_trips(4, f.gwpc, f.grid, cfg, f.behavior, f.modalities[0]).empty());
  cfg.p_trip_min = 0.0;
  EXPECT_THROW(cfg.validate(), ParameterError);
}

TEST(Evolve, TwoZoneGridHasOneShape) {
  const auto f = make_fixture(test::make_test_grid(2, 1, 1.0, {1.0, 3.0}));
  EvolutionConfig cfg;
  cfg.p_trip_min = 1e-9;
  const auto trips = evolve_trips(0, f.gwpc, f.grid, cfg, f.behavior, f.modalities[0]);
  ASSERT_EQ(trips.size(), 1u);
  EXPECT_EQ(trips[0].zone_sequence, (std::vector<std::size_t>{0, 1, 0}));
}

TEST(Evolve, MatchesEnumerationOnThreeByThree) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    const auto f = make_fixture(test::random_grid(rng, 3, 3, 0.5));
    EvolutionConfig cfg;
    cfg.max_intermediate_zones = 4;
    cfg.candidates_per_origin = 64;
    cfg.p_trip_min = 1e-7;
    for (auto mode : {ReturnLegMode::Forced, ReturnLegMode::Gwpc}) {
      cfg.return_leg = mode;
      for (std::size_t m = 0; m < f.modalities.size(); ++m) {
        for (std::size_t home = 0; home < 9; ++home) {
          // All admissible closed sequences and their realisticity.
          std::map<std::vector<std::size_t>, double> universe;
          std::vector<std::size_t> seq = {home};
          std::function<void()> grow = [&] {
            if (seq.size() - 1 == cfg.max_intermediate_zones) return;
            for (std::size_t z = 0; z < 9; ++z) {
              if (z == home || z == seq.back()) continue;
              seq.push_back(z);
              auto closed = seq;
              closed.push_back(home);
              universe[closed] = oracle_p_trip(f, closed, f.modalities[m], mode);
              grow();
              seq.pop_back();
            }
          };
          grow();
          const auto trips = evolve_trips(home, f.gwpc, f.grid, cfg, f.behavior, f.modalities[m], m);
          for (const auto& t : trips) {
            ASSERT_TRUE(universe.contains(t.zone_sequence));
            EXPECT_TRUE(t.closed);
            EXPECT_GE(t.p_trip, cfg.p_trip_min);
            EXPECT_NEAR(t.p_trip, universe.at(t.zone_sequence), 1e-12);
            const auto again = trip_realisticity(t, f.gwpc, f.grid, f.behavior, f.modalities[m], cfg.k_for_sk, mode);
            EXPECT_NEAR(t.p_trip, again.p_trip, 1e-12);
          }
        }
      }
    }
  }
}

TEST(Evolve, Deterministic) {
  std::mt19937_64 rng(4);
  const auto f = make_fixture(test::random_grid(rng, 4, 4));
  EvolutionConfig cfg;
  const auto a = evolve_trips(5, f.gwpc, f.grid, cfg, f.behavior, f.modalities[1], 1);
  const auto b = evolve_trips(5, f.gwpc, f.grid, cfg, f.behavior, f.modalities[1], 1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].zone_sequence, b[i].zone_sequence);
    EXPECT_EQ(a[i].p_trip, b[i].p_trip);
  }
}

TEST(Evolve, MoreCandidatesNeverLoseTrips) {
  std::mt19937_64 rng(6);
  const auto f = make_fixture(test::random_grid(rng, 4, 4));
  EvolutionConfig small, large;
  small.candidates_per_origin = 8;
  large.candidates_per_origin = 64;
  const auto a = evolve_trips(0, f.gwpc, f.grid, small, f.behavior, f.modalities[0]);
  const auto b = evolve_trips(0, f.gwpc, f.grid, large, f.behavior, f.modalities[0]);
  std::set<std::vector<std::size_t>> seen;
  for (const auto& t : b) seen.insert(t.zone_sequence);
  for (const auto& t : a) EXPECT_TRUE(seen.contains(t.zone_sequence));
}

TEST(GenerateAll, ThreadIndependent) {
  std::mt19937_64 rng(12);
  const auto f = make_fixture(test::random_grid(rng, 5, 5));
  EvolutionConfig cfg;
  const auto a = generate_all(f.grid, f.gwpc, cfg, f.behavior, f.modalities, 1);
  const auto b = generate_all(f.grid, f.gwpc, cfg, f.behavior, f.modalities, 4);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [origin, list] : a) {
    const auto& other = b.at(origin);
    ASSERT_EQ(list.size(), other.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
      EXPECT_EQ(list[i].zone_sequence, other[i].zone_sequence);
      EXPECT_EQ(list[i].modality, other[i].modality);
      EXPECT_EQ(list[i].p_trip, other[i].p_trip);
    }
  }
}

TEST(GenerateAll, SinglePopulatedZone) {
  std::vector<double> pop(9, 0.0);
  pop[4] = 50.0;
  const auto f = make_fixture(test::make_test_grid(3, 3, 1.0, std::vector<double>(9, 1.0), pop));
  const auto trips = generate_all(f.grid, f.gwpc, EvolutionConfig{}, f.behavior, f.modalities);
  ASSERT_EQ(trips.size(), 1u);
  EXPECT_EQ(trips.begin()->first, 4u);
}

TEST(GenerateAll, RejectsUnpopulatedGrid) {
  const auto f = make_fixture(test::make_test_grid(2, 1, 1.0, {1.0, 1.0}, {0.0, 0.0}));
  EXPECT_THROW(generate_all(f.grid, f.gwpc, EvolutionConfig{}, f.behavior, f.modalities), InputError);
}
