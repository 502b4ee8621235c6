#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "umem/behavior.hpp"

using namespace umem;

TEST(Levy, DensityAtOne) {
  EXPECT_NEAR(levy_pdf(1.0, {}), std::sqrt(1.0 / (2.0 * std::numbers::pi)) * std::exp(-0.5), 1e-15);
  EXPECT_NEAR(levy_pdf(1.0, {}), 0.2420, 5e-5);
}

TEST(Levy, VanishesNearMu) {
  const LevyParams p{2.0, 1.0};
  EXPECT_LT(levy_pdf(2.0 + 1e-3, p), 1e-200);
  EXPECT_THROW(levy_pdf(2.0, p), DomainError);
  EXPECT_THROW(levy_pdf(1.0, p), DomainError);
}

TEST(Levy, QuadratureMatchesCdf) {
  // The heavy r^-1.5 tail keeps mass beyond any finite cutoff, so the
  // integral is checked against the closed-form CDF at the same cutoff.
  for (const LevyParams p : {LevyParams{0.0, 1.0}, LevyParams{1.0, 0.5}, LevyParams{0.0, 3.0}}) {
    const double upper = 100.0 * p.c;
    const double got = oracle::log_simpson([&](double s) { return levy_pdf(p.mu + s, p); }, 1e-6 * p.c, upper);
    EXPECT_NEAR(got, levy_cdf(p.mu + upper, p), 1e-8);
  }
}

TEST(Pte, DefaultMedian) {
  const auto pte = PteDistribution::exponential();
  EXPECT_NEAR(pte.cdf(615.0), 0.5, 1e-12);
  EXPECT_NEAR(pte.quantile(0.5), 615.0, 1e-9);
  EXPECT_NEAR(pte.mean_energy_kj(), 615.0 / std::numbers::ln2, 1e-9);
}

TEST(Pte, UnitRateDensity) {
  EXPECT_NEAR(PteDistribution::exponential(std::numbers::ln2).density(0.0), 1.0, 1e-15);
  EXPECT_THROW(PteDistribution::exponential().density(-1.0), ParameterError);
}

TEST(Pte, QuantileRoundTrip) {
  for (const auto& pte : {PteDistribution::exponential(), PteDistribution::lognormal(615.0, 0.8)}) {
    for (double p : {0.01, 0.25, 0.5, 0.9, 0.95, 0.999}) EXPECT_NEAR(pte.cdf(pte.quantile(p)), p, 1e-10);
  }
  EXPECT_NEAR(PteDistribution::lognormal(615.0, 0.8).cdf(615.0), 0.5, 1e-12);
}

TEST(Pte, QuantileBeyondSupportThrows) {
  // A very wide log-normal still has a third of its mass beyond 1e12 kJ.
  EXPECT_THROW(PteDistribution::lognormal(615.0, 50.0).quantile(0.95), UnboundedMarginError);
  EXPECT_THROW(PteDistribution::exponential().quantile(1.0), ParameterError);
}

TEST(Modalities, Validation) {
  auto mods = default_modalities();
  EXPECT_NO_THROW(validate_modalities(mods));
  mods[0].share = 0.5;
  EXPECT_THROW(validate_modalities(mods), ParameterError);
}

TEST(Gyration, SingleLocation) {
  const std::vector<VisitedLocation> one = {{3.0, 4.0, 5.0}};
  EXPECT_EQ(radius_of_gyration(one), 0.0);
}

TEST(Gyration, TwoPoints) {
  const std::vector<VisitedLocation> two = {{0.0, 0.0, 1.0}, {2.0, 0.0, 1.0}};
  EXPECT_EQ(radius_of_gyration(two), 1.0);
}

TEST(Gyration, RigidMotionInvariance) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(-50.0, 50.0), ang(0.0, 2.0 * std::numbers::pi);
  std::uniform_int_distribution<int> visits(1, 20), count(2, 15);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<VisitedLocation> a(static_cast<std::size_t>(count(rng)));
    for (auto& l : a) l = {pos(rng), pos(rng), static_cast<double>(visits(rng))};
    const double th = ang(rng), tx = pos(rng), ty = pos(rng);
    auto b = a;
    for (auto& l : b) l = {std::cos(th) * l.x - std::sin(th) * l.y + tx, std::sin(th) * l.x + std::cos(th) * l.y + ty, l.visits};
    EXPECT_NEAR(radius_of_gyration(a), radius_of_gyration(b), 1e-9);
  }
}

TEST(ExplorationRatio, Cases) {
  const std::vector<VisitedLocation> locs = {{0, 0, 10}, {1, 1, 3}, {40, 0, 1}};
  EXPECT_EQ(exploration_ratio(locs, 3), 1.0);
  EXPECT_EQ(exploration_ratio(locs, 7), 1.0);
  const std::vector<VisitedLocation> explorer = {{0, 0, 10}, {1000, 0, 1}};
  EXPECT_LT(exploration_ratio(explorer, 1), 1e-12);
  const std::vector<VisitedLocation> stacked = {{5, 5, 2}, {5, 5, 1}};
  EXPECT_EQ(exploration_ratio(stacked, 1), 1.0);
}

TEST(Motif, Defaults) {
  const MotifParams p;
  EXPECT_DOUBLE_EQ(motif_weight(1.0, p), 0.8);
  EXPECT_DOUBLE_EQ(motif_weight(0.0, p), 0.2);
  EXPECT_DOUBLE_EQ(motif_weight(1.7, p), 0.8);
  EXPECT_THROW(make_motif_weight({1.0, 2.0, 2.0}), ParameterError);
}

TEST(BehaviorModel, Factors) {
  BehaviorModel b;
  const ModalityProfile walk{"walk", 200.0, 1.0, 5.0};
  EXPECT_EQ(b.energy_factor(0.0, walk), 1.0);
  const double q999 = b.pte.quantile(0.999);
  EXPECT_LT(b.energy_factor(2.0 * q999 / walk.energy_rate_kj_per_km, walk), 1e-3);
  EXPECT_EQ(b.leg_factor(0.0), 0.0);
  EXPECT_NEAR(b.leg_factor(1.0), levy_pdf(1.0, {}), 1e-15);
}
