#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "umem/spatial.hpp"

using namespace umem;

namespace {

// Trapezoid-integrated 0.95 quantile of an exponential density with the
// given median; bisection on the cumulative table.
double trapezoid_q95(double median) {
  const double rate = std::numbers::ln2 / median;
  const double upper = 20.0 * median, h = upper / 2'000'000.0;
  std::vector<double> cum(2'000'001, 0.0);
  for (std::size_t i = 1; i < cum.size(); ++i) {
    const double a = (static_cast<double>(i) - 1.0) * h, b = static_cast<double>(i) * h;
    cum[i] = cum[i - 1] + 0.5 * h * (rate * std::exp(-rate * a) + rate * std::exp(-rate * b));
  }
  std::size_t lo = 0, hi = cum.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (cum[mid] < 0.95 ? lo : hi) = mid;
  }
  const double t = (0.95 - cum[lo]) / (cum[hi] - cum[lo]);
  return (static_cast<double>(lo) + t) * h;
}

LivingCluster square(double x0, double y0, double side, double pop = 1000.0) {
  return {make_rectangle(x0, y0, x0 + side, y0 + side), pop};
}

}  // namespace

TEST(PteMargin, MatchesTrapezoidQuantile) {
  const auto pte = PteDistribution::exponential();
  const ModalityProfile m{"test", 10.0, 1.0, 5.0};
  const double expected = trapezoid_q95(615.0) / 20.0 * 1000.0;
  EXPECT_NEAR(pte_margin(pte, m), expected, 1e-6 * expected);
}

TEST(PteMargin, VanishesForHugeEnergyRate) {
  const ModalityProfile m{"test", 1e12, 1.0, 5.0};
  EXPECT_LT(pte_margin(PteDistribution::exponential(), m), 1e-5);
}

TEST(PteMargin, RejectsNonPositiveRate) {
  const ModalityProfile m{"test", 0.0, 1.0, 5.0};
  EXPECT_THROW(pte_margin(PteDistribution::exponential(), m), ParameterError);
}

TEST(TargetArea, ZeroMarginIsUnion) {
  const std::vector<LivingCluster> cs = {square(0, 0, 1000), square(1000, 0, 1000)};
  const auto area = build_target_area(cs, 0.0);
  ASSERT_EQ(area.boundary.size(), 1u);
  EXPECT_NEAR(bg::area(area.boundary), 2e6, 1e-6);
}

TEST(TargetArea, SquareBufferArea) {
  const double side = 1000.0, m = 200.0;
  const std::vector<LivingCluster> cs = {square(0, 0, side)};
  const auto area = build_target_area(cs, m);
  const double expected = side * side + 4.0 * side * m + std::numbers::pi * m * m;
  EXPECT_NEAR(bg::area(area.boundary), expected, 1e-4 * expected);
}

TEST(TargetArea, BufferMergesNearbyClusters) {
  const std::vector<LivingCluster> cs = {square(0, 0, 1000), square(1300, 0, 1000)};
  EXPECT_EQ(build_target_area(cs, 100.0).boundary.size(), 2u);
  EXPECT_EQ(build_target_area(cs, 200.0).boundary.size(), 1u);
}

TEST(TargetArea, RejectsDegenerateCluster) {
  LivingCluster flat{make_rectangle(0, 0, 1000, 0), 10.0};
  const std::vector<LivingCluster> cs = {flat};
  EXPECT_THROW(build_target_area(cs, 0.0), InputError);
  EXPECT_THROW(build_target_area({}, 0.0), InputError);
}

TEST(Grid, TenByTen) {
  const std::vector<LivingCluster> cs = {square(0, 0, 10000)};
  const auto grid = make_grid(build_target_area(cs, 0.0), 1.0);
  EXPECT_EQ(grid.n_cols, 10u);
  EXPECT_EQ(grid.n_rows, 10u);
  EXPECT_EQ(grid.active_count(), 100u);
}

TEST(Grid, CellLargerThanArea) {
  const std::vector<LivingCluster> cs = {square(0, 0, 3000)};
  const auto grid = make_grid(build_target_area(cs, 0.0), 20.0);
  EXPECT_EQ(grid.size(), 1u);
}

TEST(Grid, LShapeLeavesCornerInactive) {
  const GeoPoint ring[] = {{0, 0}, {2000, 0}, {2000, 1000}, {1000, 1000}, {1000, 2000}, {0, 2000}};
  const std::vector<LivingCluster> cs = {{make_polygon(ring), 300.0}};
  auto grid = make_grid(build_target_area(cs, 0.0), 1.0);
  grid = assign_population(std::move(grid), cs);
  ASSERT_EQ(grid.size(), 4u);
  const auto corner = grid.index_of(1, 1);
  EXPECT_FALSE(grid.zones[corner].active);
  EXPECT_EQ(grid.zones[corner].population, 0.0);
  EXPECT_EQ(grid.zones[corner].wpo, 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    if (i == corner) continue;
    EXPECT_TRUE(grid.zones[i].active);
    EXPECT_NEAR(grid.zones[i].population, 100.0, 1e-9);
  }
}

TEST(Grid, ActiveIffCentroidInside) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5000.0);
  for (int trial = 0; trial < 20; ++trial) {
    const GeoPoint ring[] = {{0, 0}, {5000 + u(rng), 0}, {5000 + u(rng), 4000 + u(rng)}, {u(rng), 9000}};
    const std::vector<LivingCluster> cs = {{make_polygon(ring), 1.0}};
    const auto area = build_target_area(cs, 0.0);
    const auto grid = make_grid(area, 0.7);
    for (const auto& z : grid.zones)
      EXPECT_EQ(z.active, bg::covered_by(PlanarPoint(z.centroid.x, z.centroid.y), area.boundary));
  }
}

TEST(Population, ExactCellGetsAll) {
  const std::vector<LivingCluster> cs = {square(0, 0, 3000, 1.0)};
  auto grid = make_grid(build_target_area(cs, 0.0), 1.0);
  const std::vector<LivingCluster> one = {square(1000, 1000, 1000, 500.0)};
  grid = assign_population(std::move(grid), one);
  EXPECT_EQ(grid.zones[grid.index_of(1, 1)].population, 500.0);
}

TEST(Population, TwoCellSplit) {
  const std::vector<LivingCluster> cs = {square(0, 0, 2000, 1.0)};
  auto grid = make_grid(build_target_area(cs, 0.0), 1.0);
  const std::vector<LivingCluster> spanning = {{make_rectangle(500, 0, 1500, 1000), 800.0}};
  grid = assign_population(std::move(grid), spanning);
  EXPECT_NEAR(grid.zones[grid.index_of(0, 0)].population, 400.0, 1e-9);
  EXPECT_NEAR(grid.zones[grid.index_of(1, 0)].population, 400.0, 1e-9);
}

TEST(Population, Conserved) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(0.0, 8000.0), size(200.0, 3000.0), pop(1.0, 1e5);
  std::vector<LivingCluster> cs;
  double total = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double x = pos(rng), y = pos(rng), w = size(rng), h = size(rng), p = pop(rng);
    cs.push_back({make_rectangle(x, y, x + w, y + h), p});
    total += p;
  }
  const auto grid = assign_population(make_grid(build_target_area(cs, 150.0), 0.9), cs);
  double sum = 0.0;
  for (const auto& z : grid.zones) sum += z.population;
  EXPECT_NEAR(sum, total, 1e-9 * total);
}

TEST(Population, ClusterOutsideGridThrows) {
  const std::vector<LivingCluster> cs = {square(0, 0, 1000)};
  auto grid = make_grid(build_target_area(cs, 0.0), 1.0);
  const std::vector<LivingCluster> far = {square(50000, 50000, 1000)};
  EXPECT_THROW(assign_population(std::move(grid), far), InputError);
}

TEST(Grid, LocateIsHalfOpen) {
  const std::vector<LivingCluster> cs = {square(0, 0, 2000)};
  const auto grid = make_grid(build_target_area(cs, 0.0), 1.0);
  EXPECT_EQ(grid.locate({999.999, 0.0}), grid.index_of(0, 0));
  EXPECT_EQ(grid.locate({1000.0, 0.0}), grid.index_of(1, 0));
  EXPECT_FALSE(grid.locate({2000.0, 500.0}).has_value());
  EXPECT_FALSE(grid.locate({-0.001, 500.0}).has_value());
}
