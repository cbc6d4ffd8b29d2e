#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "foothold/terrain_cost.hpp"

namespace foothold {
namespace {

Patch plane(double gx, double gy, double offset = 0.0) {
  Patch p = fixture::flat_patch(40);
  for (int r = 0; r < 40; ++r)
    for (int c = 0; c < 40; ++c) p.height(r, c) = offset + 0.02 * (gx * r + gy * c);
  return p;
}

Patch two_level(double step, int edge_row = 20) {
  Patch p = fixture::flat_patch(40);
  for (int r = edge_row; r < 40; ++r)
    for (int c = 0; c < 40; ++c) p.height(r, c) = step;
  return p;
}

TEST(TerrainCost, FlatWindowIsFree) {
  const auto t = local_terrain_cost_terms(fixture::flat_patch(40, 0.3), 20, 20);
  EXPECT_EQ(t.cost, 0.0);
  EXPECT_EQ(t.slope, 0.0);
  EXPECT_EQ(t.roughness, 0.0);
  EXPECT_EQ(t.edge, 0.0);
}

TEST(TerrainCost, PlaneAtTheSlopeLimitCostsTheSlopeWeight) {
  const TerrainCostParams params;
  const double g = std::tan(params.slope_max);
  const Patch p = plane(g * std::cos(0.4), g * std::sin(0.4));
  const auto t = local_terrain_cost_terms(p, 17, 22, params);
  EXPECT_NEAR(t.slope, 1.0, 1e-9);
  EXPECT_NEAR(t.roughness, 0.0, 1e-6);
  EXPECT_NEAR(t.edge, 0.0, 1e-9);
  EXPECT_NEAR(t.cost, params.w_slope, 1e-6);
  // Half the inclination gives half the slope term.
  const Patch half = plane(std::tan(0.35), 0.0);
  EXPECT_NEAR(local_terrain_cost_terms(half, 20, 20, params).slope, 0.5, 1e-9);
}

TEST(TerrainCost, NextToAStepEdge) {
  const Patch p = two_level(0.1);
  const auto t = local_terrain_cost_terms(p, 19, 10);
  EXPECT_EQ(t.edge, 1.0);
  EXPECT_GE(t.cost, 0.3);
  // Far from the edge the window is flat again.
  EXPECT_EQ(local_terrain_cost(p, 10, 10), 0.0);
  EXPECT_EQ(local_terrain_cost(p, 30, 10), 0.0);
}

TEST(TerrainCost, FourCentimetreStepSaturatesTheEdgeTerm) {
  EXPECT_EQ(local_terrain_cost_terms(two_level(0.04), 20, 5).edge, 1.0);
  EXPECT_LT(local_terrain_cost_terms(two_level(0.02), 20, 5).edge, 1.0);
}

TEST(TerrainCost, UnknownOrOutsideWindowIsWorst) {
  Patch p = fixture::flat_patch(40);
  p.known[p.index(21, 20)] = 0;
  EXPECT_EQ(local_terrain_cost(p, 20, 20), 1.0);
  EXPECT_EQ(local_terrain_cost(p, 24, 20), 0.0);
  EXPECT_EQ(local_terrain_cost(p, 1, 20), 1.0);   // window leaves the patch
  EXPECT_EQ(local_terrain_cost(p, 20, 38), 1.0);
  EXPECT_EQ(local_terrain_cost(p, 2, 2), 0.0);
}

Patch random_patch(std::uint64_t seed, double amp) {
  Patch p = fixture::flat_patch(40);
  std::mt19937_64 rng(seed);
  for (auto& h : p.heights) h = std::uniform_real_distribution<double>(-amp, amp)(rng);
  return p;
}

TEST(TerrainCost, RangeAndOffsetInvariance) {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const Patch p = random_patch(s, 0.01 * s);
    Patch q = p;
    for (auto& h : q.heights) h += 0.731;
    for (int r = 2; r < 38; r += 5)
      for (int c = 2; c < 38; c += 3) {
        const double a = local_terrain_cost(p, r, c);
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
        EXPECT_NEAR(local_terrain_cost(q, r, c), a, 1e-12);
      }
  }
}

TEST(TerrainCost, MirroredWindowCostsTheSame) {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const Patch p = random_patch(100 + s, 0.02);
    Patch m = p;
    for (int r = 0; r < 40; ++r)
      for (int c = 0; c < 40; ++c) m.height(r, c) = p.height(r, 39 - c);
    for (int r = 2; r < 38; r += 4)
      for (int c = 2; c < 38; c += 4) EXPECT_EQ(local_terrain_cost(p, r, c), local_terrain_cost(m, r, 39 - c));
  }
}

TEST(TerrainCost, MonotoneInStepHeight) {
  for (int r : {18, 19, 20, 21}) {
    double prev = -1.0;
    for (int i = 0; i <= 40; ++i) {
      const double h = 0.005 * i;
      const double cm = local_terrain_cost(two_level(h), r, 12);
      EXPECT_GE(cm, prev - 1e-12) << h;
      prev = cm;
    }
  }
}

TEST(TerrainCost, ParamsValidate) {
  TerrainCostParams p;
  EXPECT_NO_THROW(p.validate());
  p.window = 4;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.w_edge = 0.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.rough_max = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace foothold
