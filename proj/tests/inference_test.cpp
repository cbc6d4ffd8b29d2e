#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "foothold/errors.hpp"
#include "foothold/dataset.hpp"
#include "foothold/inference.hpp"

namespace foothold {
namespace {

constexpr double kBin = 255.0 / 13.0;

TEST(ReconstructCost, BinCenters) {
  EXPECT_NEAR(*reconstruct_cost(0), 9.8077, 5e-5);
  EXPECT_FALSE(reconstruct_cost(13));
  for (int i = 0; i < 13; ++i) {
    EXPECT_DOUBLE_EQ(*reconstruct_cost(i), (i + 0.5) * kBin);
    EXPECT_EQ(class_of_cost(static_cast<int>(std::lround(*reconstruct_cost(i)))), i);
  }
}

TEST(FlipForSide, InvolutionAndLeftIdentity) {
  GrayImage img(40);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 7);
  EXPECT_EQ(flip_for_side(img, Side::left).pixels, img.pixels);
  const GrayImage f = flip_for_side(img, Side::right);
  EXPECT_EQ(f.at(3, 0), img.at(3, 39));
  EXPECT_EQ(flip_for_side(f, Side::right).pixels, img.pixels);
  LabelMap l(40);
  for (std::size_t i = 0; i < l.values.size(); ++i) l.values[i] = static_cast<std::uint8_t>(i % 14);
  EXPECT_EQ(flip_for_side(flip_for_side(l, Side::right), Side::right), l);
  EXPECT_EQ(flip_for_side(l, Side::left), l);
}

Patch grid(double cell = 0.02) { return fixture::flat_patch(40, 0.0, cell); }

TEST(SelectFoothold, UniformClassPicksTheNominalCell) {
  const Patch p = grid();
  const LabelMap l(40, 4);
  const Eigen::Vector2d nominal = p.local_offset(17, 23);
  const auto d = select_foothold(l, p, nominal, 160.0);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->row, 17);
  EXPECT_EQ(d->col, 23);
  EXPECT_EQ(d->distance, 0.0);
  EXPECT_DOUBLE_EQ(d->cost, 4.5 * kBin);
}

TEST(SelectFoothold, ZeroDistanceWeightPicksTheBestClass) {
  const Patch p = grid();
  LabelMap l(40, 5);
  l.at(2, 37) = 1;
  const auto d = select_foothold(l, p, p.local_offset(20, 20), 0.0);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->row, 2);
  EXPECT_EQ(d->col, 37);
}

TEST(SelectFoothold, InfeasibleAndUnknownAreNeverChosen) {
  Patch p = grid();
  LabelMap l(40, 13);
  EXPECT_FALSE(select_foothold(l, p, {0, 0}, 160.0));
  l.at(5, 5) = 0;
  p.known[p.index(5, 5)] = 0;
  EXPECT_FALSE(select_foothold(l, p, {0, 0}, 160.0));
  l.at(30, 30) = 12;
  const auto d = select_foothold(l, p, {0, 0}, 1e6);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->row, 30);
}

TEST(SelectFoothold, TiesGoToTheFirstCell) {
  const Patch p = grid(0.5);  // offsets exact in binary
  LabelMap m(40, 13);
  m.at(12, 20) = 2;
  m.at(12, 22) = 2;
  const auto e = select_foothold(m, p, p.local_offset(12, 21), 160.0);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->col, 20);
  m.at(12, 20) = 13;
  EXPECT_EQ(select_foothold(m, p, p.local_offset(12, 21), 160.0)->col, 22);
}

TEST(SelectFoothold, ArgminAndDecomposition) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    Patch p = grid();
    LabelMap l(40);
    for (std::size_t i = 0; i < l.values.size(); ++i) {
      l.values[i] = static_cast<std::uint8_t>(rng() % 14);
      p.known[i] = rng() % 10 != 0;
    }
    const Eigen::Vector2d nominal(std::uniform_real_distribution<double>(-0.3, 0.3)(rng),
                                  std::uniform_real_distribution<double>(-0.3, 0.3)(rng));
    const double k = std::uniform_real_distribution<double>(0, 400)(rng);
    const auto d = select_foothold(l, p, nominal, k);
    ASSERT_TRUE(d);
    const auto costs = final_costs(l, p, nominal, k);
    for (double c : costs) EXPECT_LE(d->cost, c + 1e-9);
    EXPECT_NEAR(d->cost, *reconstruct_cost(d->class_id) + k * d->distance, 1e-9);
    EXPECT_NEAR(d->distance, (p.local_offset(d->row, d->col) - nominal).norm(), 1e-12);
    EXPECT_NE(d->class_id, 13);
    EXPECT_TRUE(p.is_known(d->row, d->col));
  }
}

// Class 3 under the nominal point, a single class-2 cell six cells away along
// the rows; the cell size sets the separation.
bool ring_wins(double separation, double k) {
  const Patch p = grid(separation / 6.0);
  LabelMap l(40, 3);
  l.at(26, 20) = 2;
  const auto d = select_foothold(l, p, p.local_offset(20, 20), k);
  return d && d->row == 26 && d->col == 20;
}

TEST(SelectFoothold, DistanceThresholdFixture) {
  const double threshold = kBin / 160.0;
  EXPECT_NEAR(threshold, 0.1226, 1e-4);
  for (int i = 0; i <= 200; ++i) {
    const double sep = 0.10 + 0.00025 * i;
    if (std::abs(sep - threshold) < 1e-9) continue;
    EXPECT_EQ(ring_wins(sep, 160.0), sep < threshold) << sep;
  }
  EXPECT_TRUE(ring_wins(threshold - 1e-7, 160.0));
  EXPECT_FALSE(ring_wins(threshold + 1e-7, 160.0));
}

TEST(FormatDecision, RoundTrip) {
  FootholdDecision d;
  d.leg = LH;
  d.row = 7;
  d.col = 31;
  d.class_id = 4;
  d.class_cost = *reconstruct_cost(4);
  d.distance = 0.0123456789;
  d.cost = d.class_cost + 160 * d.distance;
  d.world = {1.25, -0.5, 0.031};
  const std::string s = format_decision(d);
  EXPECT_EQ(s.rfind("leg=LH cell=7,31 class=4 ", 0), 0u) << s;
  const FootholdDecision e = parse_decision(s);
  EXPECT_EQ(e.leg, d.leg);
  EXPECT_EQ(e.row, d.row);
  EXPECT_EQ(e.col, d.col);
  EXPECT_EQ(e.class_id, d.class_id);
  EXPECT_EQ(e.cost, d.cost);
  EXPECT_EQ(e.world, d.world);
  EXPECT_EQ(format_no_foothold(RF), "leg=RF none");
  EXPECT_THROW(parse_decision("leg=LF cell=1"), DataError);
}

struct Scene {
  RobotModel robot = default_robot();
  ElevationMap map;
  RobotPose pose;
};

Scene rough_scene(std::uint64_t seed, double x, double y, double yaw) {
  Scene s;
  TerrainSpec spec;
  spec.kind = TerrainKind::rough;
  spec.seed = seed;
  spec.rough_amplitude = 0.04;
  s.map = generate_terrain(spec, 200, 200);
  s.pose = fixture::stance(s.map, x, y, yaw, 0.5);
  return s;
}

TEST(EvaluateLeg, FlatGroundStaysNearTheNominalFoothold) {
  Scene s;
  s.map = fixture::flat_map(200);
  s.pose = fixture::stance(s.map, 0.0, 0.0, 0.0, 0.5);
  const InferenceConfig cfg;
  const LegInference inf = infer_leg(s.map, s.robot, s.pose, LF, cfg);
  ASSERT_TRUE(inf.decision);
  const auto costs = final_costs(inf.labels, inf.view.patch, inf.nominal, cfg.k);
  for (double c : costs) EXPECT_LE(inf.decision->cost, c);
  EXPECT_LE(inf.decision->distance, 0.05);
  EXPECT_NEAR(inf.decision->world.z(), 0.0, 1e-12);
  // The same call again is identical.
  const auto again = evaluate_leg(s.map, s.robot, s.pose, LF, cfg);
  ASSERT_TRUE(again);
  EXPECT_EQ(format_decision(*again), format_decision(*inf.decision));
}

TEST(EvaluateLeg, OraclePathMatchesTheLabeler) {
  const Scene s = rough_scene(3, 0.1, 0.0, 0.4);
  const LegInference inf = infer_leg(s.map, s.robot, s.pose, LF, {});
  EXPECT_EQ(inf.labels, classes_of(label_patch(s.robot, s.pose, LF, inf.view.patch)));
}

TEST(EvaluateLeg, TranslationMovesTheWorldPoint) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Scene s = rough_scene(seed, 0.0, 0.1, 0.3 * seed);
    Scene t = s;
    const Eigen::Vector2d shift(0.40, -0.26);  // whole cells
    t.map.origin += shift;
    t.pose.base.head<2>() += shift;
    for (int leg = 0; leg < kLegCount; ++leg) {
      const auto a = evaluate_leg(s.map, s.robot, s.pose, leg, {});
      const auto b = evaluate_leg(t.map, t.robot, t.pose, leg, {});
      ASSERT_EQ(a.has_value(), b.has_value());
      if (!a) continue;
      EXPECT_LE((b->world.head<2>() - a->world.head<2>() - shift).norm(), 0.02 * std::sqrt(2.0) + 1e-9);
    }
  }
}

TEST(EvaluateLeg, MirroredWorldGivesMirroredDecision) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scene s = rough_scene(seed, 0.05 * seed, -0.1, 0.7 * static_cast<double>(seed) - 2.0);
    Scene m = s;
    for (int ix = 0; ix < s.map.size_x; ++ix)
      for (int iy = 0; iy < s.map.size_y; ++iy) m.map.height(ix, iy) = s.map.height(ix, s.map.size_y - 1 - iy);
    m.robot = mirrored(s.robot);
    m.pose = mirrored(s.pose);
    for (int leg = 0; leg < kLegCount; ++leg) {
      const int counterpart = leg ^ 1;  // LF <-> RF, LH <-> RH
      const auto a = evaluate_leg(s.map, s.robot, s.pose, leg, {});
      const auto b = evaluate_leg(m.map, m.robot, m.pose, counterpart, {});
      ASSERT_EQ(a.has_value(), b.has_value());
      if (!a) continue;
      EXPECT_EQ(a->row, b->row);
      EXPECT_EQ(a->col, 39 - b->col);
      EXPECT_EQ(a->class_id, b->class_id);
      EXPECT_NEAR(a->world.y(), -b->world.y(), 1e-9);
    }
  }
}

TEST(NetworkPredictor, LabelsInRangeAndRoleChecked) {
  Model model;
  model.params = Network<float>(model.config).initial_parameters(2);
  model.role = Role::front;
  NetworkPredictor predictor(model);
  const Scene s = rough_scene(2, 0.0, 0.0, 0.0);
  InferenceConfig cfg;
  cfg.evaluator = Evaluator::network;
  const LegInference inf = infer_leg(s.map, s.robot, s.pose, RF, cfg, &predictor);
  for (auto v : inf.labels.values) EXPECT_LT(v, 14);
  EXPECT_THROW(infer_leg(s.map, s.robot, s.pose, LH, cfg, &predictor), std::invalid_argument);
  EXPECT_THROW(infer_leg(s.map, s.robot, s.pose, LF, cfg, nullptr), std::invalid_argument);
  // Right legs see the mirrored image.
  const LabelMap direct = predictor.predict(flip_for_side(inf.image, Side::right), Side::left);
  EXPECT_EQ(flip_for_side(direct, Side::right), inf.labels);
}

TEST(InferenceConfig, Validation) {
  InferenceConfig cfg;
  cfg.k = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(evaluator_from_string("network"), Evaluator::network);
  EXPECT_THROW(evaluator_from_string("magic"), std::invalid_argument);
}

}  // namespace
}  // namespace foothold
