#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "foothold/errors.hpp"
#include "foothold/io.hpp"

namespace foothold {
namespace {

TEST(Heightmap, RoundTripWithUnknownCells) {
  TerrainSpec spec;
  spec.kind = TerrainKind::rough;
  spec.seed = 12;
  ElevationMap m = generate_terrain(spec, 60, 53);
  m.known[m.index(0, 0)] = 0;
  m.known[m.index(17, 40)] = 0;
  const fixture::TempDir tmp("io_hm");
  write_heightmap(tmp / "m.txt", m);
  const ElevationMap r = read_heightmap(tmp / "m.txt");
  EXPECT_EQ(r.size_x, 60);
  EXPECT_EQ(r.size_y, 53);
  EXPECT_EQ(r.cell_size, m.cell_size);
  EXPECT_EQ(r.origin, m.origin);
  EXPECT_EQ(r.known, m.known);
  for (int ix = 0; ix < 60; ++ix)
    for (int iy = 0; iy < 53; ++iy)
      if (m.is_known(ix, iy)) {
        EXPECT_EQ(r.height(ix, iy), m.height(ix, iy));
      }
  EXPECT_EQ(format_heightmap(r), format_heightmap(m));
}

TEST(Heightmap, LayoutIsOneLinePerXRow) {
  ElevationMap m(2, 3, 0.5, {1.0, -2.0});
  m.height(1, 2) = 0.25;
  m.known[m.index(0, 1)] = 0;
  EXPECT_EQ(format_heightmap(m), "width 2\nheight 3\ncell_size 0.5\norigin 1 -2\n0 ? 0\n0 0 0.25\n");
}

TEST(Heightmap, MalformedInput) {
  EXPECT_THROW(parse_heightmap("width 2\nheight 1\ncell_size 0.1\norigin 0 0\n1\n"), DataError);
  EXPECT_THROW(parse_heightmap("width 1\nheight 1\ncell_size 0.1\norigin 0 0\n1 2\n"), DataError);
  EXPECT_THROW(parse_heightmap("width 1\nheight 1\ncell_size 0.1\norigin 0 0\nabc\n"), DataError);
  EXPECT_THROW(parse_heightmap("width 1\nheight 1\ncell_size 0\norigin 0 0\n1\n"), DataError);
  EXPECT_THROW(parse_heightmap("depth 3\n"), DataError);
  EXPECT_THROW(parse_heightmap("width 1\nheight 1\ncell_size 0.1\norigin 0 0\nnan\n"), DataError);
  EXPECT_THROW(read_heightmap("/nonexistent/map.txt"), DataError);
}

TEST(Pgm, RoundTripAndHeader) {
  GrayImage img(7);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 5);
  const fixture::TempDir tmp("io_pgm");
  write_pgm(tmp / "a.pgm", img);
  EXPECT_EQ(read_pgm(tmp / "a.pgm").pixels, img.pixels);
  const std::string bytes = fixture::file_bytes(tmp / "a.pgm");
  EXPECT_EQ(bytes.rfind("P5", 0), 0u);
  EXPECT_EQ(bytes.size(), bytes.find("255\n") + 4 + 49);
  write_text(tmp / "bad.pgm", "P2\n1 1\n255\n0");
  EXPECT_THROW(read_pgm(tmp / "bad.pgm"), DataError);
  write_text(tmp / "rect.pgm", std::string("P5\n2 1\n255\n") + std::string(2, '\0'));
  EXPECT_THROW(read_pgm(tmp / "rect.pgm"), DataError);
  write_text(tmp / "short.pgm", std::string("P5\n2 2\n255\n") + std::string(3, '\0'));
  EXPECT_THROW(read_pgm(tmp / "short.pgm"), DataError);
}

TEST(KeyValues, BothSyntaxesAndComments) {
  const KeyValues kv = parse_key_values("# header\nalpha 1.5\nbeta = two words\n\n  gamma=3 # trailing\n");
  EXPECT_EQ(kv.at("alpha"), "1.5");
  EXPECT_EQ(kv.at("beta"), "two words");
  EXPECT_EQ(kv.at("gamma"), "3");
  EXPECT_EQ(kv.size(), 3u);
  EXPECT_THROW(parse_key_values("lonely\n"), DataError);
}

TEST(LegFile, RoundTrip) {
  LegModel leg = default_robot().legs[RH];
  leg.thigh = 0.27;
  leg.limits[2] = {-2.4, -0.1};
  const fixture::TempDir tmp("io_leg");
  write_leg_file(tmp / "leg.cfg", leg);
  const LegModel r = read_leg_file(tmp / "leg.cfg");
  EXPECT_EQ(r.name, leg.name);
  EXPECT_EQ(r.side, leg.side);
  EXPECT_EQ(r.role, leg.role);
  EXPECT_EQ(r.mount, leg.mount);
  EXPECT_EQ(r.mount_yaw, leg.mount_yaw);
  EXPECT_EQ(r.thigh, 0.27);
  EXPECT_EQ(r.limits[2].lo, -2.4);
  EXPECT_EQ(r.limits[2].hi, -0.1);
  EXPECT_EQ(r.foot_radius, leg.foot_radius);
  EXPECT_EQ(format_leg(r), format_leg(leg));

  KeyValues kv = parse_key_values(format_leg(leg));
  kv["thigh"] = "-1";
  EXPECT_THROW(leg_from_key_values(kv), DataError);
  kv["thigh"] = "x";
  EXPECT_THROW(leg_from_key_values(kv), DataError);
}

TEST(RobotFile, RoundTrip) {
  RobotModel robot = default_robot();
  robot.legs[LF].shank = 0.35;
  robot.body.half_extents.x() = 0.4;
  const fixture::TempDir tmp("io_robot");
  const auto path = write_robot_files(tmp.path(), robot);
  const RobotModel r = read_robot_file(path);
  EXPECT_EQ(r.body.half_extents, robot.body.half_extents);
  for (int i = 0; i < kLegCount; ++i) EXPECT_EQ(format_leg(r.legs[i]), format_leg(robot.legs[i])) << i;
  EXPECT_THROW(read_robot_file(tmp / "missing.cfg"), DataError);
}

TEST(ModelFile, RoundTripAndCorruption) {
  Model model;
  model.config = NetConfig::tiny();
  model.role = Role::rear;
  model.params = Network<float>(model.config).initial_parameters(4);
  for (int i = 0; i < kClassCount; ++i) model.class_weights[i] = 1.0 + 0.5 * i;
  const fixture::TempDir tmp("io_model");
  write_model(tmp / "m.bin", model);
  const Model r = read_model(tmp / "m.bin");
  EXPECT_EQ(r.config, model.config);
  EXPECT_EQ(r.role, Role::rear);
  EXPECT_EQ(r.params, model.params);
  EXPECT_EQ(r.class_weights, model.class_weights);

  const std::string bytes = fixture::file_bytes(tmp / "m.bin");
  EXPECT_EQ(bytes.substr(0, 8), std::string("FHMODEL\0", 8));
  write_text(tmp / "short.bin", bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(read_model(tmp / "short.bin"), DataError);
  write_text(tmp / "long.bin", bytes + "x");
  EXPECT_THROW(read_model(tmp / "long.bin"), DataError);
  std::string bad = bytes;
  bad[0] = 'X';
  write_text(tmp / "magic.bin", bad);
  EXPECT_THROW(read_model(tmp / "magic.bin"), DataError);

  model.params.pop_back();
  EXPECT_THROW(write_model(tmp / "x.bin", model), std::invalid_argument);
}

}  // namespace
}  // namespace foothold
