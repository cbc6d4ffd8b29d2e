#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "foothold/dataset.hpp"

namespace foothold::fixture {

JointAngles random_joints(const LegModel& leg, std::mt19937_64& rng) {
  const auto draw = [&](const Interval& iv) { return std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng); };
  return {draw(leg.limits[0]), draw(leg.limits[1]), draw(leg.limits[2])};
}

Patch flat_patch(int size, double h, double cell_size) {
  Patch p(size, cell_size);
  std::fill(p.heights.begin(), p.heights.end(), h);
  std::fill(p.known.begin(), p.known.end(), 1);
  return p;
}

ElevationMap flat_map(int size, double h, double cell_size) {
  const double half = 0.5 * (size - 1) * cell_size;
  return ElevationMap(size, size, cell_size, Eigen::Vector2d(-half, -half), h);
}

RobotPose stance(const ElevationMap& map, double x, double y, double yaw, double hip_height, int leg,
                 const RobotModel& robot) {
  const auto pose = make_stance(map, robot, Eigen::Vector2d(x, y), yaw, hip_height, leg);
  if (!pose) throw std::runtime_error("fixture stance is not reachable");
  return *pose;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("foothold_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace foothold::fixture
