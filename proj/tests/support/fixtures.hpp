#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "foothold/kinematics.hpp"
#include "foothold/robot.hpp"
#include "foothold/terrain.hpp"

namespace foothold::fixture {

/// Joint angles uniform inside the leg's limits.
JointAngles random_joints(const LegModel& leg, std::mt19937_64& rng);

/// Flat square patch at height h, all cells known.
Patch flat_patch(int size, double h = 0.0, double cell_size = 0.02);

/// Flat map centered on the origin.
ElevationMap flat_map(int size, double h = 0.0, double cell_size = 0.02);

/// Default robot standing on `map` with the hip of `leg` hip_height above ground.
RobotPose stance(const ElevationMap& map, double x, double y, double yaw, double hip_height, int leg = LF,
                 const RobotModel& robot = default_robot());

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Whole file contents as bytes.
std::string file_bytes(const std::filesystem::path& path);

}  // namespace foothold::fixture
