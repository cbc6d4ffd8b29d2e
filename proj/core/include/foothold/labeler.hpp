#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "foothold/collision.hpp"
#include "foothold/kinematics.hpp"
#include "foothold/robot.hpp"
#include "foothold/terrain.hpp"
#include "foothold/terrain_cost.hpp"

namespace foothold {

inline constexpr int kClassCount = 14;
inline constexpr int kInfeasibleClass = 13;
inline constexpr std::uint8_t kInfeasibleCost = 255;
inline constexpr std::uint8_t kMaxFeasibleCost = 254;

/// Square grid of 8-bit values (costs 0-255 or class ids 0-13), row-major.
struct ByteMap {
  int size = 0;
  std::vector<std::uint8_t> values;

  ByteMap() = default;
  explicit ByteMap(int size, std::uint8_t fill = 0)
      : size(size), values(static_cast<std::size_t>(size) * size, fill) {}
  std::uint8_t at(int r, int c) const { return values[static_cast<std::size_t>(r) * size + c]; }
  std::uint8_t& at(int r, int c) { return values[static_cast<std::size_t>(r) * size + c]; }
  friend bool operator==(const ByteMap&, const ByteMap&) = default;
};

/// Foothold costs; 255 marks a failed hard constraint.
struct CostMap : ByteMap {
  using ByteMap::ByteMap;
};

/// Cost classes 0-13; 13 is the infeasible class.
struct LabelMap : ByteMap {
  using ByteMap::ByteMap;
};

struct LabelerParams {
  TerrainCostParams terrain;
  MarginOptions margin;
};

enum class FootholdVerdict { feasible, unknown_cell, outside_workspace, self_collision, ground_collision };
const char* to_string(FootholdVerdict v);

struct FootholdEvaluation {
  std::uint8_t cost = kInfeasibleCost;
  FootholdVerdict verdict = FootholdVerdict::unknown_cell;
  double margin = 0.0;         // m, feasible cells only
  double kinematic_cost = 1.0;  // c_k
  double terrain_cost = 1.0;    // c_m
};

/// Scaled combination of kinematic and terrain cost:
/// round(((ck + 2 cm) / 3) * 255), clamped to the feasible range [0, 254].
std::uint8_t combine_costs(double kinematic_cost, double terrain_cost);

/// c_k = 1 - clamp(margin / margin_scale, 0, 1).
double kinematic_cost(double margin, double margin_scale);

/**
 * Geometry needed to label a 40x40 local patch, expressed in the patch frame
 * (origin at the patch center, axes along the patch rows and columns, world z).
 */
class PatchLabeler {
 public:
  PatchLabeler(const RobotModel& robot, const RobotPose& pose, int swing_leg, const Patch& patch,
               const LabelerParams& params = {});

  /// Five-constraint evaluation of cell (r, c): unknown cell, kinematic range,
  /// self collision and ground collision each force 255; otherwise the margin
  /// and terrain costs are combined.
  FootholdEvaluation evaluate(int r, int c) const;

  const RobotPose& local_pose() const { return pose_; }
  const ElevationMap& local_ground() const { return ground_; }
  /// Foot target of a cell in the swing leg frame.
  Eigen::Vector3d foot_target(int r, int c) const;

 private:
  RobotModel robot_;
  RobotPose pose_;
  int swing_;
  Patch patch_;
  LabelerParams params_;
  ElevationMap ground_;
};

inline std::uint8_t foothold_cost(const RobotModel& robot, const RobotPose& pose, int swing_leg,
                                  const Patch& patch, int r, int c, const LabelerParams& params = {}) {
  return PatchLabeler(robot, pose, swing_leg, patch, params).evaluate(r, c).cost;
}

/// Per-cell costs of a local patch.
CostMap label_patch(const RobotModel& robot, const RobotPose& pose, int swing_leg,
                    const Patch& patch, const LabelerParams& params = {});

/// 255 -> 13, otherwise min(floor(cost * 13 / 255), 12).
int class_of_cost(int cost);
LabelMap classes_of(const CostMap& costs);

using ClassHistogram = std::array<std::uint64_t, kClassCount>;
void accumulate_histogram(ClassHistogram& hist, const LabelMap& labels);

struct ClassWeights {
  double constant = 1.08;
  std::array<double, kClassCount> probabilities{};
  std::array<double, kClassCount> weights{};
};

/// w_i = 1 / ln(constant + p_i) with p_i the class share of the histogram.
/// Throws std::invalid_argument for an empty histogram.
ClassWeights class_weights(const ClassHistogram& hist, double constant = 1.08);

/// Local patch geometry for one leg in a given stance.
struct LegView {
  Patch patch;             // 40x40, robot-aligned
  Eigen::Vector3d hip;     // leg frame origin in the world
};

/**
 * Extract the 51x51 world patch around the leg, rotate it into the robot
 * heading and crop to 40x40. The crop is centered on the cell corner nearest
 * the hip, which keeps mirrored scenes mirror-exact.
 */
LegView make_leg_view(const ElevationMap& map, const RobotModel& robot, const RobotPose& pose, int leg);

}  // namespace foothold
