#pragma once

#include <array>

#include <Eigen/Core>

#include "foothold/robot.hpp"
#include "foothold/terrain.hpp"

namespace foothold {

struct Capsule {
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  double radius = 0.0;
};

/// Closest distance between two segments.
double segment_segment_distance(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                                const Eigen::Vector3d& q0, const Eigen::Vector3d& q1);

/// Axis distance minus the radii sum; negative means the capsules overlap.
/// Symmetric in its arguments bit for bit.
double segment_distance(const Capsule& c1, const Capsule& c2);

/// Distance from a point to a solid box given in the same frame (0 inside).
double point_box_distance(const Eigen::Vector3d& p, const BodyBox& box);

/// Surface distance between a capsule and a solid box; negative when overlapping.
double capsule_box_distance(const Capsule& c, const BodyBox& box);

/**
 * Thigh and shank capsules of one leg in the leg frame. The shank capsule
 * stops foot_radius + link_radius short of the foot center so that the foot
 * sphere itself never counts as a link collision.
 */
std::array<Capsule, 2> leg_capsules(const LegModel& leg, const JointAngles& q);

/// Same capsules expressed in the world frame.
std::array<Capsule, 2> leg_capsules_world(const RobotPose& pose, const LegModel& leg,
                                          const JointAngles& q);

/// True when the swing leg's thigh or shank touches the torso box or any
/// link of the other legs, all posed by `pose.joints`.
bool self_collision(const RobotPose& pose, const RobotModel& robot, int swing_leg);

/**
 * True when the thigh or shank of `leg` posed at `q` reaches into the terrain.
 * Each known cell is a column from its top center downward; the column
 * collides when it passes through a capsule. The foot sphere is excluded.
 */
bool ground_collision(const RobotPose& pose, const LegModel& leg, const JointAngles& q,
                      const ElevationMap& map);

}  // namespace foothold
