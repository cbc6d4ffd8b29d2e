#pragma once

#include <array>
#include <string>

#include <Eigen/Core>

#include "foothold/kinematics.hpp"

namespace foothold {

/// Oriented box in the robot base frame.
struct BodyBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  Eigen::Vector3d half_extents = Eigen::Vector3d(0.35, 0.13, 0.09);

  void validate() const;
};

enum LegId : int { LF = 0, RF = 1, LH = 2, RH = 3 };
inline constexpr int kLegCount = 4;
const char* leg_name(int leg);
int leg_id_from_string(const std::string& name);

struct RobotModel {
  BodyBox body;
  std::array<LegModel, kLegCount> legs;

  /// Leg with the requested role and side.
  int find_leg(Role role, Side side) const;
  void validate() const;
};

/// Mid-size quadruped: hips at (+-0.30, +-0.10) on the base, l0/l1/l2 = 0.10/0.25/0.33 m.
RobotModel default_robot();

/// Swap left and right: every leg mirrored and moved to its counterpart slot.
RobotModel mirrored(const RobotModel& robot);

/// Base pose in the world plus the joint configuration of every leg.
struct RobotPose {
  Eigen::Vector3d base = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  std::array<JointAngles, kLegCount> joints{};
};

RobotPose mirrored(const RobotPose& pose);

Eigen::Matrix3d yaw_rotation(double yaw);

/// Hip (leg frame origin) in the world.
Eigen::Vector3d hip_world(const RobotPose& pose, const LegModel& leg);
/// Rotation from leg frame to world.
Eigen::Matrix3d leg_rotation(const RobotPose& pose, const LegModel& leg);
Eigen::Vector3d leg_to_world(const RobotPose& pose, const LegModel& leg, const Eigen::Vector3d& p);
Eigen::Vector3d world_to_leg(const RobotPose& pose, const LegModel& leg, const Eigen::Vector3d& p);

}  // namespace foothold
