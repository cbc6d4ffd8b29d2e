#include "foothold/robot.hpp"

#include <cmath>
#include <stdexcept>

namespace foothold {

void BodyBox::validate() const {
  if (!(half_extents.array() > 0.0).all())
    throw std::invalid_argument("body box half-extents must be positive");
}

const char* leg_name(int leg) {
  static constexpr const char* names[kLegCount] = {"LF", "RF", "LH", "RH"};
  if (leg < 0 || leg >= kLegCount) throw std::out_of_range("leg index out of range");
  return names[leg];
}

int leg_id_from_string(const std::string& name) {
  for (int i = 0; i < kLegCount; ++i)
    if (name == leg_name(i)) return i;
  throw std::invalid_argument("unknown leg '" + name + "' (expected LF, RF, LH or RH)");
}

int RobotModel::find_leg(Role role, Side side) const {
  for (int i = 0; i < kLegCount; ++i)
    if (legs[i].role == role && legs[i].side == side) return i;
  throw std::invalid_argument("robot has no such leg");
}

void RobotModel::validate() const {
  body.validate();
  for (const auto& leg : legs) leg.validate();
}

RobotModel default_robot() {
  RobotModel robot;
  LegModel lf;
  lf.name = "LF";
  lf.side = Side::left;
  lf.role = Role::front;
  lf.mount = {0.30, 0.10, 0.0};

  LegModel lh = lf;
  lh.name = "LH";
  lh.role = Role::rear;
  lh.mount = {-0.30, 0.10, 0.0};

  robot.legs[LF] = lf;
  robot.legs[RF] = mirrored(lf);
  robot.legs[LH] = lh;
  robot.legs[RH] = mirrored(lh);
  return robot;
}

RobotModel mirrored(const RobotModel& robot) {
  RobotModel m;
  m.body = robot.body;
  m.body.center.y() = -robot.body.center.y();
  m.body.yaw = -robot.body.yaw;
  m.legs[RF] = mirrored(robot.legs[LF]);
  m.legs[LF] = mirrored(robot.legs[RF]);
  m.legs[RH] = mirrored(robot.legs[LH]);
  m.legs[LH] = mirrored(robot.legs[RH]);
  return m;
}

RobotPose mirrored(const RobotPose& pose) {
  RobotPose m;
  m.base = mirror_y(pose.base);
  m.yaw = -pose.yaw;
  const auto flip = [](JointAngles q) {
    q.abduction = -q.abduction;
    return q;
  };
  m.joints[RF] = flip(pose.joints[LF]);
  m.joints[LF] = flip(pose.joints[RF]);
  m.joints[RH] = flip(pose.joints[LH]);
  m.joints[LH] = flip(pose.joints[RH]);
  return m;
}

Eigen::Matrix3d yaw_rotation(double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Eigen::Matrix3d r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

Eigen::Vector3d hip_world(const RobotPose& pose, const LegModel& leg) {
  return pose.base + yaw_rotation(pose.yaw) * leg.mount;
}

Eigen::Matrix3d leg_rotation(const RobotPose& pose, const LegModel& leg) {
  return yaw_rotation(pose.yaw + leg.mount_yaw);
}

Eigen::Vector3d leg_to_world(const RobotPose& pose, const LegModel& leg, const Eigen::Vector3d& p) {
  return hip_world(pose, leg) + leg_rotation(pose, leg) * p;
}

Eigen::Vector3d world_to_leg(const RobotPose& pose, const LegModel& leg, const Eigen::Vector3d& p) {
  return leg_rotation(pose, leg).transpose() * (p - hip_world(pose, leg));
}

}  // namespace foothold
