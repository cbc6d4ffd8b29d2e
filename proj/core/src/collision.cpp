#include "foothold/collision.hpp"

#include <algorithm>
#include <cmath>

namespace foothold {

double segment_segment_distance(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                                const Eigen::Vector3d& q0, const Eigen::Vector3d& q1) {
  // Closest points of two segments, clamped parametric form.
  constexpr double eps = 1e-14;
  const Eigen::Vector3d d1 = p1 - p0;
  const Eigen::Vector3d d2 = q1 - q0;
  const Eigen::Vector3d r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0;
  double t = 0.0;

  if (a <= eps && e <= eps) return r.norm();
  if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > eps * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

namespace {

bool lex_less(const Capsule& x, const Capsule& y) {
  const std::array<double, 7> kx{x.a.x(), x.a.y(), x.a.z(), x.b.x(), x.b.y(), x.b.z(), x.radius};
  const std::array<double, 7> ky{y.a.x(), y.a.y(), y.a.z(), y.b.x(), y.b.y(), y.b.z(), y.radius};
  return kx < ky;
}

}  // namespace

double segment_distance(const Capsule& c1, const Capsule& c2) {
  // Canonical argument order makes the result exactly symmetric.
  const Capsule& u = lex_less(c2, c1) ? c2 : c1;
  const Capsule& v = lex_less(c2, c1) ? c1 : c2;
  return segment_segment_distance(u.a, u.b, v.a, v.b) - (c1.radius + c2.radius);
}

double point_box_distance(const Eigen::Vector3d& p, const BodyBox& box) {
  const Eigen::Vector3d local = yaw_rotation(box.yaw).transpose() * (p - box.center);
  const Eigen::Vector3d excess = (local.cwiseAbs() - box.half_extents).cwiseMax(0.0);
  return excess.norm();
}

double capsule_box_distance(const Capsule& c, const BodyBox& box) {
  // Distance to a convex set is convex along the segment: golden-section search.
  const auto f = [&](double t) { return point_box_distance(c.a + t * (c.b - c.a), box); };
  constexpr double inv_phi = 0.6180339887498949;
  double lo = 0.0;
  double hi = 1.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < 60; ++i) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double best = std::min({f(0.0), f(1.0), f1, f2});
  return best - c.radius;
}

std::array<Capsule, 2> leg_capsules(const LegModel& leg, const JointAngles& q) {
  const Eigen::Vector3d hip = thigh_origin(leg, q);
  const Eigen::Vector3d knee = knee_position(leg, q);
  const Eigen::Vector3d foot = forward_kinematics(leg, q);
  const Eigen::Vector3d along = foot - knee;
  const double len = along.norm();
  const double keep = std::max(0.0, len - (leg.foot_radius + leg.link_radius));
  const Eigen::Vector3d shank_end = len > 0.0 ? Eigen::Vector3d(knee + along * (keep / len)) : knee;
  return {Capsule{hip, knee, leg.link_radius}, Capsule{knee, shank_end, leg.link_radius}};
}

std::array<Capsule, 2> leg_capsules_world(const RobotPose& pose, const LegModel& leg,
                                          const JointAngles& q) {
  auto caps = leg_capsules(leg, q);
  for (auto& c : caps) {
    c.a = leg_to_world(pose, leg, c.a);
    c.b = leg_to_world(pose, leg, c.b);
  }
  return caps;
}

bool self_collision(const RobotPose& pose, const RobotModel& robot, int swing_leg) {
  // Work in the base frame; the box is defined there.
  RobotPose local = pose;
  local.base = Eigen::Vector3d::Zero();
  local.yaw = 0.0;

  const auto swing = leg_capsules_world(local, robot.legs[swing_leg], pose.joints[swing_leg]);
  for (const auto& c : swing)
    if (capsule_box_distance(c, robot.body) < 0.0) return true;

  for (int other = 0; other < kLegCount; ++other) {
    if (other == swing_leg) continue;
    const auto caps = leg_capsules_world(local, robot.legs[other], pose.joints[other]);
    for (const auto& s : swing)
      for (const auto& c : caps)
        if (segment_distance(s, c) < 0.0) return true;
  }
  return false;
}

bool ground_collision(const RobotPose& pose, const LegModel& leg, const JointAngles& q,
                      const ElevationMap& map) {
  const auto caps = leg_capsules_world(pose, leg, q);
  for (const auto& cap : caps) {
    const Eigen::Vector3d lo = cap.a.cwiseMin(cap.b).array() - cap.radius;
    const Eigen::Vector3d hi = cap.a.cwiseMax(cap.b).array() + cap.radius;
    const double inv = 1.0 / map.cell_size;
    const int x0 = std::max(0, static_cast<int>(std::ceil((lo.x() - map.origin.x()) * inv)));
    const int x1 = std::min(map.size_x - 1, static_cast<int>(std::floor((hi.x() - map.origin.x()) * inv)));
    const int y0 = std::max(0, static_cast<int>(std::ceil((lo.y() - map.origin.y()) * inv)));
    const int y1 = std::min(map.size_y - 1, static_cast<int>(std::floor((hi.y() - map.origin.y()) * inv)));
    for (int ix = x0; ix <= x1; ++ix) {
      for (int iy = y0; iy <= y1; ++iy) {
        // Cells without data do not constrain the links.
        if (!map.is_known(ix, iy)) continue;
        const double top = map.height(ix, iy);
        if (top < lo.z()) continue;
        const Eigen::Vector2d xy = map.cell_center(ix, iy);
        const Eigen::Vector3d col_top(xy.x(), xy.y(), top);
        const Eigen::Vector3d col_bottom(xy.x(), xy.y(), std::min(top, lo.z()) - 1.0);
        if (segment_segment_distance(col_top, col_bottom, cap.a, cap.b) < cap.radius) return true;
      }
    }
  }
  return false;
}

}  // namespace foothold
