#include "foothold/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace foothold {

const char* to_string(Side side) { return side == Side::left ? "left" : "right"; }
const char* to_string(Role role) { return role == Role::front ? "front" : "rear"; }

Side side_from_string(const std::string& s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  throw std::invalid_argument("unknown leg side '" + s + "'");
}

Role role_from_string(const std::string& s) {
  if (s == "front") return Role::front;
  if (s == "rear") return Role::rear;
  throw std::invalid_argument("unknown leg role '" + s + "'");
}

double LegModel::reach() const { return std::hypot(hip_offset, thigh + shank); }

void LegModel::validate() const {
  if (!(hip_offset > 0.0) || !(thigh > 0.0) || !(shank > 0.0))
    throw std::invalid_argument("leg '" + name + "': link lengths must be positive");
  for (const auto& lim : limits)
    if (!(lim.lo <= lim.hi)) throw std::invalid_argument("leg '" + name + "': empty joint limit");
  if (!(foot_radius > 0.0)) throw std::invalid_argument("leg '" + name + "': foot radius must be positive");
  if (!(link_radius > 0.0)) throw std::invalid_argument("leg '" + name + "': link radius must be positive");
  if (!(margin_scale > 0.0)) throw std::invalid_argument("leg '" + name + "': margin scale must be positive");
}

LegModel mirrored(const LegModel& leg) {
  LegModel m = leg;
  m.side = leg.side == Side::left ? Side::right : Side::left;
  m.mount.y() = -leg.mount.y();
  m.mount_yaw = -leg.mount_yaw;
  m.limits[0] = {-leg.limits[0].hi, -leg.limits[0].lo};
  if (!leg.name.empty()) {
    if (leg.name[0] == 'L') m.name[0] = 'R';
    else if (leg.name[0] == 'R') m.name[0] = 'L';
  }
  return m;
}

// All kinematics are evaluated in the canonical (left) frame; right legs are
// handled by mirroring y and the abduction angle. This keeps mirrored legs on
// bit-identical code paths.
namespace {

struct Canonical {
  double l0, l1, l2;
  Interval q1, q2, q3;
};

Canonical canonical(const LegModel& leg) {
  Canonical c{leg.hip_offset, leg.thigh, leg.shank, leg.limits[0], leg.limits[1], leg.limits[2]};
  if (leg.side == Side::right) c.q1 = {-leg.limits[0].hi, -leg.limits[0].lo};
  return c;
}

Eigen::Vector3d fk_left(double l0, double l1, double l2, double q1, double q2, double q3) {
  const double x = l1 * std::sin(q2) + l2 * std::sin(q2 + q3);
  const double zp = -l1 * std::cos(q2) - l2 * std::cos(q2 + q3);
  const double c1 = std::cos(q1);
  const double s1 = std::sin(q1);
  return {x, l0 * c1 - zp * s1, l0 * s1 + zp * c1};
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

std::optional<JointAngles> ik_left(const Canonical& c, const Eigen::Vector3d& p, bool check_limits) {
  const double r2 = p.y() * p.y() + p.z() * p.z();
  const double l0sq = c.l0 * c.l0;
  if (!(r2 >= l0sq)) return std::nullopt;
  const double zmag = std::sqrt(r2 - l0sq);
  const double base = std::atan2(p.z(), p.y());

  for (const double zp : {-zmag, zmag}) {
    const double q1 = wrap_angle(base - std::atan2(zp, c.l0));
    if (check_limits && !c.q1.contains(q1)) continue;

    const double a = -zp;  // planar coordinate along the thigh rest direction
    double d = (p.x() * p.x() + a * a - c.l1 * c.l1 - c.l2 * c.l2) / (2.0 * c.l1 * c.l2);
    if (d > 1.0 + 1e-12 || d < -1.0 - 1e-12) return std::nullopt;
    d = std::clamp(d, -1.0, 1.0);
    const double bend = std::acos(d);
    for (const double q3 : {-bend, bend}) {
      if (check_limits && !c.q3.contains(q3)) continue;
      const double q2 = wrap_angle(std::atan2(p.x(), a) -
                                   std::atan2(c.l2 * std::sin(q3), c.l1 + c.l2 * std::cos(q3)));
      if (check_limits && !c.q2.contains(q2)) continue;
      return JointAngles{q1, q2, q3};
    }
    if (zmag == 0.0) break;
  }
  return std::nullopt;
}

std::optional<JointAngles> solve(const LegModel& leg, const FootPosition& p, bool check_limits) {
  if (!p.allFinite()) return std::nullopt;
  const Canonical c = canonical(leg);
  if (leg.side == Side::left) return ik_left(c, p, check_limits);
  auto q = ik_left(c, mirror_y(p), check_limits);
  if (q) q->abduction = -q->abduction;
  return q;
}

}  // namespace

FootPosition forward_kinematics(const LegModel& leg, const JointAngles& q) {
  if (leg.side == Side::left)
    return fk_left(leg.hip_offset, leg.thigh, leg.shank, q.abduction, q.flexion, q.knee);
  return mirror_y(fk_left(leg.hip_offset, leg.thigh, leg.shank, -q.abduction, q.flexion, q.knee));
}

Eigen::Vector3d knee_position(const LegModel& leg, const JointAngles& q) {
  // A zero-length shank puts the "foot" at the knee.
  const double q1 = leg.side == Side::left ? q.abduction : -q.abduction;
  const Eigen::Vector3d k = fk_left(leg.hip_offset, leg.thigh, 0.0, q1, q.flexion, 0.0);
  return leg.side == Side::left ? k : mirror_y(k);
}

Eigen::Vector3d thigh_origin(const LegModel& leg, const JointAngles& q) {
  const double q1 = leg.side == Side::left ? q.abduction : -q.abduction;
  const Eigen::Vector3d o(0.0, leg.hip_offset * std::cos(q1), leg.hip_offset * std::sin(q1));
  return leg.side == Side::left ? o : mirror_y(o);
}

std::optional<JointAngles> inverse_kinematics(const LegModel& leg, const FootPosition& p) {
  return solve(leg, p, true);
}

std::optional<JointAngles> inverse_kinematics_unbounded(const LegModel& leg, const FootPosition& p) {
  return solve(leg, p, false);
}

bool in_workspace(const LegModel& leg, const FootPosition& p) {
  return inverse_kinematics(leg, p).has_value();
}

std::span<const Eigen::Vector3d> margin_directions() {
  static const std::vector<Eigen::Vector3d> dirs = [] {
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    std::vector<Eigen::Vector3d> v;
    for (const double a : {-1.0, 1.0}) {
      for (const double b : {-phi, phi}) {
        v.emplace_back(0.0, a, b);
        v.emplace_back(a, b, 0.0);
        v.emplace_back(b, 0.0, a);
      }
    }
    // Icosahedron edges join vertices at the minimal distance (2 for this scale).
    std::vector<Eigen::Vector3d> out;
    for (const auto& p : v) out.push_back(p.normalized());
    const std::size_t nv = v.size();
    for (std::size_t i = 0; i < nv; ++i)
      for (std::size_t j = i + 1; j < nv; ++j)
        if (std::abs((v[i] - v[j]).norm() - 2.0) < 1e-9) out.push_back((v[i] + v[j]).normalized());
    return out;
  }();
  return dirs;
}

std::optional<double> kinematic_margin(const LegModel& leg, const FootPosition& p,
                                       const MarginOptions& options) {
  if (!in_workspace(leg, p)) return std::nullopt;
  // Every ray leaves the reach sphere within this distance.
  const double ray_bound = 2.0 * leg.reach() + options.march_step;
  double best = std::min(options.max_distance, ray_bound);

  // Brackets are fixed step multiples independent of `best`, so the result
  // does not depend on the direction order.
  for (const auto& d : margin_directions()) {
    double lo = 0.0;
    double hi = 0.0;
    bool exited = false;
    for (int k = 1; (k - 1) * options.march_step < best; ++k) {
      const double t = k * options.march_step;
      if (!in_workspace(leg, p + t * d)) {
        lo = (k - 1) * options.march_step;
        hi = t;
        exited = true;
        break;
      }
    }
    if (!exited) continue;
    while (hi - lo > options.tolerance) {
      const double mid = 0.5 * (lo + hi);
      if (in_workspace(leg, p + mid * d)) lo = mid;
      else hi = mid;
    }
    best = std::min(best, 0.5 * (lo + hi));
  }
  return best;
}

}  // namespace foothold
