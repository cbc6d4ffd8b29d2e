#pragma once

#include <array>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Core>

namespace foothold {

enum class Side { left, right };
enum class Role { front, rear };

const char* to_string(Side side);
const char* to_string(Role role);
Side side_from_string(const std::string& s);
Role role_from_string(const std::string& s);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct JointAngles {
  double abduction = 0.0;  // hip ab/adduction, about the leg-frame x axis
  double flexion = 0.0;    // hip flexion; positive swings the foot forward
  double knee = 0.0;       // knee; negative bends the shank backward
};

/// Foot position in the leg-base frame L_i.
using FootPosition = Eigen::Vector3d;

/**
 * Three-joint leg: abduction about x at the hip, a lateral hip offset, then
 * flexion and knee joints about the local y axis. The leg frame is the hip
 * joint frame, x forward, z up; its pose on the robot base is `mount`.
 */
struct LegModel {
  std::string name = "LF";
  Side side = Side::left;
  Role role = Role::front;
  Eigen::Vector3d mount = Eigen::Vector3d(0.30, 0.10, 0.0);  // in the base frame
  double mount_yaw = 0.0;

  double hip_offset = 0.10;  // l0
  double thigh = 0.25;       // l1
  double shank = 0.33;       // l2
  std::array<Interval, 3> limits{{{-0.6, 0.6}, {-1.6, 1.6}, {-2.6, 0.0}}};
  double foot_radius = 0.03;

  double link_radius = 0.04;   // thigh and shank capsules
  double margin_scale = 0.15;  // kinematic margin that maps to zero cost

  double side_sign() const { return side == Side::left ? 1.0 : -1.0; }
  /// Radius of a sphere around the hip that contains the whole workspace.
  double reach() const;
  /// Throws std::invalid_argument when lengths or limits are invalid.
  void validate() const;
};

/// Left/right counterpart: side flipped, lateral mount and abduction limits negated.
LegModel mirrored(const LegModel& leg);

/// Mirror a leg-frame (or base-frame) point across the sagittal plane.
inline Eigen::Vector3d mirror_y(const Eigen::Vector3d& p) { return {p.x(), -p.y(), p.z()}; }

FootPosition forward_kinematics(const LegModel& leg, const JointAngles& q);

/// Knee position in the leg frame.
Eigen::Vector3d knee_position(const LegModel& leg, const JointAngles& q);
/// Start of the thigh link (end of the hip offset) in the leg frame.
Eigen::Vector3d thigh_origin(const LegModel& leg, const JointAngles& q);

/// Joint angles placing the foot at `p`, or nullopt when no solution respects
/// the joint limits. Branches are tried in a fixed order (foot below the
/// abduction axis first, knee bent backward first), so the result is unique.
std::optional<JointAngles> inverse_kinematics(const LegModel& leg, const FootPosition& p);

/// Same solver without joint-limit checks (geometric reachability only).
std::optional<JointAngles> inverse_kinematics_unbounded(const LegModel& leg, const FootPosition& p);

bool in_workspace(const LegModel& leg, const FootPosition& p);

struct MarginOptions {
  double tolerance = 0.0005;  // bisection width
  double march_step = 0.01;   // coarse step when searching for the first exit
  /// Margins are not resolved beyond this distance; the result saturates.
  double max_distance = std::numeric_limits<double>::infinity();
};

/// The 42 unit directions of a once-subdivided icosahedron.
std::span<const Eigen::Vector3d> margin_directions();

/**
 * Minimum over `margin_directions()` of the distance from `p` to the first
 * workspace exit along each ray, resolved by bisection to `tolerance`.
 * nullopt when p is outside the workspace.
 */
std::optional<double> kinematic_margin(const LegModel& leg, const FootPosition& p,
                                       const MarginOptions& options = {});

}  // namespace foothold
