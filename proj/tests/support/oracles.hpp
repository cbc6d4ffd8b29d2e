#pragma once

// Independent reference implementations used to check the library. None of
// these call into the code they are meant to verify, beyond plain data types.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "foothold/collision.hpp"
#include "foothold/kinematics.hpp"
#include "foothold/labeler.hpp"
#include "foothold/terrain.hpp"

namespace foothold::oracle {

/// Foot position from a product of 4x4 homogeneous transforms.
Eigen::Vector3d fk_chain(const LegModel& leg, const JointAngles& q);

/// Occupancy of the foot workspace on a cubic grid, filled by FK samples.
class WorkspaceRaster {
 public:
  /// `samples` joint configurations on a stratified grid, each jittered.
  WorkspaceRaster(const LegModel& leg, double voxel, std::size_t samples, std::uint64_t seed);

  bool occupied(const Eigen::Vector3d& p) const;
  /// True when the voxel of p or one of its 26 neighbours differs in occupancy.
  bool near_boundary(const Eigen::Vector3d& p) const;
  Eigen::Vector3d lower() const { return lo_; }
  Eigen::Vector3d upper() const { return lo_ + voxel_ * n_.cast<double>(); }

 private:
  bool cell(int i, int j, int k) const;
  Eigen::Vector3d lo_;
  double voxel_;
  Eigen::Vector3i n_;
  std::vector<std::uint8_t> occ_;
};

/**
 * Smallest distance from p to a grid point outside the workspace, searching
 * a cubic lattice of pitch `step` anchored at p in growing shells.
 */
double brute_force_margin(const LegModel& leg, const Eigen::Vector3d& p, double step, double limit);

/// Minimum distance over n x n sample pairs on the two segments.
double sampled_segment_distance(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                                const Eigen::Vector3d& q0, const Eigen::Vector3d& q1, int n);

/// Does the capsule reach down to or below `top` on the vertical line through xy?
bool capsule_reaches_column(const Capsule& c, const Eigen::Vector2d& xy, double top);

/// Ground collision with every cell split into sub x sub columns.
bool supersampled_ground_collision(const RobotPose& pose, const LegModel& leg, const JointAngles& q,
                                   const ElevationMap& map, int sub);

/// 1 / ln(c + p) in long double.
long double class_weight(long double p, long double c = 1.08L);

/// Cost combination redone in integers and rationals where possible.
int scaled_cost(double ck, double cm);

/// Delta (zero-padded) 2D correlation: y[o][r][c] = b[o] + sum w[o][i][u][v] x[i][r*s-p+u*d][c*s-p+v*d].
std::vector<double> direct_conv(const std::vector<double>& x, int in_c, int h, int w, const std::vector<double>& k,
                                const std::vector<double>& b, int out_c, int kh, int kw, int stride, int pad,
                                int dil);

}  // namespace foothold::oracle
