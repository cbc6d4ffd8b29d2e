#include "foothold/labeler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace foothold {

const char* to_string(FootholdVerdict v) {
  switch (v) {
    case FootholdVerdict::feasible: return "feasible";
    case FootholdVerdict::unknown_cell: return "unknown_cell";
    case FootholdVerdict::outside_workspace: return "outside_workspace";
    case FootholdVerdict::self_collision: return "self_collision";
    case FootholdVerdict::ground_collision: return "ground_collision";
  }
  return "unknown_cell";
}

std::uint8_t combine_costs(double kinematic_cost, double terrain_cost) {
  const double scaled = (kinematic_cost + 2.0 * terrain_cost) / 3.0 * 255.0;
  const double rounded = std::floor(scaled + 0.5);
  return static_cast<std::uint8_t>(std::clamp(rounded, 0.0, static_cast<double>(kMaxFeasibleCost)));
}

double kinematic_cost(double margin, double margin_scale) {
  return 1.0 - std::clamp(margin / margin_scale, 0.0, 1.0);
}

PatchLabeler::PatchLabeler(const RobotModel& robot, const RobotPose& pose, int swing_leg,
                           const Patch& patch, const LabelerParams& params)
    : robot_(robot), swing_(swing_leg), patch_(patch), params_(params) {
  if (swing_leg < 0 || swing_leg >= kLegCount) throw std::out_of_range("swing leg index out of range");

  // Re-express the robot in the patch frame.
  const double c = std::cos(patch.yaw);
  const double s = std::sin(patch.yaw);
  const Eigen::Vector2d rel = pose.base.head<2>() - patch.center_world.head<2>();
  pose_ = pose;
  pose_.base = Eigen::Vector3d(c * rel.x() + s * rel.y(), -s * rel.x() + c * rel.y(), pose.base.z());
  pose_.yaw = pose.yaw - patch.yaw;

  ground_ = ElevationMap(patch.size, patch.size, patch.cell_size, patch.local_offset(0, 0));
  ground_.heights = patch.heights;
  ground_.known = patch.known;
}

Eigen::Vector3d PatchLabeler::foot_target(int r, int c) const {
  const LegModel& leg = robot_.legs[swing_];
  const Eigen::Vector2d off = patch_.local_offset(r, c);
  const Eigen::Vector3d target(off.x(), off.y(), patch_.height(r, c) + leg.foot_radius);
  return world_to_leg(pose_, leg, target);
}

FootholdEvaluation PatchLabeler::evaluate(int r, int c) const {
  FootholdEvaluation ev;
  if (!patch_.is_known(r, c)) return ev;

  const LegModel& leg = robot_.legs[swing_];
  const Eigen::Vector3d p = foot_target(r, c);
  const auto q = inverse_kinematics(leg, p);
  if (!q) {
    ev.verdict = FootholdVerdict::outside_workspace;
    return ev;
  }

  RobotPose posed = pose_;
  posed.joints[swing_] = *q;
  if (self_collision(posed, robot_, swing_)) {
    ev.verdict = FootholdVerdict::self_collision;
    return ev;
  }
  if (ground_collision(pose_, leg, *q, ground_)) {
    ev.verdict = FootholdVerdict::ground_collision;
    return ev;
  }

  // Margins beyond the normalization scale all map to c_k = 0.
  MarginOptions mopt = params_.margin;
  mopt.max_distance = std::min(mopt.max_distance, leg.margin_scale);
  const auto margin = kinematic_margin(leg, p, mopt);
  if (!margin) {
    ev.verdict = FootholdVerdict::outside_workspace;
    return ev;
  }
  ev.verdict = FootholdVerdict::feasible;
  ev.margin = *margin;
  ev.kinematic_cost = kinematic_cost(*margin, leg.margin_scale);
  ev.terrain_cost = local_terrain_cost(patch_, r, c, params_.terrain);
  ev.cost = combine_costs(ev.kinematic_cost, ev.terrain_cost);
  return ev;
}

CostMap label_patch(const RobotModel& robot, const RobotPose& pose, int swing_leg,
                    const Patch& patch, const LabelerParams& params) {
  const PatchLabeler labeler(robot, pose, swing_leg, patch, params);
  CostMap costs(patch.size, kInfeasibleCost);
  for (int r = 0; r < patch.size; ++r)
    for (int c = 0; c < patch.size; ++c) costs.at(r, c) = labeler.evaluate(r, c).cost;
  return costs;
}

int class_of_cost(int cost) {
  if (cost >= kInfeasibleCost) return kInfeasibleClass;
  if (cost <= 0) return 0;
  return std::min(cost * 13 / 255, 12);
}

LabelMap classes_of(const CostMap& costs) {
  LabelMap labels(costs.size);
  std::transform(costs.values.begin(), costs.values.end(), labels.values.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(class_of_cost(v)); });
  return labels;
}

void accumulate_histogram(ClassHistogram& hist, const LabelMap& labels) {
  for (const auto v : labels.values) {
    if (v >= kClassCount) throw std::invalid_argument("label id out of range");
    ++hist[v];
  }
}

ClassWeights class_weights(const ClassHistogram& hist, double constant) {
  const std::uint64_t total = std::accumulate(hist.begin(), hist.end(), std::uint64_t{0});
  if (total == 0) throw std::invalid_argument("class histogram is empty");
  ClassWeights w;
  w.constant = constant;
  for (int i = 0; i < kClassCount; ++i) {
    w.probabilities[i] = static_cast<double>(hist[i]) / static_cast<double>(total);
    w.weights[i] = 1.0 / std::log(constant + w.probabilities[i]);
  }
  return w;
}

LegView make_leg_view(const ElevationMap& map, const RobotModel& robot, const RobotPose& pose, int leg) {
  const LegModel& model = robot.legs[leg];
  const Eigen::Vector3d hip = hip_world(pose, model);
  const double yaw = pose.yaw + model.mount_yaw;
  const Eigen::Vector3d shift =
      yaw_rotation(yaw) * Eigen::Vector3d(0.5, 0.5 * model.side_sign(), 0.0) * map.cell_size;
  const Patch wide = extract_patch(map, hip.head<2>() + shift.head<2>(), kExtractSize);
  if (model.side == Side::left) return LegView{rotate_crop(wide, yaw), hip};
  // Right legs crop in the mirrored world, so their cells mirror a left leg's exactly.
  return LegView{mirrored(rotate_crop(mirrored(wide), -yaw)), hip};
}

}  // namespace foothold
