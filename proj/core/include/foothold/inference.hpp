#pragma once

#include <optional>
#include <string>

#include <Eigen/Core>

#include "foothold/labeler.hpp"
#include "foothold/net.hpp"
#include "foothold/robot.hpp"
#include "foothold/terrain.hpp"
#include "foothold/train.hpp"

namespace foothold {

enum class Evaluator { network, oracle };
const char* to_string(Evaluator e);
Evaluator evaluator_from_string(const std::string& s);

struct InferenceConfig {
  double k = 160.0;  // cost units per meter from the nominal foothold
  /// Nominal foothold in the leg frame of a left leg (mirrored for right legs); only x and y are used.
  Eigen::Vector3d nominal_offset = Eigen::Vector3d::Zero();
  double norm_factor = kDefaultNormFactor;
  Evaluator evaluator = Evaluator::oracle;
  LabelerParams labeler;

  void validate() const;
};

struct FootholdDecision {
  int leg = 0;
  int row = 0;
  int col = 0;
  int class_id = 0;
  double class_cost = 0.0;  // Z_c
  double distance = 0.0;    // d_n, m
  double cost = 0.0;        // Z_c + k * d_n
  Eigen::Vector3d world = Eigen::Vector3d::Zero();
};

/// Bin center (id + 0.5) * 255 / 13 for feasible classes, nullopt for the infeasible class.
std::optional<double> reconstruct_cost(int class_id);

/// Right legs: columns reversed. Left legs: unchanged.
GrayImage flip_for_side(const GrayImage& image, Side side);
LabelMap flip_for_side(const LabelMap& labels, Side side);
Patch flip_for_side(const Patch& patch, Side side);

/**
 * Argmin of Z_c + k * d_n over known cells whose class is feasible. d_n is the
 * horizontal distance in meters from the cell center to `nominal` (patch
 * frame). Ties go to the smaller d_n, then to the first cell in row-major
 * order; values within 1e-9 count as equal. nullopt when no cell qualifies.
 */
std::optional<FootholdDecision> select_foothold(const LabelMap& labels, const Patch& patch,
                                                const Eigen::Vector2d& nominal, double k);

/// Per-cell Z_c + k * d_n; infeasible or unknown cells are +inf.
std::vector<double> final_costs(const LabelMap& labels, const Patch& patch, const Eigen::Vector2d& nominal,
                                double k);

/// Runs a trained classifier on left-canonical images.
class NetworkPredictor {
 public:
  explicit NetworkPredictor(Model model);
  const Model& model() const { return model_; }
  /// Flips the image for right legs, predicts, and flips the labels back.
  LabelMap predict(const GrayImage& image, Side side);

 private:
  Model model_;
  Network<float> net_;
  Workspace<float> ws_;
};

/// Analytic labels through the same flip path: right legs are labeled as the
/// mirrored left leg on the mirrored patch.
LabelMap oracle_labels(const RobotModel& robot, const RobotPose& pose, int leg, const Patch& patch,
                       const LabelerParams& params = {});

struct LegInference {
  LegView view;
  GrayImage image;
  LabelMap labels;
  Eigen::Vector2d nominal = Eigen::Vector2d::Zero();  // patch frame
  std::optional<FootholdDecision> decision;
};

/// Nominal foothold of `leg` in the frame of `patch`.
Eigen::Vector2d nominal_in_patch(const RobotPose& pose, const LegModel& leg, const Patch& patch,
                                 const Eigen::Vector3d& offset);

/**
 * Full selection path for one leg: extract, rotate and crop, render, predict
 * (network or oracle), select. `predictor` is required for the network
 * evaluator and must have been trained for the leg's role. Right legs select
 * in the mirrored frame, so ties resolve symmetrically.
 */
LegInference infer_leg(const ElevationMap& map, const RobotModel& robot, const RobotPose& pose, int leg,
                       const InferenceConfig& config, NetworkPredictor* predictor = nullptr);

inline std::optional<FootholdDecision> evaluate_leg(const ElevationMap& map, const RobotModel& robot,
                                                    const RobotPose& pose, int leg, const InferenceConfig& config,
                                                    NetworkPredictor* predictor = nullptr) {
  return infer_leg(map, robot, pose, leg, config, predictor).decision;
}

/**
 * One-line decision record:
 *   leg=LF cell=<row>,<col> class=<id> z_c=<v> d_n=<m> c_final=<v> world=<x>,<y>,<z>
 * A missing foothold is written as "leg=LF none".
 */
std::string format_decision(const FootholdDecision& d);
std::string format_no_foothold(int leg);
FootholdDecision parse_decision(const std::string& line);

}  // namespace foothold
