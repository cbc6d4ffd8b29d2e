#include "foothold/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "foothold/errors.hpp"

namespace foothold {

const char* to_string(Evaluator e) { return e == Evaluator::network ? "network" : "oracle"; }

Evaluator evaluator_from_string(const std::string& s) {
  if (s == "network") return Evaluator::network;
  if (s == "oracle") return Evaluator::oracle;
  throw std::invalid_argument("unknown evaluator '" + s + "' (expected network or oracle)");
}

void InferenceConfig::validate() const {
  if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("k must be finite and non-negative");
  if (!(norm_factor > 0.0)) throw std::invalid_argument("normalization factor must be positive");
  if (!nominal_offset.allFinite()) throw std::invalid_argument("nominal offset must be finite");
  labeler.terrain.validate();
}

std::optional<double> reconstruct_cost(int class_id) {
  if (class_id < 0 || class_id >= kClassCount) throw std::out_of_range("class id out of range");
  if (class_id == kInfeasibleClass) return std::nullopt;
  return (class_id + 0.5) * 255.0 / 13.0;
}

namespace {

template <typename Grid>
void reverse_columns(Grid& values, int size) {
  for (int r = 0; r < size; ++r) {
    auto row = values.begin() + static_cast<std::ptrdiff_t>(r) * size;
    std::reverse(row, row + size);
  }
}

}  // namespace

GrayImage flip_for_side(const GrayImage& image, Side side) {
  GrayImage out = image;
  if (side == Side::right) reverse_columns(out.pixels, out.size);
  return out;
}

LabelMap flip_for_side(const LabelMap& labels, Side side) {
  LabelMap out = labels;
  if (side == Side::right) reverse_columns(out.values, out.size);
  return out;
}

Patch flip_for_side(const Patch& patch, Side side) {
  Patch out = patch;
  if (side == Side::right) {
    reverse_columns(out.heights, out.size);
    reverse_columns(out.known, out.size);
  }
  return out;
}

std::vector<double> final_costs(const LabelMap& labels, const Patch& patch, const Eigen::Vector2d& nominal,
                                double k) {
  if (labels.size != patch.size) throw std::invalid_argument("label map and patch differ in size");
  std::vector<double> out(labels.values.size(), std::numeric_limits<double>::infinity());
  for (int r = 0; r < patch.size; ++r) {
    for (int c = 0; c < patch.size; ++c) {
      if (!patch.is_known(r, c)) continue;
      const auto z = reconstruct_cost(labels.at(r, c));
      if (!z) continue;
      const Eigen::Vector2d d = patch.local_offset(r, c) - nominal;
      out[patch.index(r, c)] = *z + k * std::hypot(d.x(), d.y());
    }
  }
  return out;
}

// Rounding in the grid geometry is far below this; symmetric cells tie exactly.
constexpr double kTieTolerance = 1e-9;

std::optional<FootholdDecision> select_foothold(const LabelMap& labels, const Patch& patch,
                                                const Eigen::Vector2d& nominal, double k) {
  if (labels.size != patch.size) throw std::invalid_argument("label map and patch differ in size");
  std::optional<FootholdDecision> best;
  for (int r = 0; r < patch.size; ++r) {
    for (int c = 0; c < patch.size; ++c) {
      if (!patch.is_known(r, c)) continue;
      const int id = labels.at(r, c);
      const auto z = reconstruct_cost(id);
      if (!z) continue;
      const Eigen::Vector2d d = patch.local_offset(r, c) - nominal;
      const double dn = std::hypot(d.x(), d.y());
      const double cost = *z + k * dn;
      if (best) {
        const bool cheaper = cost < best->cost - kTieTolerance;
        const bool tie = !cheaper && cost <= best->cost + kTieTolerance;
        if (!cheaper && !(tie && dn < best->distance - kTieTolerance)) continue;
      }
      FootholdDecision fd;
      fd.row = r;
      fd.col = c;
      fd.class_id = id;
      fd.class_cost = *z;
      fd.distance = dn;
      fd.cost = cost;
      best = fd;
    }
  }
  if (best) {
    const Eigen::Vector2d xy = patch.cell_world(best->row, best->col);
    best->world = Eigen::Vector3d(xy.x(), xy.y(), patch.height(best->row, best->col));
  }
  return best;
}

NetworkPredictor::NetworkPredictor(Model model)
    : model_(std::move(model)), net_(model_.config), ws_(net_.make_workspace()) {
  if (model_.params.size() != net_.parameter_count())
    throw std::invalid_argument("model parameters do not match its config");
  if (model_.config.classes != kClassCount) throw std::invalid_argument("model must predict the full class set");
}

LabelMap NetworkPredictor::predict(const GrayImage& image, Side side) {
  if (image.size != model_.config.input_size) throw std::invalid_argument("image size does not match the model input");
  const GrayImage in = flip_for_side(image, side);
  return flip_for_side(predict_labels(net_, model_.params, in, ws_), side);
}

LabelMap oracle_labels(const RobotModel& robot, const RobotPose& pose, int leg, const Patch& patch,
                       const LabelerParams& params) {
  const Side side = robot.legs[leg].side;
  if (side == Side::left) return classes_of(label_patch(robot, pose, leg, patch, params));

  const RobotModel mrobot = mirrored(robot);
  const int mleg = mrobot.find_leg(robot.legs[leg].role, Side::left);
  return flip_for_side(classes_of(label_patch(mrobot, mirrored(pose), mleg, mirrored(patch), params)), Side::right);
}

Eigen::Vector2d nominal_in_patch(const RobotPose& pose, const LegModel& leg, const Patch& patch,
                                 const Eigen::Vector3d& offset) {
  const Eigen::Vector3d w = leg_to_world(pose, leg, offset);
  const Eigen::Vector2d rel = w.head<2>() - patch.center_world.head<2>();
  const double c = std::cos(patch.yaw);
  const double s = std::sin(patch.yaw);
  return {c * rel.x() + s * rel.y(), -s * rel.x() + c * rel.y()};
}

LegInference infer_leg(const ElevationMap& map, const RobotModel& robot, const RobotPose& pose, int leg,
                       const InferenceConfig& config, NetworkPredictor* predictor) {
  config.validate();
  if (leg < 0 || leg >= kLegCount) throw std::out_of_range("leg index out of range");
  const LegModel& model = robot.legs[leg];
  LegInference out;
  out.view = make_leg_view(map, robot, pose, leg);
  out.image = patch_to_image(out.view.patch, out.view.hip.z(), config.norm_factor);
  if (config.evaluator == Evaluator::network) {
    if (!predictor) throw std::invalid_argument("network evaluator needs a model");
    if (predictor->model().role != model.role)
      throw std::invalid_argument(std::string("model was trained for ") + to_string(predictor->model().role) +
                                  " legs, leg " + leg_name(leg) + " is " + to_string(model.role));
    out.labels = predictor->predict(out.image, model.side);
  } else {
    out.labels = oracle_labels(robot, pose, leg, out.view.patch, config.labeler);
  }
  if (model.side == Side::left) {
    out.nominal = nominal_in_patch(pose, model, out.view.patch, config.nominal_offset);
    out.decision = select_foothold(out.labels, out.view.patch, out.nominal, config.k);
  } else {
    // Select as the mirrored left leg so ties break the same way on both sides.
    const RobotModel mrobot = mirrored(robot);
    const int mleg = mrobot.find_leg(model.role, Side::left);
    const Patch mpatch = mirrored(out.view.patch);
    const Eigen::Vector2d mnominal = nominal_in_patch(mirrored(pose), mrobot.legs[mleg], mpatch, config.nominal_offset);
    out.nominal = Eigen::Vector2d(mnominal.x(), -mnominal.y());
    out.decision = select_foothold(flip_for_side(out.labels, Side::right), mpatch, mnominal, config.k);
    if (out.decision) {
      out.decision->col = mpatch.size - 1 - out.decision->col;
      out.decision->world.y() = -out.decision->world.y();
    }
  }
  if (out.decision) out.decision->leg = leg;
  return out;
}

std::string format_decision(const FootholdDecision& d) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "leg=" << leg_name(d.leg) << " cell=" << d.row << "," << d.col << " class=" << d.class_id
      << " z_c=" << d.class_cost << " d_n=" << d.distance << " c_final=" << d.cost << " world=" << d.world.x()
      << "," << d.world.y() << "," << d.world.z();
  return out.str();
}

std::string format_no_foothold(int leg) { return std::string("leg=") + leg_name(leg) + " none"; }

FootholdDecision parse_decision(const std::string& line) {
  std::istringstream in(line);
  std::string tok;
  FootholdDecision d;
  int seen = 0;
  try {
    while (in >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw DataError("decision record: malformed field '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      std::string val = tok.substr(eq + 1);
      for (auto& ch : val)
        if (ch == ',') ch = ' ';
      std::istringstream v(val);
      if (key == "leg") d.leg = leg_id_from_string(val);
      else if (key == "cell") v >> d.row >> d.col;
      else if (key == "class") v >> d.class_id;
      else if (key == "z_c") v >> d.class_cost;
      else if (key == "d_n") v >> d.distance;
      else if (key == "c_final") v >> d.cost;
      else if (key == "world") v >> d.world.x() >> d.world.y() >> d.world.z();
      else throw DataError("decision record: unknown field '" + key + "'");
      if (v.fail()) throw DataError("decision record: bad value for '" + key + "'");
      ++seen;
    }
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("decision record: ") + e.what());
  }
  if (seen != 7) throw DataError("decision record: expected 7 fields");
  return d;
}

}  // namespace foothold
