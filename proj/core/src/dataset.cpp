#include "foothold/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "foothold/errors.hpp"
#include "foothold/io.hpp"
#include "foothold/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace foothold {

void SamplerConfig::validate() const {
  if (map_size < kExtractSize) throw std::invalid_argument("map size must allow a full patch extraction");
  if (!(cell_size > 0.0)) throw std::invalid_argument("cell size must be positive");
  if (!(hip_height_min > 0.0) || !(hip_height_max >= hip_height_min))
    throw std::invalid_argument("hip height range must be positive and non-empty");
  if (samples < 1) throw std::invalid_argument("sample count must be positive");
  if (!(norm_factor > 0.0)) throw std::invalid_argument("normalization factor must be positive");
  if (max_attempts < 1) throw std::invalid_argument("max attempts must be positive");
  if (threads < 1) throw std::invalid_argument("thread count must be positive");
  for (const auto& t : terrains) t.validate();
}

std::vector<TerrainSpec> default_terrains(std::uint64_t seed) {
  std::vector<TerrainSpec> out;
  TerrainSpec flat;
  flat.kind = TerrainKind::flat;
  out.push_back(flat);

  TerrainSpec slope;
  slope.kind = TerrainKind::slope;
  slope.inclination = 0.15;
  slope.azimuth = 0.6;
  out.push_back(slope);

  TerrainSpec stairs;
  stairs.kind = TerrainKind::stairs;
  stairs.step_rise = 0.08;
  stairs.step_run = 0.24;
  out.push_back(stairs);

  TerrainSpec boxes;
  boxes.kind = TerrainKind::boxes;
  boxes.seed = seed + 1;
  out.push_back(boxes);

  TerrainSpec rough;
  rough.kind = TerrainKind::rough;
  rough.seed = seed + 2;
  rough.rough_amplitude = 0.05;
  out.push_back(rough);
  return out;
}

std::vector<TrainingPair> Dataset::pairs() const {
  std::vector<TrainingPair> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.pair);
  return out;
}

std::vector<ElevationMap> build_terrains(const SamplerConfig& config) {
  const auto specs = config.terrains.empty() ? default_terrains(config.seed) : config.terrains;
  std::vector<ElevationMap> maps;
  maps.reserve(specs.size());
  for (const auto& s : specs) maps.push_back(generate_terrain(s, config.map_size, config.map_size, config.cell_size));
  return maps;
}

namespace {

std::optional<double> ground_at(const ElevationMap& map, const Eigen::Vector2d& xy) {
  const auto cell = map.cell_of(xy);
  if (!cell || !map.is_known(cell->x, cell->y)) return std::nullopt;
  return map.height(cell->x, cell->y);
}

// Foot placed straight below the hip-offset point, resting on the ground.
std::optional<JointAngles> support_joints(const ElevationMap& map, const RobotPose& pose, const LegModel& leg) {
  const Eigen::Vector3d nominal(0.0, leg.side_sign() * leg.hip_offset, 0.0);
  const Eigen::Vector3d w = leg_to_world(pose, leg, nominal);
  const auto h = ground_at(map, w.head<2>());
  if (!h) return std::nullopt;
  const Eigen::Vector3d foot(w.x(), w.y(), *h + leg.foot_radius);
  return inverse_kinematics(leg, world_to_leg(pose, leg, foot));
}

}  // namespace

std::optional<RobotPose> make_stance(const ElevationMap& map, const RobotModel& robot,
                                     const Eigen::Vector2d& base_xy, double yaw, double hip_height,
                                     int reference_leg) {
  RobotPose pose;
  pose.yaw = yaw;
  pose.base = Eigen::Vector3d(base_xy.x(), base_xy.y(), 0.0);
  const Eigen::Vector3d hip0 = hip_world(pose, robot.legs[reference_leg]);
  const auto ground = ground_at(map, hip0.head<2>());
  if (!ground) return std::nullopt;
  pose.base.z() = *ground + hip_height - hip0.z();
  for (int j = 0; j < kLegCount; ++j) {
    const auto q = support_joints(map, pose, robot.legs[j]);
    if (q)
      pose.joints[j] = *q;
    else if (j != reference_leg)
      return std::nullopt;
  }
  return pose;
}

LabeledSample generate_sample(const std::vector<ElevationMap>& maps, const SamplerConfig& config,
                              const RobotModel& robot, const LabelerParams& params, int index) {
  if (maps.empty()) throw std::invalid_argument("no terrain maps");
  const int swing = robot.find_leg(config.role, Side::left);
  auto rng = derive_stream(config.seed, static_cast<std::uint64_t>(index));

  double mount_reach = 0.0;
  for (const auto& leg : robot.legs) mount_reach = std::max(mount_reach, leg.mount.head<2>().norm());

  for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
    SampleInfo info;
    info.attempts = attempt;
    info.terrain = static_cast<int>(uniform_index(rng, maps.size()));
    info.yaw_index = static_cast<int>(uniform_index(rng, 4));
    const ElevationMap& map = maps[info.terrain];
    const double half_x = 0.5 * (map.size_x - 1) * map.cell_size;
    const double half_y = 0.5 * (map.size_y - 1) * map.cell_size;
    const double keep = mount_reach + (kExtractSize / 2 + 2) * map.cell_size;
    const Eigen::Vector2d mid = map.origin + Eigen::Vector2d(half_x, half_y);
    const double x = uniform(rng, -(half_x - keep), half_x - keep) + mid.x();
    const double y = uniform(rng, -(half_y - keep), half_y - keep) + mid.y();
    info.hip_height = uniform(rng, config.hip_height_min, config.hip_height_max);

    const auto stance = make_stance(map, robot, Eigen::Vector2d(x, y), info.yaw_index * (std::numbers::pi / 2.0),
                                    info.hip_height, swing);
    if (!stance) continue;
    const RobotPose& pose = *stance;

    LegView view;
    try {
      view = make_leg_view(map, robot, pose, swing);
    } catch (const std::out_of_range&) {
      continue;
    }
    info.pose = pose;
    LabeledSample s;
    s.info = info;
    s.pair.input = patch_to_image(view.patch, view.hip.z(), config.norm_factor);
    s.pair.labels = classes_of(label_patch(robot, pose, swing, view.patch, params));
    return s;
  }
  throw DataError("sample " + std::to_string(index) + ": no valid stance after " +
                  std::to_string(config.max_attempts) + " attempts");
}

Dataset generate_dataset(const SamplerConfig& config, const RobotModel& robot, const LabelerParams& params) {
  config.validate();
  robot.validate();
  params.terrain.validate();
  Dataset data;
  data.config = config;
  if (data.config.terrains.empty()) data.config.terrains = default_terrains(config.seed);
  data.params = params;
  data.robot = robot;
  const auto maps = build_terrains(data.config);

  data.samples.resize(static_cast<std::size_t>(config.samples));
  const int threads = std::min(config.threads, config.samples);
  if (threads <= 1) {
    for (int i = 0; i < config.samples; ++i) data.samples[i] = generate_sample(maps, data.config, robot, params, i);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t]() {
        try {
          for (int i = t; i < config.samples; i += threads)
            data.samples[i] = generate_sample(maps, data.config, robot, params, i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  for (const auto& s : data.samples) accumulate_histogram(data.histogram, s.pair.labels);
  data.weights = class_weights(data.histogram);
  return data;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

std::string numbered(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05d.pgm", prefix, i);
  return buf;
}

json terrain_json(const TerrainSpec& t) {
  json j;
  j["kind"] = to_string(t.kind);
  j["seed"] = t.seed;
  switch (t.kind) {
    case TerrainKind::flat:
      break;
    case TerrainKind::slope:
      j["inclination"] = t.inclination;
      j["azimuth"] = t.azimuth;
      break;
    case TerrainKind::stairs:
      j["step_rise"] = t.step_rise;
      j["step_run"] = t.step_run;
      break;
    case TerrainKind::boxes:
      j["box_count"] = t.box_count;
      j["box_height_min"] = t.box_height_min;
      j["box_height_max"] = t.box_height_max;
      j["box_extent_min"] = t.box_extent_min;
      j["box_extent_max"] = t.box_extent_max;
      break;
    case TerrainKind::rough:
      j["rough_amplitude"] = t.rough_amplitude;
      j["rough_octaves"] = t.rough_octaves;
      j["rough_wavelength"] = t.rough_wavelength;
      j["rough_persistence"] = t.rough_persistence;
      break;
  }
  return j;
}

TerrainSpec terrain_from_json(const json& j) {
  TerrainSpec t;
  t.kind = terrain_kind_from_string(j.at("kind").get<std::string>());
  t.seed = j.value("seed", t.seed);
  t.inclination = j.value("inclination", t.inclination);
  t.azimuth = j.value("azimuth", t.azimuth);
  t.step_rise = j.value("step_rise", t.step_rise);
  t.step_run = j.value("step_run", t.step_run);
  t.box_count = j.value("box_count", t.box_count);
  t.box_height_min = j.value("box_height_min", t.box_height_min);
  t.box_height_max = j.value("box_height_max", t.box_height_max);
  t.box_extent_min = j.value("box_extent_min", t.box_extent_min);
  t.box_extent_max = j.value("box_extent_max", t.box_extent_max);
  t.rough_amplitude = j.value("rough_amplitude", t.rough_amplitude);
  t.rough_octaves = j.value("rough_octaves", t.rough_octaves);
  t.rough_wavelength = j.value("rough_wavelength", t.rough_wavelength);
  t.rough_persistence = j.value("rough_persistence", t.rough_persistence);
  return t;
}

}  // namespace

void write_dataset(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir);
  write_robot_files(dir, data.robot);

  json m;
  m["format"] = "foothold-dataset";
  m["version"] = 1;
  const SamplerConfig& c = data.config;
  json cfg;
  cfg["map_size"] = c.map_size;
  cfg["cell_size"] = c.cell_size;
  cfg["hip_height_min"] = c.hip_height_min;
  cfg["hip_height_max"] = c.hip_height_max;
  cfg["samples"] = c.samples;
  cfg["seed"] = c.seed;
  cfg["role"] = to_string(c.role);
  cfg["norm_factor"] = c.norm_factor;
  cfg["max_attempts"] = c.max_attempts;
  cfg["yaws"] = json::array({"0", "pi/2", "pi", "3pi/2"});
  cfg["terrains"] = json::array();
  for (const auto& t : c.terrains) cfg["terrains"].push_back(terrain_json(t));
  m["config"] = cfg;

  const TerrainCostParams& tc = data.params.terrain;
  m["terrain_cost"] = {{"window", tc.window},         {"slope_max", tc.slope_max}, {"rough_max", tc.rough_max},
                       {"edge_max", tc.edge_max},     {"w_slope", tc.w_slope},     {"w_rough", tc.w_rough},
                       {"w_edge", tc.w_edge}};
  const MarginOptions& mo = data.params.margin;
  m["margin"] = {{"tolerance", mo.tolerance}, {"march_step", mo.march_step}};
  m["margin"]["max_distance"] = std::isfinite(mo.max_distance) ? json(mo.max_distance) : json(nullptr);

  m["robot"] = "robot.cfg";
  json legs;
  for (int i = 0; i < kLegCount; ++i) legs[leg_name(i)] = std::string("leg_") + leg_name(i) + ".cfg";
  m["legs"] = legs;
  m["swing_leg"] = leg_name(data.robot.find_leg(c.role, Side::left));

  m["histogram"] = data.histogram;
  m["class_weight_constant"] = data.weights.constant;
  m["probabilities"] = data.weights.probabilities;
  m["weights"] = data.weights.weights;

  json samples = json::array();
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& s = data.samples[i];
    const int idx = static_cast<int>(i);
    write_pgm(dir / numbered("input", idx), s.pair.input);
    write_pgm(dir / numbered("label", idx), s.pair.labels);
    json js;
    js["input"] = numbered("input", idx);
    js["label"] = numbered("label", idx);
    js["terrain"] = s.info.terrain;
    js["yaw_index"] = s.info.yaw_index;
    js["hip_height"] = s.info.hip_height;
    js["attempts"] = s.info.attempts;
    js["base"] = {s.info.pose.base.x(), s.info.pose.base.y(), s.info.pose.base.z()};
    json joints = json::array();
    for (const auto& q : s.info.pose.joints) joints.push_back({q.abduction, q.flexion, q.knee});
    js["joints"] = joints;
    samples.push_back(js);
  }
  m["samples"] = samples;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
  json m;
  try {
    m = json::parse(read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw DataError((dir / "manifest.json").string() + ": " + e.what());
  }
  Dataset data;
  try {
    if (m.at("format") != "foothold-dataset") throw DataError("not a dataset manifest");
    const json& cfg = m.at("config");
    SamplerConfig& c = data.config;
    c.map_size = cfg.at("map_size");
    c.cell_size = cfg.at("cell_size");
    c.hip_height_min = cfg.at("hip_height_min");
    c.hip_height_max = cfg.at("hip_height_max");
    c.samples = cfg.at("samples");
    c.seed = cfg.at("seed");
    c.role = role_from_string(cfg.at("role").get<std::string>());
    c.norm_factor = cfg.value("norm_factor", c.norm_factor);
    c.max_attempts = cfg.value("max_attempts", c.max_attempts);
    for (const auto& t : cfg.at("terrains")) c.terrains.push_back(terrain_from_json(t));

    const json& tc = m.at("terrain_cost");
    data.params.terrain.window = tc.at("window");
    data.params.terrain.slope_max = tc.at("slope_max");
    data.params.terrain.rough_max = tc.at("rough_max");
    data.params.terrain.edge_max = tc.at("edge_max");
    data.params.terrain.w_slope = tc.at("w_slope");
    data.params.terrain.w_rough = tc.at("w_rough");
    data.params.terrain.w_edge = tc.at("w_edge");
    const json& mo = m.at("margin");
    data.params.margin.tolerance = mo.at("tolerance");
    data.params.margin.march_step = mo.at("march_step");
    if (!mo.at("max_distance").is_null()) data.params.margin.max_distance = mo.at("max_distance");

    data.robot = read_robot_file(dir / m.at("robot").get<std::string>());
    data.histogram = m.at("histogram").get<ClassHistogram>();
    data.weights.constant = m.at("class_weight_constant");
    data.weights.probabilities = m.at("probabilities").get<std::array<double, kClassCount>>();
    data.weights.weights = m.at("weights").get<std::array<double, kClassCount>>();

    for (const auto& js : m.at("samples")) {
      LabeledSample s;
      s.pair.input = read_pgm(dir / js.at("input").get<std::string>());
      const GrayImage lab = read_pgm(dir / js.at("label").get<std::string>());
      s.pair.labels = LabelMap(lab.size);
      s.pair.labels.values = lab.pixels;
      for (const auto v : lab.pixels)
        if (v >= kClassCount) throw DataError(js.at("label").get<std::string>() + ": label id out of range");
      s.info.terrain = js.value("terrain", 0);
      s.info.yaw_index = js.value("yaw_index", 0);
      s.info.hip_height = js.value("hip_height", 0.0);
      s.info.attempts = js.value("attempts", 0);
      if (js.contains("base")) {
        const auto b = js.at("base").get<std::array<double, 3>>();
        s.info.pose.base = Eigen::Vector3d(b[0], b[1], b[2]);
        s.info.pose.yaw = s.info.yaw_index * (std::numbers::pi / 2.0);
      }
      if (js.contains("joints")) {
        const auto q = js.at("joints").get<std::vector<std::array<double, 3>>>();
        if (q.size() != kLegCount) throw DataError("sample joints must list every leg");
        for (int j = 0; j < kLegCount; ++j) s.info.pose.joints[j] = {q[j][0], q[j][1], q[j][2]};
      }
      data.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw DataError((dir / "manifest.json").string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError((dir / "manifest.json").string() + ": " + e.what());
  }
  if (data.samples.empty()) throw DataError(dir.string() + ": dataset has no samples");
  return data;
}

}  // namespace foothold
