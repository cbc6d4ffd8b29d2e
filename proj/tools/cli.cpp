#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "foothold/dataset.hpp"
#include "foothold/errors.hpp"
#include "foothold/inference.hpp"
#include "foothold/io.hpp"
#include "foothold/net.hpp"
#include "foothold/random.hpp"
#include "foothold/terrain.hpp"
#include "foothold/train.hpp"

#ifndef FOOTHOLD_VERSION
#define FOOTHOLD_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace foothold::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int default_threads() {
  if (const char* env = std::getenv("FOOTHOLD_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument(what + ": bad integer '" + item + "'");
    }
  }
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) return line.substr(line.find_first_not_of(' ', colon + 1));
    }
  }
  return "unknown";
}

// Resolved key/value view of every option of a subcommand.
json resolved_options(const CLI::App& sub) {
  json cfg = json::object();
  for (const CLI::Option* o : sub.get_options()) {
    if (o->get_lnames().empty()) continue;
    const std::string& name = o->get_lnames().front();
    if (name == "help" || name == "config" || name == "manifest") continue;
    const auto res = o->reduced_results();
    if (!res.empty()) {
      cfg[name] = res.back();
    } else if (o->get_items_expected_max() == 0) {
      cfg[name] = "false";
    } else if (!o->get_default_str().empty()) {
      cfg[name] = o->get_default_str();
    }
  }
  return cfg;
}

struct Run {
  std::string subcommand;
  std::uint64_t seed = 0;
  json inputs = json::object();
  json outputs = json::object();
  json timings = json::object();
  json extra = json::object();
  std::string manifest_path;
  std::string primary_output;
};

void write_manifest(const Run& run, const CLI::App& sub) {
  json m;
  m["tool"] = "foothold";
  m["version"] = FOOTHOLD_VERSION;
  m["subcommand"] = run.subcommand;
  m["config"] = resolved_options(sub);
  m["seed"] = run.seed;
  m["inputs"] = run.inputs;
  m["outputs"] = run.outputs;
  m["timings_s"] = run.timings;
  for (auto it = run.extra.begin(); it != run.extra.end(); ++it) m[it.key()] = it.value();
  fs::path path = run.manifest_path;
  if (path.empty()) {
    if (!run.primary_output.empty()) {
      fs::path p(run.primary_output);
      if (p.has_filename())
        path = p.string() + ".run.json";
      else
        path = p.parent_path().string() + ".run.json";
    } else {
      path = run.subcommand + ".run.json";
    }
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text(path, m.dump(2) + "\n");
}

/**
 * `--config FILE` values are spliced in as `--key=value` right after the
 * subcommand, so explicit flags that follow take precedence. A run manifest
 * (.json) works as a config file too.
 */
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::vector<std::string> injected;
  std::size_t sub_pos = std::string::npos;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    std::string file;
    if (a == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file");
      file = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      file = a.substr(9);
    } else {
      if (sub_pos == std::string::npos && !a.empty() && a[0] != '-') sub_pos = out.size();
      out.push_back(a);
      continue;
    }
    const std::string text = read_text(file);
    if (fs::path(file).extension() == ".json") {
      const json m = json::parse(text);
      for (auto it = m.at("config").begin(); it != m.at("config").end(); ++it)
        injected.push_back("--" + it.key() + "=" + it.value().get<std::string>());
    } else {
      for (const auto& [k, v] : parse_key_values(text)) injected.push_back("--" + k + "=" + v);
    }
  }
  if (injected.empty()) return out;
  const std::size_t at = sub_pos == std::string::npos ? out.size() : sub_pos + 1;
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
  return out;
}

// ---------------------------------------------------------------------------
// options

struct TerrainOptions {
  std::string kind = "flat";
  int size = 300;
  int size_y = 0;
  double cell_size = 0.02;
  TerrainSpec spec;
};

void add_terrain_options(CLI::App* sub, TerrainOptions& t, bool with_kind) {
  if (with_kind) sub->add_option("--kind", t.kind, "flat, slope, stairs, boxes or rough")->capture_default_str();
  sub->add_option("--size", t.size, "cells along x")->capture_default_str();
  sub->add_option("--size-y", t.size_y, "cells along y (0: same as --size)")->capture_default_str();
  sub->add_option("--cell-size", t.cell_size, "m")->capture_default_str();
  sub->add_option("--inclination", t.spec.inclination, "slope angle, rad")->capture_default_str();
  sub->add_option("--azimuth", t.spec.azimuth, "slope direction, rad")->capture_default_str();
  sub->add_option("--rise", t.spec.step_rise, "stair rise, m")->capture_default_str();
  sub->add_option("--run", t.spec.step_run, "stair run, m")->capture_default_str();
  sub->add_option("--boxes", t.spec.box_count, "number of boxes")->capture_default_str();
  sub->add_option("--box-height-min", t.spec.box_height_min)->capture_default_str();
  sub->add_option("--box-height-max", t.spec.box_height_max)->capture_default_str();
  sub->add_option("--box-extent-min", t.spec.box_extent_min)->capture_default_str();
  sub->add_option("--box-extent-max", t.spec.box_extent_max)->capture_default_str();
  sub->add_option("--amplitude", t.spec.rough_amplitude, "rough terrain amplitude, m")->capture_default_str();
  sub->add_option("--octaves", t.spec.rough_octaves)->capture_default_str();
  sub->add_option("--wavelength", t.spec.rough_wavelength, "m")->capture_default_str();
  sub->add_option("--persistence", t.spec.rough_persistence)->capture_default_str();
}

struct CostOptions {
  TerrainCostParams p;
};

void add_cost_options(CLI::App* sub, CostOptions& c) {
  sub->add_option("--window", c.p.window, "terrain cost window, cells")->capture_default_str();
  sub->add_option("--slope-max", c.p.slope_max, "rad")->capture_default_str();
  sub->add_option("--rough-max", c.p.rough_max, "m")->capture_default_str();
  sub->add_option("--edge-max", c.p.edge_max, "m")->capture_default_str();
  sub->add_option("--w-slope", c.p.w_slope)->capture_default_str();
  sub->add_option("--w-rough", c.p.w_rough)->capture_default_str();
  sub->add_option("--w-edge", c.p.w_edge)->capture_default_str();
}

RobotModel load_robot(const std::string& path) { return path.empty() ? default_robot() : read_robot_file(path); }

// ---------------------------------------------------------------------------
// subcommands

int cmd_terrain(const CLI::App& sub, TerrainOptions& t, std::uint64_t seed, const std::string& output, Run& run,
                std::ostream& out) {
  const auto t0 = Clock::now();
  TerrainSpec spec = t.spec;
  spec.kind = terrain_kind_from_string(t.kind);
  spec.seed = seed;
  const int sy = t.size_y > 0 ? t.size_y : t.size;
  const ElevationMap map = generate_terrain(spec, t.size, sy, t.cell_size);
  write_heightmap(output, map);
  run.outputs["heightmap"] = output;
  run.timings["total"] = seconds_since(t0);
  out << "wrote " << output << " (" << map.size_x << "x" << map.size_y << " cells, " << to_string(spec.kind) << ")\n";
  write_manifest(run, sub);
  return kOk;
}

struct LabelOptions {
  std::string out;
  int samples = 2000;
  std::string role = "front";
  std::string terrains = "flat,slope,stairs,boxes,rough";
  int map_size = 300;
  double cell_size = 0.02;
  double hip_min = 0.35;
  double hip_max = 0.65;
  double norm = kDefaultNormFactor;
  std::string robot;
  int threads = 1;
  int max_attempts = 200;
};

int cmd_label(const CLI::App& sub, LabelOptions& o, TerrainOptions& t, CostOptions& c, std::uint64_t seed, Run& run,
              std::ostream& out) {
  const auto t0 = Clock::now();
  SamplerConfig cfg;
  cfg.samples = o.samples;
  cfg.seed = seed;
  cfg.role = role_from_string(o.role);
  cfg.map_size = o.map_size;
  cfg.cell_size = o.cell_size;
  cfg.hip_height_min = o.hip_min;
  cfg.hip_height_max = o.hip_max;
  cfg.norm_factor = o.norm;
  cfg.threads = o.threads;
  cfg.max_attempts = o.max_attempts;
  const auto defaults = default_terrains(seed);
  for (const auto& name : split(o.terrains, ',')) {
    const TerrainKind kind = terrain_kind_from_string(name);
    TerrainSpec spec = t.spec;
    spec.kind = kind;
    for (const auto& d : defaults)
      if (d.kind == kind) spec.seed = d.seed;
    cfg.terrains.push_back(spec);
  }
  if (cfg.terrains.empty()) throw std::invalid_argument("--terrains lists no terrain kinds");
  LabelerParams params;
  params.terrain = c.p;
  const RobotModel robot = load_robot(o.robot);

  const Dataset data = generate_dataset(cfg, robot, params);
  const double t_gen = seconds_since(t0);
  write_dataset(o.out, data);
  run.outputs["dataset"] = o.out;
  if (!o.robot.empty()) run.inputs["robot"] = o.robot;
  run.timings["generate"] = t_gen;
  run.timings["total"] = seconds_since(t0);
  out << "wrote " << data.samples.size() << " samples to " << o.out << " in " << std::fixed << std::setprecision(2)
      << t_gen << " s\n";
  out << "class histogram:";
  for (const auto h : data.histogram) out << ' ' << h;
  out << "\n";
  write_manifest(run, sub);
  return kOk;
}

struct TrainOptions {
  std::string data;
  std::string val_data;
  double val_fraction = 0.1;
  std::string output;
  std::string metrics;
  std::string widths = "8,16,32";
  TrainConfig train;
  bool no_class_weights = false;
};

ClassHistogram histogram_of(std::span<const TrainingPair> pairs) {
  ClassHistogram h{};
  for (const auto& p : pairs) accumulate_histogram(h, p.labels);
  return h;
}

int cmd_train(const CLI::App& sub, TrainOptions& o, std::uint64_t seed, Run& run, std::ostream& out) {
  const auto t0 = Clock::now();
  const Dataset data = read_dataset(o.data);
  std::vector<TrainingPair> all = data.pairs();
  std::vector<TrainingPair> val;
  if (!o.val_data.empty()) {
    val = read_dataset(o.val_data).pairs();
    run.inputs["validation"] = o.val_data;
  } else {
    if (!(o.val_fraction >= 0.0 && o.val_fraction < 1.0))
      throw std::invalid_argument("--val-fraction must lie in [0, 1)");
    const auto n_val = static_cast<std::size_t>(std::floor(o.val_fraction * static_cast<double>(all.size())));
    val.assign(all.end() - static_cast<std::ptrdiff_t>(n_val), all.end());
    all.resize(all.size() - n_val);
  }
  if (all.empty()) throw DataError("training split is empty");
  const ClassWeights weights = class_weights(histogram_of(all));

  NetConfig net;
  const auto w = parse_int_list(o.widths, "--widths");
  if (w.size() != 3) throw std::invalid_argument("--widths needs three values");
  std::copy(w.begin(), w.end(), net.widths.begin());
  TrainConfig tc = o.train;
  tc.seed = seed;
  tc.use_class_weights = !o.no_class_weights;

  const std::string metrics_path = o.metrics.empty() ? o.output + ".metrics.csv" : o.metrics;
  std::ostringstream csv;
  csv << "epoch,learning_rate,train_loss,train_accuracy,train_miou,val_accuracy,val_miou\n";
  csv << std::setprecision(10);
  const auto log_epoch = [&](const EpochMetrics& m) {
    csv << m.epoch << ',' << m.learning_rate << ',' << m.train_loss << ',' << m.train_accuracy << ','
        << m.train_miou << ',';
    if (m.val_accuracy) csv << *m.val_accuracy;
    csv << ',';
    if (m.val_miou) csv << *m.val_miou;
    csv << '\n';
    out << "epoch " << std::setw(3) << m.epoch << "  lr " << std::scientific << std::setprecision(3)
        << m.learning_rate << std::fixed << "  loss " << std::setprecision(4) << m.train_loss << "  acc "
        << m.train_accuracy;
    if (m.val_accuracy) out << "  val acc " << *m.val_accuracy << "  val mIoU " << *m.val_miou;
    out << std::endl;
  };

  TrainResult res = train_network(net, all, val, weights, tc, log_epoch);
  res.model.role = data.config.role;
  write_model(o.output, res.model);
  write_text(metrics_path, csv.str());
  run.inputs["dataset"] = o.data;
  run.outputs["model"] = o.output;
  run.outputs["metrics"] = metrics_path;
  run.extra["train_samples"] = all.size();
  run.extra["validation_samples"] = val.size();
  run.timings["total"] = seconds_since(t0);
  write_manifest(run, sub);
  return kOk;
}

struct EvalOptions {
  std::string data;
  std::string model;
  bool oracle = false;
  std::string output;
};

int cmd_eval(const CLI::App& sub, EvalOptions& o, Run& run, std::ostream& out) {
  const auto t0 = Clock::now();
  if (o.oracle == !o.model.empty()) throw std::invalid_argument("pass exactly one of --model or --oracle");
  const Dataset data = read_dataset(o.data);
  Confusion conf;
  std::string predictor;
  if (o.oracle) {
    predictor = "oracle";
    const auto maps = build_terrains(data.config);
    const int swing = data.robot.find_leg(data.config.role, Side::left);
    for (const auto& s : data.samples) {
      if (s.info.terrain < 0 || s.info.terrain >= static_cast<int>(maps.size()))
        throw DataError("sample refers to an unknown terrain");
      const LegView view = make_leg_view(maps[s.info.terrain], data.robot, s.info.pose, swing);
      conf.add(classes_of(label_patch(data.robot, s.info.pose, swing, view.patch, data.params)), s.pair.labels);
    }
  } else {
    predictor = "network";
    const Model model = read_model(o.model);
    if (model.role != data.config.role)
      throw std::invalid_argument(std::string("model is for ") + to_string(model.role) + " legs, dataset for " +
                                  to_string(data.config.role));
    conf = evaluate_network(model, data.pairs());
    run.inputs["model"] = o.model;
  }
  const SegmentationMetrics m = metrics(conf);

  std::ostringstream table;
  table << std::fixed;
  table << "Leg    Accuracy [%]  IoU\n";
  table << std::left << std::setw(7) << to_string(data.config.role) << std::right << std::setw(12)
        << std::setprecision(2) << 100.0 * m.accuracy << "  " << std::setw(5) << 100.0 * m.mean_iou << "\n\n";
  table << "class  IoU\n";
  for (int c = 0; c < kClassCount; ++c) {
    table << std::setw(5) << c << "  ";
    if (m.iou[c])
      table << std::setprecision(4) << *m.iou[c];
    else
      table << "-";
    table << "\n";
  }
  out << table.str();
  if (!o.output.empty()) {
    std::ostringstream csv;
    csv << std::setprecision(10);
    csv << "leg,predictor,accuracy,mean_iou";
    for (int c = 0; c < kClassCount; ++c) csv << ",iou_" << c;
    csv << "\n" << to_string(data.config.role) << ',' << predictor << ',' << m.accuracy << ',' << m.mean_iou;
    for (int c = 0; c < kClassCount; ++c) {
      csv << ',';
      if (m.iou[c]) csv << *m.iou[c];
    }
    csv << "\n";
    write_text(o.output, csv.str());
    run.outputs["table"] = o.output;
  }
  run.inputs["dataset"] = o.data;
  run.extra["accuracy"] = m.accuracy;
  run.extra["mean_iou"] = m.mean_iou;
  run.extra["predictor"] = predictor;
  run.timings["total"] = seconds_since(t0);
  write_manifest(run, sub);
  return kOk;
}

struct InferOptions {
  std::string map;
  std::string leg = "LF";
  double x = 0.0, y = 0.0, yaw = 0.0;
  double hip_height = 0.5;
  std::string evaluator = "oracle";
  std::string model;
  std::string robot;
  double k = 160.0;
  double nominal_x = 0.0, nominal_y = 0.0;
  double norm = kDefaultNormFactor;
  std::string output;
  std::string dump_labels, dump_cost, dump_input;
};

GrayImage cost_image(const std::vector<double>& costs, int size) {
  GrayImage img(size, 255);
  for (std::size_t i = 0; i < costs.size(); ++i)
    if (std::isfinite(costs[i])) img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(costs[i]), 0L, 254L));
  return img;
}

int cmd_infer(const CLI::App& sub, InferOptions& o, CostOptions& c, Run& run, std::ostream& out) {
  const auto t0 = Clock::now();
  const ElevationMap map = read_heightmap(o.map);
  const RobotModel robot = load_robot(o.robot);
  const int leg = leg_id_from_string(o.leg);
  const auto pose = make_stance(map, robot, Eigen::Vector2d(o.x, o.y), o.yaw, o.hip_height, leg);
  if (!pose) throw DataError("no valid stance at the requested position");

  InferenceConfig cfg;
  cfg.k = o.k;
  cfg.nominal_offset = Eigen::Vector3d(o.nominal_x, o.nominal_y, 0.0);
  cfg.norm_factor = o.norm;
  cfg.evaluator = evaluator_from_string(o.evaluator);
  cfg.labeler.terrain = c.p;
  std::unique_ptr<NetworkPredictor> predictor;
  if (cfg.evaluator == Evaluator::network) {
    if (o.model.empty()) throw std::invalid_argument("--evaluator network needs --model");
    predictor = std::make_unique<NetworkPredictor>(read_model(o.model));
    run.inputs["model"] = o.model;
  }
  const LegInference inf = infer_leg(map, robot, *pose, leg, cfg, predictor.get());
  const std::string record = inf.decision ? format_decision(*inf.decision) : format_no_foothold(leg);
  out << record << "\n";
  write_text(o.output, record + "\n");
  run.inputs["map"] = o.map;
  run.outputs["decision"] = o.output;
  if (!o.dump_labels.empty()) {
    write_pgm(o.dump_labels, inf.labels);
    run.outputs["labels"] = o.dump_labels;
  }
  if (!o.dump_cost.empty()) {
    write_pgm(o.dump_cost, cost_image(final_costs(inf.labels, inf.view.patch, inf.nominal, cfg.k), inf.labels.size));
    run.outputs["cost"] = o.dump_cost;
  }
  if (!o.dump_input.empty()) {
    write_pgm(o.dump_input, inf.image);
    run.outputs["input"] = o.dump_input;
  }
  run.timings["total"] = seconds_since(t0);
  write_manifest(run, sub);
  return inf.decision ? kOk : kData;
}

struct BenchOptions {
  std::string model;
  std::string map;
  int n = 100;
  int warmup = 5;
  std::string leg = "LF";
  std::string evaluator = "network";
  std::string output = "bench.json";
};

int cmd_bench(const CLI::App& sub, BenchOptions& o, std::uint64_t seed, Run& run, std::ostream& out) {
  if (o.n < 1 || o.warmup < 0) throw std::invalid_argument("--n must be positive and --warmup non-negative");
  const auto t0 = Clock::now();
  ElevationMap map;
  if (!o.map.empty()) {
    map = read_heightmap(o.map);
    run.inputs["map"] = o.map;
  } else {
    TerrainSpec spec;
    spec.kind = TerrainKind::rough;
    spec.seed = seed;
    map = generate_terrain(spec, 300, 300);
  }
  const RobotModel robot = default_robot();
  const int leg = leg_id_from_string(o.leg);
  InferenceConfig cfg;
  cfg.evaluator = evaluator_from_string(o.evaluator);
  std::unique_ptr<NetworkPredictor> predictor;
  if (cfg.evaluator == Evaluator::network) {
    Model model;
    if (!o.model.empty()) {
      model = read_model(o.model);
      run.inputs["model"] = o.model;
    } else {
      const Network<float> net(model.config);
      model.params = net.initial_parameters(seed);
    }
    model.role = robot.legs[leg].role;
    predictor = std::make_unique<NetworkPredictor>(std::move(model));
  }

  // Poses spread over the map interior; the pipeline is timed end to end.
  auto rng = derive_stream(seed, 0);
  std::vector<RobotPose> poses;
  while (static_cast<int>(poses.size()) < o.n + o.warmup) {
    const double lim = 0.5 * (map.size_x - 1) * map.cell_size - 1.0;
    const Eigen::Vector2d mid = map.origin + 0.5 * map.cell_size * Eigen::Vector2d(map.size_x - 1, map.size_y - 1);
    const Eigen::Vector2d xy = mid + Eigen::Vector2d(uniform(rng, -lim, lim), uniform(rng, -lim, lim));
    const auto p = make_stance(map, robot, xy, uniform(rng, -std::numbers::pi, std::numbers::pi), uniform(rng, 0.4, 0.6), leg);
    if (p) poses.push_back(*p);
  }
  std::vector<double> ms;
  ms.reserve(static_cast<std::size_t>(o.n));
  int found = 0;
  for (int i = 0; i < o.n + o.warmup; ++i) {
    const auto s = Clock::now();
    const auto d = evaluate_leg(map, robot, poses[i], leg, cfg, predictor.get());
    const double dt = std::chrono::duration<double, std::milli>(Clock::now() - s).count();
    if (i >= o.warmup) {
      ms.push_back(dt);
      found += d ? 1 : 0;
    }
  }
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const auto pct = [&](double q) {
    const std::size_t idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size()))) - 1;
    return sorted[std::min(idx, sorted.size() - 1)];
  };
  const double mean = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  out << std::fixed << std::setprecision(3);
  out << "evaluator " << o.evaluator << ", " << o.n << " single-patch inferences, 1 thread\n";
  out << "mean " << mean << " ms  p50 " << pct(0.5) << " ms  p99 " << pct(0.99) << " ms\n";
  out << "cpu " << cpu_model() << "\n";

  run.extra["latency_ms"] = {{"mean", mean}, {"p50", pct(0.5)}, {"p99", pct(0.99)},
                             {"min", sorted.front()}, {"max", sorted.back()}};
  run.extra["samples"] = o.n;
  run.extra["footholds_found"] = found;
  run.extra["hardware"] = {{"cpu", cpu_model()}, {"hardware_threads", std::thread::hardware_concurrency()},
                           {"threads_used", 1}};
  run.timings["total"] = seconds_since(t0);
  run.manifest_path = run.manifest_path.empty() ? o.output : run.manifest_path;
  run.outputs["manifest"] = run.manifest_path;
  write_manifest(run, sub);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Foothold selection toolkit: terrain, labeling, training and inference", "foothold"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", FOOTHOLD_VERSION);

  std::uint64_t seed = 1;
  std::string manifest;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
    sub->add_option("--manifest", manifest, "run manifest path (default: <output>.run.json)");
    sub->add_option("--config", "key-value config file; explicit flags override it");
  };

  TerrainOptions topt;
  std::string terrain_out;
  auto* terrain = app.add_subcommand("terrain", "generate a synthetic heightmap");
  common(terrain);
  add_terrain_options(terrain, topt, true);
  terrain->add_option("-o,--output", terrain_out, "heightmap file")->required();

  LabelOptions lopt;
  lopt.threads = default_threads();
  TerrainOptions ltopt;
  CostOptions lcost;
  auto* label = app.add_subcommand("label", "generate a labeled dataset");
  common(label);
  label->add_option("-o,--out", lopt.out, "dataset directory")->required();
  label->add_option("--samples", lopt.samples)->capture_default_str();
  label->add_option("--role", lopt.role, "front or rear")->capture_default_str();
  label->add_option("--terrains", lopt.terrains, "comma-separated terrain kinds")->capture_default_str();
  label->add_option("--map-size", lopt.map_size, "cells per side")->capture_default_str();
  label->add_option("--map-cell-size", lopt.cell_size, "m")->capture_default_str();
  label->add_option("--hip-min", lopt.hip_min, "m")->capture_default_str();
  label->add_option("--hip-max", lopt.hip_max, "m")->capture_default_str();
  label->add_option("--norm", lopt.norm, "image normalization, m")->capture_default_str();
  label->add_option("--robot", lopt.robot, "robot.cfg (default robot when empty)");
  label->add_option("--max-attempts", lopt.max_attempts)->capture_default_str();
  label->add_option("--threads", lopt.threads, "worker threads (FOOTHOLD_THREADS)")->capture_default_str();
  {
    // terrain parameters shared by every generated map kind
    auto& s = ltopt.spec;
    label->add_option("--inclination", s.inclination)->capture_default_str();
    label->add_option("--azimuth", s.azimuth)->capture_default_str();
    label->add_option("--rise", s.step_rise)->capture_default_str();
    label->add_option("--run", s.step_run)->capture_default_str();
    label->add_option("--boxes", s.box_count)->capture_default_str();
    label->add_option("--amplitude", s.rough_amplitude)->capture_default_str();
  }
  add_cost_options(label, lcost);

  TrainOptions tropt;
  tropt.train.threads = 1;
  auto* train = app.add_subcommand("train", "train a cost classifier");
  common(train);
  train->add_option("--data", tropt.data, "dataset directory")->required();
  train->add_option("--val-data", tropt.val_data, "validation dataset (default: hold out --val-fraction)");
  train->add_option("--val-fraction", tropt.val_fraction)->capture_default_str();
  train->add_option("-o,--output", tropt.output, "model file")->required();
  train->add_option("--metrics", tropt.metrics, "per-epoch CSV (default: <model>.metrics.csv)");
  train->add_option("--widths", tropt.widths, "channel widths of the three stages")->capture_default_str();
  train->add_option("--epochs", tropt.train.epochs)->capture_default_str();
  train->add_option("--batch", tropt.train.batch_size)->capture_default_str();
  train->add_option("--lr", tropt.train.learning_rate)->capture_default_str();
  train->add_option("--decay", tropt.train.decay)->capture_default_str();
  train->add_option("--weight-decay", tropt.train.weight_decay)->capture_default_str();
  train->add_flag("--no-class-weights", tropt.no_class_weights);
  train->add_option("--threads", tropt.train.threads, "per-sample gradient threads")->capture_default_str();

  EvalOptions eopt;
  auto* eval = app.add_subcommand("eval", "accuracy and IoU against dataset labels");
  common(eval);
  eval->add_option("--data", eopt.data, "dataset directory")->required();
  eval->add_option("--model", eopt.model, "model file");
  eval->add_flag("--oracle", eopt.oracle, "use the analytic labeler as predictor");
  eval->add_option("-o,--output", eopt.output, "CSV table");

  InferOptions iopt;
  CostOptions icost;
  auto* infer = app.add_subcommand("infer", "select a foothold for one leg");
  common(infer);
  infer->add_option("--map", iopt.map, "heightmap file")->required();
  infer->add_option("--leg", iopt.leg, "LF, RF, LH or RH")->capture_default_str();
  infer->add_option("--x", iopt.x, "base x, m")->capture_default_str();
  infer->add_option("--y", iopt.y, "base y, m")->capture_default_str();
  infer->add_option("--yaw", iopt.yaw, "base heading, rad")->capture_default_str();
  infer->add_option("--hip-height", iopt.hip_height, "m")->capture_default_str();
  infer->add_option("--evaluator", iopt.evaluator, "network or oracle")->capture_default_str();
  infer->add_option("--model", iopt.model, "model file");
  infer->add_option("--robot", iopt.robot, "robot.cfg");
  infer->add_option("--k", iopt.k, "cost per meter from the nominal foothold")->capture_default_str();
  infer->add_option("--nominal-x", iopt.nominal_x, "leg frame, m")->capture_default_str();
  infer->add_option("--nominal-y", iopt.nominal_y, "leg frame, m")->capture_default_str();
  infer->add_option("--norm", iopt.norm, "image normalization, m")->capture_default_str();
  infer->add_option("-o,--output", iopt.output, "decision record")->required();
  infer->add_option("--dump-labels", iopt.dump_labels, "PGM of predicted classes");
  infer->add_option("--dump-cost", iopt.dump_cost, "PGM of final costs");
  infer->add_option("--dump-input", iopt.dump_input, "PGM of the network input");
  add_cost_options(infer, icost);

  BenchOptions bopt;
  auto* bench = app.add_subcommand("bench", "single-threaded end-to-end latency");
  common(bench);
  bench->add_option("--model", bopt.model, "model file (default: freshly initialized reduced net)");
  bench->add_option("--map", bopt.map, "heightmap (default: generated rough terrain)");
  bench->add_option("--n", bopt.n)->capture_default_str();
  bench->add_option("--warmup", bopt.warmup)->capture_default_str();
  bench->add_option("--leg", bopt.leg)->capture_default_str();
  bench->add_option("--evaluator", bopt.evaluator)->capture_default_str();
  bench->add_option("-o,--output", bopt.output, "benchmark manifest")->capture_default_str();

  try {
    const std::vector<std::string> args = expand_config(raw_args);
    std::vector<const char*> argv{"foothold"};
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  Run run;
  run.seed = seed;
  run.manifest_path = manifest;
  try {
    if (terrain->parsed()) {
      run.subcommand = "terrain";
      run.primary_output = terrain_out;
      return cmd_terrain(*terrain, topt, seed, terrain_out, run, out);
    }
    if (label->parsed()) {
      run.subcommand = "label";
      run.primary_output = lopt.out;
      return cmd_label(*label, lopt, ltopt, lcost, seed, run, out);
    }
    if (train->parsed()) {
      run.subcommand = "train";
      run.primary_output = tropt.output;
      return cmd_train(*train, tropt, seed, run, out);
    }
    if (eval->parsed()) {
      run.subcommand = "eval";
      run.primary_output = eopt.output;
      return cmd_eval(*eval, eopt, run, out);
    }
    if (infer->parsed()) {
      run.subcommand = "infer";
      run.primary_output = iopt.output;
      return cmd_infer(*infer, iopt, icost, run, out);
    }
    if (bench->parsed()) {
      run.subcommand = "bench";
      return cmd_bench(*bench, bopt, seed, run, out);
    }
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::out_of_range& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace foothold::cli
