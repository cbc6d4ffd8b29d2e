// End-to-end acceptance gates. Each criterion prints one PASS/FAIL line; the
// exit status is nonzero when any of them fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "foothold/dataset.hpp"
#include "foothold/inference.hpp"
#include "foothold/io.hpp"
#include "foothold/random.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace foothold;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_work;
fs::path g_front_model;

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome cost_combination() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<double, double>> pairs(100000);
  for (auto& p : pairs) p = {u(rng), u(rng)};
  // Include the corners and values near the rounding boundaries.
  pairs[0] = {0, 0};
  pairs[1] = {1, 1};
  pairs[2] = {1, 0.99};
  pairs[3] = {0, 1};
  const auto t0 = Clock::now();
  std::vector<int> got(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) got[i] = combine_costs(pairs[i].first, pairs[i].second);
  const double t = since(t0);
  int mismatches = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    mismatches += got[i] != oracle::scaled_cost(pairs[i].first, pairs[i].second);
  return {mismatches == 0 && t < 1.0, std::to_string(mismatches) + " mismatches in 1e5 pairs, " + fmt(t * 1e3, 3) + " ms"};
}

Outcome class_weight_formula() {
  ClassHistogram h{};
  const std::uint64_t counts[kClassCount] = {130720, 211837, 281617, 322515, 172062, 15331, 152,
                                             349,    3837,   8533,   14765,  34709,  60835, 1942738};
  for (int i = 0; i < kClassCount; ++i) h[i] = counts[i];
  const ClassWeights w = class_weights(h);
  long double total = 0;
  for (auto c : counts) total += c;
  double worst = 0.0;
  for (int i = 0; i < kClassCount; ++i) {
    const long double ref = oracle::class_weight(static_cast<long double>(counts[i]) / total);
    worst = std::max(worst, static_cast<double>(std::fabs(w.weights[i] - ref)));
  }
  // Monotone in p over a fine sweep.
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 1000; ++k) {
    ClassHistogram g{};
    g[0] = static_cast<std::uint64_t>(k);
    g[1] = static_cast<std::uint64_t>(1000 - k);
    if (k == 0) g[1] = 1000;
    const double v = class_weights(g).weights[0];
    if (k > 0 && !(v < prev)) monotone = false;
    prev = v;
  }
  return {worst < 1e-9 && monotone, "max |w - w_ref| = " + fmt(worst, 3) + (monotone ? ", monotone" : ", NOT monotone")};
}

Outcome workspace_oracle() {
  const auto t0 = Clock::now();
  const LegModel leg = default_robot().legs[LF];
  const oracle::WorkspaceRaster raster(leg, 0.01, 1000000, 7);
  std::mt19937_64 rng(8);
  const Eigen::Vector3d lo = raster.lower(), hi = raster.upper();
  int agree = 0, far_disagree = 0;
  const int probes = 10000;
  for (int i = 0; i < probes; ++i) {
    Eigen::Vector3d p;
    for (int k = 0; k < 3; ++k) p[k] = std::uniform_real_distribution<double>(lo[k], hi[k])(rng);
    if (in_workspace(leg, p) == raster.occupied(p))
      ++agree;
    else if (!raster.near_boundary(p))
      ++far_disagree;
  }
  const double t = since(t0);
  const double rate = static_cast<double>(agree) / probes;
  return {rate >= 0.99 && far_disagree == 0 && t < 60.0,
          "agreement " + fmt(100 * rate) + "%, " + std::to_string(far_disagree) + " disagreements away from the boundary, " +
              fmt(t, 3) + " s"};
}

Outcome margin_oracle() {
  const LegModel leg = default_robot().legs[LF];
  std::mt19937_64 rng(9);
  double worst = 0.0;
  int probes = 0;
  while (probes < 100) {
    JointAngles q;
    q.abduction = std::uniform_real_distribution<double>(leg.limits[0].lo, leg.limits[0].hi)(rng);
    q.flexion = std::uniform_real_distribution<double>(leg.limits[1].lo, leg.limits[1].hi)(rng);
    q.knee = std::uniform_real_distribution<double>(leg.limits[2].lo, leg.limits[2].hi)(rng);
    const Eigen::Vector3d p = forward_kinematics(leg, q);
    const auto m = kinematic_margin(leg, p);
    if (!m || *m < 0.005) continue;  // interior probes only
    const double ref = oracle::brute_force_margin(leg, p, 0.005, 1.0);
    worst = std::max(worst, std::abs(*m - ref));
    ++probes;
  }
  return {worst <= 0.01, "max |margin - brute force| = " + fmt(worst * 1000, 3) + " mm over 100 probes"};
}

std::optional<RobotPose> random_stance(const ElevationMap& map, const RobotModel& robot, std::mt19937_64& rng,
                                       double span, int leg, const std::function<double()>& yaw) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Eigen::Vector2d xy(uniform(rng, -span, span), uniform(rng, -span, span));
    const auto pose = make_stance(map, robot, xy, yaw(), uniform(rng, 0.4, 0.6), leg);
    if (pose) return pose;
  }
  return std::nullopt;
}

Outcome stair_edges() {
  TerrainSpec spec;
  spec.kind = TerrainKind::stairs;
  const ElevationMap map = generate_terrain(spec, 300, 300);
  const RobotModel robot = default_robot();
  std::mt19937_64 rng(10);
  int placements = 0, decisions = 0, near_edge = 0;
  while (placements < 50) {
    const int leg = static_cast<int>(uniform_index(rng, kLegCount));
    const auto pose = random_stance(map, robot, rng, 2.0, leg, [&] { return uniform_index(rng, 2) ? std::numbers::pi : 0.0; });
    if (!pose) return {false, "no valid stance on the stairs"};
    ++placements;
    const auto d = evaluate_leg(map, robot, *pose, leg, {});
    if (!d) continue;
    ++decisions;
    const auto cell = map.cell_of(d->world.head<2>());
    for (int dx = -2; dx <= 2; ++dx) {
      const int ix = cell->x + dx;
      if (map.contains(ix, cell->y) && map.height(ix, cell->y) != map.height(cell->x, cell->y)) {
        ++near_edge;
        break;
      }
    }
  }
  return {near_edge == 0 && decisions > 0, std::to_string(decisions) + " footholds over 50 placements, " +
                                               std::to_string(near_edge) + " within 2 cells of an edge"};
}

ElevationMap mirror_map(const ElevationMap& m) {
  ElevationMap out = m;
  out.origin.y() = -(m.origin.y() + (m.size_y - 1) * m.cell_size);
  for (int ix = 0; ix < m.size_x; ++ix)
    for (int iy = 0; iy < m.size_y; ++iy) {
      out.height(ix, iy) = m.height(ix, m.size_y - 1 - iy);
      out.known[out.index(ix, iy)] = m.known[m.index(ix, m.size_y - 1 - iy)];
    }
  return out;
}

Outcome flip_symmetry() {
  const RobotModel robot = default_robot();
  const RobotModel mrobot = mirrored(robot);
  std::mt19937_64 rng(11);
  const TerrainKind kinds[] = {TerrainKind::rough, TerrainKind::boxes, TerrainKind::stairs, TerrainKind::slope};
  int scenes = 0, mismatched = 0, both_none = 0;
  std::string first_bad;
  while (scenes < 100) {
    TerrainSpec spec;
    spec.kind = kinds[scenes % 4];
    spec.seed = 500 + static_cast<std::uint64_t>(scenes);
    spec.azimuth = uniform(rng, -std::numbers::pi, std::numbers::pi);
    const ElevationMap map = generate_terrain(spec, 200, 200);
    const int leg = static_cast<int>(uniform_index(rng, kLegCount));
    const auto pose = random_stance(map, robot, rng, 0.8, leg,
                                    [&] { return uniform(rng, -std::numbers::pi, std::numbers::pi); });
    if (!pose) continue;
    ++scenes;
    const ElevationMap mmap = mirror_map(map);
    const auto a = evaluate_leg(map, robot, *pose, leg, {});
    const auto b = evaluate_leg(mmap, mrobot, mirrored(*pose), leg ^ 1, {});
    bool same = a.has_value() == b.has_value();
    if (a && b)
      same = a->row == b->row && a->col == 39 - b->col && a->class_id == b->class_id &&
             std::abs(a->world.y() + b->world.y()) < 1e-9;
    if (!a && !b) ++both_none;
    if (!same) {
      ++mismatched;
      if (first_bad.empty()) first_bad = ", first at scene " + std::to_string(scenes);
    }
  }
  return {mismatched == 0, std::to_string(mismatched) + " of 100 scenes differ (" + std::to_string(both_none) +
                               " without foothold)" + first_bad};
}

Outcome gradient() {
  const auto t0 = Clock::now();
  const auto r = oracle::gradient_check(NetConfig::tiny(), {});
  const double t = since(t0);
  return {r.max_rel < 1e-4 && r.skipped == 0 && t < 120.0,
          "max relative error " + fmt(r.max_rel, 3) + " (" + r.worst_tensor + "), " + std::to_string(r.checked) +
              " parameters, " + std::to_string(r.skipped) + " skipped, " + fmt(t, 3) + " s"};
}

Outcome desk_training() {
  const auto t0 = Clock::now();
  bool pass = true;
  std::ostringstream detail;
  for (Role role : {Role::front, Role::rear}) {
    SamplerConfig cfg;
    cfg.role = role;
    cfg.samples = 2000;
    cfg.seed = role == Role::front ? 11 : 21;
    const Dataset train = generate_dataset(cfg);
    cfg.samples = 400;
    cfg.seed += 1;
    const Dataset held = generate_dataset(cfg);
    const auto train_pairs = train.pairs();
    const auto held_pairs = held.pairs();
    TrainConfig tc;  // 30 epochs
    const auto res = train_network(NetConfig::reduced(), train_pairs, {}, train.weights, tc, [&](const EpochMetrics& m) {
      std::cout << "    " << to_string(role) << " epoch " << m.epoch << " loss " << fmt(m.train_loss) << " acc "
                << fmt(m.train_accuracy) << std::endl;
    });
    Model model = res.model;
    model.role = role;
    const SegmentationMetrics m = metrics(evaluate_network(model, held_pairs));
    if (role == Role::front) {
      g_front_model = g_work / "front.bin";
      write_model(g_front_model, model);
    }
    pass = pass && m.accuracy >= 0.70 && m.mean_iou >= 0.30;
    detail << to_string(role) << ": held-out accuracy " << fmt(100 * m.accuracy) << "%, mIoU " << fmt(m.mean_iou)
           << "; ";
  }
  const double t = since(t0);
  detail << fmt(t / 60, 3) << " min";
  return {pass && t < 7200.0, detail.str()};
}

Outcome memorization() {
  SamplerConfig cfg;
  cfg.samples = 1;
  cfg.seed = 31;
  cfg.map_size = 200;
  const Dataset one = generate_dataset(cfg);
  const std::vector<TrainingPair> data(50, one.samples.front().pair);
  TrainConfig tc;
  tc.epochs = 20;
  tc.batch_size = 1;  // one Adam step per copy
  const auto res = train_network(NetConfig::reduced(), data, {}, one.weights, tc);
  const double acc = evaluate_network(res.model, data).accuracy();
  return {acc >= 0.99, "training pixel accuracy " + fmt(100 * acc) + "% after 20 epochs at batch 1"};
}

int cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::cout << "    cli error: " << e.str();
  return code;
}

Outcome latency() {
  const fs::path manifest = g_work / "bench.json";
  std::vector<std::string> args{"bench", "--n", "100", "-o", manifest.string()};
  if (!g_front_model.empty()) args.insert(args.end(), {"--model", g_front_model.string()});
  if (cli(args) != 0) return {false, "bench failed"};
  const json j = json::parse(read_text(manifest));
  const double p50 = j.at("latency_ms").at("p50").get<double>();
  const bool reported = j.contains("hardware") && j["hardware"].contains("cpu");
  return {p50 <= 50.0 && reported, "p50 " + fmt(p50, 3) + " ms, p99 " + fmt(j["latency_ms"]["p99"].get<double>(), 3) +
                                       " ms on " + j["hardware"]["cpu"].get<std::string>() + ", manifest " +
                                       manifest.string()};
}

Outcome selection_threshold() {
  const double threshold = (255.0 / 13.0) / 160.0;
  int wrong = 0, cases = 0;
  for (int i = -400; i <= 400; ++i) {
    const double sep = threshold + 1e-5 * i + (i == 0 ? 1e-8 : 0.0);
    // Class 3 under the nominal point, one class-2 cell 6 cells along the rows.
    Patch p(40, sep / 6.0);
    for (auto& k : p.known) k = 1;
    LabelMap l(40, 3);
    l.at(26, 20) = 2;
    const auto d = select_foothold(l, p, p.local_offset(20, 20), 160.0);
    const bool far_cell = d && d->row == 26 && d->col == 20;
    const bool near_cell = d && d->row == 20 && d->col == 20;
    wrong += sep < threshold ? !far_cell : !near_cell;
    ++cases;
  }
  return {wrong == 0 && std::abs(threshold - 0.1226) < 1e-4,
          "threshold " + fmt(threshold, 6) + " m, " + std::to_string(wrong) + " wrong of " + std::to_string(cases)};
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) names.insert(e.path().filename().string());
  for (const auto& n : names) {
    if (!fs::exists(a / n) || !fs::exists(b / n) || read_text(a / n) != read_text(b / n)) {
      why = n;
      return false;
    }
  }
  return true;
}

Outcome determinism() {
  const fs::path dir = g_work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const char* run : {"1", "2"}) {
    const fs::path d = dir / (std::string("data") + run);
    if (cli({"label", "--samples", "24", "--map-size", "150", "--seed", "77", "-o", d.string()}) != 0)
      return {false, "label failed"};
    if (cli({"train", "--data", d.string(), "--epochs", "2", "--seed", "78", "-o",
             (dir / (std::string("model") + run + ".bin")).string()}) != 0)
      return {false, "train failed"};
  }
  std::string why;
  if (!same_tree(dir / "data1", dir / "data2", why)) return {false, "label output differs: " + why};
  for (const char* f : {".bin", ".bin.metrics.csv"})
    if (read_text(dir / (std::string("model1") + f)) != read_text(dir / (std::string("model2") + f)))
      return {false, std::string("train output differs: model") + f};
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "data1")) ++files;
  return {true, std::to_string(files) + " dataset files, model and metrics identical across two runs"};
}

}  // namespace

int main(int argc, char** argv) {
  g_work = fs::temp_directory_path() / "foothold_acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work-dir" && i + 1 < argc) {
      g_work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream s(argv[++i]);
      for (std::string t; std::getline(s, t, ',');) only.insert(std::stoi(t));
    } else {
      std::cerr << "usage: foothold_acceptance [--work-dir DIR] [--only N,M,...]\n";
      return 2;
    }
  }
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"cost combination arithmetic", cost_combination},
      {"class weight formula", class_weight_formula},
      {"workspace against FK raster", workspace_oracle},
      {"kinematic margin against brute force", margin_oracle},
      {"stair edge avoidance", stair_edges},
      {"left/right flip symmetry", flip_symmetry},
      {"network gradient check", gradient},
      {"desk-scale training", desk_training},
      {"memorization sanity", memorization},
      {"single-patch latency", latency},
      {"selection distance threshold", selection_threshold},
      {"label and train determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << id << "  " << criteria[i].first << ": "
              << o.detail << "  [" << fmt(since(t0), 3) << " s]" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
