#include "foothold/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>

#include "foothold/errors.hpp"

namespace fs = std::filesystem;

namespace foothold {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// heightmap

std::string format_heightmap(const ElevationMap& map) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "width " << map.size_x << "\n";
  out << "height " << map.size_y << "\n";
  out << "cell_size " << map.cell_size << "\n";
  out << "origin " << map.origin.x() << " " << map.origin.y() << "\n";
  for (int ix = 0; ix < map.size_x; ++ix) {
    for (int iy = 0; iy < map.size_y; ++iy) {
      if (iy) out << ' ';
      if (map.is_known(ix, iy))
        out << map.height(ix, iy);
      else
        out << '?';
    }
    out << "\n";
  }
  return out.str();
}

ElevationMap parse_heightmap(const std::string& text) {
  std::istringstream in(text);
  int sx = -1, sy = -1;
  double cs = 0.0, ox = 0.0, oy = 0.0;
  bool have_cs = false, have_origin = false;
  std::string key;
  while ((sx < 0 || sy < 0 || !have_cs || !have_origin) && in >> key) {
    if (key == "width") in >> sx;
    else if (key == "height") in >> sy;
    else if (key == "cell_size") { in >> cs; have_cs = true; }
    else if (key == "origin") { in >> ox >> oy; have_origin = true; }
    else throw DataError("heightmap: unexpected header key '" + key + "'");
    if (!in) throw DataError("heightmap: malformed value for '" + key + "'");
  }
  if (sx < 1 || sy < 1 || !have_cs || !have_origin) throw DataError("heightmap: incomplete header");
  if (!(cs > 0.0)) throw DataError("heightmap: cell size must be positive");

  ElevationMap map(sx, sy, cs, Eigen::Vector2d(ox, oy));
  std::string tok;
  for (int ix = 0; ix < sx; ++ix) {
    for (int iy = 0; iy < sy; ++iy) {
      if (!(in >> tok)) throw DataError("heightmap: fewer values than width * height");
      const std::size_t i = map.index(ix, iy);
      if (tok == "?") {
        map.known[i] = 0;
        map.heights[i] = 0.0;
        continue;
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || !std::isfinite(v)) throw DataError("heightmap: bad height token '" + tok + "'");
      map.heights[i] = v;
      map.known[i] = 1;
    }
  }
  if (in >> tok) throw DataError("heightmap: more values than width * height");
  map.validate();
  return map;
}

void write_heightmap(const fs::path& path, const ElevationMap& map) { write_text(path, format_heightmap(map)); }
ElevationMap read_heightmap(const fs::path& path) { return parse_heightmap(read_text(path)); }

// ---------------------------------------------------------------------------
// PGM

void write_pgm(const fs::path& path, int size, const std::vector<std::uint8_t>& pixels) {
  if (size < 0 || pixels.size() != static_cast<std::size_t>(size) * size)
    throw std::invalid_argument("image buffer does not match its size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "P5\n" << size << " " << size << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

GrayImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const auto next_token = [&]() {
    std::string tok;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!tok.empty()) break;
        continue;
      }
      tok += ch;
    }
    return tok;
  };
  if (next_token() != "P5") throw DataError(path.string() + ": not a binary PGM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw DataError(path.string() + ": malformed PGM header");
  }
  if (w != h || w < 1) throw DataError(path.string() + ": expected a square image");
  if (maxval != 255) throw DataError(path.string() + ": expected maxval 255");
  GrayImage img(w);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw DataError(path.string() + ": truncated PGM");
  return img;
}

// ---------------------------------------------------------------------------
// key-value files

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    line = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
    std::string key, value;
    if (const auto eq = line.find('='); eq != std::string::npos) {
      key = line.substr(0, eq);
      value = line.substr(eq + 1);
    } else {
      const auto sp = line.find_first_of(" \t");
      if (sp == std::string::npos) throw DataError("line " + std::to_string(lineno) + ": missing value for '" + line + "'");
      key = line.substr(0, sp);
      value = line.substr(sp + 1);
    }
    const auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      if (a == std::string::npos) return std::string();
      return s.substr(a, s.find_last_not_of(" \t") - a + 1);
    };
    key = trim(key);
    value = trim(value);
    if (key.empty()) throw DataError("line " + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

KeyValues read_key_values(const fs::path& path) { return parse_key_values(read_text(path)); }

namespace {

double get_double(const KeyValues& kv, const std::string& key, double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != it->second.size() || !std::isfinite(v)) throw DataError("bad number for '" + key + "': " + it->second);
  return v;
}

std::string get_string(const KeyValues& kv, const std::string& key, const std::string& fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

}  // namespace

std::string format_leg(const LegModel& leg) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "name " << leg.name << "\n";
  out << "side " << to_string(leg.side) << "\n";
  out << "role " << to_string(leg.role) << "\n";
  out << "mount_x " << leg.mount.x() << "\n";
  out << "mount_y " << leg.mount.y() << "\n";
  out << "mount_z " << leg.mount.z() << "\n";
  out << "mount_yaw " << leg.mount_yaw << "\n";
  out << "hip_offset " << leg.hip_offset << "\n";
  out << "thigh " << leg.thigh << "\n";
  out << "shank " << leg.shank << "\n";
  const char* joints[3] = {"abduction", "flexion", "knee"};
  for (int j = 0; j < 3; ++j) {
    out << joints[j] << "_min " << leg.limits[j].lo << "\n";
    out << joints[j] << "_max " << leg.limits[j].hi << "\n";
  }
  out << "foot_radius " << leg.foot_radius << "\n";
  out << "link_radius " << leg.link_radius << "\n";
  out << "margin_scale " << leg.margin_scale << "\n";
  return out.str();
}

LegModel leg_from_key_values(const KeyValues& kv) {
  LegModel leg;
  try {
    leg.name = get_string(kv, "name", leg.name);
    leg.side = side_from_string(get_string(kv, "side", to_string(leg.side)));
    leg.role = role_from_string(get_string(kv, "role", to_string(leg.role)));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  leg.mount.x() = get_double(kv, "mount_x", leg.mount.x());
  leg.mount.y() = get_double(kv, "mount_y", leg.mount.y());
  leg.mount.z() = get_double(kv, "mount_z", leg.mount.z());
  leg.mount_yaw = get_double(kv, "mount_yaw", leg.mount_yaw);
  leg.hip_offset = get_double(kv, "hip_offset", leg.hip_offset);
  leg.thigh = get_double(kv, "thigh", leg.thigh);
  leg.shank = get_double(kv, "shank", leg.shank);
  const char* joints[3] = {"abduction", "flexion", "knee"};
  for (int j = 0; j < 3; ++j) {
    leg.limits[j].lo = get_double(kv, std::string(joints[j]) + "_min", leg.limits[j].lo);
    leg.limits[j].hi = get_double(kv, std::string(joints[j]) + "_max", leg.limits[j].hi);
  }
  leg.foot_radius = get_double(kv, "foot_radius", leg.foot_radius);
  leg.link_radius = get_double(kv, "link_radius", leg.link_radius);
  leg.margin_scale = get_double(kv, "margin_scale", leg.margin_scale);
  try {
    leg.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("leg '") + leg.name + "': " + e.what());
  }
  return leg;
}

void write_leg_file(const fs::path& path, const LegModel& leg) { write_text(path, format_leg(leg)); }
LegModel read_leg_file(const fs::path& path) { return leg_from_key_values(read_key_values(path)); }

fs::path write_robot_files(const fs::path& dir, const RobotModel& robot) {
  fs::create_directories(dir);
  std::ostringstream out;
  out << std::setprecision(17);
  out << "body_center_x " << robot.body.center.x() << "\n";
  out << "body_center_y " << robot.body.center.y() << "\n";
  out << "body_center_z " << robot.body.center.z() << "\n";
  out << "body_yaw " << robot.body.yaw << "\n";
  out << "body_half_x " << robot.body.half_extents.x() << "\n";
  out << "body_half_y " << robot.body.half_extents.y() << "\n";
  out << "body_half_z " << robot.body.half_extents.z() << "\n";
  for (int i = 0; i < kLegCount; ++i) {
    const std::string file = std::string("leg_") + leg_name(i) + ".cfg";
    out << "leg_" << leg_name(i) << " " << file << "\n";
    write_leg_file(dir / file, robot.legs[i]);
  }
  const fs::path path = dir / "robot.cfg";
  write_text(path, out.str());
  return path;
}

RobotModel read_robot_file(const fs::path& path) {
  const KeyValues kv = read_key_values(path);
  RobotModel robot = default_robot();
  robot.body.center.x() = get_double(kv, "body_center_x", robot.body.center.x());
  robot.body.center.y() = get_double(kv, "body_center_y", robot.body.center.y());
  robot.body.center.z() = get_double(kv, "body_center_z", robot.body.center.z());
  robot.body.yaw = get_double(kv, "body_yaw", robot.body.yaw);
  robot.body.half_extents.x() = get_double(kv, "body_half_x", robot.body.half_extents.x());
  robot.body.half_extents.y() = get_double(kv, "body_half_y", robot.body.half_extents.y());
  robot.body.half_extents.z() = get_double(kv, "body_half_z", robot.body.half_extents.z());
  for (int i = 0; i < kLegCount; ++i) {
    const std::string key = std::string("leg_") + leg_name(i);
    const auto it = kv.find(key);
    if (it == kv.end()) continue;
    robot.legs[i] = read_leg_file(path.parent_path() / it->second);
  }
  try {
    robot.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return robot;
}

// ---------------------------------------------------------------------------
// model container

namespace {

constexpr char kMagic[8] = {'F', 'H', 'M', 'O', 'D', 'E', 'L', '\0'};
constexpr std::uint32_t kModelVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : buf_(std::move(data)) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[pos_++])) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw DataError("model file is truncated");
  }
  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_model(const fs::path& path, const Model& model) {
  const Network<float> net(model.config);
  if (model.params.size() != net.parameter_count()) throw std::invalid_argument("model parameters do not match its config");
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kModelVersion);
  const NetConfig& c = model.config;
  w.i32(c.input_size);
  w.i32(c.classes);
  for (const int x : c.widths) w.i32(x);
  w.i32(c.stage2_blocks);
  w.i32(c.stage3_blocks);
  w.u32(static_cast<std::uint32_t>(c.dilations.size()));
  for (const int d : c.dilations) w.i32(d);
  w.i32(c.decoder1_blocks);
  w.i32(c.decoder2_blocks);
  w.u8(model.role == Role::front ? 0 : 1);
  w.u32(static_cast<std::uint32_t>(net.tensors().size()));
  for (const auto& t : net.tensors()) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (const int d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < t.size; ++i) w.f32(model.params[t.offset + i]);
  }
  w.u32(static_cast<std::uint32_t>(model.class_weights.size()));
  for (const double x : model.class_weights) w.f64(x);
  write_text(path, w.data());
}

Model read_model(const fs::path& path) {
  Reader r(read_text(path));
  if (r.str(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw DataError(path.string() + ": not a model file");
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) throw DataError(path.string() + ": unsupported model version " + std::to_string(version));
  Model model;
  NetConfig& c = model.config;
  c.input_size = r.i32();
  c.classes = r.i32();
  for (int& x : c.widths) x = r.i32();
  c.stage2_blocks = r.i32();
  c.stage3_blocks = r.i32();
  const std::uint32_t nd = r.u32();
  if (nd > 1024) throw DataError(path.string() + ": implausible dilation count");
  c.dilations.resize(nd);
  for (int& d : c.dilations) d = r.i32();
  c.decoder1_blocks = r.i32();
  c.decoder2_blocks = r.i32();
  const std::uint8_t role = r.u8();
  if (role > 1) throw DataError(path.string() + ": bad leg role");
  model.role = role == 0 ? Role::front : Role::rear;

  std::unique_ptr<Network<float>> net;
  try {
    net = std::make_unique<Network<float>>(c);
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  model.params.assign(net->parameter_count(), 0.0f);
  const std::uint32_t nt = r.u32();
  if (nt != net->tensors().size()) throw DataError(path.string() + ": tensor count does not match the config");
  for (const auto& t : net->tensors()) {
    const std::string name = r.str(r.u32());
    if (name != t.name) throw DataError(path.string() + ": expected tensor " + t.name + ", found " + name);
    const std::uint32_t rank = r.u32();
    if (rank != t.shape.size()) throw DataError(path.string() + ": rank mismatch for " + name);
    for (const int d : t.shape)
      if (r.u32() != static_cast<std::uint32_t>(d)) throw DataError(path.string() + ": shape mismatch for " + name);
    for (std::size_t i = 0; i < t.size; ++i) model.params[t.offset + i] = r.f32();
  }
  const std::uint32_t nw = r.u32();
  if (nw != model.class_weights.size()) throw DataError(path.string() + ": class weight count mismatch");
  for (double& x : model.class_weights) x = r.f64();
  if (!r.done()) throw DataError(path.string() + ": trailing bytes after model data");
  return model;
}

}  // namespace foothold
