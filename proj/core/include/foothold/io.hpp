#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "foothold/labeler.hpp"
#include "foothold/robot.hpp"
#include "foothold/terrain.hpp"
#include "foothold/train.hpp"

namespace foothold {

/**
 * Heightmap text format:
 *
 *   width <size_x>
 *   height <size_y>
 *   cell_size <m>
 *   origin <x> <y>
 *   <size_y values for ix = 0>
 *   ...
 *
 * One line per x row, values separated by spaces, "?" for unknown cells.
 * Heights are printed with 17 significant digits so they round-trip.
 */
void write_heightmap(const std::filesystem::path& path, const ElevationMap& map);
ElevationMap read_heightmap(const std::filesystem::path& path);
std::string format_heightmap(const ElevationMap& map);
ElevationMap parse_heightmap(const std::string& text);

/// Binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, int size, const std::vector<std::uint8_t>& pixels);
inline void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  write_pgm(path, image.size, image.pixels);
}
inline void write_pgm(const std::filesystem::path& path, const ByteMap& map) {
  write_pgm(path, map.size, map.values);
}
/// Square images only.
GrayImage read_pgm(const std::filesystem::path& path);

/// `key value` or `key = value` lines; '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);

std::string format_leg(const LegModel& leg);
LegModel leg_from_key_values(const KeyValues& kv);
void write_leg_file(const std::filesystem::path& path, const LegModel& leg);
LegModel read_leg_file(const std::filesystem::path& path);

/**
 * Robot description: body box keys plus one `leg_<ID> <file>` entry per leg,
 * resolved relative to the robot file. write_robot_files writes robot.cfg and
 * leg_<ID>.cfg into `dir` and returns the robot.cfg path.
 */
std::filesystem::path write_robot_files(const std::filesystem::path& dir, const RobotModel& robot);
RobotModel read_robot_file(const std::filesystem::path& path);

/**
 * Model container, little-endian:
 *   "FHMODEL\0", u32 version, config, u8 role,
 *   u32 tensor count, per tensor: u32 name length, name, u32 rank, u32 dims, f32 values,
 *   u32 class count, f64 class weights.
 */
void write_model(const std::filesystem::path& path, const Model& model);
Model read_model(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace foothold
