#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "foothold/labeler.hpp"
#include "foothold/robot.hpp"
#include "foothold/terrain.hpp"
#include "foothold/train.hpp"

namespace foothold {

struct SamplerConfig {
  std::vector<TerrainSpec> terrains;  // empty means default_terrains(seed)
  int map_size = 300;                 // cells per side
  double cell_size = 0.02;
  double hip_height_min = 0.35;  // hip above the ground below it, m
  double hip_height_max = 0.65;
  int samples = 2000;
  std::uint64_t seed = 1;
  Role role = Role::front;
  double norm_factor = kDefaultNormFactor;
  int max_attempts = 200;  // pose draws per sample before giving up
  int threads = 1;

  void validate() const;
};

/// One map of each kind.
std::vector<TerrainSpec> default_terrains(std::uint64_t seed);

struct SampleInfo {
  int terrain = 0;
  int yaw_index = 0;  // yaw = yaw_index * pi / 2
  double hip_height = 0.0;
  int attempts = 0;
  RobotPose pose;
};

struct LabeledSample {
  TrainingPair pair;
  SampleInfo info;
};

struct Dataset {
  SamplerConfig config;
  LabelerParams params;
  RobotModel robot;
  std::vector<LabeledSample> samples;
  ClassHistogram histogram{};
  ClassWeights weights;

  std::vector<TrainingPair> pairs() const;
};

std::vector<ElevationMap> build_terrains(const SamplerConfig& config);

/**
 * Standing pose with the base at `base_xy` and heading `yaw`, raised so the
 * hip of `reference_leg` sits `hip_height` above the ground below it. Every
 * other foot rests on the ground straight below its hip-offset point, solved
 * by IK. nullopt when the ground there is unknown or a support foot is out
 * of reach.
 */
std::optional<RobotPose> make_stance(const ElevationMap& map, const RobotModel& robot,
                                     const Eigen::Vector2d& base_xy, double yaw, double hip_height,
                                     int reference_leg);

/**
 * Draw sample `index`: terrain, yaw from the four orientations, horizontal
 * position and hip height, then support-foot joints by IK (redrawn until all
 * support legs reach the ground). Uses only derive_stream(seed, index).
 */
LabeledSample generate_sample(const std::vector<ElevationMap>& maps, const SamplerConfig& config,
                              const RobotModel& robot, const LabelerParams& params, int index);

/// All samples; output order and content do not depend on config.threads.
Dataset generate_dataset(const SamplerConfig& config, const RobotModel& robot = default_robot(),
                         const LabelerParams& params = {});

/// manifest.json, robot/leg files and input_XXXXX.pgm / label_XXXXX.pgm pairs.
void write_dataset(const std::filesystem::path& dir, const Dataset& data);
/// Reads pairs, histogram, weights and sample poses back.
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace foothold
