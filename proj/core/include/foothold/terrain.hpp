#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace foothold {

struct CellIndex {
  int x = 0;
  int y = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/**
 * Uniform height grid anchored in the world frame.
 *
 * Cell (ix, iy) is centered at origin + (ix, iy) * cell_size. Storage is
 * row-major with x as the row index: heights[ix * size_y + iy]. Cells whose
 * `known` flag is zero carry no height information.
 */
struct ElevationMap {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double cell_size = 0.02;
  int size_x = 0;
  int size_y = 0;
  std::vector<double> heights;
  std::vector<std::uint8_t> known;

  ElevationMap() = default;
  ElevationMap(int size_x, int size_y, double cell_size,
               const Eigen::Vector2d& origin, double fill = 0.0);

  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(ix) * static_cast<std::size_t>(size_y) +
           static_cast<std::size_t>(iy);
  }
  bool contains(int ix, int iy) const {
    return ix >= 0 && iy >= 0 && ix < size_x && iy < size_y;
  }
  double height(int ix, int iy) const { return heights[index(ix, iy)]; }
  double& height(int ix, int iy) { return heights[index(ix, iy)]; }
  bool is_known(int ix, int iy) const { return known[index(ix, iy)] != 0; }

  Eigen::Vector2d cell_center(int ix, int iy) const {
    return origin + cell_size * Eigen::Vector2d(ix, iy);
  }
  /// Cell containing a world point; nullopt outside the grid.
  std::optional<CellIndex> cell_of(const Eigen::Vector2d& p) const;

  /// Throws DataError when the invariants do not hold.
  void validate() const;
};

/**
 * Square local map. Rows run along the patch x axis, columns along its y
 * axis; the axes are rotated by `yaw` with respect to the world. Cell (r, c)
 * sits at offset ((r - (size-1)/2), (c - (size-1)/2)) * cell_size from
 * `center_world`, so odd sizes are centered on a cell and even sizes on a
 * cell corner.
 */
struct Patch {
  int size = 0;
  double cell_size = 0.02;
  std::vector<double> heights;
  std::vector<std::uint8_t> known;
  Eigen::Vector3d center_world = Eigen::Vector3d::Zero();
  double yaw = 0.0;

  Patch() = default;
  Patch(int size, double cell_size);

  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(size) +
           static_cast<std::size_t>(c);
  }
  double height(int r, int c) const { return heights[index(r, c)]; }
  double& height(int r, int c) { return heights[index(r, c)]; }
  bool is_known(int r, int c) const { return known[index(r, c)] != 0; }

  /// Offset of the cell center from the patch center, in patch axes.
  Eigen::Vector2d local_offset(int r, int c) const {
    const double half = 0.5 * (size - 1);
    return cell_size * Eigen::Vector2d(r - half, c - half);
  }
  /// World xy of the cell center.
  Eigen::Vector2d cell_world(int r, int c) const;
};

/// 8-bit square image, row-major.
struct GrayImage {
  int size = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  explicit GrayImage(int size, std::uint8_t fill = 0)
      : size(size), pixels(static_cast<std::size_t>(size) * size, fill) {}

  std::uint8_t at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * size + c]; }
  std::uint8_t& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * size + c]; }
};

enum class TerrainKind { flat, slope, stairs, boxes, rough };

/// Parameters for the synthetic terrain generator. Only the fields of the
/// selected kind are read.
struct TerrainSpec {
  TerrainKind kind = TerrainKind::flat;
  std::uint64_t seed = 0;

  // slope: plane rising along the azimuth direction
  double inclination = 0.2;  // rad
  double azimuth = 0.0;      // rad

  // stairs: ascending along +x
  double step_rise = 0.1;  // m
  double step_run = 0.2;   // m

  // boxes: axis-aligned blocks on flat ground
  int box_count = 60;
  double box_height_min = 0.03;
  double box_height_max = 0.20;
  double box_extent_min = 0.10;  // full side length, m
  double box_extent_max = 0.50;

  // rough: fractal value noise, |h| <= rough_amplitude
  double rough_amplitude = 0.06;
  int rough_octaves = 4;
  double rough_wavelength = 0.8;  // m, coarsest octave
  double rough_persistence = 0.5;

  /// Throws std::invalid_argument for non-positive dimensional parameters.
  void validate() const;
};

const char* to_string(TerrainKind kind);
TerrainKind terrain_kind_from_string(const std::string& name);

/// Inclusive height range the generator guarantees for a map of the given size.
std::pair<double, double> terrain_height_bounds(const TerrainSpec& spec, int size_x, int size_y,
                                                double cell_size = 0.02);

/// Synthetic map centered on the world origin. Requires size_x, size_y >= 51.
ElevationMap generate_terrain(const TerrainSpec& spec, int size_x, int size_y,
                              double cell_size = 0.02);

/// Cut a size x size world-aligned patch centered on the map cell containing
/// `center_world`. Cells beyond the map edge are marked unknown. Throws
/// std::out_of_range when the center lies outside the map.
Patch extract_patch(const ElevationMap& map, const Eigen::Vector2d& center_world, int size);

inline constexpr int kExtractSize = 51;
inline constexpr int kLocalSize = 40;

/**
 * Resample a 51x51 patch into a 40x40 patch whose axes are rotated by `yaw`.
 * Output cell (r, c) reads the input at center + R(yaw) * (r - 20, c - 20)
 * with bilinear interpolation; samples that touch an unknown or missing cell
 * are unknown. Multiples of pi/2 are resolved as exact cell permutations.
 */
Patch rotate_crop(const Patch& patch51, double yaw);

/// Mirror image about the world x axis: columns reversed, center y and yaw negated.
Patch mirrored(const Patch& patch);

inline constexpr double kDefaultNormFactor = 0.85;

/// Pixel = round(clamp((leg_origin_z - h) / norm_factor, 0, 1) * 255);
/// unknown cells map to 255.
GrayImage patch_to_image(const Patch& patch, double leg_origin_z,
                         double norm_factor = kDefaultNormFactor);

}  // namespace foothold
