#include "foothold/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "foothold/errors.hpp"
#include "foothold/random.hpp"

namespace foothold {

ElevationMap::ElevationMap(int size_x_, int size_y_, double cell_size_,
                           const Eigen::Vector2d& origin_, double fill)
    : origin(origin_),
      cell_size(cell_size_),
      size_x(size_x_),
      size_y(size_y_),
      heights(static_cast<std::size_t>(std::max(size_x_, 0)) * std::max(size_y_, 0), fill),
      known(heights.size(), 1) {}

std::optional<CellIndex> ElevationMap::cell_of(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d rel = (p - origin) / cell_size;
  const double fx = std::floor(rel.x() + 0.5);
  const double fy = std::floor(rel.y() + 0.5);
  if (!std::isfinite(fx) || !std::isfinite(fy)) return std::nullopt;
  if (fx < 0 || fy < 0 || fx >= size_x || fy >= size_y) return std::nullopt;
  return CellIndex{static_cast<int>(fx), static_cast<int>(fy)};
}

void ElevationMap::validate() const {
  if (size_x < 1 || size_y < 1) throw DataError("elevation map must have at least one cell");
  if (!(cell_size > 0.0) || !std::isfinite(cell_size))
    throw DataError("elevation map cell size must be positive");
  const auto n = static_cast<std::size_t>(size_x) * size_y;
  if (heights.size() != n || known.size() != n)
    throw DataError("elevation map storage does not match its dimensions");
  for (std::size_t i = 0; i < n; ++i)
    if (known[i] && !std::isfinite(heights[i]))
      throw DataError("non-finite height in a known cell");
}

Patch::Patch(int size_, double cell_size_)
    : size(size_),
      cell_size(cell_size_),
      heights(static_cast<std::size_t>(size_) * size_, 0.0),
      known(heights.size(), 0) {}

Eigen::Vector2d Patch::cell_world(int r, int c) const {
  const Eigen::Vector2d off = local_offset(r, c);
  const double cy = std::cos(yaw);
  const double sy = std::sin(yaw);
  return center_world.head<2>() + Eigen::Vector2d(cy * off.x() - sy * off.y(),
                                                  sy * off.x() + cy * off.y());
}

// ─── Terrain generation ─────────────────────────────────────────────────────

const char* to_string(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::flat: return "flat";
    case TerrainKind::slope: return "slope";
    case TerrainKind::stairs: return "stairs";
    case TerrainKind::boxes: return "boxes";
    case TerrainKind::rough: return "rough";
  }
  return "flat";
}

TerrainKind terrain_kind_from_string(const std::string& name) {
  if (name == "flat") return TerrainKind::flat;
  if (name == "slope") return TerrainKind::slope;
  if (name == "stairs") return TerrainKind::stairs;
  if (name == "boxes") return TerrainKind::boxes;
  if (name == "rough") return TerrainKind::rough;
  throw std::invalid_argument("unknown terrain kind '" + name + "'");
}

void TerrainSpec::validate() const {
  switch (kind) {
    case TerrainKind::flat:
      break;
    case TerrainKind::slope:
      if (!(std::abs(inclination) < 0.5 * std::numbers::pi))
        throw std::invalid_argument("slope inclination must lie in (-pi/2, pi/2)");
      break;
    case TerrainKind::stairs:
      if (!(step_rise > 0.0)) throw std::invalid_argument("stairs rise must be positive");
      if (!(step_run > 0.0)) throw std::invalid_argument("stairs run must be positive");
      break;
    case TerrainKind::boxes:
      if (box_count < 0) throw std::invalid_argument("box count must be non-negative");
      if (!(box_height_min > 0.0) || box_height_max < box_height_min)
        throw std::invalid_argument("box heights must be positive with min <= max");
      if (!(box_extent_min > 0.0) || box_extent_max < box_extent_min)
        throw std::invalid_argument("box extents must be positive with min <= max");
      break;
    case TerrainKind::rough:
      if (rough_octaves < 1) throw std::invalid_argument("rough terrain needs at least one octave");
      if (!(rough_amplitude > 0.0)) throw std::invalid_argument("rough amplitude must be positive");
      if (!(rough_wavelength > 0.0)) throw std::invalid_argument("rough wavelength must be positive");
      if (!(rough_persistence > 0.0)) throw std::invalid_argument("rough persistence must be positive");
      break;
  }
}

namespace {

Eigen::Vector2d centered_origin(int size_x, int size_y, double cell_size) {
  return -0.5 * cell_size * Eigen::Vector2d(size_x - 1, size_y - 1);
}

// Lattice value in [-1, 1] for integer coordinates, hashed from the seed.
double lattice_value(std::uint64_t seed, int octave, std::int64_t i, std::int64_t j) {
  std::uint64_t h = splitmix64(seed ^ (static_cast<std::uint64_t>(octave) * 0xD6E8FEB86659FD93ull));
  h = splitmix64(h ^ static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ull);
  h = splitmix64(h ^ static_cast<std::uint64_t>(j) * 0xC2B2AE3D27D4EB4Full);
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint64_t seed, int octave, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto i = static_cast<std::int64_t>(fx);
  const auto j = static_cast<std::int64_t>(fy);
  const double tx = smooth(x - fx);
  const double ty = smooth(y - fy);
  const double v00 = lattice_value(seed, octave, i, j);
  const double v10 = lattice_value(seed, octave, i + 1, j);
  const double v01 = lattice_value(seed, octave, i, j + 1);
  const double v11 = lattice_value(seed, octave, i + 1, j + 1);
  const double a = v00 + (v10 - v00) * tx;
  const double b = v01 + (v11 - v01) * tx;
  return a + (b - a) * ty;
}

}  // namespace

std::pair<double, double> terrain_height_bounds(const TerrainSpec& spec, int size_x, int size_y,
                                                double cell_size) {
  switch (spec.kind) {
    case TerrainKind::flat:
      return {0.0, 0.0};
    case TerrainKind::slope: {
      const double half_diag = 0.5 * cell_size * std::hypot(size_x - 1, size_y - 1);
      const double b = std::abs(std::tan(spec.inclination)) * half_diag;
      return {-b, b};
    }
    case TerrainKind::stairs:
      return {0.0, spec.step_rise * std::floor(size_x * cell_size / spec.step_run)};
    case TerrainKind::boxes:
      return {0.0, spec.box_height_max};
    case TerrainKind::rough:
      return {-spec.rough_amplitude, spec.rough_amplitude};
  }
  return {0.0, 0.0};
}

ElevationMap generate_terrain(const TerrainSpec& spec, int size_x, int size_y, double cell_size) {
  if (size_x < kExtractSize || size_y < kExtractSize)
    throw std::invalid_argument("terrain maps need at least 51 cells per side");
  if (!(cell_size > 0.0)) throw std::invalid_argument("cell size must be positive");
  spec.validate();

  ElevationMap map(size_x, size_y, cell_size, centered_origin(size_x, size_y, cell_size));

  switch (spec.kind) {
    case TerrainKind::flat:
      break;

    case TerrainKind::slope: {
      const double grade = std::tan(spec.inclination);
      const Eigen::Vector2d dir(std::cos(spec.azimuth), std::sin(spec.azimuth));
      for (int ix = 0; ix < size_x; ++ix)
        for (int iy = 0; iy < size_y; ++iy)
          map.height(ix, iy) = grade * dir.dot(map.cell_center(ix, iy));
      break;
    }

    case TerrainKind::stairs: {
      // Cell-center coordinate measured from the lower map edge keeps the
      // step boundaries away from floating-point ties.
      for (int ix = 0; ix < size_x; ++ix) {
        const double h = spec.step_rise * std::floor((ix + 0.5) * cell_size / spec.step_run);
        for (int iy = 0; iy < size_y; ++iy) map.height(ix, iy) = h;
      }
      break;
    }

    case TerrainKind::boxes: {
      auto rng = derive_stream(spec.seed, 0);
      const double ext_x = size_x * cell_size;
      const double ext_y = size_y * cell_size;
      for (int b = 0; b < spec.box_count; ++b) {
        const double cx = uniform(rng, 0.0, ext_x);
        const double cy = uniform(rng, 0.0, ext_y);
        const double hx = 0.5 * uniform(rng, spec.box_extent_min, spec.box_extent_max);
        const double hy = 0.5 * uniform(rng, spec.box_extent_min, spec.box_extent_max);
        const double h = uniform(rng, spec.box_height_min, spec.box_height_max);
        const int x0 = std::max(0, static_cast<int>(std::ceil((cx - hx) / cell_size - 0.5)));
        const int x1 = std::min(size_x - 1, static_cast<int>(std::floor((cx + hx) / cell_size - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::ceil((cy - hy) / cell_size - 0.5)));
        const int y1 = std::min(size_y - 1, static_cast<int>(std::floor((cy + hy) / cell_size - 0.5)));
        for (int ix = x0; ix <= x1; ++ix)
          for (int iy = y0; iy <= y1; ++iy) map.height(ix, iy) = std::max(map.height(ix, iy), h);
      }
      break;
    }

    case TerrainKind::rough: {
      double norm = 0.0;
      double amp = 1.0;
      for (int o = 0; o < spec.rough_octaves; ++o, amp *= spec.rough_persistence) norm += amp;
      for (int ix = 0; ix < size_x; ++ix) {
        for (int iy = 0; iy < size_y; ++iy) {
          const double x = ix * cell_size;
          const double y = iy * cell_size;
          double sum = 0.0;
          double a = 1.0;
          double wavelength = spec.rough_wavelength;
          for (int o = 0; o < spec.rough_octaves; ++o) {
            sum += a * value_noise(spec.seed, o, x / wavelength, y / wavelength);
            a *= spec.rough_persistence;
            wavelength *= 0.5;
          }
          map.height(ix, iy) = spec.rough_amplitude * std::clamp(sum / norm, -1.0, 1.0);
        }
      }
      break;
    }
  }
  return map;
}

// ─── Patches ────────────────────────────────────────────────────────────────

Patch extract_patch(const ElevationMap& map, const Eigen::Vector2d& center_world, int size) {
  if (size < 1) throw std::invalid_argument("patch size must be positive");
  const auto center = map.cell_of(center_world);
  if (!center) throw std::out_of_range("patch center lies outside the elevation map");

  Patch patch(size, map.cell_size);
  const int half = (size - 1) / 2;
  const int x0 = center->x - half;
  const int y0 = center->y - half;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const int ix = x0 + r;
      const int iy = y0 + c;
      if (!map.contains(ix, iy) || !map.is_known(ix, iy)) continue;
      patch.height(r, c) = map.height(ix, iy);
      patch.known[patch.index(r, c)] = 1;
    }
  }
  // Geometric center: the center cell for odd sizes, its corner toward the
  // origin for even sizes (consistent with Patch::local_offset).
  const double shift = (size % 2 == 0) ? 0.5 : 0.0;
  const Eigen::Vector2d c2 = map.cell_center(center->x, center->y) - shift * map.cell_size * Eigen::Vector2d::Ones();
  const double cz = map.is_known(center->x, center->y) ? map.height(center->x, center->y) : 0.0;
  patch.center_world = Eigen::Vector3d(c2.x(), c2.y(), cz);
  patch.yaw = 0.0;
  return patch;
}

namespace {

// Returns k in {0,1,2,3} when yaw is a multiple of pi/2 within tolerance.
std::optional<int> quarter_turns(double yaw) {
  const double q = yaw / (0.5 * std::numbers::pi);
  const double k = std::round(q);
  if (std::abs(q - k) > 1e-9) return std::nullopt;
  return static_cast<int>(((static_cast<long long>(k) % 4) + 4) % 4);
}

}  // namespace

Patch rotate_crop(const Patch& in, double yaw) {
  if (in.size != kExtractSize)
    throw std::invalid_argument("rotate_crop expects a 51x51 input patch");

  constexpr int n = kLocalSize;
  constexpr int center = (kExtractSize - 1) / 2;
  constexpr int half = n / 2;
  Patch out(n, in.cell_size);
  out.yaw = in.yaw + yaw;

  const double cy = std::cos(yaw);
  const double sy = std::sin(yaw);

  if (const auto k = quarter_turns(yaw)) {
    // Exact rotation by k quarter turns: (a, b) -> R^k (a, b).
    static constexpr int cs[4] = {1, 0, -1, 0};
    static constexpr int sn[4] = {0, 1, 0, -1};
    const int ck = cs[*k];
    const int sk = sn[*k];
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const int a = r - half;
        const int b = c - half;
        const int ir = center + ck * a - sk * b;
        const int ic = center + sk * a + ck * b;
        if (!in.is_known(ir, ic)) continue;
        out.height(r, c) = in.height(ir, ic);
        out.known[out.index(r, c)] = 1;
      }
    }
  } else {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const double a = r - half;
        const double b = c - half;
        const double pr = center + cy * a - sy * b;
        const double pc = center + sy * a + cy * b;
        const double fr = std::floor(pr);
        const double fc = std::floor(pc);
        const double tr = pr - fr;
        const double tc = pc - fc;
        const int r0 = static_cast<int>(fr);
        const int c0 = static_cast<int>(fc);
        double acc = 0.0;
        bool ok = true;
        for (int dr = 0; dr < 2 && ok; ++dr) {
          const double wr = dr ? tr : 1.0 - tr;
          if (wr == 0.0) continue;
          for (int dc = 0; dc < 2; ++dc) {
            const double wc = dc ? tc : 1.0 - tc;
            if (wc == 0.0) continue;
            const int rr = r0 + dr;
            const int cc = c0 + dc;
            if (rr < 0 || cc < 0 || rr >= in.size || cc >= in.size || !in.is_known(rr, cc)) {
              ok = false;
              break;
            }
            acc += wr * wc * in.height(rr, cc);
          }
        }
        if (!ok) continue;
        out.height(r, c) = acc;
        out.known[out.index(r, c)] = 1;
      }
    }
  }

  // Output cell (r, c) sits at input offset R * (r - 20, c - 20); its
  // geometric center is therefore R * (-0.5, -0.5) cells from the input center.
  double ck = cy;
  double sk = sy;
  if (const auto k = quarter_turns(yaw)) {
    static constexpr double cs[4] = {1, 0, -1, 0};
    static constexpr double sn[4] = {0, 1, 0, -1};
    ck = cs[*k];
    sk = sn[*k];
  }
  const double h = -0.5 * in.cell_size;
  const Eigen::Vector2d local(ck * h - sk * h, sk * h + ck * h);
  const double cwy = std::cos(in.yaw);
  const double swy = std::sin(in.yaw);
  const Eigen::Vector2d world(cwy * local.x() - swy * local.y(), swy * local.x() + cwy * local.y());
  out.center_world = in.center_world + Eigen::Vector3d(world.x(), world.y(), 0.0);
  return out;
}

Patch mirrored(const Patch& patch) {
  Patch out = patch;
  for (int r = 0; r < patch.size; ++r)
    for (int c = 0; c < patch.size; ++c) {
      out.height(r, c) = patch.height(r, patch.size - 1 - c);
      out.known[out.index(r, c)] = patch.known[patch.index(r, patch.size - 1 - c)];
    }
  out.center_world.y() = -patch.center_world.y();
  out.yaw = -patch.yaw;
  return out;
}

GrayImage patch_to_image(const Patch& patch, double leg_origin_z, double norm_factor) {
  if (!(norm_factor > 0.0)) throw std::invalid_argument("normalization factor must be positive");
  GrayImage img(patch.size, 255);
  for (int r = 0; r < patch.size; ++r) {
    for (int c = 0; c < patch.size; ++c) {
      if (!patch.is_known(r, c)) continue;
      const double d = (leg_origin_z - patch.height(r, c)) / norm_factor;
      const double v = std::clamp(d, 0.0, 1.0) * 255.0;
      img.at(r, c) = static_cast<std::uint8_t>(std::floor(v + 0.5));
    }
  }
  return img;
}

}  // namespace foothold
