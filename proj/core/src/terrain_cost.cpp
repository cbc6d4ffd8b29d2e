#include "foothold/terrain_cost.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace foothold {

void TerrainCostParams::validate() const {
  if (window < 3 || window % 2 == 0) throw std::invalid_argument("terrain cost window must be odd and >= 3");
  if (!(slope_max > 0.0) || !(rough_max > 0.0) || !(edge_max > 0.0))
    throw std::invalid_argument("terrain cost maxima must be positive");
  if (w_slope < 0.0 || w_rough < 0.0 || w_edge < 0.0)
    throw std::invalid_argument("terrain cost weights must be non-negative");
  if (std::abs(w_slope + w_rough + w_edge - 1.0) > 1e-9)
    throw std::invalid_argument("terrain cost weights must sum to 1");
}

TerrainCostTerms local_terrain_cost_terms(const Patch& patch, int r, int c,
                                          const TerrainCostParams& params) {
  const int h = params.window / 2;
  TerrainCostTerms worst;
  if (r - h < 0 || c - h < 0 || r + h >= patch.size || c + h >= patch.size) return worst;
  for (int i = -h; i <= h; ++i)
    for (int j = -h; j <= h; ++j)
      if (!patch.is_known(r + i, c + j)) return worst;

  const auto z = [&](int i, int j) { return patch.height(r + i, c + j); };

  // Row sum over the column offsets j = -h..h, built from mirror pairs.
  const auto row_sum = [&](auto&& f, int i) {
    double s = f(i, 0);
    for (int j = 1; j <= h; ++j) s += f(i, -j) + f(i, j);
    return s;
  };

  const double n = static_cast<double>(params.window) * params.window;
  double mean = 0.0;
  for (int i = -h; i <= h; ++i) mean += row_sum(z, i);
  mean /= n;

  // Least-squares plane over integer offsets; the symmetric grid decouples
  // the normal equations.
  double sxz = 0.0;
  double syz = 0.0;
  double sxx = 0.0;
  for (int i = -h; i <= h; ++i) {
    sxz += i * (row_sum(z, i) - params.window * mean);
    double anti = 0.0;
    for (int j = 1; j <= h; ++j) anti += j * (z(i, j) - z(i, -j));
    syz += anti;
  }
  for (int k = -h; k <= h; ++k) sxx += static_cast<double>(k) * k;
  sxx *= params.window;
  const double gx = sxz / sxx;
  const double gy = syz / sxx;  // same second moment along both axes

  const double grade = std::hypot(gx, gy) / patch.cell_size;
  const double slope = std::atan(grade);

  double ss = 0.0;
  for (int i = -h; i <= h; ++i) {
    ss += row_sum([&](int a, int b) {
      const double e = z(a, b) - mean - (gx * a + gy * b);
      return e * e;
    }, i);
  }
  const double rms = std::sqrt(ss / n);

  double curvature = 0.0;
  for (int i = -h; i <= h; ++i) {
    for (int j = -h; j <= h; ++j) {
      if (i > -h && i < h) curvature = std::max(curvature, std::abs((z(i - 1, j) + z(i + 1, j)) - 2.0 * z(i, j)));
      if (j > -h && j < h) curvature = std::max(curvature, std::abs((z(i, j - 1) + z(i, j + 1)) - 2.0 * z(i, j)));
    }
  }

  TerrainCostTerms t;
  t.slope = std::clamp(slope / params.slope_max, 0.0, 1.0);
  t.roughness = std::clamp(rms / params.rough_max, 0.0, 1.0);
  t.edge = std::clamp(curvature / params.edge_max, 0.0, 1.0);
  t.cost = std::clamp(params.w_slope * t.slope + params.w_rough * t.roughness + params.w_edge * t.edge, 0.0, 1.0);
  return t;
}

}  // namespace foothold
