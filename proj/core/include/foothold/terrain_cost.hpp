#pragma once

#include "foothold/terrain.hpp"

namespace foothold {

struct TerrainCostParams {
  int window = 5;           // odd, >= 3
  double slope_max = 0.7;   // rad
  double rough_max = 0.02;  // m, RMS residual of the plane fit
  double edge_max = 0.04;   // m, largest second difference
  double w_slope = 0.4;
  double w_rough = 0.3;
  double w_edge = 0.3;

  void validate() const;
};

struct TerrainCostTerms {
  double slope = 1.0;
  double roughness = 1.0;
  double edge = 1.0;
  double cost = 1.0;
};

/**
 * Shape cost in [0, 1] of the patch cell (r, c), from the window centered on it:
 *  - slope: inclination of the least-squares plane over slope_max,
 *  - roughness: RMS residual of that plane over rough_max,
 *  - edge: largest |h[i-1] + h[i+1] - 2 h[i]| along rows or columns over edge_max,
 * each clamped to [0, 1] and mixed with the weights. A window that leaves the
 * patch or holds an unknown cell costs 1.
 *
 * Sums over the column axis are formed from mirror pairs, so a horizontally
 * flipped window yields the bit-identical cost.
 */
TerrainCostTerms local_terrain_cost_terms(const Patch& patch, int r, int c,
                                          const TerrainCostParams& params = {});

inline double local_terrain_cost(const Patch& patch, int r, int c,
                                 const TerrainCostParams& params = {}) {
  return local_terrain_cost_terms(patch, r, c, params).cost;
}

}  // namespace foothold
