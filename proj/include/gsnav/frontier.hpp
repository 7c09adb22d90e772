#pragma once

#include "gsnav/fmm.hpp"
#include "gsnav/occupancy.hpp"

#include <optional>
#include <unordered_set>
#include <vector>

namespace gsnav {

struct Frontier {
  std::vector<Cell> cells;
  Vec2 centroid = Vec2::Zero();
  int min_index = 0;  // smallest linear cell index, used as the final tie-break

  int size() const { return static_cast<int>(cells.size()); }
};

// FREE cells with a 4-adjacent UNKNOWN cell.
bool is_frontier_cell(const OccupancyMap& map, Cell c);

// 8-connected components of frontier cells with at least `min_cells` cells.
std::vector<Frontier> detect_frontiers(const OccupancyMap& map, int min_cells = 5);

struct FrontierChoice {
  int index = -1;       // into the frontier list
  Cell target;          // nearest reachable frontier cell
  double distance = 0;  // geodesic distance from the agent (m)
};

// Nearest frontier by geodesic distance; ties go to the larger frontier, then
// to the lowest cell index. nullopt when no frontier is reachable, which
// signals that exploration is complete.
std::optional<FrontierChoice> select_frontier(const OccupancyMap& map, const Pose& agent,
                                              const std::vector<Frontier>& frontiers);
std::optional<FrontierChoice> select_frontier(const DistanceField& from_agent,
                                              const std::vector<Frontier>& frontiers,
                                              const std::unordered_set<int>* excluded = nullptr);

}  // namespace gsnav
