#include "gsnav/frontier.hpp"

#include <algorithm>
#include <limits>

namespace gsnav {

bool is_frontier_cell(const OccupancyMap& map, Cell c) {
  if (!map.in_bounds(c) || map.at(c) != CellState::Free) return false;
  constexpr Cell kN4[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (const Cell& o : kN4) {
    const Cell n{c.col + o.col, c.row + o.row};
    if (map.in_bounds(n) && map.at(n) == CellState::Unknown) return true;
  }
  return false;
}

std::vector<Frontier> detect_frontiers(const OccupancyMap& map, int min_cells) {
  const int n = map.width() * map.height();
  std::vector<std::uint8_t> flag(n, 0), seen(n, 0);
  for (int i = 0; i < n; ++i) flag[i] = is_frontier_cell(map, map.cell(i));
  std::vector<Frontier> out;
  std::vector<int> stack;
  for (int i = 0; i < n; ++i) {
    if (!flag[i] || seen[i]) continue;
    Frontier f;
    f.min_index = i;
    stack.assign(1, i);
    seen[i] = 1;
    Vec2 sum = Vec2::Zero();
    while (!stack.empty()) {
      const int k = stack.back();
      stack.pop_back();
      const Cell c = map.cell(k);
      f.cells.push_back(c);
      sum += map.center(c);
      f.min_index = std::min(f.min_index, k);
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const Cell nb{c.col + dc, c.row + dr};
          if (!map.in_bounds(nb)) continue;
          const int j = map.index(nb);
          if (flag[j] && !seen[j]) {
            seen[j] = 1;
            stack.push_back(j);
          }
        }
      }
    }
    if (f.size() < min_cells) continue;
    f.centroid = sum / f.size();
    out.push_back(std::move(f));
  }
  return out;
}

std::optional<FrontierChoice> select_frontier(const DistanceField& from_agent,
                                              const std::vector<Frontier>& frontiers,
                                              const std::unordered_set<int>* excluded) {
  std::optional<FrontierChoice> best;
  for (std::size_t k = 0; k < frontiers.size(); ++k) {
    const Frontier& f = frontiers[k];
    FrontierChoice cand{static_cast<int>(k), {}, DistanceField::kUnreachable};
    for (const Cell& c : f.cells) {
      if (excluded && excluded->count(c.row * from_agent.width + c.col)) continue;
      const double d = from_agent.at(c);
      if (d < cand.distance) {
        cand.distance = d;
        cand.target = c;
      }
    }
    if (cand.distance == DistanceField::kUnreachable) continue;
    if (!best) {
      best = cand;
      continue;
    }
    const Frontier& b = frontiers[best->index];
    const bool better =
        cand.distance < best->distance - 1e-9 ||
        (std::abs(cand.distance - best->distance) <= 1e-9 &&
         (f.size() > b.size() || (f.size() == b.size() && f.min_index < b.min_index)));
    if (better) best = cand;
  }
  return best;
}

std::optional<FrontierChoice> select_frontier(const OccupancyMap& map, const Pose& agent,
                                              const std::vector<Frontier>& frontiers) {
  const TraversalGrid grid = map.planning_grid(agent.xy());
  const DistanceField field = fmm_distance(grid, map.cell_of(agent.xy()));
  return select_frontier(field, frontiers);
}

}  // namespace gsnav
