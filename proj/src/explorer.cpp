#include "gsnav/explorer.hpp"

#include <algorithm>
#include <unordered_set>

namespace gsnav {

ExploreResult explore(World& world, const ExploreParams& params) {
  ExploreResult out;
  out.map = OccupancyMap::for_scene(world.scene(), params.map);
  AgentRunner runner(world, out.map, std::max(0, params.budget));
  runner.set_hook([&](Action, const StepResult&, const Observation& obs) {
    out.frames.push_back(obs);
  });
  out.frames.push_back(runner.observe());

  if (params.initial_scan) {
    for (int i = 0; i < 12 && !runner.exhausted(); ++i) runner.act(Action::TurnLeft);
  }

  std::unordered_set<int> excluded;
  while (!runner.exhausted()) {
    const auto frontiers = detect_frontiers(out.map, params.min_frontier_cells);
    const Pose pose = world.pose();
    const TraversalGrid grid = out.map.planning_grid(pose.xy());
    const DistanceField field = fmm_distance(grid, out.map.cell_of(pose.xy()));
    const auto choice = select_frontier(field, frontiers, &excluded);
    if (!choice) {
      out.frontiers_exhausted = true;
      break;
    }
    const WalkResult walk =
        walk_to(runner, choice->target, params.arrive_radius, params.replan_every,
                Arrival::Straight);
    if (walk.steps == 0 && !runner.exhausted()) {
      // Reachable on the map yet no heading makes progress: give up on the
      // neighborhood of this target.
      const int r = static_cast<int>(params.arrive_radius / out.map.resolution());
      for (int dr = -r; dr <= r; ++dr) {
        for (int dc = -r; dc <= r; ++dc) {
          const Cell c{choice->target.col + dc, choice->target.row + dr};
          if (out.map.in_bounds(c)) excluded.insert(out.map.index(c));
        }
      }
    }
  }
  out.steps = runner.steps_used();
  return out;
}

}  // namespace gsnav
