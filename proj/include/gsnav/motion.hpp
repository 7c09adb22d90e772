#pragma once

#include "gsnav/fmm.hpp"
#include "gsnav/occupancy.hpp"
#include "gsnav/world.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace gsnav {

// Picks the action that greedily descends `to_target`: among the 12 reachable
// headings, the one whose forward endpoint has the lowest distance. Returns
// MoveForward when that heading is the current one, a turn toward it
// otherwise, and nullopt when no heading makes progress.
std::optional<Action> greedy_action(const DistanceField& to_target, const OccupancyMap& map,
                                    const Pose& pose, double min_progress = 0.02);

// One agent acting in a world while keeping the occupancy map current. Every
// action costs one step of the shared budget; forward motion adds 0.25 m of
// path length.
class AgentRunner {
 public:
  using StepHook = std::function<void(Action, const StepResult&, const Observation&)>;

  AgentRunner(World& world, OccupancyMap& map, int step_budget);

  World& world() { return world_; }
  OccupancyMap& map() { return map_; }
  const Observation& last_observation() const { return last_obs_; }
  int steps_used() const { return steps_used_; }
  int steps_left() const { return budget_ - steps_used_; }
  bool exhausted() const { return steps_used_ >= budget_; }
  double path_length() const { return path_length_; }
  bool stopped() const { return stopped_; }

  // Renders and integrates the current view without spending a step.
  const Observation& observe();
  // Executes one action; false when the budget is exhausted.
  bool act(Action a);
  void set_hook(StepHook hook) { hook_ = std::move(hook); }

 private:
  World& world_;
  OccupancyMap& map_;
  int budget_;
  int steps_used_ = 0;
  double path_length_ = 0.0;
  bool stopped_ = false;
  Observation last_obs_;
  StepHook hook_;
};

struct WalkResult {
  bool arrived = false;
  int steps = 0;
};

// How walk_to() measures the distance to its target.
enum class Arrival {
  Straight,  // straight line only
  AlongMap,  // straight line and FMM distance on the map
};

// Walks toward `target`, replanning every step on the current map, until the
// agent is within `trigger_radius` of the target center, no heading makes
// progress, or `max_steps` (or the runner budget) is spent.
WalkResult walk_to(AgentRunner& runner, Cell target, double trigger_radius, int max_steps,
                   Arrival arrival = Arrival::AlongMap);

}  // namespace gsnav
