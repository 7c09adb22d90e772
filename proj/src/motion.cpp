#include "gsnav/motion.hpp"

#include <cmath>

namespace gsnav {

std::optional<Action> greedy_action(const DistanceField& to_target, const OccupancyMap& map,
                                    const Pose& pose, double min_progress) {
  const double here = to_target.at(map.cell_of(pose.xy()));
  if (here == DistanceField::kUnreachable) return std::nullopt;
  int best_k = 0;
  double best_v = DistanceField::kUnreachable;
  constexpr int kSamples = 5;
  // Relative headings ordered so that equal values prefer fewer turns.
  constexpr int kOrder[] = {0, 1, -1, 2, -2, 3, -3, 4, -4, 5, -5, 6};
  for (int k : kOrder) {
    const double yaw = pose.yaw + k * agent::kTurnStep;
    const Vec2 dir(std::cos(yaw), std::sin(yaw));
    double v = 0.0;
    for (int s = 1; s <= kSamples; ++s) {
      v = to_target.at(map.cell_of(pose.xy() + (agent::kForwardStep * s / kSamples) * dir));
      if (v == DistanceField::kUnreachable) break;
    }
    if (v < best_v) {
      best_v = v;
      best_k = k;
    }
  }
  if (!(best_v < here - min_progress)) return std::nullopt;
  if (best_k == 0) return Action::MoveForward;
  return best_k > 0 ? Action::TurnLeft : Action::TurnRight;
}

AgentRunner::AgentRunner(World& world, OccupancyMap& map, int step_budget)
    : world_(world), map_(map), budget_(step_budget) {}

const Observation& AgentRunner::observe() {
  last_obs_ = world_.observe();
  integrate_depth(map_, last_obs_, world_.camera());
  const Cell c = map_.cell_of(world_.pose().xy());
  if (map_.in_bounds(c)) ++map_.visit_counts()[map_.index(c)];
  return last_obs_;
}

bool AgentRunner::act(Action a) {
  if (exhausted()) return false;
  const Pose before = world_.pose();
  const StepResult r = world_.act(a);
  ++steps_used_;
  if (a == Action::MoveForward && !r.collided) path_length_ += agent::kForwardStep;
  if (a == Action::Stop) stopped_ = true;
  if (r.collided) {
    // Something unmapped blocks the way: record it so the next plan avoids it.
    const Vec2 dir(std::cos(before.yaw), std::sin(before.yaw));
    const Cell c = map_.cell_of(before.xy() + (agent::kBaseRadius + map_.resolution()) * dir);
    if (map_.in_bounds(c)) map_.mark_occupied(c);
  }
  observe();
  if (hook_) hook_(a, r, last_obs_);
  return true;
}

WalkResult walk_to(AgentRunner& runner, Cell target, double trigger_radius, int max_steps,
                   Arrival arrival) {
  WalkResult res;
  OccupancyMap& map = runner.map();
  while (true) {
    const Pose pose = runner.world().pose();
    const bool near = (pose.xy() - map.center(target)).norm() <= trigger_radius;
    if (near && arrival == Arrival::Straight) {
      res.arrived = true;
      return res;
    }
    if (!near && (res.steps >= max_steps || runner.exhausted())) return res;
    const TraversalGrid grid = map.planning_grid(pose.xy());
    if (!grid.ok(target)) {
      res.arrived = near;
      return res;
    }
    FmmParams fp;
    fp.stop_cell = map.cell_of(pose.xy());
    const DistanceField field = fmm_distance(grid, target, fp);
    // Arrival is measured along the map, so a target behind a wall is not
    // reached by standing on the wrong side of it.
    if (near && field.at(map.cell_of(pose.xy())) <= trigger_radius) {
      res.arrived = true;
      return res;
    }
    if (res.steps >= max_steps || runner.exhausted()) return res;
    const auto action = greedy_action(field, map, pose);
    if (!action) return res;
    runner.act(*action);
    ++res.steps;
  }
}

}  // namespace gsnav
