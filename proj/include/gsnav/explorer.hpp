#pragma once

#include "gsnav/frontier.hpp"
#include "gsnav/motion.hpp"
#include "gsnav/occupancy.hpp"
#include "gsnav/world.hpp"

#include <vector>

namespace gsnav {

struct ExploreParams {
  int budget = 1500;
  int min_frontier_cells = 5;
  double arrive_radius = 0.5;
  // Steps spent toward one frontier before the choice is re-evaluated.
  int replan_every = 15;
  bool initial_scan = true;
  MapParams map;
};

struct ExploreResult {
  OccupancyMap map;
  std::vector<Observation> frames;  // initial observation plus one per step
  int steps = 0;
  bool frontiers_exhausted = false;
};

// Frontier exploration: detect -> select -> walk, until no reachable frontier
// is left or the step budget is spent.
ExploreResult explore(World& world, const ExploreParams& params = {});

}  // namespace gsnav
