#pragma once

#include "gsnav/occupancy.hpp"

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace gsnav {

struct DistanceField {
  static constexpr double kUnreachable = std::numeric_limits<double>::infinity();

  int width = 0;
  int height = 0;
  double resolution = 0.05;
  std::vector<double> values;

  bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width && c.row < height; }
  double at(Cell c) const { return in_bounds(c) ? values[c.row * width + c.col] : kUnreachable; }
  bool reachable(Cell c) const { return at(c) < kUnreachable; }
};

struct FmmParams {
  // Cells within this many cells of a source and in line of sight are seeded
  // with their exact Euclidean distance, which removes the point-source bias
  // of the first-order scheme.
  int exact_init_radius = 5;
  // When set, marching stops once this cell is accepted and the front has
  // moved `stop_margin` meters past it. Cells beyond stay kUnreachable.
  std::optional<Cell> stop_cell;
  double stop_margin = 0.6;
};

// First-order upwind fast marching on passable cells, combining the axis and
// the diagonal stencil at every update. Non-passable cells keep kUnreachable.
DistanceField fmm_distance(const TraversalGrid& grid, Cell source, FmmParams params = {});
DistanceField fmm_distance(const TraversalGrid& grid, std::span<const Cell> sources,
                           FmmParams params = {});

// Steepest descent over the 8-neighborhood from `start` to a source cell.
// Empty when `start` is unreachable.
std::vector<Cell> extract_path(const DistanceField& field, Cell start);

}  // namespace gsnav
