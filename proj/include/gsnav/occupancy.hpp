#pragma once

#include "gsnav/camera.hpp"
#include "gsnav/common.hpp"
#include "gsnav/image.hpp"
#include "gsnav/world.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace gsnav {

enum class CellState : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

struct Cell {
  int col = 0;
  int row = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

// Passability mask consumed by the planner.
struct TraversalGrid {
  int width = 0;
  int height = 0;
  double resolution = 0.05;
  std::vector<std::uint8_t> passable;

  bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width && c.row < height; }
  int index(Cell c) const { return c.row * width + c.col; }
  Cell cell(int idx) const { return {idx % width, idx / width}; }
  bool ok(Cell c) const { return in_bounds(c) && passable[index(c)] != 0; }
};

struct MapParams {
  double resolution = 0.05;
  double obstacle_min_height = 0.1;
  double obstacle_max_height = agent::kHeight;
  double robot_radius = agent::kBaseRadius;
};

class OccupancyMap {
 public:
  OccupancyMap() = default;
  OccupancyMap(Vec2 origin, int width, int height, MapParams params = {});
  // Map covering the scene floor extent plus a margin.
  static OccupancyMap for_scene(const Scene& scene, MapParams params = {});

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return params_.resolution; }
  const Vec2& origin() const { return origin_; }
  const MapParams& params() const { return params_; }

  bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_; }
  int index(Cell c) const { return c.row * width_ + c.col; }
  Cell cell(int idx) const { return {idx % width_, idx / width_}; }
  Cell cell_of(const Vec2& p) const;
  Vec2 center(Cell c) const;

  CellState at(Cell c) const { return cells_[index(c)]; }
  CellState at(int idx) const { return cells_[idx]; }
  void set(Cell c, CellState s) { cells_[index(c)] = s; }
  // Marks free unless the cell is already occupied.
  void mark_free(Cell c);
  void mark_occupied(Cell c) { set(c, CellState::Occupied); }

  const std::vector<CellState>& cells() const { return cells_; }
  std::vector<int>& visit_counts() { return visits_; }
  const std::vector<int>& visit_counts() const { return visits_; }
  long count(CellState s) const;

  // FREE cells farther than the robot radius from every OCCUPIED cell.
  TraversalGrid traversable() const;
  // As traversable(), but FREE cells within `radius` of `xy` are forced
  // passable so the agent's own cell always takes part in planning.
  TraversalGrid planning_grid(const Vec2& xy, double radius = 0.3) const;

  ImageU8 to_image() const;  // UNKNOWN=128, FREE=255, OCCUPIED=0; row 0 = max y
  void save_pgm(const std::filesystem::path& path) const;
  // Inverse of to_image(); the image must match this map's size.
  void load_image(const ImageU8& img);

  friend bool operator==(const OccupancyMap& a, const OccupancyMap& b) {
    return a.origin_ == b.origin_ && a.width_ == b.width_ && a.height_ == b.height_ &&
           a.cells_ == b.cells_;
  }

 private:
  Vec2 origin_ = Vec2::Zero();
  int width_ = 0;
  int height_ = 0;
  MapParams params_;
  std::vector<CellState> cells_;
  std::vector<int> visits_;
};

// Projects valid depth pixels into the map: hits inside the obstacle height
// band become OCCUPIED, floor hits and the cells crossed by each ray become
// FREE, invalid pixels are ignored. The agent footprint is marked FREE.
void integrate_depth(OccupancyMap& map, const Observation& obs, const CameraIntrinsics& camera);

// Rasterized ground truth: cells whose footprint overlaps a blocking box are
// OCCUPIED, the rest of the floor extent FREE.
OccupancyMap ground_truth_map(const Scene& scene, MapParams params = {});

}  // namespace gsnav
