#include "gsnav/occupancy.hpp"

#include "gsnav/pnm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace gsnav {

OccupancyMap::OccupancyMap(Vec2 origin, int width, int height, MapParams params)
    : origin_(origin), width_(width), height_(height), params_(params),
      cells_(static_cast<std::size_t>(width) * height, CellState::Unknown),
      visits_(static_cast<std::size_t>(width) * height, 0) {}

OccupancyMap OccupancyMap::for_scene(const Scene& scene, MapParams params) {
  constexpr double kMargin = 0.5;
  const Vec2 origin = scene.floor_min - Vec2::Constant(kMargin);
  const Vec2 span = scene.floor_max - scene.floor_min + Vec2::Constant(2 * kMargin);
  const int w = static_cast<int>(std::ceil(span.x() / params.resolution));
  const int h = static_cast<int>(std::ceil(span.y() / params.resolution));
  return OccupancyMap(origin, w, h, params);
}

Cell OccupancyMap::cell_of(const Vec2& p) const {
  return {static_cast<int>(std::floor((p.x() - origin_.x()) / params_.resolution)),
          static_cast<int>(std::floor((p.y() - origin_.y()) / params_.resolution))};
}

Vec2 OccupancyMap::center(Cell c) const {
  return origin_ + params_.resolution * Vec2(c.col + 0.5, c.row + 0.5);
}

void OccupancyMap::mark_free(Cell c) {
  auto& s = cells_[index(c)];
  if (s != CellState::Occupied) s = CellState::Free;
}

long OccupancyMap::count(CellState s) const {
  return static_cast<long>(std::count(cells_.begin(), cells_.end(), s));
}

namespace {

std::vector<Cell> disc_offsets(double radius_cells) {
  std::vector<Cell> out;
  const int r = static_cast<int>(std::ceil(radius_cells));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= radius_cells * radius_cells + 1e-9) out.push_back({dx, dy});
    }
  }
  return out;
}

}  // namespace

TraversalGrid OccupancyMap::traversable() const {
  TraversalGrid g{width_, height_, params_.resolution, {}};
  g.passable.assign(cells_.size(), 0);
  for (std::size_t i = 0; i < cells_.size(); ++i) g.passable[i] = cells_[i] == CellState::Free;
  const auto offsets = disc_offsets(std::ceil(params_.robot_radius / params_.resolution));
  for (int row = 0; row < height_; ++row) {
    for (int col = 0; col < width_; ++col) {
      if (cells_[row * width_ + col] != CellState::Occupied) continue;
      for (const Cell& o : offsets) {
        const Cell c{col + o.col, row + o.row};
        if (in_bounds(c)) g.passable[index(c)] = 0;
      }
    }
  }
  return g;
}

TraversalGrid OccupancyMap::planning_grid(const Vec2& xy, double radius) const {
  TraversalGrid g = traversable();
  const Cell a = cell_of(xy);
  for (const Cell& o : disc_offsets(radius / params_.resolution)) {
    const Cell c{a.col + o.col, a.row + o.row};
    if (in_bounds(c) && at(c) == CellState::Free) g.passable[index(c)] = 1;
  }
  return g;
}

ImageU8 OccupancyMap::to_image() const {
  ImageU8 img(width_, height_, 1);
  for (int row = 0; row < height_; ++row) {
    for (int col = 0; col < width_; ++col) {
      unsigned char v = 128;
      switch (cells_[row * width_ + col]) {
        case CellState::Unknown: v = 128; break;
        case CellState::Free: v = 255; break;
        case CellState::Occupied: v = 0; break;
      }
      img(height_ - 1 - row, col) = v;
    }
  }
  return img;
}

void OccupancyMap::load_image(const ImageU8& img) {
  if (img.width() != width_ || img.height() != height_) {
    throw SchemaError("map image is " + std::to_string(img.width()) + "x" +
                      std::to_string(img.height()) + ", expected " + std::to_string(width_) + "x" +
                      std::to_string(height_));
  }
  for (int row = 0; row < height_; ++row) {
    for (int col = 0; col < width_; ++col) {
      const unsigned char v = img(height_ - 1 - row, col);
      CellState s = CellState::Unknown;
      if (v == 255) s = CellState::Free;
      else if (v == 0) s = CellState::Occupied;
      else if (v != 128) throw SchemaError("map image holds value " + std::to_string(v));
      cells_[row * width_ + col] = s;
    }
  }
}

void OccupancyMap::save_pgm(const std::filesystem::path& path) const {
  write_pgm(path, to_image());
}

void integrate_depth(OccupancyMap& map, const Observation& obs, const CameraIntrinsics& camera) {
  const CameraFrame frame = CameraFrame::from_pose(obs.pose);
  const Cell start = map.cell_of(obs.pose.xy());
  const MapParams& mp = map.params();
  for (int row = 0; row < camera.height; ++row) {
    for (int col = 0; col < camera.width; ++col) {
      const float d = obs.depth(row, col);
      if (!valid_depth(d)) continue;
      const Vec3 dir = frame.to_world_dir(pixel_ray_camera(camera, row, col)).normalized();
      const Vec3 p = frame.origin + static_cast<double>(d) * dir;
      const Cell end = map.cell_of(p.head<2>());
      // Bresenham from the camera cell up to (excluding) the hit cell.
      int x = start.col, y = start.row;
      const int dx = std::abs(end.col - x), dy = -std::abs(end.row - y);
      const int sx = x < end.col ? 1 : -1, sy = y < end.row ? 1 : -1;
      int err = dx + dy;
      while (!(x == end.col && y == end.row)) {
        if (map.in_bounds({x, y})) map.mark_free({x, y});
        const int e2 = 2 * err;
        if (e2 >= dy) {
          err += dy;
          x += sx;
        }
        if (e2 <= dx) {
          err += dx;
          y += sy;
        }
      }
      if (!map.in_bounds(end)) continue;
      if (p.z() >= mp.obstacle_min_height && p.z() <= mp.obstacle_max_height) {
        map.mark_occupied(end);
      } else if (p.z() < mp.obstacle_min_height) {
        map.mark_free(end);
      }
    }
  }
  const double r = mp.robot_radius / mp.resolution;
  for (const Cell& o : disc_offsets(r)) {
    const Cell c{start.col + o.col, start.row + o.row};
    if (map.in_bounds(c)) map.set(c, CellState::Free);
  }
}

OccupancyMap ground_truth_map(const Scene& scene, MapParams params) {
  OccupancyMap map = OccupancyMap::for_scene(scene, params);
  const auto boxes = scene.blocking_boxes(params.obstacle_min_height, params.obstacle_max_height);
  const double h = 0.5 * params.resolution;
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      const Cell c{col, row};
      const Vec2 ctr = map.center(c);
      bool occ = !scene.inside_floor(ctr);
      for (const auto& b : boxes) {
        if (occ) break;
        occ = ctr.x() + h > b.min.x() && ctr.x() - h < b.max.x() && ctr.y() + h > b.min.y() &&
              ctr.y() - h < b.max.y();
      }
      map.set(c, occ ? CellState::Occupied : CellState::Free);
    }
  }
  return map;
}

}  // namespace gsnav
