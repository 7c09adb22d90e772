#pragma once

#include "gsnav/common.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gsnav {

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 size() const { return max - min; }
  bool contains(const Vec3& p, double tol = 0.0) const;
  // True when the interiors intersect with positive volume.
  bool overlaps(const Box& o) const;
  // Horizontal distance from `p` to the box footprint (0 inside).
  double footprint_distance(const Vec2& p) const;
  // Slab test. Returns entry distance in [t_min, t_max] and the face normal.
  std::optional<double> intersect(const Vec3& origin, const Vec3& dir, double t_min,
                                  double t_max, Vec3* normal) const;
};

struct Room {
  std::string name;
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
};

struct Obstacle {
  Box box;
  Vec3 color{0.82, 0.80, 0.74};
};

struct ObjectInstance {
  int id = 0;
  std::string category;
  std::string text_description;
  Vec3 centroid = Vec3::Zero();
  Vec3 extent = Vec3::Ones();
  Vec3 base_color{0.5, 0.5, 0.5};

  Box box() const { return {centroid - 0.5 * extent, centroid + 0.5 * extent}; }
};

struct RayHit {
  double range = 0.0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  Vec3 albedo = Vec3::Zero();
  int instance_id = 0;
};

struct Scene {
  std::string name;
  std::vector<Room> rooms;
  std::vector<Obstacle> obstacles;
  std::vector<ObjectInstance> objects;
  Vec2 floor_min = Vec2::Zero();
  Vec2 floor_max = Vec2::Zero();
  double ceiling_height = 2.6;
  Vec3 floor_color{0.55, 0.42, 0.30};
  Vec3 ceiling_color{0.93, 0.93, 0.92};

  const ObjectInstance& object(int id) const;
  const ObjectInstance* find_object(int id) const;
  // Index into `rooms` containing `p`, or -1.
  int room_index(const Vec2& p) const;
  double diagonal() const;
  bool inside_floor(const Vec2& p, double margin = 0.0) const;

  // Nearest surface along a unit direction (floor, ceiling, obstacles, objects).
  std::optional<RayHit> cast_ray(const Vec3& origin, const Vec3& dir) const;

  // Boxes that block an agent body spanning heights (z_low, z_high).
  std::vector<Box> blocking_boxes(double z_low, double z_high) const;

  void validate() const;
};

// Parses a scene file (JSON). Throws SchemaError on malformed input, with the
// line or the offending field in the message, and ValidationError when the
// scene violates a structural invariant.
Scene load_scene(const std::filesystem::path& path);
Scene parse_scene(const std::string& text);
std::string scene_to_json(const Scene& scene);

}  // namespace gsnav
