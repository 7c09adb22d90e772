#pragma once

#include "gsnav/scene.hpp"

#include <string>

namespace gsnav::test {

inline std::string data_path(const std::string& rel) { return std::string(GSNAV_DATA_DIR) + "/" + rel; }

inline const Scene& four_room() {
  static const Scene s = load_scene(data_path("scenes/four_room.json"));
  return s;
}
inline const Scene& one_room() {
  static const Scene s = load_scene(data_path("scenes/one_room.json"));
  return s;
}

// Closed box room [0,w]x[0,h] with 0.1 m walls and no objects.
inline Scene empty_room(double w, double h) {
  Scene s;
  s.name = "empty";
  s.floor_min = {-0.2, -0.2};
  s.floor_max = {w + 0.2, h + 0.2};
  s.rooms.push_back({"room", {0, 0}, {w, h}});
  const double H = s.ceiling_height;
  s.obstacles.push_back({Box{{-0.1, -0.1, 0}, {w + 0.1, 0, H}}});
  s.obstacles.push_back({Box{{-0.1, h, 0}, {w + 0.1, h + 0.1, H}}});
  s.obstacles.push_back({Box{{-0.1, 0, 0}, {0, h, H}}});
  s.obstacles.push_back({Box{{w, 0, 0}, {w + 0.1, h, H}}});
  return s;
}

}  // namespace gsnav::test
