#include "gsnav/scene.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace gsnav {

using nlohmann::json;

bool Box::contains(const Vec3& p, double tol) const {
  return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
}

bool Box::overlaps(const Box& o) const {
  for (int a = 0; a < 3; ++a) {
    if (std::min(max[a], o.max[a]) - std::max(min[a], o.min[a]) <= 1e-9) return false;
  }
  return true;
}

double Box::footprint_distance(const Vec2& p) const {
  const double dx = std::max({min.x() - p.x(), 0.0, p.x() - max.x()});
  const double dy = std::max({min.y() - p.y(), 0.0, p.y() - max.y()});
  return std::hypot(dx, dy);
}

std::optional<double> Box::intersect(const Vec3& origin, const Vec3& dir, double t_min,
                                     double t_max, Vec3* normal) const {
  double t0 = t_min, t1 = t_max;
  int axis = -1;
  double sign = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-15) {
      if (origin[a] < min[a] || origin[a] > max[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / dir[a];
    double ta = (min[a] - origin[a]) * inv;
    double tb = (max[a] - origin[a]) * inv;
    double s = -1.0;
    if (ta > tb) {
      std::swap(ta, tb);
      s = 1.0;
    }
    if (ta > t0) {
      t0 = ta;
      axis = a;
      sign = s;
    }
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  // Origin inside the box: no front face to report.
  if (axis < 0) return std::nullopt;
  if (normal) {
    *normal = Vec3::Zero();
    (*normal)[axis] = sign;
  }
  return t0;
}

const ObjectInstance* Scene::find_object(int id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

const ObjectInstance& Scene::object(int id) const {
  if (const auto* o = find_object(id)) return *o;
  throw LookupError("unknown instance id " + std::to_string(id));
}

int Scene::room_index(const Vec2& p) const {
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    if (rooms[i].contains(p)) return static_cast<int>(i);
  }
  return -1;
}

double Scene::diagonal() const {
  const Vec2 d = floor_max - floor_min;
  return std::sqrt(d.squaredNorm() + ceiling_height * ceiling_height);
}

bool Scene::inside_floor(const Vec2& p, double margin) const {
  return p.x() >= floor_min.x() + margin && p.x() <= floor_max.x() - margin &&
         p.y() >= floor_min.y() + margin && p.y() <= floor_max.y() - margin;
}

std::optional<RayHit> Scene::cast_ray(const Vec3& origin, const Vec3& dir) const {
  constexpr double kFar = 1e6;
  double best = kFar;
  RayHit hit;
  Vec3 n;
  if (dir.z() < -1e-12) {
    const double t = -origin.z() / dir.z();
    if (t > 0.0 && t < best) {
      best = t;
      hit.normal = Vec3(0, 0, 1);
      hit.albedo = floor_color;
      hit.instance_id = 0;
    }
  } else if (dir.z() > 1e-12) {
    const double t = (ceiling_height - origin.z()) / dir.z();
    if (t > 0.0 && t < best) {
      best = t;
      hit.normal = Vec3(0, 0, -1);
      hit.albedo = ceiling_color;
      hit.instance_id = 0;
    }
  }
  for (const auto& ob : obstacles) {
    if (auto t = ob.box.intersect(origin, dir, 0.0, best, &n)) {
      best = *t;
      hit.normal = n;
      hit.albedo = ob.color;
      hit.instance_id = 0;
    }
  }
  for (const auto& o : objects) {
    if (auto t = o.box().intersect(origin, dir, 0.0, best, &n)) {
      best = *t;
      hit.normal = n;
      hit.albedo = o.base_color;
      hit.instance_id = o.id;
    }
  }
  if (best >= kFar) return std::nullopt;
  hit.range = best;
  hit.point = origin + best * dir;
  return hit;
}

std::vector<Box> Scene::blocking_boxes(double z_low, double z_high) const {
  std::vector<Box> out;
  auto consider = [&](const Box& b) {
    if (b.min.z() < z_high && b.max.z() > z_low) out.push_back(b);
  };
  for (const auto& ob : obstacles) consider(ob.box);
  for (const auto& o : objects) consider(o.box());
  return out;
}

void Scene::validate() const {
  if (!(floor_max.array() > floor_min.array()).all()) {
    throw ValidationError("floor_extent must have positive area");
  }
  std::set<int> ids;
  for (const auto& o : objects) {
    const std::string tag = "object " + std::to_string(o.id);
    if (o.id <= 0) throw ValidationError(tag + ": id must be positive");
    if (!ids.insert(o.id).second) throw ValidationError(tag + ": duplicate id");
    if (o.category.empty()) throw ValidationError(tag + ": empty category");
    if (!(o.extent.array() > 0.0).all()) throw ValidationError(tag + ": extent must be positive");
    const Box b = o.box();
    if (!inside_floor(b.min.head<2>()) || !inside_floor(b.max.head<2>()) || b.min.z() < -1e-9 ||
        b.max.z() > ceiling_height + 1e-9) {
      throw ValidationError(tag + ": box outside floor extent");
    }
    for (std::size_t k = 0; k < obstacles.size(); ++k) {
      if (b.overlaps(obstacles[k].box)) {
        throw ValidationError(tag + ": overlaps obstacle " + std::to_string(k));
      }
    }
  }
  for (std::size_t k = 0; k < objects.size(); ++k) {
    for (std::size_t m = k + 1; m < objects.size(); ++m) {
      if (objects[k].box().overlaps(objects[m].box())) {
        throw ValidationError("objects " + std::to_string(objects[k].id) + " and " +
                              std::to_string(objects[m].id) + " overlap");
      }
    }
  }
}

namespace {

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError("missing field '" + path + "." + key + "'");
  }
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError("field '" + path + "' must be a number");
  return j.get<double>();
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != N) {
    throw SchemaError("field '" + path + "' must be an array of " + std::to_string(N) +
                      " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v[i] = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

std::string string_field(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_string()) throw SchemaError("field '" + path + "." + key + "' must be a string");
  return v.get<std::string>();
}

const json& array_field(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_array()) throw SchemaError("field '" + path + "." + key + "' must be an array");
  return v;
}

json to_array(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

Scene parse_scene(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("scene parse error at " + line_col(text, e.byte) + ": " + e.what());
  }
  if (!j.is_object()) throw SchemaError("scene root must be an object");

  Scene s;
  s.name = j.value("name", std::string{});
  const json& fe = field(j, "floor_extent", "scene");
  s.floor_min = vec<2>(field(fe, "min", "floor_extent"), "floor_extent.min");
  s.floor_max = vec<2>(field(fe, "max", "floor_extent"), "floor_extent.max");
  if (j.contains("ceiling_height")) s.ceiling_height = number(j["ceiling_height"], "ceiling_height");
  if (j.contains("floor_color")) s.floor_color = vec<3>(j["floor_color"], "floor_color");
  if (j.contains("ceiling_color")) s.ceiling_color = vec<3>(j["ceiling_color"], "ceiling_color");

  const json& rooms = array_field(j, "rooms", "scene");
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    const std::string p = "rooms[" + std::to_string(i) + "]";
    Room r;
    r.name = rooms[i].value("name", p);
    r.min = vec<2>(field(rooms[i], "min", p), p + ".min");
    r.max = vec<2>(field(rooms[i], "max", p), p + ".max");
    s.rooms.push_back(r);
  }
  Vec3 wall_color(0.82, 0.80, 0.74);
  if (j.contains("wall_color")) wall_color = vec<3>(j["wall_color"], "wall_color");
  const json& obstacles = array_field(j, "obstacles", "scene");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const std::string p = "obstacles[" + std::to_string(i) + "]";
    Obstacle ob;
    ob.box.min = vec<3>(field(obstacles[i], "min", p), p + ".min");
    ob.box.max = vec<3>(field(obstacles[i], "max", p), p + ".max");
    if (!(ob.box.max.array() > ob.box.min.array()).all()) {
      throw SchemaError("field '" + p + "' must have max > min on every axis");
    }
    ob.color = obstacles[i].contains("color") ? vec<3>(obstacles[i]["color"], p + ".color")
                                              : wall_color;
    s.obstacles.push_back(ob);
  }
  const json& objects = array_field(j, "objects", "scene");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string p = "objects[" + std::to_string(i) + "]";
    const json& o = objects[i];
    ObjectInstance inst;
    const json& id = field(o, "id", p);
    if (!id.is_number_integer()) throw SchemaError("field '" + p + ".id' must be an integer");
    inst.id = id.get<int>();
    inst.category = string_field(o, "category", p);
    inst.text_description = string_field(o, "text", p);
    inst.centroid = vec<3>(field(o, "centroid", p), p + ".centroid");
    inst.extent = vec<3>(field(o, "extent", p), p + ".extent");
    inst.base_color = vec<3>(field(o, "color", p), p + ".color");
    s.objects.push_back(inst);
  }
  s.validate();
  return s;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scene file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scene(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string scene_to_json(const Scene& s) {
  nlohmann::ordered_json j;
  j["name"] = s.name;
  j["floor_extent"] = {{"min", to_array(s.floor_min)}, {"max", to_array(s.floor_max)}};
  j["ceiling_height"] = s.ceiling_height;
  j["floor_color"] = to_array(s.floor_color);
  j["ceiling_color"] = to_array(s.ceiling_color);
  j["rooms"] = nlohmann::ordered_json::array();
  for (const auto& r : s.rooms) {
    j["rooms"].push_back({{"name", r.name}, {"min", to_array(r.min)}, {"max", to_array(r.max)}});
  }
  j["obstacles"] = nlohmann::ordered_json::array();
  for (const auto& ob : s.obstacles) {
    j["obstacles"].push_back({{"min", to_array(ob.box.min)},
                              {"max", to_array(ob.box.max)},
                              {"color", to_array(ob.color)}});
  }
  j["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : s.objects) {
    j["objects"].push_back({{"id", o.id},
                            {"category", o.category},
                            {"text", o.text_description},
                            {"centroid", to_array(o.centroid)},
                            {"extent", to_array(o.extent)},
                            {"color", to_array(o.base_color)}});
  }
  return j.dump(2);
}

}  // namespace gsnav
