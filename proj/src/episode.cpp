#include "gsnav/episode.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace gsnav {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

namespace {

ojson pose_json(const Pose& p) {
  return {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"yaw", p.yaw}, {"pitch", p.pitch}};
}

Pose pose_from(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError("field '" + path + "' must be an object");
  Pose p;
  try {
    p.x = j.at("x").get<double>();
    p.y = j.at("y").get<double>();
    p.z = j.value("z", agent::kCameraHeight);
    p.yaw = j.value("yaw", 0.0);
    p.pitch = j.value("pitch", 0.0);
  } catch (const json::exception& e) {
    throw SchemaError("field '" + path + "': " + e.what());
  }
  return p;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text << '\n';
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(what + " parse error: " + e.what());
  }
}

}  // namespace

std::string episode_to_json(const Episode& ep) {
  ojson j;
  j["scene"] = ep.scene_path;
  j["start_pose"] = pose_json(ep.start_pose);
  j["step_limit"] = ep.step_limit;
  j["subtasks"] = ojson::array();
  for (const auto& g : ep.subtasks) {
    ojson s;
    s["modality"] = std::string(modality_name(g.modality));
    s["payload_ref"] = g.modality == GoalModality::Image
                           ? "render:seed=" + std::to_string(g.image_seed)
                           : g.text;
    s["gt_instance_id"] = g.gt_instance_id;
    j["subtasks"].push_back(s);
  }
  return j.dump(2);
}

Episode parse_episode(const std::string& text, const Scene& scene, const CameraIntrinsics& camera) {
  const json j = parse_json(text, "episode");
  Episode ep;
  try {
    ep.scene_path = j.at("scene").get<std::string>();
    ep.start_pose = pose_from(j.at("start_pose"), "start_pose");
    ep.step_limit = j.value("step_limit", agent::kSubtaskStepLimit);
    const json& subtasks = j.at("subtasks");
    for (std::size_t i = 0; i < subtasks.size(); ++i) {
      const json& s = subtasks[i];
      const GoalModality m = parse_modality(s.at("modality").get<std::string>());
      const int id = s.at("gt_instance_id").get<int>();
      const std::string ref = s.at("payload_ref").get<std::string>();
      std::uint64_t seed = 0;
      if (m == GoalModality::Image) {
        const std::string prefix = "render:seed=";
        if (ref.rfind(prefix, 0) != 0) {
          throw SchemaError("subtasks[" + std::to_string(i) + "].payload_ref must be '" +
                            prefix + "<n>' for image goals");
        }
        seed = std::stoull(ref.substr(prefix.size()));
      } else if (ref.empty()) {
        throw SchemaError("subtasks[" + std::to_string(i) + "].payload_ref is empty");
      }
      Goal g = make_goal(scene, id, m, seed, camera);
      if (m != GoalModality::Image) g.text = ref;
      ep.subtasks.push_back(std::move(g));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("episode: ") + e.what());
  }
  return ep;
}

void save_episode(const std::filesystem::path& path, const Episode& ep) {
  write_file(path, episode_to_json(ep));
}

Episode load_episode(const std::filesystem::path& path, const Scene& scene,
                     const CameraIntrinsics& camera) {
  return parse_episode(read_file(path), scene, camera);
}

void save_frame_log(const std::filesystem::path& path, const FrameLogFile& log) {
  ojson j;
  j["scene"] = log.scene_path;
  j["camera"] = {{"width", log.camera.width},
                 {"height", log.camera.height},
                 {"hfov_deg", log.camera.hfov_deg}};
  j["poses"] = ojson::array();
  for (const auto& p : log.poses) j["poses"].push_back({p.x, p.y, p.z, p.yaw, p.pitch});
  write_file(path, j.dump());
}

FrameLogFile load_frame_log(const std::filesystem::path& path) {
  const json j = parse_json(read_file(path), "frame log");
  FrameLogFile log;
  try {
    log.scene_path = j.at("scene").get<std::string>();
    const json& c = j.at("camera");
    log.camera = {c.at("width").get<int>(), c.at("height").get<int>(),
                  c.at("hfov_deg").get<double>()};
    for (const auto& p : j.at("poses")) {
      log.poses.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>(),
                           p.at(3).get<double>(), p.at(4).get<double>()});
    }
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return log;
}

std::vector<Observation> render_frames(const Scene& scene, const FrameLogFile& log) {
  std::vector<Observation> frames;
  frames.reserve(log.poses.size());
  for (const auto& p : log.poses) frames.push_back(render_observation(scene, p, log.camera));
  return frames;
}

}  // namespace gsnav
