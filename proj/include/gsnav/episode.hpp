#pragma once

#include "gsnav/world.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gsnav {

// Episode files reference goal payloads: category/text payloads are stored
// inline, image payloads as "render:seed=<n>" and regenerated on load.
std::string episode_to_json(const Episode& ep);
Episode parse_episode(const std::string& text, const Scene& scene,
                      const CameraIntrinsics& camera = CameraIntrinsics::desk());
void save_episode(const std::filesystem::path& path, const Episode& ep);
Episode load_episode(const std::filesystem::path& path, const Scene& scene,
                     const CameraIntrinsics& camera = CameraIntrinsics::desk());

// A frame log is stored as the pose sequence; observations are re-rendered
// deterministically from the scene.
struct FrameLogFile {
  std::string scene_path;
  CameraIntrinsics camera;
  std::vector<Pose> poses;
};
void save_frame_log(const std::filesystem::path& path, const FrameLogFile& log);
FrameLogFile load_frame_log(const std::filesystem::path& path);
std::vector<Observation> render_frames(const Scene& scene, const FrameLogFile& log);

}  // namespace gsnav
