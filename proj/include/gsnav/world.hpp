#pragma once

#include "gsnav/camera.hpp"
#include "gsnav/common.hpp"
#include "gsnav/image.hpp"
#include "gsnav/scene.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gsnav {

enum class Action : std::uint8_t { MoveForward, TurnLeft, TurnRight, LookUp, LookDown, Stop };

std::string_view action_name(Action a);

struct Observation {
  ImageF rgb;          // H x W x 3, values in [0, 1]
  ImageF depth;        // Euclidean range in meters, kInvalidDepth outside [0.5, 5.0]
  ImageI instance_ids; // 0 = background
  Pose pose;
};

// Intrinsics matching an observation's resolution.
inline CameraIntrinsics camera_of(const Observation& obs) {
  return {obs.rgb.width(), obs.rgb.height(), agent::kHfovDeg};
}

// Box-filtered copy at 1/factor resolution. A coarse depth pixel is valid
// when at least half of its block is, and holds the mean of the valid values.
Observation downsample(const Observation& obs, int factor);

struct StepResult {
  Pose pose;
  bool collided = false;
};

// Directional light used for Lambertian shading (unit vector, world frame).
Vec3 light_direction();
inline constexpr double kAmbient = 0.3;

StepResult step(const Scene& scene, const Pose& pose, Action action);

// True when an agent disc centered at `xy` overlaps a blocking box or leaves
// the floor extent.
bool disc_collides(const Scene& scene, const Vec2& xy, double radius = agent::kBaseRadius);

Observation render_observation(const Scene& scene, const Pose& pose,
                               const CameraIntrinsics& camera = CameraIntrinsics::desk());

enum class GoalModality : std::uint8_t { Category, Image, Text };

std::string_view modality_name(GoalModality m);
GoalModality parse_modality(std::string_view s);

struct GoalImage {
  ImageF rgb;
  // Simulator instance ids of the crop; consumed by the oracle encoders only.
  ImageI instance_ids;
  Pose view;
};

struct Goal {
  GoalModality modality = GoalModality::Category;
  std::string text;   // category name or description
  GoalImage image;    // image modality only
  std::uint64_t image_seed = 0;
  int gt_instance_id = 0;
  Vec3 gt_position = Vec3::Zero();
};

struct Episode {
  std::string scene_path;
  Pose start_pose;
  std::vector<Goal> subtasks;
  int step_limit = agent::kSubtaskStepLimit;
};

// Horizontal distance from the agent to the nearest point of the goal box.
double distance_to_goal(const Scene& scene, const Pose& pose, const Goal& goal);
bool check_success(const Scene& scene, const Pose& pose, const Goal& goal,
                   double radius = agent::kSuccessRadius);

// Renders a crop of `instance_id` from a viewpoint 1-2.5 m away in which the
// instance covers at least `min_fraction` of the crop. Throws Error when no
// sampled viewpoint sees the instance.
GoalImage make_goal_image(const Scene& scene, int instance_id, std::uint64_t seed,
                          const CameraIntrinsics& camera = CameraIntrinsics::desk(),
                          double min_fraction = 0.10);

// Goal construction helpers used by the episode generator and tests.
Goal make_goal(const Scene& scene, int instance_id, GoalModality modality,
               std::uint64_t image_seed = 0,
               const CameraIntrinsics& camera = CameraIntrinsics::desk());

// Stateful wrapper: one agent in one scene.
class World {
 public:
  World(const Scene& scene, Pose start, CameraIntrinsics camera = CameraIntrinsics::desk());

  const Scene& scene() const { return *scene_; }
  const Pose& pose() const { return pose_; }
  const CameraIntrinsics& camera() const { return camera_; }
  Observation observe() const { return render_observation(*scene_, pose_, camera_); }
  StepResult act(Action a);
  void reset(const Pose& p) { pose_ = p; }
  long steps_taken() const { return steps_; }

 private:
  const Scene* scene_;
  Pose pose_;
  CameraIntrinsics camera_;
  long steps_ = 0;
};

}  // namespace gsnav
