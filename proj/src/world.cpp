#include "gsnav/world.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gsnav {

std::string_view action_name(Action a) {
  switch (a) {
    case Action::MoveForward: return "MOVE_FORWARD";
    case Action::TurnLeft: return "TURN_LEFT";
    case Action::TurnRight: return "TURN_RIGHT";
    case Action::LookUp: return "LOOK_UP";
    case Action::LookDown: return "LOOK_DOWN";
    case Action::Stop: return "STOP";
  }
  return "?";
}

std::string_view modality_name(GoalModality m) {
  switch (m) {
    case GoalModality::Category: return "category";
    case GoalModality::Image: return "image";
    case GoalModality::Text: return "text";
  }
  return "?";
}

GoalModality parse_modality(std::string_view s) {
  if (s == "category") return GoalModality::Category;
  if (s == "image") return GoalModality::Image;
  if (s == "text") return GoalModality::Text;
  throw SchemaError("unknown goal modality '" + std::string(s) + "'");
}

Vec3 light_direction() { return Vec3(0.35, 0.55, 0.76).normalized(); }

bool disc_collides(const Scene& scene, const Vec2& xy, double radius) {
  if (!scene.inside_floor(xy, radius)) return true;
  for (const auto& b : scene.blocking_boxes(0.0, agent::kHeight)) {
    if (b.footprint_distance(xy) < radius) return true;
  }
  return false;
}

StepResult step(const Scene& scene, const Pose& pose, Action action) {
  StepResult r{pose, false};
  switch (action) {
    case Action::MoveForward: {
      const Vec2 dir(std::cos(pose.yaw), std::sin(pose.yaw));
      constexpr int kSamples = 10;
      for (int i = 1; i <= kSamples; ++i) {
        const Vec2 p = pose.xy() + (agent::kForwardStep * i / kSamples) * dir;
        if (disc_collides(scene, p)) {
          r.collided = true;
          return r;
        }
      }
      r.pose.x += agent::kForwardStep * dir.x();
      r.pose.y += agent::kForwardStep * dir.y();
      break;
    }
    case Action::TurnLeft:
      r.pose.yaw = snap_angle(wrap_angle(pose.yaw + agent::kTurnStep), agent::kTurnStep);
      break;
    case Action::TurnRight:
      r.pose.yaw = snap_angle(wrap_angle(pose.yaw - agent::kTurnStep), agent::kTurnStep);
      break;
    case Action::LookUp:
      r.pose.pitch =
          snap_angle(std::min(pose.pitch + agent::kLookStep, agent::kMaxPitch), agent::kLookStep);
      break;
    case Action::LookDown:
      r.pose.pitch =
          snap_angle(std::max(pose.pitch - agent::kLookStep, -agent::kMaxPitch), agent::kLookStep);
      break;
    case Action::Stop:
      break;
  }
  return r;
}

Observation downsample(const Observation& obs, int factor) {
  if (factor <= 1) return obs;
  const int w = obs.rgb.width() / factor, h = obs.rgb.height() / factor;
  Observation out;
  out.pose = obs.pose;
  out.rgb = ImageF(w, h, 3);
  out.depth = ImageF(w, h, 1, kInvalidDepth);
  out.instance_ids = ImageI(w, h, 1);
  const float inv = 1.0f / static_cast<float>(factor * factor);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      float rgb[3] = {0, 0, 0};
      float dsum = 0;
      int dn = 0;
      for (int i = 0; i < factor; ++i) {
        for (int j = 0; j < factor; ++j) {
          const int rr = r * factor + i, cc = c * factor + j;
          for (int ch = 0; ch < 3; ++ch) rgb[ch] += obs.rgb(rr, cc, ch);
          const float d = obs.depth(rr, cc);
          if (valid_depth(d)) {
            dsum += d;
            ++dn;
          }
        }
      }
      for (int ch = 0; ch < 3; ++ch) out.rgb(r, c, ch) = rgb[ch] * inv;
      if (2 * dn >= factor * factor) out.depth(r, c) = dsum / dn;
      out.instance_ids(r, c) =
          obs.instance_ids(r * factor + factor / 2, c * factor + factor / 2);
    }
  }
  return out;
}

Observation render_observation(const Scene& scene, const Pose& pose,
                               const CameraIntrinsics& camera) {
  Observation obs;
  obs.pose = pose;
  obs.rgb = ImageF(camera.width, camera.height, 3);
  obs.depth = ImageF(camera.width, camera.height, 1, kInvalidDepth);
  obs.instance_ids = ImageI(camera.width, camera.height, 1, 0);
  const CameraFrame frame = CameraFrame::from_pose(pose);
  const Vec3 light = light_direction();
  for (int row = 0; row < camera.height; ++row) {
    for (int col = 0; col < camera.width; ++col) {
      const Vec3 dir = frame.to_world_dir(pixel_ray_camera(camera, row, col)).normalized();
      const auto hit = scene.cast_ray(frame.origin, dir);
      if (!hit) continue;
      const double shade = kAmbient + (1.0 - kAmbient) * std::max(0.0, hit->normal.dot(light));
      for (int c = 0; c < 3; ++c) {
        obs.rgb(row, col, c) = static_cast<float>(std::clamp(hit->albedo[c] * shade, 0.0, 1.0));
      }
      if (hit->range >= agent::kMinDepth && hit->range <= agent::kMaxDepth) {
        obs.depth(row, col) = static_cast<float>(hit->range);
      }
      obs.instance_ids(row, col) = hit->instance_id;
    }
  }
  return obs;
}

double distance_to_goal(const Scene& scene, const Pose& pose, const Goal& goal) {
  return scene.object(goal.gt_instance_id).box().footprint_distance(pose.xy());
}

bool check_success(const Scene& scene, const Pose& pose, const Goal& goal, double radius) {
  return distance_to_goal(scene, pose, goal) <= radius;
}

GoalImage make_goal_image(const Scene& scene, int instance_id, std::uint64_t seed,
                          const CameraIntrinsics& camera, double min_fraction) {
  const ObjectInstance& inst = scene.object(instance_id);
  std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(instance_id));
  std::uniform_real_distribution<double> dist(1.0, 2.5);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  constexpr int kAttempts = 96;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const double d = dist(rng);
    const double a = angle(rng);
    const Vec2 xy = inst.centroid.head<2>() + d * Vec2(std::cos(a), std::sin(a));
    if (disc_collides(scene, xy)) continue;
    Pose view;
    view.x = xy.x();
    view.y = xy.y();
    view.yaw = std::atan2(inst.centroid.y() - xy.y(), inst.centroid.x() - xy.x());
    for (double pitch : {-agent::kLookStep, 0.0}) {
      view.pitch = pitch;
      const Observation obs = render_observation(scene, view, camera);
      int r0 = camera.height, r1 = -1, c0 = camera.width, c1 = -1, count = 0;
      for (int r = 0; r < camera.height; ++r) {
        for (int c = 0; c < camera.width; ++c) {
          if (obs.instance_ids(r, c) != instance_id) continue;
          ++count;
          r0 = std::min(r0, r);
          r1 = std::max(r1, r);
          c0 = std::min(c0, c);
          c1 = std::max(c1, c);
        }
      }
      // Require a recognizable view: enough pixels and not clipped to a sliver.
      if (count < std::max(64, camera.pixel_count() / 100)) continue;
      const int mr = (r1 - r0 + 1) / 8, mc = (c1 - c0 + 1) / 8;
      r0 = std::max(0, r0 - mr);
      r1 = std::min(camera.height - 1, r1 + mr);
      c0 = std::max(0, c0 - mc);
      c1 = std::min(camera.width - 1, c1 + mc);
      const int h = r1 - r0 + 1, w = c1 - c0 + 1;
      if (static_cast<double>(count) / (h * w) < min_fraction) continue;
      GoalImage out;
      out.view = view;
      out.rgb = ImageF(w, h, 3);
      out.instance_ids = ImageI(w, h, 1);
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
          for (int ch = 0; ch < 3; ++ch) out.rgb(r, c, ch) = obs.rgb(r0 + r, c0 + c, ch);
          out.instance_ids(r, c) = obs.instance_ids(r0 + r, c0 + c);
        }
      }
      return out;
    }
  }
  throw Error("goal image generation failed: instance " + std::to_string(instance_id) +
              " is not visible from any sampled viewpoint");
}

Goal make_goal(const Scene& scene, int instance_id, GoalModality modality,
               std::uint64_t image_seed, const CameraIntrinsics& camera) {
  const ObjectInstance& inst = scene.object(instance_id);
  Goal g;
  g.modality = modality;
  g.gt_instance_id = instance_id;
  g.gt_position = inst.centroid;
  switch (modality) {
    case GoalModality::Category: g.text = inst.category; break;
    case GoalModality::Text: g.text = inst.text_description; break;
    case GoalModality::Image:
      g.image_seed = image_seed;
      g.image = make_goal_image(scene, instance_id, image_seed, camera);
      break;
  }
  return g;
}

World::World(const Scene& scene, Pose start, CameraIntrinsics camera)
    : scene_(&scene), pose_(start), camera_(camera) {}

StepResult World::act(Action a) {
  StepResult r = step(*scene_, pose_, a);
  pose_ = r.pose;
  ++steps_;
  return r;
}

}  // namespace gsnav
