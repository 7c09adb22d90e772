#pragma once

#include "gsnav/reconstruction.hpp"
#include "gsnav/render.hpp"
#include "gsnav/scene.hpp"
#include "gsnav/world.hpp"

#include <vector>

namespace gsnav::test {

// Views of a scene from a ring of poses looking slightly down, so that low
// objects are in frame.
inline std::vector<Observation> ring_views(const Scene& scene, const Vec2& center, int count,
                                           double pitch = -deg_to_rad(30.0)) {
  std::vector<Observation> out;
  for (int i = 0; i < count; ++i) {
    Pose p;
    p.x = center.x();
    p.y = center.y();
    p.yaw = 2.0 * kPi * i / count;
    p.pitch = pitch;
    out.push_back(render_observation(scene, p));
  }
  return out;
}

// Memory built by back-projecting the frames, without optimization, plus the
// simulator instance each Gaussian lies on (0 for walls and floor).
struct LabeledMemory {
  GaussianMemory memory;
  std::vector<int> label;
};

inline LabeledMemory backprojected_memory(const Scene& scene, const std::vector<Observation>& frames,
                                          double opacity = 0.9) {
  LabeledMemory out;
  InsertParams ip;
  ip.opacity = opacity;
  for (const auto& f : frames) {
    const RenderedFrame r = render(out.memory, f.pose, camera_of(f));
    insert_gaussians(out.memory, f, r, ip);
  }
  for (const Gaussian& g : out.memory.gaussians()) {
    int id = 0;
    for (const auto& o : scene.objects) {
      if (o.box().contains(g.mu, 0.02)) id = o.id;
    }
    out.label.push_back(id);
  }
  return out;
}

}  // namespace gsnav::test
