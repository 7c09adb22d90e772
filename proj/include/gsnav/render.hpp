#pragma once

#include "gsnav/camera.hpp"
#include "gsnav/gaussian.hpp"
#include "gsnav/image.hpp"

#include <cstdint>
#include <vector>

namespace gsnav {

struct RenderedFrame {
  ImageD color;    // H x W x 3, weight-normalized
  ImageD depth;    // H x W, weight-normalized range (m)
  ImageD feature;  // H x W x d, only when requested
  ImageD alpha;    // H x W accumulated opacity

  static constexpr double kUncovered = 1e-6;
  bool covered(int p) const { return alpha.at(p) > kUncovered; }
};

struct RenderOptions {
  bool features = false;
  // Footprint truncation in projected standard deviations. The falloff is
  // shifted so that it reaches zero exactly at the cut-off, which keeps the
  // rendered images continuous in every Gaussian parameter.
  double cutoff_sigma = 3.0;
  double min_transmittance = 1e-4;
  double near_plane = 0.1;
  // When non-empty, only Gaussians with a nonzero flag are rendered.
  std::vector<std::uint8_t> subset;
};

// Per-parameter gradients, indexed like the memory.
struct GeometryGradient {
  std::vector<Vec3> mu;
  std::vector<Vec3> color;
  std::vector<double> radius;
  std::vector<double> opacity;

  void resize(std::size_t n);
};

// Front-to-back splatting of isotropic Gaussians. The rasterizer keeps the
// per-pixel compositing lists of its last render so that gradients can be
// propagated back without re-rendering.
class Rasterizer {
 public:
  RenderedFrame render(const GaussianMemory& memory, const Pose& pose,
                       const CameraIntrinsics& camera, const RenderOptions& options = {});

  // Gradient of a loss given its partial derivatives with respect to the
  // rendered color, depth and alpha images of the last render. Any of the
  // images may be empty (treated as zero).
  GeometryGradient backward(const ImageD& d_color, const ImageD& d_depth,
                            const ImageD& d_alpha) const;

  // Gradient with respect to Gaussian features (d x N) given the partial
  // derivative with respect to the rendered feature image.
  Eigen::MatrixXd feature_backward(const ImageD& d_feature) const;

 private:
  struct Projected {
    int index;      // into the memory
    double u, v;    // projected center (pixels)
    double sigma;   // projected standard deviation (pixels)
    double range;   // distance from the camera center
    Vec3 cam;       // camera-frame position
    Vec3 color;
    double opacity;
  };
  struct Contribution {
    int proj;      // into projected_
    int prev;      // previous contribution at the same pixel, -1 at the front
    double a;      // alpha of this Gaussian at the pixel
    double t;      // transmittance in front of it
    double g;      // untruncated falloff value
  };

  const GaussianMemory* memory_ = nullptr;
  CameraFrame frame_{};
  double focal_ = 0;
  int width_ = 0;
  int height_ = 0;
  double cutoff_ = 3.0;
  std::vector<Projected> projected_;
  // Compositing lists stored back to front: tail_[p] is the index of the
  // rearmost contribution at pixel p, linked through `prev`.
  std::vector<Contribution> contribs_;
  std::vector<int> tail_;
  RenderedFrame last_;
};

// Convenience wrapper for one-off renders.
RenderedFrame render(const GaussianMemory& memory, const Pose& pose,
                     const CameraIntrinsics& camera, const RenderOptions& options = {});

}  // namespace gsnav
