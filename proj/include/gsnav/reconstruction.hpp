#pragma once

#include "gsnav/gaussian.hpp"
#include "gsnav/render.hpp"
#include "gsnav/world.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace gsnav {

struct LossWeights {
  double lambda = 0.2;  // SSIM share of the color term
  double mu_d = 1.0;    // depth weight
  double cover_alpha = 0.5;
};

struct GeometryLoss {
  double total = 0.0;
  double l1_color = 0.0;
  double ssim = 1.0;
  double l1_depth = 0.0;
  long pixels = 0;
};

// Pixels entering the loss: rendered alpha >= cover_alpha and valid observed depth.
std::vector<std::uint8_t> loss_mask(const RenderedFrame& rendered, const Observation& obs,
                                    double cover_alpha = 0.5);

// (1 - lambda) mean|C - C_obs| + lambda (1 - SSIM) + mu_d mean|D - D_obs| over
// the loss mask. SSIM compares the observation with a composite that takes
// rendered colors inside the mask and observed colors elsewhere. When
// `d_color`/`d_depth` are given they receive the partial derivatives with the
// mask held fixed. Throws PreconditionError when the mask is empty.
GeometryLoss geometry_loss(const RenderedFrame& rendered, const Observation& obs,
                           const LossWeights& weights, ImageD* d_color = nullptr,
                           ImageD* d_depth = nullptr);

// PSNR of the rendered color over the loss mask.
double render_psnr(const RenderedFrame& rendered, const Observation& obs, double cover_alpha = 0.5);

struct InsertParams {
  double cover_alpha = 0.5;
  double depth_tolerance = 0.1;
  int stride = 4;
  double opacity = 0.5;
};

// Spawns a Gaussian at the observed surface point of every stride-th valid
// pixel that is under-covered or whose rendered depth is off by more than
// the tolerance. The radius matches the stride-scaled pixel footprint at
// that depth. Returns the number of Gaussians added.
std::size_t insert_gaussians(GaussianMemory& memory, const Observation& obs,
                             const RenderedFrame& rendered, const InsertParams& params = {});

struct OptimParams {
  double lr_mu = 1e-3;
  double lr_color = 2e-2;
  double lr_radius = 1e-3;  // on log(radius)
  double lr_opacity = 5e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  // Large enough that negligible gradients (e.g. leakage through surfaces)
  // do not turn into full-size normalized steps.
  double epsilon = 1e-3;
  int divergence_window = 5;
  LossWeights loss;
};

// Adam over {mu, color, radius, opacity} with per-class learning rates. The
// moment estimates live as long as the optimizer, which must be recreated
// when Gaussians are added or removed.
class GeometryOptimizer {
 public:
  GeometryOptimizer(std::size_t n, const OptimParams& params);

  // One iteration on `obs`: render, loss, gradient, update, re-clamp.
  // Returns the loss before the update.
  GeometryLoss step(GaussianMemory& memory, const Observation& obs);
  void halve_learning_rates();
  double lr_scale() const { return lr_scale_; }

 private:
  void adam(double& x, double g, double& m, double& v, double lr) const;

  OptimParams params_;
  double lr_scale_ = 1.0;
  long t_ = 0;
  std::vector<double> m_, v_;  // 8 slots per Gaussian
  Rasterizer raster_;
};

struct OptimizeReport {
  std::vector<double> losses;  // before each iteration
  int halvings = 0;
};

// `iters` iterations on one observation, halving the learning rates whenever
// the loss has increased for `divergence_window` consecutive iterations.
OptimizeReport optimize_step(GaussianMemory& memory, const Observation& obs, int iters,
                             const OptimParams& params = {});
OptimizeReport optimize_step(GeometryOptimizer& optimizer, GaussianMemory& memory,
                             const Observation& obs, int iters, int divergence_window = 5);

struct FramePool {
  std::vector<Observation> frames;
  std::vector<double> psnr;  // last evaluated PSNR per frame (dB)

  std::size_t size() const { return frames.size(); }
};

inline constexpr double kKeyframeEpsilon = 0.1;

// Sampling weights max(PSNR_max - PSNR_i, eps), normalized.
std::vector<double> keyframe_probabilities(const std::vector<double>& psnr,
                                           double eps = kKeyframeEpsilon);
std::size_t sample_keyframe_index(const FramePool& pool, std::mt19937_64& rng,
                                  double eps = kKeyframeEpsilon);
const Observation& sample_keyframe(const FramePool& pool, std::mt19937_64& rng,
                                   double eps = kKeyframeEpsilon);

// Re-renders every pool frame at 1/downsample resolution and stores the PSNRs.
void refresh_pool_psnr(const GaussianMemory& memory, FramePool& pool, int downsample = 4);
// Mean PSNR over the pool at 1/downsample resolution.
double mean_pool_psnr(const GaussianMemory& memory, const FramePool& pool, int downsample = 1);

struct ReconstructParams {
  int p1 = 30;
  int p2 = 60;
  int psnr_refresh_every = 10;
  int psnr_downsample = 4;
  double prune_opacity = 0.05;
  // Use every n-th frame of the log.
  int frame_stride = 1;
  std::uint64_t seed = 0;
  InsertParams insert;
  OptimParams optim;
};

struct ReconstructResult {
  GaussianMemory memory;
  FramePool pool;
};

using ReconstructProgress = std::function<void(std::size_t frame, std::size_t total,
                                               const GaussianMemory& memory)>;

// Online mapping over the frame log: per frame render -> insert -> p1
// iterations on the frame -> p2 iterations on sampled keyframes -> prune.
ReconstructResult reconstruct(const std::vector<Observation>& frame_log,
                              const ReconstructParams& params = {},
                              const ReconstructProgress& progress = {});

}  // namespace gsnav
