#pragma once

#include "gsnav/gaussian.hpp"
#include "gsnav/perception.hpp"
#include "gsnav/render.hpp"
#include "gsnav/world.hpp"

#include <cstdint>
#include <vector>

namespace gsnav {

struct FeatureLossParams {
  double beta = 0.5;
  double margin = 1.0;
  // Rendered pixels with lower accumulated opacity do not take part.
  double cover_alpha = 0.5;
};

struct FeatureLoss {
  double total = 0.0;
  double intra = 0.0;
  double inter = 0.0;
  int masks = 0;  // masks with at least one covered pixel
};

// Pull term: mean squared distance of each mask's rendered features to the
// mask mean. Push term: squared hinge on the distance between the means of
// every ordered pair of masks. `d_feature`, when given, receives the partial
// derivative with respect to the rendered feature image.
FeatureLoss feature_loss(const RenderedFrame& rendered, const std::vector<InstanceMask>& masks,
                         const FeatureLossParams& params, ImageD* d_feature);

struct FeatureOptimParams {
  int iters = 500;
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  FeatureLossParams loss;
};

struct FeatureOptimReport {
  std::vector<double> losses;  // one per iteration
  int frames_used = 0;         // frames with at least one mask
};

// Adam on Gaussian features only; each iteration uses one frame drawn
// uniformly from the frames that have masks. Frames without masks are
// skipped. Geometry is left untouched.
FeatureOptimReport optimize_features(GaussianMemory& memory, const std::vector<Observation>& frames,
                                     const PerceptionProviders& providers,
                                     const FeatureOptimParams& params = {});

}  // namespace gsnav
