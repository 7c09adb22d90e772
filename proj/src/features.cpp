#include "gsnav/features.hpp"

#include <cmath>
#include <random>

namespace gsnav {

namespace {

struct MaskStats {
  std::vector<int> pixels;
  Eigen::VectorXd mean;
};

}  // namespace

FeatureLoss feature_loss(const RenderedFrame& rendered, const std::vector<InstanceMask>& masks,
                         const FeatureLossParams& params, ImageD* d_feature) {
  const int w = rendered.alpha.width(), h = rendered.alpha.height();
  const int d = rendered.feature.channels();
  if (d == 0) throw PreconditionError("feature_loss: frame was rendered without features");
  if (d_feature) *d_feature = ImageD(w, h, d, 0.0);
  auto f = [&](int p) { return Eigen::Map<const Eigen::VectorXd>(&rendered.feature.raw()[std::size_t(p) * d], d); };

  std::vector<MaskStats> stats;
  for (const auto& m : masks) {
    if (m.width != w || m.height != h) throw PreconditionError("feature_loss: mask size mismatch");
    MaskStats s;
    s.mean = Eigen::VectorXd::Zero(d);
    for (int p = 0; p < w * h; ++p) {
      if (m.pixels[p] && rendered.alpha.at(p) >= params.cover_alpha) {
        s.pixels.push_back(p);
        s.mean += f(p);
      }
    }
    if (s.pixels.empty()) continue;
    s.mean /= static_cast<double>(s.pixels.size());
    stats.push_back(std::move(s));
  }

  FeatureLoss loss;
  loss.masks = static_cast<int>(stats.size());
  std::vector<Eigen::VectorXd> d_mean(stats.size(), Eigen::VectorXd::Zero(d));
  for (const auto& s : stats) {
    const double inv = 1.0 / static_cast<double>(s.pixels.size());
    for (int p : s.pixels) {
      const Eigen::VectorXd r = f(p) - s.mean;
      loss.intra += inv * r.squaredNorm();
      // The mean's own dependence cancels since the residuals sum to zero.
      if (d_feature) {
        for (int c = 0; c < d; ++c) d_feature->at(p, c) += 2.0 * inv * r[c];
      }
    }
  }
  for (std::size_t a = 0; a < stats.size(); ++a) {
    for (std::size_t b = 0; b < stats.size(); ++b) {
      if (a == b) continue;
      const Eigen::VectorXd diff = stats[a].mean - stats[b].mean;
      const double dist = diff.norm();
      if (dist >= params.margin) continue;
      const double gap = params.margin - dist;
      loss.inter += params.beta * gap * gap;
      if (dist > 0.0) {
        const Eigen::VectorXd g = -2.0 * params.beta * gap / dist * diff;
        d_mean[a] += g;
        d_mean[b] -= g;
      }
    }
  }
  if (d_feature) {
    for (std::size_t a = 0; a < stats.size(); ++a) {
      const Eigen::VectorXd g = d_mean[a] / static_cast<double>(stats[a].pixels.size());
      for (int p : stats[a].pixels) {
        for (int c = 0; c < d; ++c) d_feature->at(p, c) += g[c];
      }
    }
  }
  loss.total = loss.intra + loss.inter;
  return loss;
}

FeatureOptimReport optimize_features(GaussianMemory& memory, const std::vector<Observation>& frames,
                                     const PerceptionProviders& providers,
                                     const FeatureOptimParams& params) {
  FeatureOptimReport rep;
  std::vector<std::size_t> usable;
  std::vector<std::vector<InstanceMask>> masks(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    masks[i] = providers.segment(frames[i], static_cast<int>(i));
    if (!masks[i].empty()) usable.push_back(i);
  }
  rep.frames_used = static_cast<int>(usable.size());
  if (usable.empty() || memory.empty()) return rep;

  const int d = memory.feature_dim();
  const std::size_t n = memory.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, n), v = Eigen::MatrixXd::Zero(d, n);
  std::mt19937_64 rng(mix_seed(params.seed, 0xFEA70));
  std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
  Rasterizer raster;
  RenderOptions opts;
  opts.features = true;
  for (int it = 1; it <= params.iters; ++it) {
    const std::size_t fi = usable[pick(rng)];
    const Observation& obs = frames[fi];
    const RenderedFrame r = raster.render(memory, obs.pose, camera_of(obs), opts);
    ImageD d_feature;
    rep.losses.push_back(feature_loss(r, masks[fi], params.loss, &d_feature).total);
    const Eigen::MatrixXd g = raster.feature_backward(d_feature);
    const double c1 = 1.0 - std::pow(params.beta1, it), c2 = 1.0 - std::pow(params.beta2, it);
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::VectorXd& x = memory.feature(i);
      for (int k = 0; k < d; ++k) {
        const double gk = g(k, i);
        m(k, i) = params.beta1 * m(k, i) + (1.0 - params.beta1) * gk;
        v(k, i) = params.beta2 * v(k, i) + (1.0 - params.beta2) * gk * gk;
        x[k] -= params.lr * (m(k, i) / c1) / (std::sqrt(v(k, i) / c2) + params.epsilon);
      }
    }
  }
  return rep;
}

}  // namespace gsnav
