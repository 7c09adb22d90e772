#include "gsnav/reconstruction.hpp"

#include "gsnav/image_metrics.hpp"

#include <algorithm>
#include <cmath>

namespace gsnav {

namespace {

// Observations are stored in single precision; residuals below this are
// rounding and must not produce a gradient direction.
constexpr double kResidualTolerance = 1e-6;

double sign(double x) {
  if (std::abs(x) <= kResidualTolerance) return 0.0;
  return (x > 0) - (x < 0);
}

}  // namespace

std::vector<std::uint8_t> loss_mask(const RenderedFrame& rendered, const Observation& obs,
                                    double cover_alpha) {
  const int n = obs.depth.pixel_count();
  std::vector<std::uint8_t> mask(n, 0);
  for (int p = 0; p < n; ++p) {
    mask[p] = rendered.alpha.at(p) >= cover_alpha && valid_depth(obs.depth.at(p));
  }
  return mask;
}

GeometryLoss geometry_loss(const RenderedFrame& rendered, const Observation& obs,
                           const LossWeights& weights, ImageD* d_color, ImageD* d_depth) {
  if (rendered.color.width() != obs.rgb.width() || rendered.color.height() != obs.rgb.height()) {
    throw PreconditionError("geometry_loss: rendered and observed shapes differ");
  }
  const auto mask = loss_mask(rendered, obs, weights.cover_alpha);
  const int n = obs.depth.pixel_count();
  GeometryLoss out;
  out.pixels = std::count(mask.begin(), mask.end(), 1);
  if (out.pixels == 0) throw PreconditionError("geometry_loss: no covered pixels");

  const ImageD observed = to_double(obs.rgb);
  ImageD composite = observed;
  double l1c = 0.0, l1d = 0.0;
  for (int p = 0; p < n; ++p) {
    if (!mask[p]) continue;
    for (int ch = 0; ch < 3; ++ch) {
      if (std::abs(rendered.color.at(p, ch) - observed.at(p, ch)) > kResidualTolerance) {
        composite.at(p, ch) = rendered.color.at(p, ch);
      }
      l1c += std::abs(rendered.color.at(p, ch) - observed.at(p, ch));
    }
    l1d += std::abs(rendered.depth.at(p) - static_cast<double>(obs.depth.at(p)));
  }
  const double m = static_cast<double>(out.pixels);
  out.l1_color = l1c / (3.0 * m);
  out.l1_depth = l1d / m;

  const bool with_ssim = weights.lambda != 0.0;
  ImageD d_ssim;
  if (with_ssim) out.ssim = ssim_with_grad(composite, observed, d_color ? &d_ssim : nullptr);
  out.total = (1.0 - weights.lambda) * out.l1_color + weights.lambda * (1.0 - out.ssim) +
              weights.mu_d * out.l1_depth;

  if (d_color) {
    *d_color = ImageD(obs.rgb.width(), obs.rgb.height(), 3);
    const double kc = (1.0 - weights.lambda) / (3.0 * m);
    for (int p = 0; p < n; ++p) {
      if (!mask[p]) continue;
      for (int ch = 0; ch < 3; ++ch) {
        double g = kc * sign(rendered.color.at(p, ch) - observed.at(p, ch));
        if (with_ssim) g -= weights.lambda * d_ssim.at(p, ch);
        d_color->at(p, ch) = g;
      }
    }
  }
  if (d_depth) {
    *d_depth = ImageD(obs.rgb.width(), obs.rgb.height(), 1);
    const double kd = weights.mu_d / m;
    for (int p = 0; p < n; ++p) {
      if (mask[p]) d_depth->at(p) = kd * sign(rendered.depth.at(p) - obs.depth.at(p));
    }
  }
  return out;
}

double render_psnr(const RenderedFrame& rendered, const Observation& obs, double cover_alpha) {
  return psnr(rendered.color, to_double(obs.rgb), loss_mask(rendered, obs, cover_alpha));
}

std::size_t insert_gaussians(GaussianMemory& memory, const Observation& obs,
                             const RenderedFrame& rendered, const InsertParams& params) {
  const CameraIntrinsics cam = camera_of(obs);
  const CameraFrame frame = CameraFrame::from_pose(obs.pose);
  const double f = cam.focal();
  const int s = std::max(1, params.stride);
  const bool have_render = !rendered.alpha.empty();
  std::size_t added = 0;
  for (int row = s / 2; row < cam.height; row += s) {
    for (int col = s / 2; col < cam.width; col += s) {
      const float d = obs.depth(row, col);
      if (!valid_depth(d)) continue;
      if (have_render) {
        const double a = rendered.alpha(row, col);
        const bool covered = a >= params.cover_alpha &&
                             std::abs(rendered.depth(row, col) - d) <= params.depth_tolerance;
        if (covered) continue;
      }
      const Vec3 dir = frame.to_world_dir(pixel_ray_camera(cam, row, col)).normalized();
      Gaussian g;
      g.mu = frame.origin + static_cast<double>(d) * dir;
      g.color = Vec3(obs.rgb(row, col, 0), obs.rgb(row, col, 1), obs.rgb(row, col, 2));
      g.radius = std::clamp(d * s / (2.0 * f), kMinRadius, kMaxRadius);
      g.opacity = params.opacity;
      memory.add(std::move(g));
      ++added;
    }
  }
  return added;
}

GeometryOptimizer::GeometryOptimizer(std::size_t n, const OptimParams& params)
    : params_(params), m_(8 * n, 0.0), v_(8 * n, 0.0) {}

void GeometryOptimizer::halve_learning_rates() { lr_scale_ *= 0.5; }

void GeometryOptimizer::adam(double& x, double g, double& m, double& v, double lr) const {
  m = params_.beta1 * m + (1.0 - params_.beta1) * g;
  v = params_.beta2 * v + (1.0 - params_.beta2) * g * g;
  const double mh = m / (1.0 - std::pow(params_.beta1, static_cast<double>(t_)));
  const double vh = v / (1.0 - std::pow(params_.beta2, static_cast<double>(t_)));
  x -= lr * lr_scale_ * mh / (std::sqrt(vh) + params_.epsilon);
}

GeometryLoss GeometryOptimizer::step(GaussianMemory& memory, const Observation& obs) {
  auto& gs = memory.mutable_gaussians();
  if (m_.size() != 8 * gs.size()) {
    throw PreconditionError("optimizer was created for a different number of Gaussians");
  }
  const RenderedFrame r = raster_.render(memory, obs.pose, camera_of(obs));
  ImageD d_color, d_depth;
  const GeometryLoss loss = geometry_loss(r, obs, params_.loss, &d_color, &d_depth);
  const GeometryGradient grad = raster_.backward(d_color, d_depth, {});
  ++t_;
  for (std::size_t i = 0; i < gs.size(); ++i) {
    Gaussian& g = gs[i];
    double* m = &m_[8 * i];
    double* v = &v_[8 * i];
    for (int k = 0; k < 3; ++k) adam(g.mu[k], grad.mu[i][k], m[k], v[k], params_.lr_mu);
    for (int k = 0; k < 3; ++k) {
      adam(g.color[k], grad.color[i][k], m[3 + k], v[3 + k], params_.lr_color);
    }
    // Scale steps are relative: Adam runs on log(radius).
    double log_r = std::log(g.radius);
    adam(log_r, g.radius * grad.radius[i], m[6], v[6], params_.lr_radius);
    g.radius = std::exp(log_r);
    adam(g.opacity, grad.opacity[i], m[7], v[7], params_.lr_opacity);
  }
  memory.clamp();
  return loss;
}

OptimizeReport optimize_step(GeometryOptimizer& optimizer, GaussianMemory& memory,
                             const Observation& obs, int iters, int divergence_window) {
  OptimizeReport rep;
  int rising = 0;
  for (int it = 0; it < iters; ++it) {
    const double loss = optimizer.step(memory, obs).total;
    if (!rep.losses.empty() && loss > rep.losses.back()) {
      if (++rising >= divergence_window) {
        optimizer.halve_learning_rates();
        ++rep.halvings;
        rising = 0;
      }
    } else {
      rising = 0;
    }
    rep.losses.push_back(loss);
  }
  return rep;
}

OptimizeReport optimize_step(GaussianMemory& memory, const Observation& obs, int iters,
                             const OptimParams& params) {
  GeometryOptimizer opt(memory.size(), params);
  return optimize_step(opt, memory, obs, iters, params.divergence_window);
}

std::vector<double> keyframe_probabilities(const std::vector<double>& psnr, double eps) {
  std::vector<double> w(psnr.size());
  if (psnr.empty()) return w;
  const double top = *std::max_element(psnr.begin(), psnr.end());
  double total = 0.0;
  for (std::size_t i = 0; i < psnr.size(); ++i) {
    w[i] = std::max(top - psnr[i], eps);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

std::size_t sample_keyframe_index(const FramePool& pool, std::mt19937_64& rng, double eps) {
  if (pool.frames.empty()) throw PreconditionError("sample_keyframe: empty pool");
  if (pool.psnr.size() != pool.frames.size()) {
    throw PreconditionError("sample_keyframe: PSNR cache not populated");
  }
  const auto w = keyframe_probabilities(pool.psnr, eps);
  std::discrete_distribution<std::size_t> dist(w.begin(), w.end());
  return dist(rng);
}

const Observation& sample_keyframe(const FramePool& pool, std::mt19937_64& rng, double eps) {
  return pool.frames[sample_keyframe_index(pool, rng, eps)];
}

namespace {

double frame_psnr(Rasterizer& raster, const GaussianMemory& memory, const Observation& obs,
                  int downsample) {
  const Observation small = downsample > 1 ? gsnav::downsample(obs, downsample) : obs;
  const RenderedFrame r = raster.render(memory, small.pose, camera_of(small));
  const auto mask = loss_mask(r, small);
  if (std::find(mask.begin(), mask.end(), 1) == mask.end()) return 0.0;
  return psnr(r.color, to_double(small.rgb), mask);
}

}  // namespace

void refresh_pool_psnr(const GaussianMemory& memory, FramePool& pool, int downsample) {
  Rasterizer raster;
  pool.psnr.resize(pool.frames.size());
  for (std::size_t i = 0; i < pool.frames.size(); ++i) {
    pool.psnr[i] = frame_psnr(raster, memory, pool.frames[i], downsample);
  }
}

double mean_pool_psnr(const GaussianMemory& memory, const FramePool& pool, int downsample) {
  if (pool.frames.empty()) return 0.0;
  Rasterizer raster;
  double sum = 0.0;
  for (const Observation& f : pool.frames) sum += frame_psnr(raster, memory, f, downsample);
  return sum / static_cast<double>(pool.frames.size());
}

ReconstructResult reconstruct(const std::vector<Observation>& frame_log,
                              const ReconstructParams& params,
                              const ReconstructProgress& progress) {
  if (frame_log.empty()) throw PreconditionError("reconstruct: empty frame log");
  ReconstructResult out;
  std::mt19937_64 rng(params.seed);
  Rasterizer raster;
  const int stride = std::max(1, params.frame_stride);
  std::size_t processed = 0;
  const std::size_t total = (frame_log.size() + stride - 1) / stride;
  for (std::size_t fi = 0; fi < frame_log.size(); fi += stride) {
    const Observation& obs = frame_log[fi];
    if (!out.memory.empty()) {
      const RenderedFrame r = raster.render(out.memory, obs.pose, camera_of(obs));
      insert_gaussians(out.memory, obs, r, params.insert);
    } else {
      insert_gaussians(out.memory, obs, RenderedFrame{}, params.insert);
    }
    const RenderedFrame r = raster.render(out.memory, obs.pose, camera_of(obs));
    const auto mask = loss_mask(r, obs, params.optim.loss.cover_alpha);
    if (std::find(mask.begin(), mask.end(), 1) != mask.end()) {
      GeometryOptimizer opt(out.memory.size(), params.optim);
      optimize_step(opt, out.memory, obs, params.p1, params.optim.divergence_window);
      // The frame joins the pool before the keyframe stage so that a
      // single-frame log still receives the keyframe iterations.
      out.pool.frames.push_back(obs);
      out.pool.psnr.push_back(frame_psnr(raster, out.memory, obs, params.psnr_downsample));
      for (int it = 0; it < params.p2; ++it) {
        const Observation& key = sample_keyframe(out.pool, rng);
        try {
          opt.step(out.memory, key);
        } catch (const PreconditionError&) {
          // Keyframe no longer covered by any Gaussian; nothing to fit.
        }
      }
      out.memory.prune(params.prune_opacity);
    }
    ++processed;
    if (params.psnr_refresh_every > 0 && processed % params.psnr_refresh_every == 0) {
      refresh_pool_psnr(out.memory, out.pool, params.psnr_downsample);
    }
    if (progress) progress(processed, total, out.memory);
  }
  return out;
}

}  // namespace gsnav
