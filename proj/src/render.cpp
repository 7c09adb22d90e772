#include "gsnav/render.hpp"

#include <algorithm>
#include <cmath>

namespace gsnav {

void GeometryGradient::resize(std::size_t n) {
  mu.assign(n, Vec3::Zero());
  color.assign(n, Vec3::Zero());
  radius.assign(n, 0.0);
  opacity.assign(n, 0.0);
}

RenderedFrame Rasterizer::render(const GaussianMemory& memory, const Pose& pose,
                                 const CameraIntrinsics& camera, const RenderOptions& options) {
  memory_ = &memory;
  frame_ = CameraFrame::from_pose(pose);
  focal_ = camera.focal();
  width_ = camera.width;
  height_ = camera.height;
  cutoff_ = options.cutoff_sigma;
  const int d = memory.feature_dim();
  const int npix = width_ * height_;

  projected_.clear();
  const auto& gs = memory.gaussians();
  for (std::size_t i = 0; i < gs.size(); ++i) {
    if (!options.subset.empty() && !options.subset[i]) continue;
    const Gaussian& g = gs[i];
    const Vec3 q = frame_.to_camera(g.mu);
    if (q.z() <= options.near_plane) continue;
    const double sigma = focal_ * g.radius / q.z();
    const double u = camera.cx() + focal_ * q.x() / q.z();
    const double v = camera.cy() + focal_ * q.y() / q.z();
    const double ext = cutoff_ * sigma;
    if (u + ext < 0 || u - ext > width_ || v + ext < 0 || v - ext > height_) continue;
    projected_.push_back(
        {static_cast<int>(i), u, v, sigma, (g.mu - frame_.origin).norm(), q, g.color, g.opacity});
  }
  std::stable_sort(projected_.begin(), projected_.end(),
                   [](const Projected& a, const Projected& b) { return a.cam.z() < b.cam.z(); });

  contribs_.clear();
  tail_.assign(npix, -1);
  std::vector<double> trans(npix, 1.0);
  RenderedFrame out;
  out.color = ImageD(width_, height_, 3);
  out.depth = ImageD(width_, height_, 1);
  out.alpha = ImageD(width_, height_, 1);
  if (options.features) out.feature = ImageD(width_, height_, d);

  const double eps = std::exp(-0.5 * cutoff_ * cutoff_);
  const double scale = 1.0 / (1.0 - eps);
  std::vector<double> colf;
  for (int k = 0; k < static_cast<int>(projected_.size()); ++k) {
    const Projected& pg = projected_[k];
    const Gaussian& g = gs[pg.index];
    const double ext = cutoff_ * pg.sigma;
    const int c0 = std::max(0, static_cast<int>(std::floor(pg.u - ext - 0.5)));
    const int c1 = std::min(width_ - 1, static_cast<int>(std::ceil(pg.u + ext - 0.5)));
    const int r0 = std::max(0, static_cast<int>(std::floor(pg.v - ext - 0.5)));
    const int r1 = std::min(height_ - 1, static_cast<int>(std::ceil(pg.v + ext - 0.5)));
    const double inv2s2 = 0.5 / (pg.sigma * pg.sigma);
    // The falloff is separable: exp(-(du^2 + dv^2) k) = exp(-du^2 k) exp(-dv^2 k).
    colf.resize(c1 - c0 + 1);
    for (int col = c0; col <= c1; ++col) {
      const double du = col + 0.5 - pg.u;
      colf[col - c0] = std::exp(-du * du * inv2s2);
    }
    for (int row = r0; row <= r1; ++row) {
      const double dv = row + 0.5 - pg.v;
      const double rowf = std::exp(-dv * dv * inv2s2);
      if (rowf <= eps) continue;
      for (int col = c0; col <= c1; ++col) {
        const double fall = rowf * colf[col - c0];
        if (fall <= eps) continue;
        const int p = row * width_ + col;
        const double t = trans[p];
        if (t < options.min_transmittance) continue;
        const double a = g.opacity * (fall - eps) * scale;
        if (a <= 0.0) continue;
        const double w = a * t;
        double* px = &out.color.at(p, 0);
        px[0] += w * g.color[0];
        px[1] += w * g.color[1];
        px[2] += w * g.color[2];
        out.depth.at(p) += w * pg.range;
        out.alpha.at(p) += w;
        if (options.features) {
          for (int ch = 0; ch < d; ++ch) out.feature.at(p, ch) += w * g.feature[ch];
        }
        trans[p] = t * (1.0 - a);
        contribs_.push_back({k, tail_[p], a, t, fall});
        tail_[p] = static_cast<int>(contribs_.size()) - 1;
      }
    }
  }
  for (int p = 0; p < npix; ++p) {
    const double a = out.alpha.at(p);
    if (a <= 0.0) continue;
    for (int ch = 0; ch < 3; ++ch) out.color.at(p, ch) /= a;
    out.depth.at(p) /= a;
    if (options.features) {
      for (int ch = 0; ch < d; ++ch) out.feature.at(p, ch) /= a;
    }
  }
  last_ = out;
  return out;
}

GeometryGradient Rasterizer::backward(const ImageD& d_color, const ImageD& d_depth,
                                      const ImageD& d_alpha) const {
  GeometryGradient grad;
  if (memory_ == nullptr) return grad;
  grad.resize(memory_->size());
  const auto& gs = memory_->gaussians();
  const int np = static_cast<int>(projected_.size());
  // Accumulated per projected Gaussian, scattered to memory order at the end.
  struct Acc {
    Vec3 color = Vec3::Zero();
    double u = 0, v = 0, sigma = 0, range = 0, opacity = 0;
  };
  std::vector<Acc> acc(np);
  const double eps = std::exp(-0.5 * cutoff_ * cutoff_);
  const double scale = 1.0 / (1.0 - eps);
  const bool has_c = !d_color.empty(), has_d = !d_depth.empty(), has_a = !d_alpha.empty();

  for (int p = 0; p < width_ * height_; ++p) {
    if (tail_[p] < 0) continue;
    const double A = last_.alpha.at(p);
    Vec3 gc = Vec3::Zero();
    double gd = 0.0, ga = has_a ? d_alpha.at(p) : 0.0;
    if (has_c) gc = Vec3(d_color.at(p, 0), d_color.at(p, 1), d_color.at(p, 2));
    if (has_d) gd = d_depth.at(p);
    if (gc.isZero() && gd == 0.0 && ga == 0.0) continue;
    // Outputs are N / A: convert to gradients on the unnormalized sums.
    const Vec3 C(last_.color.at(p, 0), last_.color.at(p, 1), last_.color.at(p, 2));
    const double D = last_.depth.at(p);
    const Vec3 gN = gc / A;
    const double gNd = gd / A;
    const double gA = ga - (gc.dot(C) + gd * D) / A;

    Vec3 s_c = Vec3::Zero();
    double s_d = 0.0, s_a = 0.0;
    const double px = p % width_ + 0.5, py = p / width_ + 0.5;
    for (int ci = tail_[p]; ci >= 0; ci = contribs_[ci].prev) {
      const Contribution& c = contribs_[ci];
      const Projected& pg = projected_[c.proj];
      Acc& ac = acc[c.proj];
      const double w = c.a * c.t;
      ac.color += w * gN;
      ac.range += w * gNd;
      const double d_a =
          c.t * (gN.dot(pg.color - s_c) + gNd * (pg.range - s_d) + gA * (1.0 - s_a));
      s_c = c.a * pg.color + (1.0 - c.a) * s_c;
      s_d = c.a * pg.range + (1.0 - c.a) * s_d;
      s_a = c.a + (1.0 - c.a) * s_a;

      ac.opacity += d_a * (c.g - eps) * scale;
      const double k = d_a * pg.opacity * scale * c.g / (pg.sigma * pg.sigma);
      const double du = px - pg.u, dv = py - pg.v;
      ac.u += k * du;
      ac.v += k * dv;
      ac.sigma += k * (du * du + dv * dv) / pg.sigma;
    }
  }

  for (int k = 0; k < np; ++k) {
    const Projected& pg = projected_[k];
    const Acc& ac = acc[k];
    const Gaussian& g = gs[pg.index];
    const double x = pg.cam.x(), y = pg.cam.y(), z = pg.cam.z();
    const double f = focal_;
    const Vec3 dq(ac.u * f / z, ac.v * f / z,
                  -(ac.u * f * x + ac.v * f * y + ac.sigma * f * g.radius) / (z * z));
    Vec3 dmu = dq.x() * frame_.right + dq.y() * frame_.down + dq.z() * frame_.forward;
    dmu += ac.range * (g.mu - frame_.origin) / pg.range;
    grad.mu[pg.index] += dmu;
    grad.color[pg.index] += ac.color;
    grad.radius[pg.index] += ac.sigma * f / z;
    grad.opacity[pg.index] += ac.opacity;
  }
  return grad;
}

Eigen::MatrixXd Rasterizer::feature_backward(const ImageD& d_feature) const {
  if (memory_ == nullptr) return {};
  const int d = memory_->feature_dim();
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(memory_->size()));
  for (int p = 0; p < width_ * height_; ++p) {
    if (tail_[p] < 0) continue;
    const double A = last_.alpha.at(p);
    Eigen::VectorXd gF(d);
    bool any = false;
    for (int ch = 0; ch < d; ++ch) {
      gF[ch] = d_feature.at(p, ch) / A;
      any = any || gF[ch] != 0.0;
    }
    if (!any) continue;
    for (int ci = tail_[p]; ci >= 0; ci = contribs_[ci].prev) {
      const Contribution& c = contribs_[ci];
      grad.col(projected_[c.proj].index) += (c.a * c.t) * gF;
    }
  }
  return grad;
}

RenderedFrame render(const GaussianMemory& memory, const Pose& pose,
                     const CameraIntrinsics& camera, const RenderOptions& options) {
  Rasterizer r;
  return r.render(memory, pose, camera, options);
}

}  // namespace gsnav
