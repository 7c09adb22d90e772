#include "gsnav/image_metrics.hpp"

#include "gsnav/common.hpp"

#include <cmath>
#include <string>

namespace gsnav {

namespace {

// Summed-area table with one row/column of zero padding.
class Integral {
 public:
  Integral(int w, int h) : w_(w), s_((w + 1) * (h + 1), 0.0) {}
  template <typename F>
  void build(int h, F&& value) {
    for (int r = 0; r < h; ++r) {
      double row = 0.0;
      for (int c = 0; c < w_; ++c) {
        row += value(r, c);
        s_[(r + 1) * (w_ + 1) + c + 1] = s_[r * (w_ + 1) + c + 1] + row;
      }
    }
  }
  // Sum over rows [r0, r1) and columns [c0, c1).
  double sum(int r0, int c0, int r1, int c1) const {
    const int W = w_ + 1;
    return s_[r1 * W + c1] - s_[r0 * W + c1] - s_[r1 * W + c0] + s_[r0 * W + c0];
  }

 private:
  int w_;
  std::vector<double> s_;
};

void check_shapes(const ImageD& a, const ImageD& b) {
  if (!a.same_shape(b)) throw PreconditionError("ssim: image shapes differ");
  if (a.width() < kSsimWindow || a.height() < kSsimWindow) {
    throw PreconditionError("ssim: image smaller than the " + std::to_string(kSsimWindow) +
                            "x" + std::to_string(kSsimWindow) + " window");
  }
}

}  // namespace

double ssim_with_grad(const ImageD& a, const ImageD& b, ImageD* grad_a) {
  check_shapes(a, b);
  const int W = a.width(), H = a.height(), C = a.channels();
  const int k = kSsimWindow;
  const int ww = W - k + 1, wh = H - k + 1;  // window grid
  const double n = static_cast<double>(k * k);
  const double norm = 1.0 / (static_cast<double>(ww) * wh * C);
  if (grad_a) *grad_a = ImageD(W, H, C);

  double total = 0.0;
  std::vector<double> alpha, beta, gamma;
  if (grad_a) {
    alpha.resize(ww * wh);
    beta.resize(ww * wh);
    gamma.resize(ww * wh);
  }
  for (int ch = 0; ch < C; ++ch) {
    Integral sx(W, H), sy(W, H), sxx(W, H), syy(W, H), sxy(W, H);
    sx.build(H, [&](int r, int c) { return a(r, c, ch); });
    sy.build(H, [&](int r, int c) { return b(r, c, ch); });
    sxx.build(H, [&](int r, int c) { return a(r, c, ch) * a(r, c, ch); });
    syy.build(H, [&](int r, int c) { return b(r, c, ch) * b(r, c, ch); });
    sxy.build(H, [&](int r, int c) { return a(r, c, ch) * b(r, c, ch); });
    for (int r = 0; r < wh; ++r) {
      for (int c = 0; c < ww; ++c) {
        const double mx = sx.sum(r, c, r + k, c + k) / n;
        const double my = sy.sum(r, c, r + k, c + k) / n;
        const double vx = sxx.sum(r, c, r + k, c + k) / n - mx * mx;
        const double vy = syy.sum(r, c, r + k, c + k) / n - my * my;
        const double cxy = sxy.sum(r, c, r + k, c + k) / n - mx * my;
        const double a1 = 2 * mx * my + kSsimC1, a2 = 2 * cxy + kSsimC2;
        const double b1 = mx * mx + my * my + kSsimC1, b2 = vx + vy + kSsimC2;
        const double s = a1 * a2 / (b1 * b2);
        total += s;
        if (grad_a) {
          // dS/dx_p = alpha + beta x_p + gamma y_p for every pixel p in the window.
          const int w = r * ww + c;
          alpha[w] = (2 * my * a2 / (b1 * b2) - 2 * s * mx / b1 - 2 * a1 * my / (b1 * b2) +
                      2 * s * mx / b2) / n;
          beta[w] = -2 * s / (n * b2);
          gamma[w] = 2 * a1 / (n * b1 * b2);
        }
      }
    }
    if (grad_a) {
      Integral ia(ww, wh), ib(ww, wh), ig(ww, wh);
      ia.build(wh, [&](int r, int c) { return alpha[r * ww + c]; });
      ib.build(wh, [&](int r, int c) { return beta[r * ww + c]; });
      ig.build(wh, [&](int r, int c) { return gamma[r * ww + c]; });
      for (int r = 0; r < H; ++r) {
        const int r0 = std::max(0, r - k + 1), r1 = std::min(wh, r + 1);
        for (int c = 0; c < W; ++c) {
          const int c0 = std::max(0, c - k + 1), c1 = std::min(ww, c + 1);
          const double ga = ia.sum(r0, c0, r1, c1);
          const double gb = ib.sum(r0, c0, r1, c1);
          const double gg = ig.sum(r0, c0, r1, c1);
          (*grad_a)(r, c, ch) = norm * (ga + gb * a(r, c, ch) + gg * b(r, c, ch));
        }
      }
    }
  }
  return total * norm;
}

double ssim(const ImageD& a, const ImageD& b) { return ssim_with_grad(a, b, nullptr); }

double psnr(const ImageD& a, const ImageD& b, const std::vector<std::uint8_t>& mask) {
  if (!a.same_shape(b)) throw PreconditionError("psnr: image shapes differ");
  double se = 0.0;
  long count = 0;
  for (int p = 0; p < a.pixel_count(); ++p) {
    if (!mask[p]) continue;
    for (int ch = 0; ch < a.channels(); ++ch) {
      const double e = a.at(p, ch) - b.at(p, ch);
      se += e * e;
    }
    count += a.channels();
  }
  if (count == 0) throw PreconditionError("psnr: no covered pixels");
  const double mse = se / count;
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

}  // namespace gsnav
