#pragma once

#include "gsnav/image.hpp"

#include <cstdint>
#include <vector>

namespace gsnav {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr double kPsnrCap = 99.0;

template <typename T>
ImageD to_double(const Image<T>& img) {
  ImageD out(img.width(), img.height(), img.channels());
  for (std::size_t i = 0; i < img.raw().size(); ++i) out.raw()[i] = img.raw()[i];
  return out;
}

// Mean SSIM over every 11x11 window lying fully inside the image (uniform
// weights, population statistics), averaged over channels. Throws
// PreconditionError on a shape mismatch or an image smaller than the window.
double ssim(const ImageD& a, const ImageD& b);
// Same value; also writes dSSIM/da into `grad_a` (shape of `a`).
double ssim_with_grad(const ImageD& a, const ImageD& b, ImageD* grad_a);

// 10 log10(1 / MSE) over the pixels with a nonzero mask entry (all channels),
// capped at kPsnrCap. Throws PreconditionError when the mask is empty.
double psnr(const ImageD& a, const ImageD& b, const std::vector<std::uint8_t>& mask);

}  // namespace gsnav
