#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace gsnav {

// Row-major H x W x C buffer.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 1, T fill = T{})
      : width_(width), height_(height), channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  int pixel_count() const { return width_ * height_; }
  bool empty() const { return data_.empty(); }

  T& operator()(int row, int col, int ch = 0) {
    assert(row >= 0 && row < height_ && col >= 0 && col < width_);
    return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + ch];
  }
  const T& operator()(int row, int col, int ch = 0) const {
    assert(row >= 0 && row < height_ && col >= 0 && col < width_);
    return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + ch];
  }

  // Flat pixel access: pixel index p = row * width + col.
  T& at(int p, int ch = 0) { return data_[static_cast<std::size_t>(p) * channels_ + ch]; }
  const T& at(int p, int ch = 0) const {
    return data_[static_cast<std::size_t>(p) * channels_ + ch];
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& raw() { return data_; }
  const std::vector<T>& raw() const { return data_; }

  bool same_shape(const Image& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  friend bool operator==(const Image& a, const Image& b) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

using ImageF = Image<float>;
using ImageD = Image<double>;
using ImageI = Image<int>;
using ImageU8 = Image<unsigned char>;

}  // namespace gsnav
