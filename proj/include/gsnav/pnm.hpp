#pragma once

#include "gsnav/image.hpp"

#include <filesystem>

namespace gsnav {

// Binary P6 from an H x W x 3 image in [0, 1].
void write_ppm(const std::filesystem::path& path, const ImageF& rgb);
// Binary P5; values mapped linearly from [lo, hi] onto [0, 255].
void write_pgm(const std::filesystem::path& path, const ImageF& gray, float lo, float hi);
void write_pgm(const std::filesystem::path& path, const ImageU8& gray);
ImageF read_ppm(const std::filesystem::path& path);
ImageU8 read_pgm(const std::filesystem::path& path);

}  // namespace gsnav
