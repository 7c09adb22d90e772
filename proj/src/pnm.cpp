#include "gsnav/pnm.hpp"

#include "gsnav/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace gsnav {

namespace {

unsigned char to_byte(float v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const ImageF& rgb) {
  if (rgb.channels() != 3) throw Error("write_ppm expects a 3-channel image");
  auto out = open_out(path);
  out << "P6\n" << rgb.width() << ' ' << rgb.height() << "\n255\n";
  for (float v : rgb.data()) out.put(static_cast<char>(to_byte(v)));
}

void write_pgm(const std::filesystem::path& path, const ImageF& gray, float lo, float hi) {
  auto out = open_out(path);
  out << "P5\n" << gray.width() << ' ' << gray.height() << "\n255\n";
  const float span = hi > lo ? hi - lo : 1.0f;
  for (int p = 0; p < gray.pixel_count(); ++p) {
    out.put(static_cast<char>(to_byte((gray.at(p) - lo) / span)));
  }
}

void write_pgm(const std::filesystem::path& path, const ImageU8& gray) {
  auto out = open_out(path);
  out << "P5\n" << gray.width() << ' ' << gray.height() << "\n255\n";
  for (unsigned char v : gray.data()) out.put(static_cast<char>(v));
}

ImageF read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw SchemaError(path.string() + ": not a binary 8-bit P6 image");
  }
  ImageF img(w, h, 3);
  for (float& v : img.raw()) {
    const int c = in.get();
    if (c == EOF) throw SchemaError(path.string() + ": truncated pixel data");
    v = static_cast<float>(c) / 255.0f;
  }
  return img;
}

ImageU8 read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255) {
    throw SchemaError(path.string() + ": not a binary 8-bit P5 image");
  }
  ImageU8 img(w, h, 1);
  for (auto& v : img.raw()) {
    const int c = in.get();
    if (c == EOF) throw SchemaError(path.string() + ": truncated pixel data");
    v = static_cast<unsigned char>(c);
  }
  return img;
}

}  // namespace gsnav
