#pragma once

#include "gsnav/common.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

namespace gsnav {

// Little-endian record writer shared by the checkpoint formats.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  template <typename Derived>
  void vec(const Eigen::MatrixBase<Derived>& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
  }
  void finish() {
    out_.flush();
    if (!out_) throw Error("write failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw Error("cannot open " + path.string());
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), n);
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw SchemaError(path_.string() + ": truncated file");
    }
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw SchemaError(path_.string() + ": implausible string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  Vec3 vec3() {
    Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = f64();
    return v;
  }
  Eigen::VectorXd vecx(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = f64();
    return v;
  }
  void expect_magic(const char (&magic)[4]) {
    char m[4];
    bytes(m, 4);
    if (std::memcmp(m, magic, 4) != 0) throw SchemaError(path_.string() + ": bad magic");
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw SchemaError(path_.string() + ": trailing bytes");
    }
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace gsnav
