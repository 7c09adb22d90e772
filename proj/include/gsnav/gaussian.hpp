#pragma once

#include "gsnav/common.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gsnav {

inline constexpr int kDefaultFeatureDim = 6;

struct Gaussian {
  Vec3 mu = Vec3::Zero();
  Vec3 color = Vec3::Zero();
  double radius = 0.01;
  double opacity = 0.5;
  Eigen::VectorXd feature;
};

// Growable set of isotropic Gaussians. Geometry becomes read-only once
// frozen; features stay writable for language injection.
class GaussianMemory {
 public:
  explicit GaussianMemory(int feature_dim = kDefaultFeatureDim);

  int feature_dim() const { return feature_dim_; }
  std::size_t size() const { return gaussians_.size(); }
  bool empty() const { return gaussians_.empty(); }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  const Gaussian& operator[](std::size_t i) const { return gaussians_[i]; }
  const std::vector<Gaussian>& gaussians() const { return gaussians_; }
  // Mutable geometry access; throws PreconditionError when frozen.
  std::vector<Gaussian>& mutable_gaussians();
  Eigen::VectorXd& feature(std::size_t i) { return gaussians_[i].feature; }

  // Appends a Gaussian; a feature of the wrong size throws ValidationError,
  // an empty feature gets a deterministic small pseudo-random init.
  void add(Gaussian g);
  // Removes Gaussians with opacity below `min_opacity`; returns the count.
  std::size_t prune(double min_opacity);
  // Re-clamps every Gaussian to its invariants.
  void clamp();

  std::string scene_ref;

 private:
  int feature_dim_;
  bool frozen_ = false;
  std::uint64_t added_ = 0;
  std::vector<Gaussian> gaussians_;
};

inline constexpr double kMinRadius = 1e-4;
inline constexpr double kMaxRadius = 0.5;

// Binary checkpoint: magic, schema version, count, feature dim, frozen flag,
// scene ref, then per-Gaussian float64 records.
void save_memory(const std::filesystem::path& path, const GaussianMemory& memory);
GaussianMemory load_memory(const std::filesystem::path& path);

}  // namespace gsnav
