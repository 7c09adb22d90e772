#include "gsnav/gaussian.hpp"

#include "binary_io.hpp"

#include <algorithm>

namespace gsnav {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'N', 'M'};
constexpr std::uint32_t kSchemaVersion = 1;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

GaussianMemory::GaussianMemory(int feature_dim) : feature_dim_(feature_dim) {
  if (feature_dim <= 0) throw ValidationError("feature dimension must be positive");
}

std::vector<Gaussian>& GaussianMemory::mutable_gaussians() {
  if (frozen_) throw PreconditionError("memory geometry is frozen");
  return gaussians_;
}

void GaussianMemory::add(Gaussian g) {
  if (frozen_) throw PreconditionError("memory geometry is frozen");
  if (g.feature.size() == 0) {
    // Features must start distinct or the separation term has no direction.
    std::uint64_t state = added_ * 0x2545F4914F6CDD1Dull + 17;
    g.feature.resize(feature_dim_);
    for (int k = 0; k < feature_dim_; ++k) {
      g.feature[k] = 0.2 * (static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 - 0.5);
    }
  } else if (g.feature.size() != feature_dim_) {
    throw ValidationError("feature has dimension " + std::to_string(g.feature.size()) +
                          ", memory expects " + std::to_string(feature_dim_));
  }
  ++added_;
  gaussians_.push_back(std::move(g));
}

std::size_t GaussianMemory::prune(double min_opacity) {
  if (frozen_) throw PreconditionError("memory geometry is frozen");
  const auto it = std::remove_if(gaussians_.begin(), gaussians_.end(),
                                 [&](const Gaussian& g) { return g.opacity < min_opacity; });
  const auto n = static_cast<std::size_t>(gaussians_.end() - it);
  gaussians_.erase(it, gaussians_.end());
  return n;
}

void GaussianMemory::clamp() {
  for (Gaussian& g : gaussians_) {
    g.color = g.color.cwiseMax(0.0).cwiseMin(1.0);
    g.opacity = std::clamp(g.opacity, 0.0, 1.0);
    g.radius = std::clamp(g.radius, kMinRadius, kMaxRadius);
  }
}

void save_memory(const std::filesystem::path& path, const GaussianMemory& memory) {
  BinaryWriter w(path);
  w.bytes(kMagic, 4);
  w.u32(kSchemaVersion);
  w.u64(memory.size());
  w.u32(static_cast<std::uint32_t>(memory.feature_dim()));
  w.u8(memory.frozen() ? 1 : 0);
  w.str(memory.scene_ref);
  for (const Gaussian& g : memory.gaussians()) {
    w.vec(g.mu);
    w.vec(g.color);
    w.f64(g.radius);
    w.f64(g.opacity);
    w.vec(g.feature);
  }
  w.finish();
}

GaussianMemory load_memory(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kMagic);
  const std::uint32_t version = r.u32();
  if (version != kSchemaVersion) {
    throw SchemaError(path.string() + ": unsupported memory schema version " +
                      std::to_string(version));
  }
  const std::uint64_t count = r.u64();
  const int d = static_cast<int>(r.u32());
  const bool frozen = r.u8() != 0;
  GaussianMemory m(d);
  m.scene_ref = r.str();
  for (std::uint64_t i = 0; i < count; ++i) {
    Gaussian g;
    g.mu = r.vec3();
    g.color = r.vec3();
    g.radius = r.f64();
    g.opacity = r.f64();
    g.feature = r.vecx(d);
    m.add(std::move(g));
  }
  r.expect_end();
  if (frozen) m.freeze();
  return m;
}

}  // namespace gsnav
