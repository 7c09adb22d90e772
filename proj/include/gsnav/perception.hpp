#pragma once

#include "gsnav/scene.hpp"
#include "gsnav/world.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gsnav {

inline constexpr int kDefaultEmbeddingDim = 64;

struct FeatureSpaceParams {
  int dim = kDefaultEmbeddingDim;
  double instance_offset = 0.15;
  // Norm of the component added to an instance vector to form the vector of
  // its text description; orthogonal to every instance vector.
  double text_jitter = 0.3;
  std::uint64_t seed = 0;
};

// CLIP-like oracle embedding space built from the scene annotations:
// orthonormal category directions, instances as small offsets from their
// category, descriptions as jittered copies of their instance.
class OracleFeatureSpace {
 public:
  OracleFeatureSpace(const Scene& scene, const FeatureSpaceParams& params = {});

  int dim() const { return params_.dim; }
  const FeatureSpaceParams& params() const { return params_; }
  // Unknown strings map to deterministic hashed directions, so any
  // vocabulary can be queried.
  Eigen::VectorXd category(const std::string& name) const;
  Eigen::VectorXd text(const std::string& description) const;
  const Eigen::VectorXd& instance(int id) const;
  // Scene category whose direction is closest to `v`.
  std::string nearest_category(const Eigen::VectorXd& v) const;
  bool has_instance(int id) const { return instance_.count(id) != 0; }

 private:
  Eigen::VectorXd hashed(const std::string& key) const;

  FeatureSpaceParams params_;
  std::map<std::string, Eigen::VectorXd> category_;
  std::map<int, Eigen::VectorXd> instance_;
  std::map<std::string, Eigen::VectorXd> text_;
};

struct PerceptionNoise {
  double dropout = 0.0;             // per mask
  double feature_sigma = 0.0;       // expected norm of the 2D feature perturbation
  double false_positive_rate = 0.0; // per frame, one spurious background mask
  double decoy_rate = 0.0;          // fraction of instances impersonated by a decoy
  double verify_false_negative = 0.0;
  double verify_false_positive = 0.0;

  bool zero() const {
    return dropout == 0 && feature_sigma == 0 && false_positive_rate == 0 && decoy_rate == 0 &&
           verify_false_negative == 0 && verify_false_positive == 0;
  }
};

// Parses "oracle" or "oracle-noisy:<sigma>,<dropout>".
PerceptionNoise parse_perception_mode(const std::string& mode);

struct InstanceMask {
  int frame = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  std::optional<int> instance_id_hint;
  Eigen::VectorXd feature_2d;  // unit norm
  long area = 0;

  bool contains(int p) const { return pixels[p] != 0; }
};

// Oracle stand-ins for the segmenter and the text/image encoders, with
// optional noise. All randomness is a pure function of (seed, frame key), so
// repeated calls on the same frame agree.
class PerceptionProviders {
 public:
  PerceptionProviders(const Scene& scene, const FeatureSpaceParams& space = {},
                      const PerceptionNoise& noise = {}, std::uint64_t seed = 0);

  const OracleFeatureSpace& space() const { return space_; }
  const PerceptionNoise& noise() const { return noise_; }
  std::uint64_t seed() const { return seed_; }
  int dim() const { return space_.dim(); }

  // One mask per visible instance with at least `min_pixels` pixels.
  std::vector<InstanceMask> segment(const Observation& obs, int frame_key) const;
  Eigen::VectorXd encode_text(const std::string& text) const;
  // Embedding of the dominant instance of a goal image.
  Eigen::VectorXd encode_image(const GoalImage& image) const;
  // Embedding of an image crop showing `instance_id`, as seen by the goal
  // verifier: the instance's own feature with jitter, never a decoy feature.
  Eigen::VectorXd encode_crop(int instance_id, std::uint64_t key) const;
  const Scene& scene() const { return *scene_; }
  // Instance that a decoy impersonates, if `id` is a decoy source.
  std::optional<int> decoy_target(int id) const;

  int min_pixels = 20;

 private:
  Eigen::VectorXd mask_feature(int instance_id, std::uint64_t key) const;
  Eigen::VectorXd jitter(Eigen::VectorXd f, std::uint64_t key) const;

  const Scene* scene_;
  OracleFeatureSpace space_;
  PerceptionNoise noise_;
  std::uint64_t seed_;
  std::map<int, int> decoys_;         // source -> impersonated instance
  std::map<int, Eigen::VectorXd> impersonated_;  // perturbed feature of decoy targets
};

// Deterministic 64-bit mixing used to derive per-event random streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

struct GoalQuery {
  GoalModality modality = GoalModality::Category;
  Eigen::VectorXd embedding;
};

// Category and text payloads go through the text encoder, image payloads
// through the image encoder. Throws PreconditionError on an empty payload.
GoalQuery encode_goal(const Goal& goal, const PerceptionProviders& providers);

}  // namespace gsnav
