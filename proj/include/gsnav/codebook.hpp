#pragma once

#include "gsnav/gaussian.hpp"
#include "gsnav/perception.hpp"
#include "gsnav/world.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gsnav {

struct CodebookEntry {
  Eigen::VectorXd feature_centroid;  // in Gaussian feature space
  Vec3 centroid_3d = Vec3::Zero();
  std::vector<int> members;          // indices into the memory, ascending
  std::optional<Eigen::VectorXd> instance_feature;  // unit norm, embedding space
  int coarse = 0;
  // Instance hint of the masks that contributed most weight during
  // association; not persisted.
  std::optional<int> matched_instance;
};

struct Codebook {
  std::vector<CodebookEntry> entries;
  int k1 = 32;
  int k2 = 5;
  int embedding_dim = kDefaultEmbeddingDim;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;  // not persisted

  std::size_t labeled_count() const;
};

struct CodebookParams {
  int k1 = 32;
  int k2 = 5;
  double w_pos = 1.0;
  // Length used to normalize positions; 0 uses the diagonal of the memory's
  // bounding box.
  double scene_diagonal = 0.0;
  int max_iters = 100;
  std::uint64_t seed = 0;
};

struct CodebookBuild {
  Codebook codebook;
  // Objective histories of the coarse run and of every fine run.
  std::vector<double> coarse_objective;
  std::vector<std::vector<double>> fine_objectives;
};

// Coarse k-means on [w_pos * position / diagonal ; feature], then k-means on
// the feature alone inside every coarse cluster. When the memory has fewer
// Gaussians than k1, k1 is reduced and a warning recorded.
CodebookBuild build_codebook(const GaussianMemory& memory, const CodebookParams& params = {});

struct AssociationParams {
  double silhouette_alpha = 0.3;
  double min_iou = 0.1;
  // A member footprint only counts at pixels whose observed depth is not
  // closer than the Gaussian by more than this (m), so entries hidden behind
  // surfaces do not claim masks.
  double visibility_tolerance = 0.15;
  double cutoff_sigma = 3.0;
};

// Entry silhouettes (member Gaussians rendered alone) scored by IoU against
// every instance mask of every frame; the best mask per frame contributes its
// 2D feature weighted by the score. Entries never matched stay unset.
void associate_2d3d(Codebook& codebook, const GaussianMemory& memory,
                    const std::vector<Observation>& frames, const PerceptionProviders& providers,
                    const AssociationParams& params = {});

// Silhouette of each entry in one frame as pixel lists (alpha > threshold).
std::vector<std::vector<int>> entry_silhouettes(const Codebook& codebook,
                                                const GaussianMemory& memory,
                                                const Observation& obs,
                                                const AssociationParams& params = {});

void save_codebook(const std::filesystem::path& path, const Codebook& codebook);
Codebook load_codebook(const std::filesystem::path& path);

}  // namespace gsnav
