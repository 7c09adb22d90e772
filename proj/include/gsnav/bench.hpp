#pragma once

#include "gsnav/codebook.hpp"
#include "gsnav/explorer.hpp"
#include "gsnav/features.hpp"
#include "gsnav/navigator.hpp"
#include "gsnav/perception.hpp"
#include "gsnav/reconstruction.hpp"
#include "gsnav/scene.hpp"
#include "gsnav/world.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gsnav {

// Error raised by a pipeline stage; `stage` names it for diagnostics.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Default start: the traversable ground-truth cell nearest the center of the
// scene's first room, facing +x.
Pose default_start_pose(const Scene& scene);

// `n` subtasks with modalities balanced (counts differ by at most one),
// unused instances and categories preferred, consecutive goals preferably in
// different rooms. Category goals only target categories with one instance.
Episode generate_episode(const Scene& scene, std::uint64_t seed, int n_subtasks = 20,
                         std::optional<Pose> start = std::nullopt,
                         const CameraIntrinsics& camera = CameraIntrinsics::desk());

// Every instance in every modality (category goals for unique categories
// only); the localization sweep.
std::vector<Goal> all_instance_goals(const Scene& scene, std::uint64_t seed,
                                     const CameraIntrinsics& camera = CameraIntrinsics::desk());

struct RateCount {
  int total = 0;
  int hits = 0;
  double rate() const { return total ? static_cast<double>(hits) / total : 0.0; }
};

struct LocalizationReport {
  RateCount overall;
  std::map<GoalModality, RateCount> by_modality;
  double accuracy() const { return overall.rate(); }
};

// A goal is localized when any of the top_k entries has its centroid within
// `radius` (horizontal) of the goal instance position.
LocalizationReport eval_localization(const Codebook& codebook, const std::vector<Goal>& goals,
                                     const PerceptionProviders& providers, double radius = 1.5,
                                     int top_k = 5);

// Mean over results of S * l / max(p, l). Throws ValidationError when a
// shortest path is not positive.
double compute_spl(const std::vector<SubtaskResult>& results);
double compute_sr(const std::vector<SubtaskResult>& results);

struct RunConfig {
  std::string scene_path;
  std::string episode_path;  // empty: generated from episode_seed
  std::uint64_t episode_seed = 0;
  int n_subtasks = 20;
  std::uint64_t seed = 0;
  std::string perception = "oracle";
  // Extra perception noise beyond the --perception mode.
  double false_positive_rate = 0.0;
  double decoy_rate = 0.0;
  double verify_false_negative = 0.0;
  double verify_false_positive = 0.0;
  int embedding_dim = kDefaultEmbeddingDim;

  double map_res = 0.05;
  int explore_budget = 1000;
  int frame_stride = 2;
  int p1 = 30;
  int p2 = 60;
  double lambda = 0.2;
  double mu_d = 1.0;
  int feature_iters = 500;
  int k1 = 32;
  int k2 = 5;
  double w_pos = 1.0;
  int top_k = 5;
  double tau_seg = 1.1;
  double tau_feat = 0.23;
  double tau_match = 0.05;
  double localization_radius = 1.5;
  int step_limit = agent::kSubtaskStepLimit;
  bool ablate_keyframe = false;      // p2 forced to 0
  bool ablate_verification = false;  // stop at the first waypoint
  std::string output_dir;            // empty: nothing written

  // Throws ValidationError on out-of-range values.
  void validate() const;
  PerceptionNoise noise() const;
};

ExploreParams explore_params(const RunConfig& cfg);
ReconstructParams reconstruct_params(const RunConfig& cfg);
FeatureOptimParams feature_params(const RunConfig& cfg);
CodebookParams codebook_params(const RunConfig& cfg, const Scene& scene);
NavParams nav_params(const RunConfig& cfg);
PerceptionProviders make_providers(const Scene& scene, const RunConfig& cfg);

struct GeometryStage {
  ExploreResult explore;
  ReconstructResult recon;
  double mean_pool_psnr = 0.0;
};

struct LanguageStage {
  GaussianMemory memory;  // geometry plus optimized features
  Codebook codebook;
  FeatureOptimReport features;
};

struct NavigationStage {
  std::vector<SubtaskResult> results;
};

using StageLog = std::function<void(const std::string&)>;

GeometryStage run_geometry(const Scene& scene, const Pose& start, const RunConfig& cfg,
                           const StageLog& log = {});
LanguageStage run_language(const Scene& scene, const GaussianMemory& geometry,
                           const std::vector<Observation>& frames,
                           const PerceptionProviders& providers, const RunConfig& cfg,
                           const StageLog& log = {});
// Subtasks run back to back from the episode start; the map keeps being
// updated from observations. Shortest paths come from the ground-truth map.
NavigationStage run_navigation(const Scene& scene, const OccupancyMap& map,
                               const Codebook& codebook, const Episode& episode,
                               const PerceptionProviders& providers, const RunConfig& cfg,
                               const StageLog& log = {});

struct MetricsReport {
  std::string scene;
  std::uint64_t seed = 0;
  std::string perception;
  std::vector<Goal> goals;
  std::vector<SubtaskResult> results;
  double sr = 0.0;
  double spl = 0.0;
  std::optional<LocalizationReport> localization;
  double mean_pool_psnr = 0.0;
  std::size_t gaussians = 0;
  std::size_t codebook_entries = 0;
  std::size_t labeled_entries = 0;

  // JSON with a fixed key order.
  std::string to_text() const;
};

// Fills SR, SPL and the per-subtask records from navigation results.
void fill_navigation(MetricsReport& report, const Episode& episode,
                     const std::vector<SubtaskResult>& results);

// explore -> reconstruct -> features -> codebook -> association ->
// localization and navigation. Stage failures surface as StageError. When
// cfg.output_dir is set, artifacts and metrics.json are written there.
MetricsReport run_pipeline(const RunConfig& cfg, const StageLog& log = {});

}  // namespace gsnav
