#pragma once

#include "gsnav/codebook.hpp"
#include "gsnav/fmm.hpp"
#include "gsnav/motion.hpp"
#include "gsnav/occupancy.hpp"
#include "gsnav/perception.hpp"
#include "gsnav/world.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace gsnav {

enum class CandidateStatus : std::uint8_t { Pending, VisitedInvalid, Confirmed };

struct Candidate {
  int entry = -1;  // into the codebook
  double similarity = 0.0;
  std::optional<Cell> waypoint;
  CandidateStatus status = CandidateStatus::Pending;
};

// Associated entries ranked by cosine similarity to the query, descending,
// ties to the lower entry index; at most top_k.
std::vector<Candidate> query_memory(const Codebook& codebook, const GoalQuery& query, int top_k = 5);

class WaypointUnreachable : public Error {
 public:
  using Error::Error;
};

// Nearest traversable cell to the projection of the entry's member centroid,
// searched within `dilate_radius`, then up to twice that. Throws
// WaypointUnreachable when nothing traversable is that close.
Cell candidate_waypoint(const CodebookEntry& entry, const OccupancyMap& map,
                        double dilate_radius = 0.5);

// candidate_waypoint() first, then the nearest cell of each other group of
// traversable cell within twice `dilate_radius` of the centroid whose walking
// distance from every earlier viewpoint exceeds twice the straight-line
// distance plus that radius (the far side of a wall), nearest first; at most
// `max_sides` cells.
std::vector<Cell> candidate_viewpoints(const CodebookEntry& entry, const OccupancyMap& map,
                                       double dilate_radius = 0.5, int max_sides = 2);

struct VerifyParams {
  double seg_threshold = 1.1;
  double feat_threshold = 0.23;
  double match_threshold = 0.05;
  // Oracle segmentation scores for masks of the prompted category and of
  // anything else.
  double seg_score_match = 1.2;
  double seg_score_other = 0.3;
  int panorama_views = 12;
};

struct Verdict {
  bool found = false;
  std::optional<InstanceMask> mask;
  std::optional<double> score_seg;
  std::optional<double> score_feat;
  std::optional<double> score_match;
  std::optional<Observation> view;  // observation holding the mask
  int instance = 0;                 // simulator id behind the mask (diagnostics)
};

// Scores one observation against a goal without moving.
Verdict check_view(const Observation& obs, int frame_key, const Goal& goal, const GoalQuery& query,
                   const PerceptionProviders& providers, const VerifyParams& params = {});

// Camera pitch, quantized to look steps in [-60, 0] deg, that centers a
// point at `height` seen from `distance` meters away.
double verification_pitch(double height, double distance);

// Panoramic scan (panorama_views TURN_LEFT actions) at `pitch`, keeping the
// best verdict.
// Configured verifier false negatives drop a positive verdict and false
// positives promote a visible non-goal mask, once per call.
Verdict verify_goal(AgentRunner& runner, const Goal& goal, const GoalQuery& query,
                    const PerceptionProviders& providers, std::mt19937_64& rng,
                    double pitch, const VerifyParams& params = {});

// Traversable cell nearest the centroid of the masked pixels back-projected
// with their depth. Throws PreconditionError on an empty mask and Error when
// no masked pixel has a valid depth.
Cell goalpoint_from_mask(const Observation& obs, const InstanceMask& mask, const OccupancyMap& map);

enum class NavEvent : std::uint8_t { WaypointSet, VerifyPass, VerifyFail, Stop };
std::string_view nav_event_name(NavEvent e);

struct TrajectoryRecord {
  int step = 0;
  std::optional<Action> action;
  Pose pose;
  std::optional<NavEvent> event;
};

// One JSON object per line: step, action, pose [x, y, yaw, pitch], event.
void write_trajectory(std::ostream& out, const std::vector<TrajectoryRecord>& records);

struct NavParams {
  int top_k = 5;
  double dilate_radius = 0.5;
  int max_sides = 2;  // viewpoints per candidate, see candidate_viewpoints()
  double waypoint_trigger = 1.2;
  double goalpoint_trigger = 0.5;
  int step_limit = agent::kSubtaskStepLimit;
  int fallback_verify_every = 12;
  // Pitch of panoramas that are not aimed at a candidate.
  double default_verify_pitch = -deg_to_rad(30.0);
  // Ablation: walk to the top-ranked waypoint and stop there, no verification.
  bool stop_at_first = false;
  std::uint64_t seed = 0;
  VerifyParams verify;
};

struct SubtaskResult {
  bool success = false;
  int steps = 0;
  double path_length = 0.0;
  double shortest_path = 0.0;
  Pose stop_pose;
  bool stopped = false;
  int candidates_tried = 0;
  int invalid_candidates = 0;
  bool used_fallback = false;
  std::vector<TrajectoryRecord> trajectory;
};

// Geodesic distance on the ground-truth map from `start` to the nearest
// traversable cell within the success radius of the goal instance.
double shortest_path_to_goal(const Scene& scene, const TraversalGrid& gt_grid,
                             const OccupancyMap& gt_map, const Vec2& start, const Goal& goal,
                             double radius = agent::kSuccessRadius);

// Query, walk to candidates, verify, walk to the goalpoint and stop; falls
// back to exploration with periodic verification when candidates run out.
// `shortest_path` is left for the caller to fill.
SubtaskResult navigate_subtask(World& world, OccupancyMap& map, const Codebook& codebook, const Goal& goal,
                               const PerceptionProviders& providers, const NavParams& params = {});

}  // namespace gsnav
