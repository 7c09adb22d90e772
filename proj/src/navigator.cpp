#include "gsnav/navigator.hpp"

#include "gsnav/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_set>

namespace gsnav {

std::vector<Candidate> query_memory(const Codebook& codebook, const GoalQuery& query, int top_k) {
  std::vector<Candidate> out;
  const double qn = query.embedding.norm();
  if (qn == 0.0 || top_k <= 0) return out;
  for (std::size_t i = 0; i < codebook.entries.size(); ++i) {
    const auto& f = codebook.entries[i].instance_feature;
    if (!f || f->size() != query.embedding.size()) continue;
    Candidate c;
    c.entry = static_cast<int>(i);
    c.similarity = std::clamp(f->dot(query.embedding) / (qn * f->norm()), -1.0, 1.0);
    out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& a, const Candidate& b) { return a.similarity > b.similarity; });
  if (static_cast<int>(out.size()) > top_k) out.resize(top_k);
  return out;
}

namespace {

constexpr double kSideDetour = 2.0;

// Traversable cell nearest to `p` within `max_dist` meters, ties to the lower
// cell index.
std::optional<Cell> nearest_traversable(const TraversalGrid& grid, const OccupancyMap& map,
                                        const Vec2& p, double max_dist) {
  const Cell c = map.cell_of(p);
  const int r = static_cast<int>(std::ceil(max_dist / map.resolution())) + 1;
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int row = c.row - r; row <= c.row + r; ++row) {
    for (int col = c.col - r; col <= c.col + r; ++col) {
      const Cell q{col, row};
      if (!grid.ok(q)) continue;
      const double d = (map.center(q) - p).norm();
      if (d <= max_dist && d < best_d) {
        best_d = d;
        best = q;
      }
    }
  }
  return best;
}

void set_pitch(AgentRunner& runner, double pitch) {
  while (!runner.exhausted() && runner.world().pose().pitch > pitch + 1e-6) {
    runner.act(Action::LookDown);
  }
  while (!runner.exhausted() && runner.world().pose().pitch < pitch - 1e-6) {
    runner.act(Action::LookUp);
  }
}

bool better(const Verdict& a, const Verdict& b) {
  if (a.found != b.found) return a.found;
  const double ka = a.score_match.value_or(a.score_feat.value_or(-2.0));
  const double kb = b.score_match.value_or(b.score_feat.value_or(-2.0));
  if (ka != kb) return ka > kb;
  return a.score_seg.value_or(-1.0) > b.score_seg.value_or(-1.0);
}

int dominant_instance(const ImageI& ids) {
  std::map<int, long> counts;
  for (int id : ids.raw()) {
    if (id) ++counts[id];
  }
  int best = 0;
  long best_n = 0;
  for (const auto& [id, n] : counts) {
    if (n > best_n) {
      best_n = n;
      best = id;
    }
  }
  return best;
}

}  // namespace

Cell candidate_waypoint(const CodebookEntry& entry, const OccupancyMap& map, double dilate_radius) {
  if (entry.members.empty()) throw PreconditionError("candidate_waypoint: entry has no members");
  const TraversalGrid grid = map.traversable();
  const Vec2 p = entry.centroid_3d.head<2>();
  if (const Cell c = map.cell_of(p); grid.ok(c)) return c;
  if (auto c = nearest_traversable(grid, map, p, dilate_radius)) return *c;
  if (auto c = nearest_traversable(grid, map, p, 2.0 * dilate_radius)) return *c;
  throw WaypointUnreachable("no traversable cell within " + std::to_string(2.0 * dilate_radius) +
                            " m of the candidate");
}

std::vector<Cell> candidate_viewpoints(const CodebookEntry& entry, const OccupancyMap& map,
                                       double dilate_radius, int max_sides) {
  std::vector<Cell> out{candidate_waypoint(entry, map, dilate_radius)};
  const TraversalGrid grid = map.traversable();
  const Vec2 p = entry.centroid_3d.head<2>();
  const double reach = 2.0 * dilate_radius;
  std::vector<std::pair<double, Cell>> near;
  const Cell c0 = map.cell_of(p);
  const int r = static_cast<int>(std::ceil(reach / map.resolution())) + 1;
  for (int row = c0.row - r; row <= c0.row + r; ++row) {
    for (int col = c0.col - r; col <= c0.col + r; ++col) {
      const Cell q{col, row};
      if (!grid.ok(q)) continue;
      if (const double d = (map.center(q) - p).norm(); d <= reach) near.push_back({d, q});
    }
  }
  std::stable_sort(near.begin(), near.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<DistanceField> fields;
  // A cell is on another side when walking there from every chosen viewpoint
  // is a detour well beyond going around the object itself.
  const auto other_side = [&](Cell c) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double straight = (map.center(out[i]) - map.center(c)).norm();
      if (fields[i].at(c) <= kSideDetour * straight + reach) return false;
    }
    return true;
  };
  for (const auto& [d, c] : near) {
    if (static_cast<int>(out.size()) >= max_sides) break;
    while (fields.size() < out.size()) fields.push_back(fmm_distance(grid, out[fields.size()]));
    if (other_side(c)) out.push_back(c);
  }
  return out;
}

Verdict check_view(const Observation& obs, int frame_key, const Goal& goal, const GoalQuery& query,
                   const PerceptionProviders& providers, const VerifyParams& params) {
  Verdict best;
  const auto masks = providers.segment(obs, frame_key);
  if (goal.modality == GoalModality::Image) {
    // Keypoint-matcher stand-in: share of the view covered by the instance
    // that dominates the goal image.
    const int target = dominant_instance(goal.image.instance_ids);
    long n = 0;
    for (int id : obs.instance_ids.raw()) n += id == target && target != 0;
    const double ratio = static_cast<double>(n) / obs.instance_ids.pixel_count();
    best.score_match = ratio;
    if (n == 0) return best;
    best.found = ratio >= params.match_threshold;
    best.instance = target;
    InstanceMask m;
    m.frame = frame_key;
    m.width = obs.instance_ids.width();
    m.height = obs.instance_ids.height();
    m.pixels.assign(obs.instance_ids.pixel_count(), 0);
    for (int p = 0; p < obs.instance_ids.pixel_count(); ++p) m.pixels[p] = obs.instance_ids.at(p) == target;
    m.area = n;
    m.instance_id_hint = target;
    m.feature_2d = providers.space().instance(target);
    best.mask = std::move(m);
    best.view = obs;
    return best;
  }
  const std::string prompt = providers.space().nearest_category(query.embedding);
  for (const auto& m : masks) {
    Verdict v;
    const int id = m.instance_id_hint.value_or(0);
    const bool same = id != 0 && providers.scene().object(id).category == prompt;
    v.score_seg = same ? params.seg_score_match : params.seg_score_other;
    const Eigen::VectorXd crop =
        id != 0 ? providers.encode_crop(id, mix_seed(static_cast<std::uint64_t>(frame_key), id))
                : m.feature_2d;
    v.score_feat = crop.dot(query.embedding);
    v.found = *v.score_seg >= params.seg_threshold || *v.score_feat >= params.feat_threshold;
    v.instance = id;
    if (!best.mask || better(v, best)) {
      v.mask = m;
      best = std::move(v);
    }
  }
  if (best.mask) best.view = obs;
  return best;
}

double verification_pitch(double height, double distance) {
  const double a = std::atan2(height - agent::kCameraHeight, std::max(distance, 0.1));
  const double q = std::round(a / agent::kLookStep) * agent::kLookStep;
  return std::clamp(q, -2.0 * agent::kLookStep, 0.0);
}

Verdict verify_goal(AgentRunner& runner, const Goal& goal, const GoalQuery& query,
                    const PerceptionProviders& providers, std::mt19937_64& rng, double pitch,
                    const VerifyParams& params) {
  set_pitch(runner, pitch);
  Verdict best, best_other;
  for (int v = 0; v < params.panorama_views && !runner.exhausted(); ++v) {
    runner.act(Action::TurnLeft);
    const Verdict cur = check_view(runner.last_observation(), 1000000 + runner.steps_used(), goal,
                                   query, providers, params);
    if (!cur.mask) continue;
    if (cur.found) {
      if (!best.found || better(cur, best)) best = cur;
    } else if (!best_other.mask || better(cur, best_other)) {
      best_other = cur;
    }
  }
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double u_fn = U(rng), u_fp = U(rng);
  if (best.found) {
    if (u_fn < providers.noise().verify_false_negative) {
      best.found = false;
      return best;
    }
    return best;
  }
  if (best_other.mask && u_fp < providers.noise().verify_false_positive) {
    best_other.found = true;
    return best_other;
  }
  return best.mask ? best : best_other;
}

Cell goalpoint_from_mask(const Observation& obs, const InstanceMask& mask, const OccupancyMap& map) {
  if (mask.pixels.empty() || mask.area == 0) throw PreconditionError("goalpoint_from_mask: empty mask");
  const CameraIntrinsics cam = camera_of(obs);
  const CameraFrame frame = CameraFrame::from_pose(obs.pose);
  Vec2 sum = Vec2::Zero();
  long n = 0;
  for (int row = 0; row < cam.height; ++row) {
    for (int col = 0; col < cam.width; ++col) {
      const int p = row * cam.width + col;
      if (!mask.pixels[p]) continue;
      const float d = obs.depth.at(p);
      if (!valid_depth(d)) continue;
      const Vec3 dir = frame.to_world_dir(pixel_ray_camera(cam, row, col)).normalized();
      sum += (frame.origin + static_cast<double>(d) * dir).head<2>();
      ++n;
    }
  }
  if (n == 0) throw Error("goalpoint_from_mask: no masked pixel has a valid depth");
  const Vec2 centroid = sum / static_cast<double>(n);
  const TraversalGrid grid = map.traversable();
  const double reach = std::hypot(map.width(), map.height()) * map.resolution();
  if (auto c = nearest_traversable(grid, map, centroid, reach)) return *c;
  throw Error("goalpoint_from_mask: map has no traversable cell");
}

std::string_view nav_event_name(NavEvent e) {
  switch (e) {
    case NavEvent::WaypointSet: return "WAYPOINT_SET";
    case NavEvent::VerifyPass: return "VERIFY_PASS";
    case NavEvent::VerifyFail: return "VERIFY_FAIL";
    case NavEvent::Stop: return "STOP";
  }
  return "?";
}

void write_trajectory(std::ostream& out, const std::vector<TrajectoryRecord>& records) {
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "[%.4f, %.4f, %.6f, %.6f]", r.pose.x, r.pose.y, r.pose.yaw, r.pose.pitch);
    out << "{\"step\": " << r.step << ", \"action\": ";
    if (r.action) out << '"' << action_name(*r.action) << '"';
    else out << "null";
    out << ", \"pose\": " << buf << ", \"event\": ";
    if (r.event) out << '"' << nav_event_name(*r.event) << '"';
    else out << "null";
    out << "}\n";
  }
}

double shortest_path_to_goal(const Scene& scene, const TraversalGrid& gt_grid,
                             const OccupancyMap& gt_map, const Vec2& start, const Goal& goal,
                             double radius) {
  const Box box = scene.object(goal.gt_instance_id).box();
  if (box.footprint_distance(start) <= radius) return 0.0;
  Cell s = gt_map.cell_of(start);
  if (!gt_grid.ok(s)) {
    const auto c = nearest_traversable(gt_grid, gt_map, start, 0.5);
    if (!c) return DistanceField::kUnreachable;
    s = *c;
  }
  const DistanceField field = fmm_distance(gt_grid, s);
  double best = DistanceField::kUnreachable;
  for (int idx = 0; idx < gt_grid.width * gt_grid.height; ++idx) {
    if (!gt_grid.passable[idx] || field.values[idx] >= best) continue;
    if (box.footprint_distance(gt_map.center(gt_map.cell(idx))) <= radius) best = field.values[idx];
  }
  return best;
}

namespace {

class SubtaskRun {
 public:
  SubtaskRun(World& world, OccupancyMap& map, const Codebook& codebook, const Goal& goal,
             const PerceptionProviders& providers, const NavParams& params)
      : world_(world),
        map_(map),
        codebook_(codebook),
        goal_(goal),
        providers_(providers),
        params_(params),
        runner_(world, map, params.step_limit),
        rng_(mix_seed(params.seed, 0x5AB7A5C)) {
    runner_.set_hook([this](Action a, const StepResult&, const Observation&) {
      result_.trajectory.push_back({runner_.steps_used(), a, world_.pose(), std::nullopt});
    });
  }

  SubtaskResult run() {
    runner_.observe();
    const GoalQuery query = encode_goal(goal_, providers_);
    auto candidates = query_memory(codebook_, query, params_.top_k);
    if (params_.stop_at_first) {
      if (!candidates.empty()) {
        try {
          const Cell wp = candidate_waypoint(codebook_.entries[candidates[0].entry], map_,
                                             params_.dilate_radius);
          ++result_.candidates_tried;
          event(NavEvent::WaypointSet);
          walk_to(runner_, wp, params_.goalpoint_trigger, runner_.steps_left() - 1);
        } catch (const WaypointUnreachable&) {
          ++result_.invalid_candidates;
        }
      }
      stop();
      return finish();
    }
    for (Candidate& c : candidates) {
      if (runner_.steps_left() <= 1) break;
      const CodebookEntry& entry = codebook_.entries[c.entry];
      std::vector<Cell> views;
      try {
        views = candidate_viewpoints(entry, map_, params_.dilate_radius, params_.max_sides);
      } catch (const WaypointUnreachable&) {
        c.status = CandidateStatus::VisitedInvalid;
        ++result_.invalid_candidates;
        continue;
      }
      c.waypoint = views.front();
      ++result_.candidates_tried;
      for (const Cell& wp : views) {
        if (runner_.steps_left() <= 1) break;
        event(NavEvent::WaypointSet);
        walk_to(runner_, wp, params_.waypoint_trigger, runner_.steps_left() - 1);
        const double dist = (entry.centroid_3d.head<2>() - world_.pose().xy()).norm();
        if (approach(verification_pitch(entry.centroid_3d.z(), dist))) {
          c.status = CandidateStatus::Confirmed;
          return finish();
        }
      }
      c.status = CandidateStatus::VisitedInvalid;
      ++result_.invalid_candidates;
    }
    fallback();
    return finish();
  }

 private:
  void event(NavEvent e) {
    result_.trajectory.push_back({runner_.steps_used(), std::nullopt, world_.pose(), e});
  }

  void stop() {
    if (runner_.exhausted()) return;
    runner_.act(Action::Stop);
    event(NavEvent::Stop);
  }

  // Panorama at `pitch`; on a positive verdict walks to the goalpoint and
  // stops. Returns whether the subtask ended.
  bool approach(double pitch) {
    if (runner_.steps_left() <= 1) return false;
    Verdict v = verify_goal(runner_, goal_, query(), providers_, rng_, pitch, params_.verify);
    if (!v.found) {
      event(NavEvent::VerifyFail);
      return false;
    }
    event(NavEvent::VerifyPass);
    Cell gp;
    try {
      gp = goalpoint_from_mask(*v.view, *v.mask, map_);
    } catch (const Error&) {
      return false;
    }
    walk_to(runner_, gp, params_.goalpoint_trigger, runner_.steps_left() - 1);
    stop();
    return true;
  }

  const GoalQuery& query() {
    if (!query_) query_ = encode_goal(goal_, providers_);
    return *query_;
  }

  // Exploration with a panorama every few steps until the budget runs out.
  void fallback() {
    result_.used_fallback = true;
    std::unordered_set<int> excluded;
    while (runner_.steps_left() > 1) {
      const Pose pose = world_.pose();
      const TraversalGrid grid = map_.planning_grid(pose.xy());
      const DistanceField field = fmm_distance(grid, map_.cell_of(pose.xy()));
      const auto frontiers = detect_frontiers(map_);
      std::optional<Cell> target;
      if (const auto choice = select_frontier(field, frontiers, &excluded)) target = choice->target;
      if (!target) {
        std::vector<int> far;
        for (int i = 0; i < grid.width * grid.height; ++i) {
          if (field.values[i] < DistanceField::kUnreachable && field.values[i] >= 2.0) far.push_back(i);
        }
        if (!far.empty()) {
          std::uniform_int_distribution<std::size_t> pick(0, far.size() - 1);
          target = map_.cell(far[pick(rng_)]);
        }
      }
      if (target) {
        const int budget = std::min(params_.fallback_verify_every, runner_.steps_left() - 1);
        const WalkResult w = walk_to(runner_, *target, 0.5, budget);
        if (w.steps == 0) excluded.insert(map_.index(*target));
      }
      if (approach(params_.default_verify_pitch)) return;
      if (!target && runner_.steps_left() > 1) runner_.act(Action::TurnLeft);
    }
    // The step kept for STOP is spent scanning; the subtask has failed.
    while (!runner_.exhausted()) runner_.act(Action::TurnLeft);
  }

  SubtaskResult finish() {
    result_.steps = runner_.steps_used();
    result_.path_length = runner_.path_length();
    result_.stop_pose = world_.pose();
    result_.stopped = runner_.stopped();
    result_.success = result_.stopped && check_success(world_.scene(), world_.pose(), goal_);
    return result_;
  }

  World& world_;
  OccupancyMap& map_;
  const Codebook& codebook_;
  const Goal& goal_;
  const PerceptionProviders& providers_;
  const NavParams& params_;
  AgentRunner runner_;
  std::mt19937_64 rng_;
  std::optional<GoalQuery> query_;
  SubtaskResult result_;
};

}  // namespace

SubtaskResult navigate_subtask(World& world, OccupancyMap& map, const Codebook& codebook,
                               const Goal& goal, const PerceptionProviders& providers,
                               const NavParams& params) {
  return SubtaskRun(world, map, codebook, goal, providers, params).run();
}

}  // namespace gsnav
