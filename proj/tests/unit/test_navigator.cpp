#include "doctest.h"
#include "fixtures.hpp"
#include "nav_helpers.hpp"

#include "gsnav/navigator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace gsnav;
using namespace gsnav::test;

namespace {

Pose pose_at(double x, double y, double yaw_deg, double pitch_deg = 0.0) {
  Pose p;
  p.x = x;
  p.y = y;
  p.yaw = deg_to_rad(yaw_deg);
  p.pitch = deg_to_rad(pitch_deg);
  return p;
}

Scene without(const Scene& s, int id) {
  Scene out = s;
  out.objects.erase(std::remove_if(out.objects.begin(), out.objects.end(),
                                   [&](const ObjectInstance& o) { return o.id == id; }),
                    out.objects.end());
  return out;
}

void check_valid_trajectory(const Scene& scene, const SubtaskResult& r, int limit) {
  CHECK(r.steps <= limit);
  CHECK(r.path_length >= 0.0);
  int actions = 0;
  for (const auto& rec : r.trajectory) {
    if (!rec.action) continue;
    ++actions;
    CHECK(rec.step == actions);
    CHECK_FALSE(disc_collides(scene, rec.pose.xy()));
  }
  CHECK(actions == r.steps);
}

}  // namespace

TEST_CASE("query ranking") {
  Codebook cb;
  const int d = 4;
  auto entry = [&](Eigen::Vector4d f) {
    CodebookEntry e;
    e.members = {0};
    if (f.norm() > 0) e.instance_feature = Eigen::VectorXd(f.normalized());
    cb.entries.push_back(e);
  };
  entry({1, 0, 0, 0});
  entry({0.9, std::sqrt(1 - 0.81), 0, 0});
  entry({0, 0, 0, 0});  // unassociated
  entry({0.3, 0, std::sqrt(1 - 0.09), 0});
  entry({0.9, 0, 0, std::sqrt(1 - 0.81)});  // ties with entry 1
  GoalQuery q;
  q.embedding = Eigen::Vector4d(1, 0, 0, 0);
  const auto r = query_memory(cb, q, 5);
  REQUIRE(r.size() == 4u);
  CHECK(r[0].entry == 0);
  CHECK(r[0].similarity == doctest::Approx(1.0));
  CHECK(r[1].entry == 1);
  CHECK(r[2].entry == 4);
  CHECK(r[3].entry == 3);
  for (const auto& c : r) CHECK(c.status == CandidateStatus::Pending);
  for (double s : {0.01, 3.0, 1e4}) {
    GoalQuery scaled = q;
    scaled.embedding *= s;
    const auto rs = query_memory(cb, scaled, 5);
    REQUIRE(rs.size() == r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      CHECK(rs[i].entry == r[i].entry);
      CHECK(rs[i].similarity == doctest::Approx(r[i].similarity).epsilon(1e-12));
    }
  }
  CHECK(query_memory(cb, q, 2).size() == 2u);
  CHECK(query_memory(Codebook{}, q, 5).empty());
  (void)d;
}

TEST_CASE("distinguishing text queries pick the right cabinet") {
  const Scene& s = four_room();
  const PerceptionProviders prov(s);
  std::vector<int> ids;
  for (const auto& o : s.objects) ids.push_back(o.id);
  const Codebook cb = instance_codebook(s, prov, ids);
  for (int id : {11, 16}) {
    const GoalQuery q = encode_goal(make_goal(s, id, GoalModality::Text), prov);
    const auto r = query_memory(cb, q, 5);
    REQUIRE(!r.empty());
    CHECK(cb.entries[r[0].entry].matched_instance == id);
  }
}

TEST_CASE("candidate waypoints") {
  const Scene& s = one_room();
  const OccupancyMap map = ground_truth_map(s);
  const TraversalGrid grid = map.traversable();
  CodebookEntry e;
  e.members = {0};
  e.centroid_3d = Vec3(3.0, 2.5, 0.5);
  CHECK(candidate_waypoint(e, map) == map.cell_of({3.0, 2.5}));

  // Inside the sofa: brute-force nearest traversable cell.
  e.centroid_3d = s.object(1).centroid;
  const Cell wp = candidate_waypoint(e, map);
  CHECK(grid.ok(wp));
  const Vec2 c = e.centroid_3d.head<2>();
  double best = 1e9;
  for (int i = 0; i < grid.width * grid.height; ++i) {
    if (grid.passable[i]) best = std::min(best, (map.center(map.cell(i)) - c).norm());
  }
  CHECK((map.center(wp) - c).norm() == doctest::Approx(best).epsilon(1e-9));

  // Deep inside a large solid block: nothing traversable within 1 m.
  Scene solid = s;
  solid.obstacles.push_back({Box{{1.0, 1.0, 0.0}, {5.0, 4.0, 2.0}}});
  const OccupancyMap solid_map = ground_truth_map(solid);
  e.centroid_3d = Vec3(3.0, 2.5, 1.0);
  CHECK_THROWS_AS(candidate_waypoint(e, solid_map), WaypointUnreachable);
  e.members.clear();
  CHECK_THROWS_AS(candidate_waypoint(e, map), PreconditionError);
}

TEST_CASE("verification pitch aims at the candidate height") {
  CHECK(verification_pitch(1.2, 1.5) == doctest::Approx(0.0));
  CHECK(verification_pitch(0.3, 1.5) == doctest::Approx(-deg_to_rad(30)));
  CHECK(verification_pitch(0.0, 0.5) == doctest::Approx(-deg_to_rad(60)));
  CHECK(verification_pitch(2.5, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("single-view checks") {
  const Scene& s = one_room();
  const PerceptionProviders prov(s);
  const Observation obs = render_observation(s, pose_at(3.0, 2.5, -117, -30));
  const Goal goal = make_goal(s, 1, GoalModality::Category);
  const Verdict v = check_view(obs, 0, goal, encode_goal(goal, prov), prov);
  REQUIRE(v.found);
  CHECK(v.instance == 1);
  CHECK(*v.score_seg >= 1.1);
  for (int p = 0; p < obs.instance_ids.pixel_count(); ++p) {
    REQUIRE(v.mask->pixels[p] == (obs.instance_ids.at(p) == 1));
  }
  // A plant query in the same view: the sofa mask is scored but rejected.
  const Goal plant = make_goal(s, 2, GoalModality::Category);
  CHECK_FALSE(check_view(obs, 0, plant, encode_goal(plant, prov), prov).found);

  // Image goal: match ratio threshold at 5% of the view.
  const Goal img = make_goal(s, 1, GoalModality::Image, 3);
  const GoalQuery iq = encode_goal(img, prov);
  Observation synth = obs;
  synth.instance_ids = ImageI(obs.instance_ids.width(), obs.instance_ids.height(), 1, 0);
  const int n = synth.instance_ids.pixel_count();
  for (int p = 0; p < n * 8 / 100; ++p) synth.instance_ids.at(p) = 1;
  const Verdict vi = check_view(synth, 0, img, iq, prov);
  CHECK(vi.found);
  CHECK(*vi.score_match == doctest::Approx(0.08).epsilon(0.01));
  for (int p = n * 3 / 100; p < n; ++p) synth.instance_ids.at(p) = 0;
  CHECK_FALSE(check_view(synth, 0, img, iq, prov).found);
}

TEST_CASE("panoramic verification") {
  const Scene& s = one_room();
  const PerceptionProviders prov(s);
  std::mt19937_64 rng(1);
  {
    World w(s, pose_at(3.0, 2.0, 90));
    OccupancyMap map = ground_truth_map(s);
    AgentRunner runner(w, map, 100);
    const Goal goal = make_goal(s, 1, GoalModality::Text);
    const Verdict v = verify_goal(runner, goal, encode_goal(goal, prov), prov, rng, -deg_to_rad(30));
    CHECK(v.found);
    CHECK(v.instance == 1);
    CHECK(runner.steps_used() == 13);  // one look step and twelve turns
    CHECK(w.pose().yaw == doctest::Approx(deg_to_rad(90)));
  }
  {
    // Goal instance absent from the world.
    const Scene empty = without(s, 3);
    World w(empty, pose_at(3.0, 2.5, 0));
    OccupancyMap map = ground_truth_map(empty);
    AgentRunner runner(w, map, 100);
    const Goal goal = make_goal(s, 3, GoalModality::Category);
    CHECK_FALSE(verify_goal(runner, goal, encode_goal(goal, prov), prov, rng, -deg_to_rad(30)).found);
  }
  {
    PerceptionNoise fn;
    fn.verify_false_negative = 1.0;
    const PerceptionProviders blind(s, {}, fn);
    World w(s, pose_at(3.0, 2.0, 90));
    OccupancyMap map = ground_truth_map(s);
    AgentRunner runner(w, map, 100);
    const Goal goal = make_goal(s, 1, GoalModality::Category);
    CHECK_FALSE(verify_goal(runner, goal, encode_goal(goal, blind), blind, rng, -deg_to_rad(30)).found);
  }
}

TEST_CASE("goalpoint from a wall-mounted object mask") {
  const Scene& s = four_room();
  const OccupancyMap map = ground_truth_map(s);
  const TraversalGrid grid = map.traversable();
  const Observation obs = render_observation(s, pose_at(10.2, 2.3, -90, -30));
  InstanceMask m;
  m.width = obs.instance_ids.width();
  m.height = obs.instance_ids.height();
  m.pixels.assign(obs.instance_ids.pixel_count(), 0);
  for (int p = 0; p < obs.instance_ids.pixel_count(); ++p) {
    m.pixels[p] = obs.instance_ids.at(p) == 9;
    m.area += m.pixels[p];
  }
  REQUIRE(m.area > 100);
  const Cell gp = goalpoint_from_mask(obs, m, map);
  CHECK(grid.ok(gp));
  // Oracle: traversable cell nearest the center of the sink footprint.
  const Vec2 center = s.object(9).centroid.head<2>();
  double best = 1e9;
  Cell oracle;
  for (int i = 0; i < grid.width * grid.height; ++i) {
    if (!grid.passable[i]) continue;
    const double d = (map.center(map.cell(i)) - center).norm();
    if (d < best) {
      best = d;
      oracle = map.cell(i);
    }
  }
  CHECK(std::abs(gp.row - oracle.row) <= 1);
  CHECK(std::abs(gp.col - oracle.col) <= 1);

  InstanceMask empty = m;
  std::fill(empty.pixels.begin(), empty.pixels.end(), 0);
  empty.area = 0;
  CHECK_THROWS_AS(goalpoint_from_mask(obs, empty, map), PreconditionError);
  Observation nodepth = obs;
  for (float& d : nodepth.depth.raw()) d = kInvalidDepth;
  CHECK_THROWS_AS(goalpoint_from_mask(nodepth, m, map), Error);
}

TEST_CASE("path following") {
  const Scene s = empty_room(8.0, 3.0);
  {
    World w(s, pose_at(1.0, 1.5, 0));
    OccupancyMap map = ground_truth_map(s);
    AgentRunner runner(w, map, 100);
    const WalkResult r = walk_to(runner, map.cell_of({3.0, 1.5}), 0.05, 100);
    CHECK(r.arrived);
    CHECK(r.steps == 8);
  }
  {
    World w(s, pose_at(4.0, 1.5, 0));
    OccupancyMap map = ground_truth_map(s);
    AgentRunner runner(w, map, 100);
    std::vector<Action> acts;
    runner.set_hook([&](Action a, const StepResult&, const Observation&) { acts.push_back(a); });
    const WalkResult r = walk_to(runner, map.cell_of({2.0, 1.5}), 0.05, 100);
    CHECK(r.arrived);
    REQUIRE(acts.size() >= 6u);
    for (int i = 0; i < 6; ++i) CHECK(acts[i] != Action::MoveForward);
    CHECK(std::count(acts.begin(), acts.end(), Action::MoveForward) == 8);
  }
  {
    Scene walled = s;
    walled.obstacles.push_back({Box{{5.0, -0.1, 0}, {5.1, 3.1, 2.6}}});
    World w(walled, pose_at(2.0, 1.5, 0));
    OccupancyMap map = ground_truth_map(walled);
    AgentRunner runner(w, map, 100);
    const WalkResult r = walk_to(runner, map.cell_of({7.0, 1.5}), 0.5, 100);
    CHECK_FALSE(r.arrived);
    CHECK(r.steps < 100);
  }
}

TEST_CASE("shortest path to a goal region") {
  const Scene s = one_room();
  const OccupancyMap map = ground_truth_map(s);
  const TraversalGrid grid = map.traversable();
  const Goal goal = make_goal(s, 2, GoalModality::Category);  // plant in the corner
  const Vec2 start(1.0, 2.5);
  const double d = shortest_path_to_goal(s, grid, map, start, goal);
  // Straight line to the region boundary, obstacle free.
  const double euclid = s.object(2).box().footprint_distance(start) - 1.0;
  CHECK(d >= euclid - map.resolution());
  CHECK(d <= 1.02 * euclid + map.resolution());
  CHECK(shortest_path_to_goal(s, grid, map, {5.0, 4.0}, goal) == 0.0);
}

TEST_CASE("subtask navigation with a correct memory") {
  const Scene& s = one_room();
  const PerceptionProviders prov(s);
  const Codebook cb = instance_codebook(s, prov, {1, 2, 3});
  const OccupancyMap gt = ground_truth_map(s);
  for (auto [id, mod] : {std::pair{1, GoalModality::Category}, std::pair{2, GoalModality::Text},
                         std::pair{3, GoalModality::Image}}) {
    const Goal goal = make_goal(s, id, mod, 4);
    World w(s, pose_at(3.0, 2.5, 0));
    OccupancyMap map = gt;
    NavParams np;
    const SubtaskResult r = navigate_subtask(w, map, cb, goal, prov, np);
    const double shortest = shortest_path_to_goal(s, gt.traversable(), gt, {3.0, 2.5}, goal);
    CAPTURE(id);
    CHECK(r.success);
    CHECK(r.stopped);
    CHECK(r.invalid_candidates == 0);
    CHECK(r.path_length <= 1.5 * shortest + 0.5);
    CHECK(r.path_length >= shortest - gt.resolution());
    check_valid_trajectory(s, r, np.step_limit);
    CHECK(r.trajectory.back().event == NavEvent::Stop);
  }
}

TEST_CASE("a decoy candidate is rejected and the next one confirmed") {
  const Scene& s = four_room();
  const PerceptionProviders prov(s);
  Codebook cb = instance_codebook(s, prov, {10, 1});
  // The dining table entry (kitchen, out of sight of the sofa) claims the
  // sofa's feature and ranks first.
  cb.entries[0].instance_feature = prov.space().instance(1);
  cb.entries[1].instance_feature = (prov.space().instance(1) + 0.3 * prov.space().instance(2)).normalized();
  const Goal goal = make_goal(s, 1, GoalModality::Category);
  World w(s, pose_at(6.0, 4.0, 0));
  OccupancyMap map = ground_truth_map(s);
  const SubtaskResult r = navigate_subtask(w, map, cb, goal, prov);
  CHECK(r.success);
  CHECK(r.invalid_candidates == 1);
  CHECK(r.candidates_tried == 2);
  const auto fails = std::count_if(r.trajectory.begin(), r.trajectory.end(),
                                   [](const auto& t) { return t.event == NavEvent::VerifyFail; });
  CHECK(fails == 1);
}

TEST_CASE("step limit ends a hopeless subtask") {
  const Scene& s = one_room();
  const Scene world_scene = without(s, 2);
  const PerceptionProviders prov(s);
  const Codebook cb = instance_codebook(s, prov, {2});
  const Goal goal = make_goal(s, 2, GoalModality::Category);
  World w(world_scene, pose_at(3.0, 2.5, 0));
  OccupancyMap map = ground_truth_map(world_scene);
  NavParams np;
  const SubtaskResult r = navigate_subtask(w, map, cb, goal, prov, np);
  CHECK_FALSE(r.success);
  CHECK(r.steps == 200);
  CHECK(r.used_fallback);
  check_valid_trajectory(world_scene, r, 200);
}

TEST_CASE("trajectory log lines") {
  std::vector<TrajectoryRecord> recs;
  recs.push_back({1, Action::TurnLeft, pose_at(1, 2, 30), std::nullopt});
  recs.push_back({1, std::nullopt, pose_at(1, 2, 30), NavEvent::WaypointSet});
  std::ostringstream out;
  write_trajectory(out, recs);
  CHECK(out.str() ==
        "{\"step\": 1, \"action\": \"TURN_LEFT\", \"pose\": [1.0000, 2.0000, 0.523599, 0.000000], \"event\": null}\n"
        "{\"step\": 1, \"action\": null, \"pose\": [1.0000, 2.0000, 0.523599, 0.000000], \"event\": \"WAYPOINT_SET\"}\n");
}

TEST_CASE("candidate viewpoints cover both sides of a wall") {
  const Scene& s = one_room();
  Scene walled = s;
  // Thin full-height wall through x = 3, centroid just beside it.
  walled.obstacles.push_back({Box{{2.95, 0.0, 0.0}, {3.1, 10.0, 2.6}}});
  const OccupancyMap map = ground_truth_map(walled);
  const TraversalGrid grid = map.traversable();
  CodebookEntry e;
  e.members = {0};
  e.centroid_3d = Vec3(3.12, 2.5, 0.5);
  const auto views = candidate_viewpoints(e, map, 0.5, 2);
  REQUIRE(views.size() == 2);
  CHECK(views[0] == candidate_waypoint(e, map));
  const double wx = 3.025;
  CHECK(grid.ok(views[1]));
  CHECK((map.center(views[0]).x() - wx) * (map.center(views[1]).x() - wx) < 0.0);
  CHECK(candidate_viewpoints(e, map, 0.5, 1).size() == 1);

  // A doorway 1.5 m away still leaves two sides.
  Scene door = s;
  door.obstacles.push_back({Box{{2.95, 0.0, 0.0}, {3.1, 3.5, 2.6}}});
  const OccupancyMap door_map = ground_truth_map(door);
  const auto door_views = candidate_viewpoints(e, door_map, 0.5, 2);
  REQUIRE(door_views.size() == 2);
  CHECK((door_map.center(door_views[0]).x() - wx) * (door_map.center(door_views[1]).x() - wx) < 0.0);

  // Open floor: one side only.
  e.centroid_3d = Vec3(1.5, 2.5, 0.5);
  CHECK(candidate_viewpoints(e, map, 0.5, 2).size() == 1);
}
