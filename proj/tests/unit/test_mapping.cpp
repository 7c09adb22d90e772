#include "doctest.h"
#include "common/fmm_checks.hpp"
#include "fixtures.hpp"

#include "gsnav/explorer.hpp"
#include "gsnav/fmm.hpp"
#include "gsnav/frontier.hpp"
#include "gsnav/occupancy.hpp"
#include "gsnav/pnm.hpp"

#include <filesystem>

using namespace gsnav;
using namespace gsnav::test;

TEST_CASE("fmm matches Euclidean distance on open maps") {
  CHECK(max_relative_error_open(120, 120, {60, 60}) < 0.02);
  CHECK(max_relative_error_open(150, 60, {3, 7}) < 0.02);
  // A source in a corner exercises the one-sided stencil at the border.
  CHECK(max_relative_error_open(80, 80, {0, 0}) < 0.02);
}

TEST_CASE("fmm properties on random maps") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 30; ++t) {
    const TraversalGrid g = random_grid(rng);
    const Cell src = random_passable(g, rng);
    const DistanceField f = fmm_distance(g, src);
    INFO("map " << t);
    CHECK(check_distance_field(g, src, f) == "");
    for (int k = 0; k < 5; ++k) {
      const Cell start = random_passable(g, rng);
      if (!f.reachable(start)) continue;
      CHECK(check_path(g, f, start, src) == "");
    }
  }
}

TEST_CASE("fmm multi-source and early stop") {
  const TraversalGrid g = open_grid(60, 20);
  const std::vector<Cell> srcs = {{5, 10}, {55, 10}};
  const DistanceField both = fmm_distance(g, srcs);
  const DistanceField a = fmm_distance(g, srcs[0]);
  const DistanceField b = fmm_distance(g, srcs[1]);
  for (int i = 0; i < 60 * 20; ++i) {
    const double m = std::min(a.values[i], b.values[i]);
    // Away from the line where the fronts meet, the nearer source decides.
    if (std::abs(a.values[i] - b.values[i]) > 0.3) CHECK(both.values[i] == doctest::Approx(m).epsilon(1e-9));
    CHECK(both.values[i] <= m + 1e-12);
    CHECK(both.values[i] >= 0.98 * m);
  }
  FmmParams p;
  p.stop_cell = Cell{15, 10};
  const DistanceField early = fmm_distance(g, Cell{5, 10}, p);
  CHECK(early.at({15, 10}) == doctest::Approx(a.at({15, 10})));
  CHECK_FALSE(early.reachable({59, 10}));
  CHECK(extract_path(early, {59, 10}).empty());
}

TEST_CASE("ground truth map rasterizes obstacles") {
  const Scene scene = empty_room(3.0, 2.0);
  const OccupancyMap m = ground_truth_map(scene);
  for (int i = 0; i < m.width() * m.height(); ++i) {
    const Vec2 p = m.center(m.cell(i));
    const bool inside = p.x() > 0.05 && p.x() < 2.95 && p.y() > 0.05 && p.y() < 1.95;
    if (inside) CHECK(m.at(i) == CellState::Free);
    const bool in_wall = (p.x() < -0.03 && p.x() > -0.07) || (p.y() > 2.03 && p.y() < 2.07);
    const bool on_floor = p.x() > -0.1 && p.x() < 3.1 && p.y() > -0.1 && p.y() < 2.1;
    if (in_wall && on_floor) CHECK(m.at(i) == CellState::Occupied);
  }
  const TraversalGrid g = m.traversable();
  for (int i = 0; i < g.width * g.height; ++i) {
    if (!g.passable[i]) continue;
    const Vec2 p = m.center(m.cell(i));
    CHECK(p.x() >= agent::kBaseRadius - 0.05);
    CHECK(p.y() <= 2.0 - agent::kBaseRadius + 0.05);
  }
}

TEST_CASE("depth integration stays consistent with the scene") {
  const Scene scene = empty_room(4.0, 3.0);
  World world(scene, Pose{2.0, 1.5});
  OccupancyMap map = OccupancyMap::for_scene(scene);
  for (int k = 0; k < 12; ++k) {
    integrate_depth(map, world.observe(), world.camera());
    world.act(Action::TurnLeft);
  }
  long free = 0;
  for (int i = 0; i < map.width() * map.height(); ++i) {
    const Vec2 p = map.center(map.cell(i));
    if (map.at(i) == CellState::Occupied) {
      // Occupied cells lie on a wall.
      CHECK((p.x() < 0.1 || p.x() > 3.9 || p.y() < 0.1 || p.y() > 2.9));
    }
    if (map.at(i) == CellState::Free) {
      ++free;
      CHECK((p.x() >= -0.06 && p.x() <= 4.06 && p.y() >= -0.06 && p.y() <= 3.06));
    }
  }
  // Depth is valid from 0.5 m, so most of the 12 m^2 floor is seen.
  CHECK(free * map.resolution() * map.resolution() > 9.0);
}

TEST_CASE("map image round trip") {
  const OccupancyMap gt = ground_truth_map(four_room());
  OccupancyMap m = OccupancyMap::for_scene(four_room());
  for (int i = 0; i < m.width() * m.height(); i += 3) m.set(m.cell(i), gt.at(i));
  const ImageU8 img = m.to_image();
  for (int i = 0; i < m.width() * m.height(); ++i) {
    const Cell c = m.cell(i);
    const std::uint8_t v = img(m.height() - 1 - c.row, c.col);
    const std::uint8_t want = m.at(i) == CellState::Unknown ? 128 : m.at(i) == CellState::Free ? 255 : 0;
    CHECK(v == want);
  }
  const auto path = std::filesystem::temp_directory_path() / "gsnav_map_test.pgm";
  m.save_pgm(path);
  OccupancyMap back = OccupancyMap::for_scene(four_room());
  back.load_image(read_pgm(path));
  CHECK(back == m);
  std::filesystem::remove(path);
  OccupancyMap small(Vec2::Zero(), 3, 3);
  CHECK_THROWS_AS(small.load_image(img), SchemaError);
}

TEST_CASE("frontier detection and selection") {
  OccupancyMap m(Vec2::Zero(), 40, 20);
  // Free band in columns 0..19; unknown to the right; an occupied stub.
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 20; ++c) m.mark_free({c, r});
  }
  for (int r = 0; r < 6; ++r) m.mark_occupied({19, r});
  const auto fs = detect_frontiers(m, 5);
  REQUIRE(fs.size() == 1);
  CHECK(fs[0].size() == 14);
  for (const Cell& c : fs[0].cells) {
    CHECK(c.col == 19);
    CHECK(is_frontier_cell(m, c));
  }
  CHECK(detect_frontiers(m, 15).empty());

  Pose agent{0.5, 0.5};
  const auto choice = select_frontier(m, agent, fs);
  REQUIRE(choice);
  CHECK(choice->index == 0);
  CHECK(choice->target.col == 19);
  CHECK(choice->target.row == 10);
  CHECK(choice->distance == doctest::Approx(9 * 0.05).epsilon(0.02));
}

TEST_CASE("exploration covers a single room") {
  const Scene& scene = one_room();
  World world(scene, Pose{3.0, 2.5});
  ExploreParams p;
  p.budget = 600;
  const ExploreResult r = explore(world, p);
  CHECK(r.frames.size() == static_cast<std::size_t>(r.steps + 1));
  CHECK(r.steps <= 600);
  CHECK(r.frontiers_exhausted);
  const OccupancyMap gt = ground_truth_map(scene);
  const TraversalGrid g = gt.traversable();
  long seen = 0, total = 0;
  for (int i = 0; i < g.width * g.height; ++i) {
    if (!g.passable[i]) continue;
    ++total;
    seen += r.map.at(i) == CellState::Free;
  }
  CHECK(static_cast<double>(seen) / total > 0.9);
  for (const auto& f : r.frames) CHECK_FALSE(disc_collides(scene, f.pose.xy()));
}
