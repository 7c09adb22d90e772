#pragma once

#include "gsnav/fmm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <string>
#include <vector>

namespace gsnav::test {

inline TraversalGrid open_grid(int w, int h, double res = 0.05) {
  TraversalGrid g;
  g.width = w;
  g.height = h;
  g.resolution = res;
  g.passable.assign(static_cast<std::size_t>(w) * h, 1);
  return g;
}

// Random map: a border wall plus a handful of random rectangles.
inline TraversalGrid random_grid(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(30, 70);
  TraversalGrid g = open_grid(size(rng), size(rng));
  auto block = [&](int c0, int r0, int c1, int r1) {
    for (int r = std::max(r0, 0); r <= std::min(r1, g.height - 1); ++r) {
      for (int c = std::max(c0, 0); c <= std::min(c1, g.width - 1); ++c) g.passable[g.index({c, r})] = 0;
    }
  };
  block(0, 0, g.width - 1, 0);
  block(0, g.height - 1, g.width - 1, g.height - 1);
  block(0, 0, 0, g.height - 1);
  block(g.width - 1, 0, g.width - 1, g.height - 1);
  std::uniform_int_distribution<int> count(2, 8);
  const int n = count(rng);
  for (int k = 0; k < n; ++k) {
    std::uniform_int_distribution<int> c(0, g.width - 1), r(0, g.height - 1), len(1, 20);
    const int c0 = c(rng), r0 = r(rng);
    block(c0, r0, c0 + len(rng), r0 + len(rng));
  }
  return g;
}

inline Cell random_passable(const TraversalGrid& g, std::mt19937_64& rng) {
  std::vector<int> free;
  for (int i = 0; i < g.width * g.height; ++i) {
    if (g.passable[i]) free.push_back(i);
  }
  std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
  return g.cell(free[pick(rng)]);
}

// Cells 4-connected to `src` through passable cells.
inline std::vector<std::uint8_t> four_connected(const TraversalGrid& g, Cell src) {
  std::vector<std::uint8_t> seen(g.passable.size(), 0);
  std::deque<Cell> q{src};
  seen[g.index(src)] = 1;
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop_front();
    for (const Cell d : {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}}) {
      const Cell n{c.col + d.col, c.row + d.row};
      if (g.ok(n) && !seen[g.index(n)]) {
        seen[g.index(n)] = 1;
        q.push_back(n);
      }
    }
  }
  return seen;
}

// Worst relative error against Euclidean distance over cells at least
// `min_dist` meters from the source, on an obstacle-free grid.
inline double max_relative_error_open(int w, int h, Cell src, double min_dist = 0.5) {
  const TraversalGrid g = open_grid(w, h);
  const DistanceField f = fmm_distance(g, src);
  double worst = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double e = g.resolution * std::hypot(c - src.col, r - src.row);
      if (e < min_dist) continue;
      worst = std::max(worst, std::abs(f.at({c, r}) - e) / e);
    }
  }
  return worst;
}

// Returns an empty string when every check holds, otherwise a description of
// the first violation.
inline std::string check_distance_field(const TraversalGrid& g, Cell src, const DistanceField& f) {
  const double h = g.resolution;
  const double tol = 1e-9;
  if (f.at(src) != 0.0) return "source not zero";
  const auto conn = four_connected(g, src);
  for (int i = 0; i < g.width * g.height; ++i) {
    const Cell c = g.cell(i);
    const double v = f.at(c);
    if (!g.passable[i] && v < DistanceField::kUnreachable) return "blocked cell has a value";
    if (conn[i] && !(v < DistanceField::kUnreachable)) return "connected cell unreachable";
    if (!(v < DistanceField::kUnreachable)) continue;
    if (v < 0.0) return "negative value";
    // Lipschitz bound between neighbors and strict descent toward the source.
    bool has_lower = v == 0.0;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (!dr && !dc) continue;
        const Cell n{c.col + dc, c.row + dr};
        if (!f.reachable(n)) continue;
        const double step = (dr && dc) ? std::sqrt(2.0) * h : h;
        if (std::abs(f.at(n) - v) > step + tol) return "neighbor difference exceeds step";
        if (f.at(n) < v) has_lower = true;
      }
    }
    if (!has_lower) return "local minimum away from the source";
  }
  return {};
}

inline std::string check_path(const TraversalGrid& g, const DistanceField& f, Cell start, Cell src) {
  const auto path = extract_path(f, start);
  if (path.empty()) return "no path";
  if (!(path.back() == src)) return "path does not end at the source";
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (!g.ok(path[k])) return "path crosses an obstacle";
    if (k == 0) continue;
    const int dc = path[k].col - path[k - 1].col, dr = path[k].row - path[k - 1].row;
    if (std::abs(dc) > 1 || std::abs(dr) > 1) return "path jumps";
    if (dc && dr && !g.ok({path[k - 1].col + dc, path[k - 1].row}) &&
        !g.ok({path[k - 1].col, path[k - 1].row + dr})) {
      return "path cuts a blocked corner";
    }
    if (!(f.at(path[k]) < f.at(path[k - 1]))) return "path not descending";
  }
  return {};
}

}  // namespace gsnav::test
