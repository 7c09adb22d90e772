#include "gsnav/fmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <queue>
#include <utility>

namespace gsnav {

namespace {

constexpr double kInf = DistanceField::kUnreachable;

// Two-neighbor upwind update of |grad T| = 1 with grid spacing h.
double solve_pair(double a, double b, double h) {
  if (a > b) std::swap(a, b);
  if (a == kInf) return kInf;
  if (b == kInf || b - a >= h) return a + h;
  return 0.5 * (a + b + std::sqrt(2.0 * h * h - (a - b) * (a - b)));
}

bool line_of_sight(const TraversalGrid& g, Cell a, Cell b) {
  int x = a.col, y = a.row;
  const int dx = std::abs(b.col - x), dy = -std::abs(b.row - y);
  const int sx = x < b.col ? 1 : -1, sy = y < b.row ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (!g.ok({x, y})) return false;
    if (x == b.col && y == b.row) return true;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
}

}  // namespace

DistanceField fmm_distance(const TraversalGrid& grid, Cell source, FmmParams params) {
  return fmm_distance(grid, std::span<const Cell>(&source, 1), params);
}

DistanceField fmm_distance(const TraversalGrid& grid, std::span<const Cell> sources,
                           FmmParams params) {
  DistanceField f{grid.width, grid.height, grid.resolution, {}};
  const std::size_t n = static_cast<std::size_t>(grid.width) * grid.height;
  f.values.assign(n, kInf);
  std::vector<std::uint8_t> accepted(n, 0), fixed(n, 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  const double h = grid.resolution;

  const int r = std::max(0, params.exact_init_radius);
  for (const Cell& s : sources) {
    if (!grid.ok(s)) continue;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        if (dx * dx + dy * dy > r * r) continue;
        const Cell c{s.col + dx, s.row + dy};
        if (!grid.ok(c) || !line_of_sight(grid, s, c)) continue;
        const int i = grid.index(c);
        const double d = h * std::sqrt(static_cast<double>(dx * dx + dy * dy));
        if (d < f.values[i]) {
          f.values[i] = d;
          fixed[i] = 1;
          heap.emplace(d, i);
        }
      }
    }
  }

  auto known = [&](int col, int row) {
    const Cell c{col, row};
    if (!grid.in_bounds(c)) return kInf;
    const int i = grid.index(c);
    return accepted[i] ? f.values[i] : kInf;
  };
  // Diagonal neighbors only count when the corner between them is open.
  auto known_diag = [&](int col, int row, int dc, int dr) {
    if (!grid.ok({col + dc, row}) && !grid.ok({col, row + dr})) return kInf;
    return known(col + dc, row + dr);
  };

  const int stop_idx =
      params.stop_cell && grid.in_bounds(*params.stop_cell) ? grid.index(*params.stop_cell) : -1;
  double stop_at = kInf;
  while (!heap.empty()) {
    const auto [t, i] = heap.top();
    heap.pop();
    if (accepted[i] || t > f.values[i]) continue;
    if (t > stop_at) break;
    accepted[i] = 1;
    if (i == stop_idx) stop_at = t + params.stop_margin;
    const Cell c = grid.cell(i);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const Cell nb{c.col + dc, c.row + dr};
        if (!grid.ok(nb)) continue;
        const int j = grid.index(nb);
        if (accepted[j] || fixed[j]) continue;
        const int x = nb.col, y = nb.row;
        const double axis = solve_pair(std::min(known(x - 1, y), known(x + 1, y)),
                                       std::min(known(x, y - 1), known(x, y + 1)), h);
        const double diag = solve_pair(
            std::min(known_diag(x, y, -1, -1), known_diag(x, y, 1, 1)),
            std::min(known_diag(x, y, -1, 1), known_diag(x, y, 1, -1)), h * std::sqrt(2.0));
        const double v = std::min(axis, diag);
        if (v < f.values[j]) {
          f.values[j] = v;
          heap.emplace(v, j);
        }
      }
    }
  }
  if (stop_at < kInf) {
    // Tentative values past the cut-off are not final.
    for (std::size_t i = 0; i < n; ++i) {
      if (!accepted[i] && !fixed[i]) f.values[i] = kInf;
    }
  }
  return f;
}

std::vector<Cell> extract_path(const DistanceField& field, Cell start) {
  std::vector<Cell> path;
  if (!field.reachable(start)) return path;
  Cell cur = start;
  path.push_back(cur);
  const std::size_t max_len = field.values.size();
  while (field.at(cur) > 0.0 && path.size() < max_len) {
    Cell best = cur;
    double best_v = field.at(cur);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const Cell nb{cur.col + dc, cur.row + dr};
        if (dr != 0 && dc != 0 && !field.reachable({cur.col + dc, cur.row}) &&
            !field.reachable({cur.col, cur.row + dr})) {
          continue;
        }
        const double v = field.at(nb);
        if (v < best_v) {
          best_v = v;
          best = nb;
        }
      }
    }
    if (best == cur) break;
    cur = best;
    path.push_back(cur);
  }
  return path;
}

}  // namespace gsnav
