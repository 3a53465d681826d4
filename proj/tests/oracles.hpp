#pragma once

// Slow, independent reference implementations used only by the tests.

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "interlace/lattice.hpp"
#include "interlace/percolation.hpp"
#include "interlace/rng.hpp"

namespace oracle {

using interlace::Adjacency;
using interlace::PlaneConfig;
using interlace::PlaneRect;

inline PlaneConfig random_config(const PlaneRect& rect, double p, interlace::RngStream& rng) {
  auto c = PlaneConfig::filled(rect, false);
  for (auto& v : c.occupied) v = rng.uniform() < p ? 1 : 0;
  return c;
}

inline std::vector<std::pair<int, int>> steps(Adjacency adjacency) {
  if (adjacency == Adjacency::NearestNeighbor) return {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  return {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
}

/// Component ids by breadth-first search; -1 off the set.
inline std::vector<int> bfs_components(int width, int height, const std::vector<std::uint8_t>& member,
                                       Adjacency adjacency) {
  std::vector<int> comp(member.size(), -1);
  int next = 0;
  for (int start = 0; start < width * height; ++start) {
    if (!member[start] || comp[start] >= 0) continue;
    std::deque<int> queue{start};
    comp[start] = next;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      const int x = v % width, y = v / width;
      for (auto [dx, dy] : steps(adjacency)) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
        const int w = ny * width + nx;
        if (member[w] && comp[w] < 0) {
          comp[w] = next;
          queue.push_back(w);
        }
      }
    }
    ++next;
  }
  return comp;
}

/// Do two labelings induce the same partition of the set?
inline bool same_partition(const std::vector<std::int32_t>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::vector<long> a_to_b, b_to_a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    const auto ai = static_cast<std::size_t>(a[i]), bi = static_cast<std::size_t>(b[i]);
    if (a_to_b.size() <= ai) a_to_b.resize(ai + 1, -1);
    if (b_to_a.size() <= bi) b_to_a.resize(bi + 1, -1);
    if (a_to_b[ai] < 0) a_to_b[ai] = static_cast<long>(bi);
    if (b_to_a[bi] < 0) b_to_a[bi] = static_cast<long>(ai);
    if (a_to_b[ai] != static_cast<long>(bi) || b_to_a[bi] != static_cast<long>(ai)) return false;
  }
  return true;
}

/// Signed crossing of the segment p -> q with a fixed ray from the origin
/// whose slope is irrational, so no lattice point lies on it.
inline int ray_crossing(double px, double py, double qx, double qy) {
  const double dx = std::cos(0.3), dy = std::sin(0.3);
  const double cp = dx * py - dy * px, cq = dx * qy - dy * qx;
  if ((cp < 0) == (cq < 0)) return 0;
  const double t = cp / (cp - cq);
  const double sx = px + t * (qx - px), sy = py + t * (qy - py);
  if (sx * dx + sy * dy <= 0) return 0;
  return cp < 0 ? 1 : -1;
}

/// Occupied *-circuit around the origin (true when the origin is occupied),
/// by search on the winding-number cover of the occupied *-graph: a closed
/// walk with nonzero winding exists iff some site reaches its own lift at a
/// different sheet.
inline bool circuit_by_cover(const PlaneConfig& c) {
  const auto& r = c.rect;
  if (r.contains(0, 0) && c.at(0, 0)) return true;
  const int w = static_cast<int>(r.width()), h = static_cast<int>(r.height());
  constexpr int kSheets = 4;
  const int layers = 2 * kSheets + 1;
  for (int start = 0; start < w * h; ++start) {
    if (!c.occupied[static_cast<std::size_t>(start)]) continue;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(w * h * layers), 0);
    std::deque<std::pair<int, int>> queue{{start, 0}};
    seen[static_cast<std::size_t>(start * layers + kSheets)] = 1;
    while (!queue.empty()) {
      const auto [v, k] = queue.front();
      queue.pop_front();
      const int x = v % w, y = v / w;
      for (auto [dx, dy] : steps(Adjacency::Star)) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const int u = ny * w + nx;
        if (!c.occupied[static_cast<std::size_t>(u)]) continue;
        const int nk = k + ray_crossing(static_cast<double>(x + r.x0), static_cast<double>(y + r.y0),
                                        static_cast<double>(nx + r.x0), static_cast<double>(ny + r.y0));
        if (u == start && nk != 0) return true;
        if (nk < -kSheets || nk > kSheets) continue;
        auto& s = seen[static_cast<std::size_t>(u * layers + nk + kSheets)];
        if (!s) {
          s = 1;
          queue.push_back({u, nk});
        }
      }
    }
  }
  return false;
}

/// Literal enumeration of simple occupied *-cycles (at least three sites),
/// stopping at the first one with nonzero winding. Exponential; small
/// windows only.
inline bool circuit_by_enumeration(const PlaneConfig& c) {
  const auto& r = c.rect;
  if (r.contains(0, 0) && c.at(0, 0)) return true;
  const int w = static_cast<int>(r.width()), h = static_cast<int>(r.height());
  std::vector<std::uint8_t> on_path(static_cast<std::size_t>(w * h), 0);
  bool found = false;
  std::function<void(int, int, int, int)> dfs = [&](int start, int v, int depth, int wind) {
    if (found) return;
    const int x = v % w, y = v / w;
    for (auto [dx, dy] : steps(Adjacency::Star)) {
      const int nx = x + dx, ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
      const int u = ny * w + nx;
      if (!c.occupied[static_cast<std::size_t>(u)] || u < start) continue;
      const int nw = wind + ray_crossing(static_cast<double>(x + r.x0), static_cast<double>(y + r.y0),
                                         static_cast<double>(nx + r.x0), static_cast<double>(ny + r.y0));
      if (u == start) {
        if (depth >= 3 && nw != 0) found = true;
        continue;
      }
      if (on_path[static_cast<std::size_t>(u)]) continue;
      on_path[static_cast<std::size_t>(u)] = 1;
      dfs(start, u, depth + 1, nw);
      on_path[static_cast<std::size_t>(u)] = 0;
      if (found) return;
    }
  };
  for (int start = 0; start < w * h && !found; ++start) {
    if (!c.occupied[static_cast<std::size_t>(start)]) continue;
    on_path[static_cast<std::size_t>(start)] = 1;
    dfs(start, start, 1, 0);
    on_path[static_cast<std::size_t>(start)] = 0;
  }
  return found;
}

}  // namespace oracle
