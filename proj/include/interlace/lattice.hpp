#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "interlace/rng.hpp"

namespace interlace {

inline constexpr int kMaxDim = 8;

// A site of Z^d. The dimension is carried with the point; all points of a
// run share it.
struct Point {
  int dim = 0;
  std::array<std::int32_t, kMaxDim> x{};

  Point() = default;
  explicit Point(int d);
  Point(int d, std::initializer_list<std::int32_t> coords);

  static Point origin(int d) { return Point(d); }
  static Point unit(int d, int axis, int sign = 1);
  /// (a, b) in Z^2 embedded as (a, b, 0, ..., 0).
  static Point plane(int d, std::int32_t a, std::int32_t b);

  std::int32_t operator[](int i) const { return x[static_cast<std::size_t>(i)]; }
  std::int32_t& operator[](int i) { return x[static_cast<std::size_t>(i)]; }

  bool in_plane() const;
  std::int64_t norm_inf() const;
  std::int64_t norm1() const;
  double norm2() const;

  friend Point operator+(const Point& a, const Point& b);
  friend Point operator-(const Point& a, const Point& b);
  friend bool operator==(const Point& a, const Point& b);
  friend bool operator<(const Point& a, const Point& b);

  std::string str() const;
};

struct PointHash {
  std::size_t operator()(const Point& p) const noexcept;
};

enum class Adjacency { NearestNeighbor, Star };

/// Axis-aligned box [lo, hi] (inclusive) in Z^d. Degenerate axes are allowed.
class BoxRegion {
 public:
  BoxRegion() = default;
  BoxRegion(Point lo, Point hi);

  static BoxRegion centered(const Point& center, std::span<const std::int32_t> half_sides);
  static BoxRegion cube(const Point& center, std::int32_t half_side);
  /// [x0, x1] x [y0, y1] x {0}^{d-2}.
  static BoxRegion plane_rect(int d, std::int32_t x0, std::int32_t x1, std::int32_t y0,
                              std::int32_t y1);

  int dim() const { return lo_.dim; }
  const Point& lo() const { return lo_; }
  const Point& hi() const { return hi_; }
  std::int32_t extent(int axis) const { return hi_[axis] - lo_[axis] + 1; }

  bool contains(const Point& p) const;
  std::size_t size() const;
  /// Dense row-major index of a contained point (axis 0 fastest).
  std::size_t index(const Point& p) const;
  Point point(std::size_t index) const;
  std::vector<Point> points() const;
  /// Largest |.|_inf distance between two points of the box.
  std::int64_t diam_inf() const;
  /// |.|_inf distance from p to the box (0 inside).
  std::int64_t dist_inf(const Point& p) const;
  bool is_planar() const;
  BoxRegion expanded(std::int32_t margin) const;

 private:
  Point lo_, hi_;
};

/// Finite site set with O(1) membership through its bounding box.
class Window {
 public:
  Window() = default;
  explicit Window(const BoxRegion& box);
  Window(int d, std::vector<Point> sites);

  int dim() const { return bbox_.dim(); }
  const BoxRegion& bbox() const { return bbox_; }
  const std::vector<Point>& sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }
  bool is_box() const { return is_box_; }
  bool is_planar() const;

  bool contains(const Point& p) const { return slot(p) >= 0; }
  /// Position of p in sites(), or -1.
  std::int32_t slot(const Point& p) const;
  std::int64_t diam_inf() const { return bbox_.diam_inf(); }
  std::int64_t dist_inf(const Point& p) const { return bbox_.dist_inf(p); }
  std::string describe() const;

 private:
  void build_index();

  BoxRegion bbox_;
  std::vector<Point> sites_;
  std::vector<std::int32_t> slot_;
  bool is_box_ = false;
};

std::vector<Point> enumerate_neighbors(const Point& x, Adjacency adjacency);

enum class BoundaryKind { Outer, Inner };

/// Outer boundary (sites of U^c with a neighbor in U) or inner boundary
/// (sites of U with a neighbor in U^c). Output is sorted.
std::vector<Point> boundary(std::span<const Point> set, BoundaryKind kind);

/// Uniform nearest-neighbor step: direction index in [0, 2d).
inline int random_direction(int d, RngStream& rng) {
  return static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * d)));
}
inline void apply_direction(Point& p, int direction) {
  p.x[static_cast<std::size_t>(direction >> 1)] += (direction & 1) ? -1 : 1;
}

enum class StopCondition { Enter, Reenter, Exit, Budget };

struct WalkResult {
  std::optional<std::uint64_t> stop_time;  // empty: budget exhausted
  Point final;
  std::vector<Point> trace;  // X_0 .. X_stop (or up to the budget)
  bool budget_exhausted() const { return !stop_time.has_value(); }
};

/// Runs simple random walk from start until the stopping condition holds:
/// H_U (Enter), H~_U (Reenter, n >= 1), T_U (Exit), or only the budget
/// (Budget). The budget is mandatory.
WalkResult run_walk_until(const Point& start, StopCondition condition,
                          const std::function<bool(const Point&)>& in_set,
                          std::uint64_t step_budget, RngStream& rng, bool keep_trace = true);

}  // namespace interlace
