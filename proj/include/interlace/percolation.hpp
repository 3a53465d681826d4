#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "interlace/lattice.hpp"
#include "interlace/rng.hpp"
#include "interlace/sampler.hpp"

namespace interlace {

/// Inclusive rectangle [x0, x1] x [y0, y1] of the embedded plane.
struct PlaneRect {
  std::int64_t x0 = 0, x1 = -1, y0 = 0, y1 = -1;

  std::int64_t width() const { return x1 - x0 + 1; }
  std::int64_t height() const { return y1 - y0 + 1; }
  std::size_t size() const { return width() > 0 && height() > 0 ? static_cast<std::size_t>(width() * height()) : 0; }
  bool contains(std::int64_t x, std::int64_t y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool contains(const PlaneRect& r) const { return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1; }
  bool on_border(std::int64_t x, std::int64_t y) const { return x == x0 || x == x1 || y == y0 || y == y1; }
  /// Window of the embedded plane in dimension d.
  Window window(int d) const;
  std::string str() const;
};

// Occupancy of I^u on a plane rectangle.
struct PlaneConfig {
  PlaneRect rect;
  std::vector<std::uint8_t> occupied;  // (y - y0) * width + (x - x0)

  static PlaneConfig filled(const PlaneRect& rect, bool value);
  std::size_t index(std::int64_t x, std::int64_t y) const {
    return static_cast<std::size_t>((y - rect.y0) * rect.width() + (x - rect.x0));
  }
  bool at(std::int64_t x, std::int64_t y) const { return occupied[index(x, y)] != 0; }
  void set(std::int64_t x, std::int64_t y, bool v) { occupied[index(x, y)] = v ? 1 : 0; }
};

/// Plane trace of a sample's occupancy at level u. The trace of the window
/// on the plane must be a full rectangle.
PlaneConfig plane_config(const InterlacementSample& sample, double u);

// Maps window slots to plane rectangle cells once, so that slicing one
// coupled sample at many levels is cheap.
class PlaneSlicer {
 public:
  explicit PlaneSlicer(const Window& window);
  const PlaneRect& rect() const { return rect_; }
  PlaneConfig slice(const std::vector<double>& cover_levels, double u) const;

 private:
  PlaneRect rect_;
  std::vector<std::int64_t> cell_;  // per slot; -1 when off the plane
};

struct ClusterLabeling {
  Adjacency adjacency = Adjacency::Star;
  PlaneRect rect;
  std::vector<std::int32_t> labels;  // -1 outside the set; else 0..count-1
  std::vector<std::uint32_t> sizes;

  std::int32_t label(std::int64_t x, std::int64_t y) const {
    return labels[static_cast<std::size_t>((y - rect.y0) * rect.width() + (x - rect.x0))];
  }
  std::size_t count() const { return sizes.size(); }
};

/// Union-find labeling of the member cells of a rectangle.
ClusterLabeling label_clusters(const PlaneRect& rect, const std::vector<std::uint8_t>& member, Adjacency adjacency);
ClusterLabeling label_clusters(const PlaneConfig& config, Adjacency adjacency);

/// Is there an occupied *-path inside `outer` from `inner` to the border of
/// `outer`? With inner = C_m and outer = C~_m this is the event B_m^u.
bool crossing_Bm(const PlaneConfig& config, const PlaneRect& inner, const PlaneRect& outer);

/// Occupied *-connection inside `rect` between the lines {coord = from} and
/// {coord = to}, where coord is x (axis 0) or y (axis 1).
bool rectangle_crossing(const PlaneConfig& config, const PlaneRect& rect, int axis, std::int64_t from,
                        std::int64_t to);

/// The rectangle [0, 2L] x [0, 6L] crossed between columns 0 and 2L - 1, or
/// one of its images under the isometries 1: x -> -x, 2: swap axes,
/// 3: swap axes then y -> -y.
struct CrossingRectangle {
  PlaneRect rect;
  int axis = 0;
  std::int64_t from = 0, to = 0;
};
CrossingRectangle crossing_rectangle(std::int64_t L0, int isometry = 0);
bool rectangle_crossing(const PlaneConfig& config, std::int64_t L0, int isometry = 0);

struct OriginProxy {
  bool origin_occupied = false;
  /// The vacant nn-cluster of the origin touches the border of the window.
  bool reaches_boundary = false;
  /// An occupied *-circuit in the window surrounds the origin (true when the
  /// origin is itself occupied).
  bool circuit = false;
};
OriginProxy origin_percolation_proxy(const PlaneConfig& config);

struct CrossingReport {
  std::string event;
  int dim = 3;
  double u = 0;
  std::string window;
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double estimate = 0;
  double ci_low = 0;
  double ci_high = 0;
  std::uint64_t master_seed = 0;
  std::string note;

  static std::string csv_header();
  std::string csv_row() const;
};

CrossingReport make_report(std::string event, int dim, double u, std::string window, std::uint64_t trials,
                           std::uint64_t successes, std::uint64_t master_seed, std::string note = {});

/// Runs event(rep, rng) for rep = 0..trials-1, each on the stream
/// (master_seed, rep), on `workers` threads.
CrossingReport estimate_event(const std::string& name, int dim, double u, const std::string& window,
                              const std::function<bool(std::uint64_t, RngStream&)>& event, std::uint64_t trials,
                              std::uint64_t master_seed, unsigned workers = 1);

}  // namespace interlace
