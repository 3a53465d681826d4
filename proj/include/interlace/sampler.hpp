#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "interlace/green.hpp"
#include "interlace/lattice.hpp"
#include "interlace/planar.hpp"
#include "interlace/potential.hpp"
#include "interlace/rng.hpp"

namespace interlace {

// How a walk is carried between visits to the window. Stepwise moves one
// lattice step at a time. The plane mode (d = 3, window inside the plane)
// jumps between plane visits. Either way a return from beyond the escape
// radius lands on the window through the first-entrance law when it is
// available, and otherwise walks the Doob-conditioned path (stepwise) or
// retries unconditioned excursions (plane).
enum class Propagation { Auto, Stepwise, PlaneExcursion };
std::string to_string(Propagation p);
Propagation parse_propagation(const std::string& name);

struct SamplerConfig {
  Propagation propagation = Propagation::Auto;
  /// R_escape = escape_factor * (1 + diam_inf(window)).
  double escape_factor = 4.0;
  /// Same for the plane mode, where returns are cheap.
  double plane_escape_factor = 1.0;
  /// Returns jump straight to the entrance point, drawn from the exact
  /// first-entrance law, when the support of e_K has at most this many
  /// points. Larger windows walk the return path.
  std::size_t entrance_law_limit = 1500;
  /// Plane-mode windows above that limit draw the entrance from a
  /// polynomial far-field expansion, checked by its residual, and use this
  /// escape factor instead.
  double far_escape_factor = 8.0;
  std::string green_cache_dir;
};

struct LabeledTrajectory {
  double label = 0;
  /// Window slots in order of first visit, starting with the entry point.
  std::vector<std::uint32_t> sites;
  bool truncated_after_escape = true;
  std::uint32_t returns = 0;
};

struct VacantView {
  std::shared_ptr<const Window> window;
  double u = 0;
  std::vector<std::uint8_t> vacant;  // per window slot

  std::vector<Point> sites() const;
  std::size_t count() const;
};

struct InterlacementSample {
  std::shared_ptr<const Window> window;
  double u_max = 0;
  std::vector<LabeledTrajectory> trajectories;

  /// Occupancy of I^u in the window, one byte per slot.
  std::vector<std::uint8_t> occupancy_mask(double u) const;
  std::vector<Point> occupancy_at(double u) const;
  VacantView vacant_view(double u) const;
  /// Smallest label covering each slot (infinity when never visited). The
  /// slot is occupied at level u iff its cover level is <= u.
  std::vector<double> cover_levels() const;
  std::size_t count_at(double u) const;

  void save(std::ostream& os) const;
  static InterlacementSample load(std::istream& is);
};

struct Continuation {
  bool escaped = true;
  Point entrance;
  std::vector<Point> path;  // current .. entrance (stepwise mode, when kept)
  std::uint64_t steps = 0;
};

class InterlacementSampler {
 public:
  explicit InterlacementSampler(Window window, const SamplerConfig& config = {});
  ~InterlacementSampler();

  const Window& window() const { return *window_; }
  std::shared_ptr<const Window> window_ptr() const { return window_; }
  const EquilibriumMeasure& equilibrium() const { return eq_; }
  const GreenFunction& green() const { return *green_; }
  double capacity() const { return eq_.capacity; }
  Propagation propagation() const { return mode_; }
  double escape_radius() const { return r_escape_; }
  std::string method_tags() const;
  /// Far-field entrance draws that needed an iterative finish so far.
  std::uint64_t entrance_fallbacks() const;

  /// P_x[H_K < infinity] for the window K.
  double h(const Point& x) const;
  /// P_x[H_K < infinity, X_{H_K} = z] per window slot z, for x outside the
  /// window (beyond the escape radius when the far-field expansion is used).
  std::vector<double> entrance_law(const Point& x) const;
  /// Index into window().sites() drawn from the normalized equilibrium measure.
  std::uint32_t draw_start(RngStream& rng) const;

  InterlacementSample sample(double u_max, RngStream& rng) const;

  /// Independent check sampler: no return handling, walks are killed once
  /// they leave the Euclidean ball of radius kill_radius around the window
  /// center. Returning after that is ignored; its probability is at most
  /// truncation_bias(kill_radius) per trajectory.
  InterlacementSample sample_truncated(double u_max, double kill_radius, RngStream& rng,
                                       Propagation mode = Propagation::Auto) const;
  double truncation_bias(double kill_radius) const;

  /// From a point beyond the escape radius: escape with probability
  /// 1 - h(current), otherwise a path conditioned to reach the window. The
  /// path is only walked when keep_path is set or the entrance law is off.
  Continuation continue_or_escape(const Point& current, RngStream& rng, bool keep_path = false) const;

 private:
  struct WalkState;
  void run_stepwise(const Point& start, LabeledTrajectory& traj, WalkState& st, RngStream& rng) const;
  void run_plane(const Point& start, LabeledTrajectory& traj, WalkState& st, RngStream& rng) const;
  void plane_return(std::int64_t& x, std::int64_t& y, RngStream& rng) const;
  double h_direct(const Point& x) const;
  double g_between(const Point& x, const Point& y) const;
  bool has_entrance_law() const { return !entrance_inv_.empty() || far_ != nullptr; }
  /// Entrance slot of a walk from x conditioned to hit the window. Needs x
  /// beyond the escape radius when the far-field expansion is in use.
  std::uint32_t draw_entrance(const Point& x, RngStream& rng) const;

  std::shared_ptr<const Window> window_;
  SamplerConfig config_;
  Propagation mode_;
  double r_escape_ = 0;
  std::shared_ptr<GreenFunction> green_;
  EquilibriumMeasure eq_;
  std::vector<std::uint32_t> support_;
  std::vector<double> alias_prob_;
  std::vector<std::uint32_t> alias_idx_;
  std::vector<double> entrance_inv_;  // G^{-1} on the support, row-major
  struct FarField;
  std::unique_ptr<FarField> far_;

  BoxRegion h_box_;
  std::vector<double> h_grid_;

  std::shared_ptr<const PlaneKernel> plane_kernel_;
  std::unique_ptr<PlaneHitting> plane_h_;
  PlaneExcursions excursions_;
};

InterlacementSample sample_interlacement(const Window& window, double u_max, RngStream& rng,
                                         const SamplerConfig& config = {});

/// Plane kernel shared across samplers (d, range).
std::shared_ptr<const PlaneKernel> cached_plane_kernel(int dim, int range);

/// Equilibrium measure with the solver picked by size and shape: the
/// symmetric or dense solve when it fits, else the planar FFT solve.
EquilibriumMeasure solve_equilibrium(const Window& window, const GreenFunction& green,
                                     std::shared_ptr<const PlaneKernel>* kernel_out = nullptr);

}  // namespace interlace
