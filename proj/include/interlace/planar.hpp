#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "interlace/green.hpp"
#include "interlace/lattice.hpp"
#include "interlace/potential.hpp"
#include "interlace/rng.hpp"

namespace interlace {

struct PlanarSolveOptions {
  double tolerance = 1e-12;
  int max_iterations = 4000;
};

// The Green matrix of a planar set, applied as an FFT convolution. Not safe
// for concurrent use.
class PlanarGreenOperator {
 public:
  PlanarGreenOperator(const Window& set, const PlaneKernel& kernel);
  ~PlanarGreenOperator();
  PlanarGreenOperator(const PlanarGreenOperator&) = delete;
  PlanarGreenOperator& operator=(const PlanarGreenOperator&) = delete;

  std::size_t size() const { return n_; }
  double diagonal() const { return diag_; }
  void apply(const std::vector<double>& v, std::vector<double>& out) const;
  /// sup |rhs - G x|, with the residual vector left in r.
  double residual(const std::vector<double>& rhs, const std::vector<double>& x, std::vector<double>& r) const;
  /// Conjugate gradients from the guess in x. Returns the iteration count.
  int solve(const std::vector<double>& rhs, std::vector<double>& x, double tolerance, int max_iterations,
            double* final_residual = nullptr) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t n_ = 0;
  double diag_ = 0;
};

/// Equilibrium measure of a set inside the embedded plane, by conjugate
/// gradients with the Green matrix applied as an FFT convolution. The kernel
/// must cover the extents of the set's bounding box.
EquilibriumMeasure planar_equilibrium_measure(const Window& set, const PlaneKernel& kernel,
                                              const PlanarSolveOptions& options = {});

// Sequence of plane sites visited by simple random walk on Z^3. From a plane
// site the walk either steps inside the plane (probability 2/3) or leaves it
// and comes back after an excursion that cannot touch the plane. The
// excursion has a return time T of the vertical coordinate and a
// NegBin(T, 1/3) number of horizontal steps, so it is sampled in O(1).
class PlaneExcursions {
 public:
  static constexpr std::uint64_t kMaxHalfTime = std::uint64_t{1} << 56;

  PlaneExcursions();

  /// Vertical return time from height 1 to 0 (odd).
  std::uint64_t sample_return_time(RngStream& rng) const;
  /// P[T > 2k + 1] = binom(2k + 2, k + 1) / 4^{k+1}.
  double tail(std::uint64_t k) const;
  /// Moves (x, y) to the next plane site visited. Returns the number of
  /// walk steps taken.
  std::uint64_t advance(std::int64_t& x, std::int64_t& y, RngStream& rng) const;

 private:
  std::vector<double> central_;  // binom(2k, k) / 4^k
};

// h(p) = P_p[H_K < infinity] for plane points p and a planar set K in Z^3.
// Far away the value is bracketed through the expansion of g, so a
// Bernoulli(h) draw rarely needs the full sum.
class PlaneHitting {
 public:
  /// grid_margin > 0 tabulates h by FFT on the bounding box grown by that
  /// margin.
  PlaneHitting(const EquilibriumMeasure& eq, std::shared_ptr<const PlaneKernel> kernel,
               std::int64_t grid_margin = 0);

  double exact(std::int64_t x, std::int64_t y) const;
  std::int64_t grid_margin() const { return margin_; }
  /// Rigorous bounds lo <= h <= hi, valid once p is at distance >= 10 from
  /// the bounding box; otherwise lo = 0, hi = 1.
  void bracket(std::int64_t x, std::int64_t y, double* lo, double* hi) const;
  /// Returns uniform < h(x, y) without computing h unless needed.
  bool hits(std::int64_t x, std::int64_t y, double uniform) const;

 private:
  void build_grid(const EquilibriumMeasure& eq);
  bool in_set(std::int64_t x, std::int64_t y) const;

  std::shared_ptr<const PlaneKernel> kernel_;
  Window set_;
  std::vector<std::int32_t> xs_, ys_;
  std::vector<double> w_;
  double capacity_ = 0;
  std::int64_t x0_, x1_, y0_, y1_;
  std::int64_t margin_ = 0;
  std::int64_t gw_ = 0, gh_ = 0;
  std::vector<double> grid_;
};

/// g((a, b, 0)) in d = 3: kernel values in range, the expansion beyond.
double plane_green(const PlaneKernel& kernel, std::int64_t a, std::int64_t b);

/// Bounds of g(v) in d = 3 over all v with Euclidean norm r, r >= 10.
double green3_lower(double r);
double green3_upper(double r);

}  // namespace interlace
