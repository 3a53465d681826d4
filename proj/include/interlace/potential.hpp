#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "interlace/green.hpp"
#include "interlace/lattice.hpp"

namespace interlace {

class PotentialError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDenseSolveLimit = 5000;
inline constexpr double kSolverResidualTol = 1e-10;
inline constexpr double kNegativeWeightSlack = 1e-9;

enum class EquilibriumSolver { Dense, SymmetryReduced, PlanarFft };
std::string to_string(EquilibriumSolver solver);

// Equilibrium measure e_K of a finite set. Weights are indexed like
// set.sites(); entries off the inner boundary are exactly zero.
struct EquilibriumMeasure {
  Window set;
  std::vector<double> weights;
  std::vector<double> normalized;
  double capacity = 0;
  double residual = 0;  // sup over K of |sum_y g(x - y) e(y) - 1|
  EquilibriumSolver solver = EquilibriumSolver::Dense;

  double weight(const Point& x) const;
  /// Indices into set.sites() with nonzero weight.
  std::vector<std::size_t> support() const;
};

struct EquilibriumOptions {
  /// Solve only on the inner boundary (interior weights are zero).
  bool restrict_to_inner_boundary = true;
  /// Exploit invariance of K under the hyperoctahedral group when present.
  bool use_symmetry = true;
};

using GreenEval = std::function<double(const Point&)>;

EquilibriumMeasure equilibrium_measure(const Window& set, const GreenFunction& green,
                                       const EquilibriumOptions& options = {});
EquilibriumMeasure equilibrium_measure(const Window& set, const GreenEval& green,
                                       const EquilibriumOptions& options = {});
double capacity(const Window& set, const GreenFunction& green);

/// P_x[H_K < infinity] = sum_y g(x - y) e_K(y); exactly 1 on K.
double hitting_probability(const Point& x, const EquilibriumMeasure& eq, const GreenFunction& green);

struct HittingBounds {
  double lower = 0;
  double upper = 0;
};
/// The two Green-sum ratio bounds that sandwich P_x[H_K < infinity].
HittingBounds hitting_bounds(const Point& x, const Window& set, const GreenFunction& green);

struct EscapeEstimate {
  double estimate = 0;
  double std_error = 0;
  double bias_bound = 0;
  std::uint64_t reps = 0;
};

/// Monte Carlo estimate of e_K(x): the fraction of walks from x that leave
/// the Euclidean ball B(center(K), kill_radius) before returning to K.
EscapeEstimate escape_probability_mc(const Point& x, const Window& set, double kill_radius,
                                     std::uint64_t reps, std::uint64_t master_seed,
                                     const EquilibriumMeasure& eq);

/// Upper bound on g(v) over |v| >= r, used for truncation bias bounds.
double green_upper_beyond(int dim, double r);

/// Is the set invariant under coordinate permutations and sign flips about
/// an integer center? Sets center when it is.
bool hyperoctahedral_center(const Window& set, Point* center);

}  // namespace interlace
