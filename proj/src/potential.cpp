#include "interlace/potential.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>


namespace interlace {

std::string to_string(EquilibriumSolver solver) {
  switch (solver) {
    case EquilibriumSolver::Dense: return "dense";
    case EquilibriumSolver::SymmetryReduced: return "symmetry-reduced";
    case EquilibriumSolver::PlanarFft: return "planar-fft-cg";
  }
  return "unknown";
}

double EquilibriumMeasure::weight(const Point& x) const {
  const auto s = set.slot(x);
  return s < 0 ? 0.0 : weights[static_cast<std::size_t>(s)];
}

std::vector<std::size_t> EquilibriumMeasure::support() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (weights[i] != 0.0) out.push_back(i);
  return out;
}

bool hyperoctahedral_center(const Window& set, Point* center) {
  const auto& box = set.bbox();
  const int d = set.dim();
  Point c(d);
  for (int i = 0; i < d; ++i) {
    const std::int64_t s = static_cast<std::int64_t>(box.lo()[i]) + box.hi()[i];
    if (s % 2 != 0) return false;
    c[i] = static_cast<std::int32_t>(s / 2);
    if (box.extent(i) != box.extent(0)) return false;
  }
  for (const auto& p : set.sites()) {
    const Point off = p - c;
    // Generators: swap of adjacent axes, sign flip of axis 0.
    Point q = off;
    q[0] = -q[0];
    if (!set.contains(c + q)) return false;
    for (int i = 0; i + 1 < d; ++i) {
      q = off;
      std::swap(q[i], q[i + 1]);
      if (!set.contains(c + q)) return false;
    }
  }
  if (center) *center = c;
  return true;
}

namespace {

using OrbitKey = std::array<std::int32_t, kMaxDim>;

OrbitKey orbit_key(const Point& off) {
  OrbitKey k{};
  for (int i = 0; i < off.dim; ++i) k[static_cast<std::size_t>(i)] = std::abs(off[i]);
  std::sort(k.begin(), k.begin() + off.dim, std::greater<>());
  return k;
}

void check_weights(std::vector<double>& w) {
  for (double& v : w) {
    if (v < -kNegativeWeightSlack)
      throw PotentialError("negative equilibrium weight " + std::to_string(v) + ": inconsistent Green values");
    if (v < 0) v = 0;
  }
}

std::vector<std::size_t> solve_indices(const Window& set, bool restrict) {
  std::vector<std::size_t> idx;
  if (!restrict) {
    idx.resize(set.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (const auto& q : enumerate_neighbors(set.sites()[i], Adjacency::NearestNeighbor)) {
      if (!set.contains(q)) {
        idx.push_back(i);
        break;
      }
    }
  }
  return idx;
}

double residual_over(const Window& set, const std::vector<double>& w, const GreenEval& green,
                     std::span<const std::size_t> rows) {
  std::vector<std::size_t> supp;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != 0) supp.push_back(i);
  double worst = 0;
  for (std::size_t r : rows) {
    const Point& x = set.sites()[r];
    double s = 0;
    for (std::size_t j : supp) s += green(x - set.sites()[j]) * w[j];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

EquilibriumMeasure dense_solve(const Window& set, const GreenEval& green, bool restrict) {
  const auto idx = solve_indices(set, restrict);
  if (idx.size() > kDenseSolveLimit)
    throw PotentialError("dense equilibrium solve limited to " + std::to_string(kDenseSolveLimit) +
                         " points, got " + std::to_string(idx.size()));
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = green(set.sites()[idx[static_cast<std::size_t>(i)]] - set.sites()[idx[static_cast<std::size_t>(j)]]);
      g(i, j) = v;
      g(j, i) = v;
    }
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw PotentialError("Green matrix is not positive definite: broken GreenTable");
  Eigen::VectorXd e = llt.solve(Eigen::VectorXd::Ones(n));
  // One step of iterative refinement keeps the residual at rounding level.
  e += llt.solve(Eigen::VectorXd::Ones(n) - g * e);

  EquilibriumMeasure eq;
  eq.set = set;
  eq.solver = EquilibriumSolver::Dense;
  eq.weights.assign(set.size(), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) eq.weights[idx[static_cast<std::size_t>(i)]] = e(i);
  check_weights(eq.weights);
  std::vector<std::size_t> all(set.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  eq.residual = residual_over(set, eq.weights, green, all);
  return eq;
}

EquilibriumMeasure symmetric_solve(const Window& set, const Point& center, const GreenEval& green,
                                   bool restrict) {
  const auto idx = solve_indices(set, restrict);
  std::map<OrbitKey, std::size_t> orbit_of;
  std::vector<std::vector<std::size_t>> orbits;
  for (std::size_t i : idx) {
    auto [it, inserted] = orbit_of.emplace(orbit_key(set.sites()[i] - center), orbits.size());
    if (inserted) orbits.emplace_back();
    orbits[it->second].push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(orbits.size());
  // Row i: sum over orbit j of g(rep_i - y); symmetrized by orbit sizes.
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point& rep = set.sites()[orbits[static_cast<std::size_t>(i)].front()];
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t y : orbits[static_cast<std::size_t>(j)]) s += green(rep - set.sites()[y]);
      a(i, j) = s;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd e = lu.solve(Eigen::VectorXd::Ones(n));
  e += lu.solve(Eigen::VectorXd::Ones(n) - a * e);
  if (!e.allFinite()) throw PotentialError("reduced Green matrix is singular: broken GreenTable");

  EquilibriumMeasure eq;
  eq.set = set;
  eq.solver = EquilibriumSolver::SymmetryReduced;
  eq.weights.assign(set.size(), 0.0);
  for (Eigen::Index j = 0; j < n; ++j)
    for (std::size_t y : orbits[static_cast<std::size_t>(j)]) eq.weights[y] = e(j);
  check_weights(eq.weights);
  // Residual on one representative per orbit of the whole set.
  std::map<OrbitKey, std::size_t> reps;
  for (std::size_t i = 0; i < set.size(); ++i) reps.emplace(orbit_key(set.sites()[i] - center), i);
  std::vector<std::size_t> rows;
  for (const auto& [k, i] : reps) rows.push_back(i);
  eq.residual = residual_over(set, eq.weights, green, rows);
  return eq;
}

void finish(EquilibriumMeasure& eq) {
  eq.capacity = 0;
  for (double w : eq.weights) eq.capacity += w;
  if (!(eq.capacity > 0)) throw PotentialError("capacity is not positive");
  eq.normalized.resize(eq.weights.size());
  for (std::size_t i = 0; i < eq.weights.size(); ++i) eq.normalized[i] = eq.weights[i] / eq.capacity;
  if (eq.residual > kSolverResidualTol)
  {
    char buf[96];
    std::snprintf(buf, sizeof buf, "equilibrium residual %.3e exceeds tolerance %.1e", eq.residual, kSolverResidualTol);
    throw PotentialError(buf);
  }
}

}  // namespace

EquilibriumMeasure equilibrium_measure(const Window& set, const GreenFunction& green,
                                       const EquilibriumOptions& options) {
  if (set.dim() != green.dim()) throw PotentialError("dimension mismatch between set and Green table");
  return equilibrium_measure(set, GreenEval([&green](const Point& v) { return green(v); }), options);
}

EquilibriumMeasure equilibrium_measure(const Window& set, const GreenEval& green,
                                       const EquilibriumOptions& options) {
  if (set.size() == 0) throw PotentialError("equilibrium measure of an empty set");
  EquilibriumMeasure eq;
  Point center;
  if (options.use_symmetry && set.size() > 1 && hyperoctahedral_center(set, &center)) {
    eq = symmetric_solve(set, center, green, options.restrict_to_inner_boundary);
  } else {
    eq = dense_solve(set, green, options.restrict_to_inner_boundary);
  }
  finish(eq);
  return eq;
}

double capacity(const Window& set, const GreenFunction& green) {
  return equilibrium_measure(set, green).capacity;
}

double hitting_probability(const Point& x, const EquilibriumMeasure& eq, const GreenFunction& green) {
  if (eq.set.contains(x)) return 1.0;
  double s = 0;
  for (std::size_t i = 0; i < eq.weights.size(); ++i)
    if (eq.weights[i] != 0) s += green(x - eq.set.sites()[i]) * eq.weights[i];
  return s;
}

HittingBounds hitting_bounds(const Point& x, const Window& set, const GreenFunction& green) {
  double num = 0;
  for (const auto& y : set.sites()) num += green(x - y);
  double lo = 0, hi = 0;
  bool first = true;
  for (const auto& z : set.sites()) {
    double s = 0;
    for (const auto& y : set.sites()) s += green(z - y);
    if (first) {
      lo = hi = s;
      first = false;
    }
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return {num / hi, num / lo};
}

double green_upper_beyond(int dim, double r) {
  if (r < 1) return green_leading_coefficient(dim) * 10.0;
  return green_leading_coefficient(dim) * std::pow(r, 2.0 - dim) * (1.0 + 1.0 / (r * r));
}

EscapeEstimate escape_probability_mc(const Point& x, const Window& set, double kill_radius,
                                     std::uint64_t reps, std::uint64_t master_seed,
                                     const EquilibriumMeasure& eq) {
  if (!set.contains(x)) throw std::invalid_argument("escape_probability_mc: x must lie in K");
  if (reps == 0) throw std::invalid_argument("escape_probability_mc: reps must be >= 1");
  const int d = set.dim();
  std::array<double, kMaxDim> c{};
  double rad = 0;
  for (int i = 0; i < d; ++i)
    c[static_cast<std::size_t>(i)] = 0.5 * (set.bbox().lo()[i] + set.bbox().hi()[i]);
  for (const auto& p : set.sites()) {
    double r2 = 0;
    for (int i = 0; i < d; ++i) r2 += (p[i] - c[static_cast<std::size_t>(i)]) * (p[i] - c[static_cast<std::size_t>(i)]);
    rad = std::max(rad, std::sqrt(r2));
  }
  if (kill_radius < 2.0 * static_cast<double>(set.diam_inf()) || kill_radius <= rad + 1)
    throw std::invalid_argument("escape_probability_mc: kill radius must be >= 2 diam(K)");
  const double kill2 = kill_radius * kill_radius;
  std::uint64_t escaped = 0;
  for (std::uint64_t rep = 0; rep < reps; ++rep) {
    RngStream rng(master_seed, rep);
    Point p = x;
    for (;;) {
      apply_direction(p, random_direction(d, rng));
      if (set.contains(p)) break;
      double r2 = 0;
      for (int i = 0; i < d; ++i) r2 += (p[i] - c[static_cast<std::size_t>(i)]) * (p[i] - c[static_cast<std::size_t>(i)]);
      if (r2 > kill2) {
        ++escaped;
        break;
      }
    }
  }
  EscapeEstimate out;
  out.reps = reps;
  out.estimate = static_cast<double>(escaped) / static_cast<double>(reps);
  out.std_error = std::sqrt(std::max(out.estimate * (1 - out.estimate), 0.25 / static_cast<double>(reps)) /
                            static_cast<double>(reps));
  // A walk that left the ball returns with probability at most
  // sup_{|z - c| >= R} sum_y g(z - y) e(y) <= cap(K) * sup g beyond R - rad.
  out.bias_bound = eq.capacity * green_upper_beyond(d, kill_radius - rad);
  return out;
}

}  // namespace interlace
