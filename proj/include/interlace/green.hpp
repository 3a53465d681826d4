#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "interlace/lattice.hpp"

namespace interlace {

enum class GreenMethod { Quadrature, TruncatedSolve, MonteCarlo };

std::string to_string(GreenMethod method);
GreenMethod parse_green_method(const std::string& name);

class GreenOutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_error(achieved) {}
  double achieved_error;
};

// Green function g(y) of simple random walk on Z^d for |y|_inf <= range.
// Values are stored on the cube of absolute coordinates, so the octahedral
// symmetry holds by construction.
class GreenTable {
 public:
  GreenTable(int dim, int range, GreenMethod method, std::vector<double> abs_values,
             double error_estimate);

  int dim() const { return dim_; }
  int range() const { return range_; }
  GreenMethod method() const { return method_; }
  double error_estimate() const { return error_estimate_; }

  bool covers(const Point& disp) const { return disp.norm_inf() <= range_; }
  /// Throws GreenOutOfRange beyond the table.
  double at(const Point& disp) const;
  double operator()(const Point& disp) const { return at(disp); }
  double origin() const { return values_[0]; }

  /// (1/2d) sum_e g(y+e) + [y == 0] - g(y); requires |y|_inf < range.
  double harmonicity_residual(const Point& y) const;
  /// Largest |residual| over |y|_inf < range.
  double max_harmonicity_residual() const;

  void save(std::ostream& os) const;
  static GreenTable load(std::istream& is);
  void save_file(const std::string& path) const;
  static GreenTable load_file(const std::string& path);

 private:
  std::size_t abs_index(const Point& disp) const;

  int dim_;
  int range_;
  GreenMethod method_;
  double error_estimate_;
  std::vector<double> values_;
};

struct GreenOptions {
  int truncation_half_side = 0;  // 0: pick by dimension
  std::uint64_t mc_walks = 20000;
  std::uint64_t mc_seed = 1;
};

GreenTable build_green_table(int dim, int range, GreenMethod method, const GreenOptions& options = {});

/// Cached table lookup, shared across callers of the same (d, range, method).
/// The cache directory (if non-empty) is checked for a saved table first.
std::shared_ptr<const GreenTable> cached_green_table(int dim, int range, GreenMethod method,
                                                    const std::string& cache_dir = "");

// --- quadrature primitives -------------------------------------------------

/// g(y) by adaptive integration of d * int_0^inf prod_i e^{-s} I_{y_i}(s) ds.
/// Slow; used as an independent oracle.
double green_adaptive(std::span<const std::int32_t> coords, double* abs_error = nullptr);

/// g for many displacements (given as absolute coordinates) with one fixed
/// composite Gauss-Legendre rule. error_estimate receives the largest
/// difference between two rules of different order.
std::vector<double> green_batch(int dim, const std::vector<std::array<std::int32_t, kMaxDim>>& abs_coords,
                                double* error_estimate = nullptr);

/// Large-|y| expansion. d = 3 carries the first correction term; other
/// dimensions only the leading a_d |y|^{2-d}.
double green_asymptotic(const Point& disp);
/// Leading coefficient a_d in g(y) ~ a_d |y|^{2-d}.
double green_leading_coefficient(int dim);

// Green function on the embedded plane Z^2 (displacements (a, b, 0, ..)).
class PlaneKernel {
 public:
  PlaneKernel() = default;
  PlaneKernel(int dim, int range, std::vector<double> values, double error_estimate);
  static PlaneKernel build(int dim, int range);

  int dim() const { return dim_; }
  int range() const { return range_; }
  double error_estimate() const { return error_estimate_; }
  double at(std::int64_t a, std::int64_t b) const {
    a = a < 0 ? -a : a;
    b = b < 0 ? -b : b;
    if (a > range_ || b > range_) throw GreenOutOfRange("plane kernel displacement out of range");
    return values_[static_cast<std::size_t>(a) * static_cast<std::size_t>(range_ + 1) +
                   static_cast<std::size_t>(b)];
  }

 private:
  int dim_ = 0;
  int range_ = 0;
  double error_estimate_ = 0;
  std::vector<double> values_;
};

// g on all of Z^d: table inside its range, beyond it the d = 3 expansion
// once |y| >= kAsymptoticRadius, otherwise the fixed-rule quadrature,
// memoized. Thread-safe.
class GreenFunction {
 public:
  static constexpr double kAsymptoticRadius = 40.0;

  explicit GreenFunction(std::shared_ptr<const GreenTable> table);

  int dim() const { return table_->dim(); }
  const GreenTable& table() const { return *table_; }
  std::shared_ptr<const GreenTable> table_ptr() const { return table_; }
  double origin() const { return table_->origin(); }
  double operator()(const Point& disp) const;

 private:
  std::shared_ptr<const GreenTable> table_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<Point, double, PointHash> extra_;
};

}  // namespace interlace
