#include "interlace/green.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

namespace interlace {

std::string to_string(GreenMethod method) {
  switch (method) {
    case GreenMethod::Quadrature: return "quadrature";
    case GreenMethod::TruncatedSolve: return "truncated-solve";
    case GreenMethod::MonteCarlo: return "monte-carlo";
  }
  return "unknown";
}

GreenMethod parse_green_method(const std::string& name) {
  if (name == "quadrature") return GreenMethod::Quadrature;
  if (name == "truncated-solve") return GreenMethod::TruncatedSolve;
  if (name == "monte-carlo") return GreenMethod::MonteCarlo;
  throw std::invalid_argument("unknown Green method: " + name);
}

// ---------------------------------------------------------------------------
// GreenTable

GreenTable::GreenTable(int dim, int range, GreenMethod method, std::vector<double> abs_values,
                       double error_estimate)
    : dim_(dim), range_(range), method_(method), error_estimate_(error_estimate),
      values_(std::move(abs_values)) {
  std::size_t expect = 1;
  for (int i = 0; i < dim; ++i) expect *= static_cast<std::size_t>(range + 1);
  if (values_.size() != expect) throw std::invalid_argument("green table size mismatch");
}

std::size_t GreenTable::abs_index(const Point& disp) const {
  std::size_t idx = 0;
  for (int i = dim_ - 1; i >= 0; --i)
    idx = idx * static_cast<std::size_t>(range_ + 1) + static_cast<std::size_t>(std::abs(disp[i]));
  return idx;
}

double GreenTable::at(const Point& disp) const {
  if (disp.dim != dim_) throw std::invalid_argument("displacement dimension mismatch");
  if (!covers(disp)) throw GreenOutOfRange("displacement " + disp.str() + " beyond green table range " +
                                           std::to_string(range_));
  return values_[abs_index(disp)];
}

double GreenTable::harmonicity_residual(const Point& y) const {
  double avg = 0;
  for (int dir = 0; dir < 2 * dim_; ++dir) {
    Point z = y;
    apply_direction(z, dir);
    avg += at(z);
  }
  avg /= 2.0 * dim_;
  const bool origin = y.norm_inf() == 0;
  return avg + (origin ? 1.0 : 0.0) - at(y);
}

double GreenTable::max_harmonicity_residual() const {
  double worst = 0;
  // Symmetry reduces the scan to the nonnegative orthant.
  const BoxRegion box(Point(dim_), [&] {
    Point p(dim_);
    for (int i = 0; i < dim_; ++i) p[i] = range_ - 1;
    return p;
  }());
  for (std::size_t i = 0; i < box.size(); ++i)
    worst = std::max(worst, std::abs(harmonicity_residual(box.point(i))));
  return worst;
}

void GreenTable::save(std::ostream& os) const {
  os << "# interlace green table v1\n";
  os << "dim " << dim_ << "\nrange " << range_ << "\nmethod " << to_string(method_) << "\n";
  os << std::setprecision(17) << "error_estimate " << error_estimate_ << "\n";
  os << "values " << values_.size() << "\n";
  for (double v : values_) os << v << "\n";
}

GreenTable GreenTable::load(std::istream& is) {
  std::string line, key;
  int dim = 0, range = 0;
  std::string method;
  double err = 0;
  std::size_t count = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ls >> key;
    if (key == "dim") ls >> dim;
    else if (key == "range") ls >> range;
    else if (key == "method") ls >> method;
    else if (key == "error_estimate") ls >> err;
    else if (key == "values") {
      ls >> count;
      break;
    } else {
      throw std::runtime_error("green table: unexpected key '" + key + "'");
    }
  }
  std::vector<double> values(count);
  for (auto& v : values)
    if (!(is >> v)) throw std::runtime_error("green table: truncated value list");
  return {dim, range, parse_green_method(method), std::move(values), err};
}

void GreenTable::save_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  save(os);
}

GreenTable GreenTable::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return load(is);
}

// ---------------------------------------------------------------------------
// Quadrature

namespace {

struct Node {
  double s;
  double w;  // includes the Jacobian of the tail substitution
};

// Composite rule for int_0^inf f(s) ds: a short first panel, geometrically
// doubling panels up to s_max, then s = s_max / v^2 on (0, 1] split
// dyadically towards v = 0.
std::vector<Node> composite_rule(std::size_t order, double s_max) {
  gsl_integration_glfixed_table* gl = gsl_integration_glfixed_table_alloc(order);
  std::vector<Node> nodes;
  auto add_panel = [&](double a, double b, auto&& map) {
    for (std::size_t i = 0; i < order; ++i) {
      double xi = 0, wi = 0;
      gsl_integration_glfixed_point(a, b, i, &xi, &wi, gl);
      auto [s, jac] = map(xi);
      nodes.push_back({s, wi * jac});
    }
  };
  auto identity = [](double s) { return std::pair{s, 1.0}; };
  double a = 0.0, b = 0.25;
  add_panel(a, b, identity);
  while (b < s_max) {
    a = b;
    b = std::min(2 * b, s_max);
    add_panel(a, b, identity);
  }
  auto tail = [s_max](double v) { return std::pair{s_max / (v * v), 2.0 * s_max / (v * v * v)}; };
  double hi = 1.0;
  for (int k = 0; k < 12; ++k) {
    add_panel(hi / 2, hi, tail);
    hi /= 2;
  }
  // The last panel (0, hi] only adds O(hi^{d-2}) mass; integrate it too so
  // d = 3, where the integrand tends to a nonzero constant, stays exact.
  add_panel(0.0, hi, tail);
  gsl_integration_glfixed_table_free(gl);
  return nodes;
}

// e^{-s} I_n(s) from the large-argument expansion; accurate to rounding
// once s >= 10 n^2.
double bessel_scaled_asymptotic(int n, double s) {
  const double mu = 4.0 * n * n;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double next = -term * (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (8.0 * k * s);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * M_PI * s);
}

// e^{-s} I_n(s) for n = 0..nmax. GSL loses digits for large s, so there the
// expansion supplies the low orders and the upward recurrence (stable while
// n < s) the rest.
void bessel_scaled_orders(double s, int nmax, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(nmax) + 1, 0.0);
  if (s >= 1000.0 && 2.0 * nmax < s) {
    const int direct = std::min(nmax, std::max(1, static_cast<int>(std::sqrt(s / 10.0))));
    for (int n = 0; n <= direct; ++n) out[static_cast<std::size_t>(n)] = bessel_scaled_asymptotic(n, s);
    for (int n = direct; n < nmax; ++n)
      out[static_cast<std::size_t>(n) + 1] =
          out[static_cast<std::size_t>(n) - 1] - (2.0 * n / s) * out[static_cast<std::size_t>(n)];
    return;
  }
  // The downward recurrence of the array routine loses accuracy in the odd
  // orders when started at a low order; start it well above.
  std::vector<double> wide(static_cast<std::size_t>(std::max(nmax, 48)) + 1);
  if (gsl_sf_bessel_In_scaled_array(0, static_cast<int>(wide.size()) - 1, s, wide.data()) == GSL_SUCCESS) {
    std::copy(wide.begin(), wide.begin() + nmax + 1, out.begin());
    return;
  }
  // Underflow at small s for high orders is benign; zero out the tail.
  for (int n = 0; n <= nmax; ++n) {
    gsl_sf_result r;
    out[static_cast<std::size_t>(n)] = gsl_sf_bessel_In_scaled_e(n, s, &r) == GSL_SUCCESS ? r.val : 0.0;
  }
}

std::vector<double> batch_with_rule(int dim, const std::vector<std::array<std::int32_t, kMaxDim>>& keys,
                                    const std::vector<Node>& rule, int nmax) {
  std::vector<double> out(keys.size(), 0.0);
  std::vector<double> bessel;
  gsl_error_handler_t* old = gsl_set_error_handler_off();
  for (const Node& node : rule) {
    if (node.w == 0) continue;
    bessel_scaled_orders(node.s, nmax, bessel);
    for (std::size_t k = 0; k < keys.size(); ++k) {
      double prod = node.w;
      for (int i = 0; i < dim; ++i) prod *= bessel[static_cast<std::size_t>(keys[k][static_cast<std::size_t>(i)])];
      out[k] += prod;
    }
  }
  gsl_set_error_handler(old);
  for (double& v : out) v *= dim;
  return out;
}

}  // namespace

std::vector<double> green_batch(int dim, const std::vector<std::array<std::int32_t, kMaxDim>>& abs_coords,
                                double* error_estimate) {
  if (dim < 3) throw std::invalid_argument("green function requires d >= 3");
  if (abs_coords.empty()) return {};
  int nmax = 0;
  double r2max = 0;
  for (const auto& key : abs_coords) {
    double r2 = 0;
    for (int i = 0; i < dim; ++i) {
      nmax = std::max(nmax, key[static_cast<std::size_t>(i)]);
      r2 += static_cast<double>(key[static_cast<std::size_t>(i)]) * key[static_cast<std::size_t>(i)];
    }
    r2max = std::max(r2max, r2);
  }
  const double s_max = std::max(64.0, 8.0 * r2max);
  auto fine = batch_with_rule(dim, abs_coords, composite_rule(40, s_max), nmax);
  if (error_estimate) {
    auto coarse = batch_with_rule(dim, abs_coords, composite_rule(28, s_max), nmax);
    double err = 0;
    for (std::size_t k = 0; k < fine.size(); ++k) err = std::max(err, std::abs(fine[k] - coarse[k]));
    *error_estimate = err;
  }
  return fine;
}

namespace {

struct AdaptiveParams {
  int dim;
  std::array<std::int32_t, kMaxDim> coords;
  double s_split;
  bool tail;
};

double adaptive_integrand(double x, void* raw) {
  const auto* p = static_cast<const AdaptiveParams*>(raw);
  double s = x, jac = 1.0;
  if (p->tail) {
    if (x <= 0) return 0.0;
    s = p->s_split / (x * x);
    jac = 2.0 * p->s_split / (x * x * x);
  }
  double prod = jac;
  for (int i = 0; i < p->dim; ++i) {
    const int n = p->coords[static_cast<std::size_t>(i)];
    if (s >= 1000.0 && s >= 10.0 * n * n) {
      prod *= bessel_scaled_asymptotic(n, s);
      continue;
    }
    gsl_sf_result r;
    if (gsl_sf_bessel_In_scaled_e(n, s, &r) != GSL_SUCCESS) return 0.0;
    prod *= r.val;
  }
  return prod;
}

}  // namespace

double green_adaptive(std::span<const std::int32_t> coords, double* abs_error) {
  const int dim = static_cast<int>(coords.size());
  if (dim < 3 || dim > kMaxDim) throw std::invalid_argument("green_adaptive: d must be in [3, 8]");
  AdaptiveParams params{dim, {}, 0.0, false};
  double r2 = 0;
  for (int i = 0; i < dim; ++i) {
    params.coords[static_cast<std::size_t>(i)] = std::abs(coords[static_cast<std::size_t>(i)]);
    r2 += static_cast<double>(coords[static_cast<std::size_t>(i)]) * coords[static_cast<std::size_t>(i)];
  }
  params.s_split = std::max(16.0, 4.0 * r2);

  gsl_error_handler_t* old = gsl_set_error_handler_off();
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
  gsl_function f{&adaptive_integrand, &params};
  double head = 0, head_err = 0, tail = 0, tail_err = 0;
  int s1 = gsl_integration_qag(&f, 0.0, params.s_split, 1e-15, 1e-13, 2000, GSL_INTEG_GAUSS61, ws, &head,
                               &head_err);
  params.tail = true;
  int s2 = gsl_integration_qags(&f, 0.0, 1.0, 1e-15, 1e-13, 2000, ws, &tail, &tail_err);
  gsl_integration_workspace_free(ws);
  gsl_set_error_handler(old);
  const double err = dim * (head_err + tail_err);
  if (abs_error) *abs_error = err;
  if ((s1 != GSL_SUCCESS || s2 != GSL_SUCCESS) && err > 1e-9)
    throw QuadratureError("green quadrature did not converge", err);
  return dim * (head + tail);
}

double green_leading_coefficient(int dim) {
  const double d = dim;
  return d * std::tgamma(d / 2.0 - 1.0) / (2.0 * std::pow(M_PI, d / 2.0));
}

double green_asymptotic(const Point& disp) {
  const int d = disp.dim;
  double r2 = 0, r4 = 0;
  for (int i = 0; i < d; ++i) {
    const double c = disp[i];
    r2 += c * c;
    r4 += c * c * c * c;
  }
  const double r = std::sqrt(r2);
  const double lead = green_leading_coefficient(d) * std::pow(r, 2.0 - d);
  if (d != 3) return lead;
  return lead + 3.0 / (16.0 * M_PI * r * r2) * (5.0 * r4 / (r2 * r2) - 3.0);
}

// ---------------------------------------------------------------------------
// Truncated solve: g on the box [-N, N]^d from the discrete Poisson equation
// (I - P) g = delta_0 with Dirichlet data given by the asymptotic expansion
// on the box faces; conjugate gradients on the interior.

namespace {

std::vector<double> truncated_solve(int dim, int half_side, double* error_estimate) {
  const int side = 2 * half_side + 1;
  std::size_t total = 1;
  std::vector<std::size_t> stride(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    stride[static_cast<std::size_t>(i)] = total;
    total *= static_cast<std::size_t>(side);
  }
  Point lo(dim), hi(dim);
  for (int i = 0; i < dim; ++i) {
    lo[i] = -half_side;
    hi[i] = half_side;
  }
  const BoxRegion box(lo, hi);
  std::vector<std::uint8_t> interior(total, 0);
  std::vector<double> g(total, 0.0), rhs(total, 0.0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    const Point p = box.point(idx);
    if (p.norm_inf() < half_side) {
      interior[idx] = 1;
      g[idx] = p.norm_inf() == 0 ? 1.0 + green_leading_coefficient(dim) : green_asymptotic(p);
    } else {
      g[idx] = green_asymptotic(p);
    }
  }
  const double inv2d = 1.0 / (2.0 * dim);
  // rhs = delta_0 + (1/2d) * (boundary neighbor values)
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (!interior[idx]) continue;
    double b = 0;
    for (int i = 0; i < dim; ++i) {
      for (int sgn : {-1, 1}) {
        const std::size_t j = sgn > 0 ? idx + stride[static_cast<std::size_t>(i)] : idx - stride[static_cast<std::size_t>(i)];
        if (!interior[j]) b += g[j];
      }
    }
    rhs[idx] = b * inv2d;
  }
  rhs[box.index(Point(dim))] += 1.0;

  auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (std::size_t idx = 0; idx < total; ++idx) {
      if (!interior[idx]) {
        out[idx] = 0;
        continue;
      }
      double s = 0;
      for (int i = 0; i < dim; ++i) {
        const std::size_t st = stride[static_cast<std::size_t>(i)];
        if (interior[idx + st]) s += v[idx + st];
        if (interior[idx - st]) s += v[idx - st];
      }
      out[idx] = v[idx] - inv2d * s;
    }
  };

  std::vector<double> x(total, 0.0), r(total), p(total), ap(total);
  for (std::size_t i = 0; i < total; ++i)
    if (interior[i]) x[i] = g[i];
  apply(x, ap);
  double rr = 0, bb = 0;
  for (std::size_t i = 0; i < total; ++i) {
    r[i] = interior[i] ? rhs[i] - ap[i] : 0.0;
    p[i] = r[i];
    rr += r[i] * r[i];
    bb += rhs[i] * rhs[i];
  }
  const double tol2 = 1e-30 * bb;
  for (int it = 0; it < 20000 && rr > tol2; ++it) {
    apply(p, ap);
    double pap = 0;
    for (std::size_t i = 0; i < total; ++i) pap += p[i] * ap[i];
    const double alpha = rr / pap;
    double rr_new = 0;
    for (std::size_t i = 0; i < total; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      rr_new += r[i] * r[i];
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < total; ++i) p[i] = r[i] + beta * p[i];
  }
  for (std::size_t i = 0; i < total; ++i)
    if (interior[i]) g[i] = x[i];
  if (error_estimate) {
    // Boundary data error is the first omitted term of the expansion; the
    // maximum principle carries it into the interior without growth.
    const double n = half_side;
    *error_estimate = dim == 3 ? std::pow(n, -5.0) : std::pow(n, -static_cast<double>(dim));
  }
  return g;
}

}  // namespace

// ---------------------------------------------------------------------------

namespace {

std::size_t cube_count(int dim, int range) {
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(range + 1);
  return n;
}

Point abs_point(int dim, int range, std::size_t idx) {
  Point p(dim);
  for (int i = 0; i < dim; ++i) {
    p[i] = static_cast<std::int32_t>(idx % static_cast<std::size_t>(range + 1));
    idx /= static_cast<std::size_t>(range + 1);
  }
  return p;
}

std::vector<double> quadrature_table(int dim, int range, double* err) {
  const std::size_t total = cube_count(dim, range);
  // Canonical representatives: coordinates sorted in nonincreasing order.
  std::map<std::array<std::int32_t, kMaxDim>, std::size_t> canon;
  std::vector<std::array<std::int32_t, kMaxDim>> keys;
  std::vector<std::size_t> key_of(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    const Point p = abs_point(dim, range, idx);
    std::array<std::int32_t, kMaxDim> key{};
    std::copy(p.x.begin(), p.x.begin() + dim, key.begin());
    std::sort(key.begin(), key.begin() + dim, std::greater<>());
    auto [it, inserted] = canon.emplace(key, keys.size());
    if (inserted) keys.push_back(key);
    key_of[idx] = it->second;
  }
  const auto vals = green_batch(dim, keys, err);
  std::vector<double> out(total);
  for (std::size_t idx = 0; idx < total; ++idx) out[idx] = vals[key_of[idx]];
  return out;
}

std::vector<double> monte_carlo_table(int dim, int range, const GreenOptions& opt, double* err) {
  const std::size_t total = cube_count(dim, range);
  const int kill = 4 * range + 16;
  const double kill2 = static_cast<double>(kill) * kill;
  std::vector<double> sum(total, 0.0), sum2(total, 0.0);
  std::vector<double> counts(total);
  for (std::uint64_t w = 0; w < opt.mc_walks; ++w) {
    RngStream rng(opt.mc_seed, w);
    std::fill(counts.begin(), counts.end(), 0.0);
    Point p(dim);
    double r2 = 0;
    while (r2 < kill2) {
      if (p.norm_inf() <= range) {
        std::size_t idx = 0;
        for (int i = dim - 1; i >= 0; --i)
          idx = idx * static_cast<std::size_t>(range + 1) + static_cast<std::size_t>(std::abs(p[i]));
        counts[idx] += 1.0;
      }
      const int dir = random_direction(dim, rng);
      const int axis = dir >> 1;
      const double before = p[axis];
      apply_direction(p, dir);
      r2 += static_cast<double>(p[axis]) * p[axis] - before * before;
    }
    for (std::size_t i = 0; i < total; ++i) {
      sum[i] += counts[i];
      sum2[i] += counts[i] * counts[i];
    }
  }
  // Visits after the kill sphere are restored on average by the leading
  // asymptotic term at the kill radius.
  const double tail = green_leading_coefficient(dim) * std::pow(kill, 2.0 - dim);
  const double n = static_cast<double>(opt.mc_walks);
  double worst = 0;
  std::vector<double> out(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    const Point p = abs_point(dim, range, idx);
    std::size_t mult = 1;  // number of sign patterns folded into this cell
    for (int i = 0; i < dim; ++i)
      if (p[i] != 0) mult *= 2;
    const double m = static_cast<double>(mult);
    const double mean = sum[idx] / (n * m);
    const double var = std::max(0.0, sum2[idx] / (n * m * m) - mean * mean);
    out[idx] = mean + tail;
    worst = std::max(worst, 3.0 * std::sqrt(var / n) + 0.5 * tail);
  }
  if (err) *err = worst;
  return out;
}

}  // namespace

GreenTable build_green_table(int dim, int range, GreenMethod method, const GreenOptions& options) {
  if (dim < 3 || dim > kMaxDim) throw std::invalid_argument("green table requires 3 <= d <= 8");
  if (range < 1) throw std::invalid_argument("green table range must be >= 1");
  const std::size_t total = cube_count(dim, range);
  if (total > (std::size_t{1} << 26)) throw std::length_error("green table range too large for memory budget");
  double err = 0;
  switch (method) {
    case GreenMethod::Quadrature: {
      auto values = quadrature_table(dim, range, &err);
      if (err > 1e-9) throw QuadratureError("green quadrature rules disagree", err);
      return {dim, range, method, std::move(values), err};
    }
    case GreenMethod::TruncatedSolve: {
      int n = options.truncation_half_side;
      if (n == 0) n = dim == 3 ? 48 : (dim == 4 ? 22 : 12);
      n = std::max(n, range + 4);
      auto full = truncated_solve(dim, n, &err);
      std::vector<double> values(total);
      const int side = 2 * n + 1;
      for (std::size_t idx = 0; idx < total; ++idx) {
        const Point p = abs_point(dim, range, idx);
        std::size_t fi = 0;
        for (int i = dim - 1; i >= 0; --i) fi = fi * static_cast<std::size_t>(side) + static_cast<std::size_t>(p[i] + n);
        values[idx] = full[fi];
      }
      return {dim, range, method, std::move(values), err};
    }
    case GreenMethod::MonteCarlo: {
      auto values = monte_carlo_table(dim, range, options, &err);
      return {dim, range, method, std::move(values), err};
    }
  }
  throw std::invalid_argument("unknown green method");
}

std::shared_ptr<const GreenTable> cached_green_table(int dim, int range, GreenMethod method,
                                                    const std::string& cache_dir) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, GreenMethod>, std::shared_ptr<const GreenTable>> cache;
  std::lock_guard lock(mutex);
  const auto key = std::make_tuple(dim, range, method);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  // A cached larger table serves smaller requests only through GreenFunction,
  // so keys stay exact here.
  std::shared_ptr<const GreenTable> table;
  std::string path;
  if (!cache_dir.empty()) {
    path = cache_dir + "/green_d" + std::to_string(dim) + "_r" + std::to_string(range) + "_" +
           to_string(method) + ".txt";
    if (std::filesystem::exists(path)) table = std::make_shared<GreenTable>(GreenTable::load_file(path));
  }
  if (!table) {
    table = std::make_shared<GreenTable>(build_green_table(dim, range, method));
    if (!path.empty()) {
      std::filesystem::create_directories(cache_dir);
      table->save_file(path);
    }
  }
  cache.emplace(key, table);
  return table;
}

// ---------------------------------------------------------------------------

PlaneKernel::PlaneKernel(int dim, int range, std::vector<double> values, double error_estimate)
    : dim_(dim), range_(range), error_estimate_(error_estimate), values_(std::move(values)) {}

PlaneKernel PlaneKernel::build(int dim, int range) {
  std::vector<std::array<std::int32_t, kMaxDim>> keys;
  for (int a = 0; a <= range; ++a)
    for (int b = 0; b <= a; ++b) keys.push_back({a, b});
  double err = 0;
  const auto vals = green_batch(dim, keys, &err);
  if (err > 1e-9) throw QuadratureError("plane kernel quadrature rules disagree", err);
  const auto n = static_cast<std::size_t>(range + 1);
  std::vector<double> values(n * n);
  std::size_t k = 0;
  for (int a = 0; a <= range; ++a)
    for (int b = 0; b <= a; ++b, ++k) {
      values[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)] = vals[k];
      values[static_cast<std::size_t>(b) * n + static_cast<std::size_t>(a)] = vals[k];
    }
  return {dim, range, std::move(values), err};
}

// ---------------------------------------------------------------------------

GreenFunction::GreenFunction(std::shared_ptr<const GreenTable> table) : table_(std::move(table)) {
  if (!table_) throw std::invalid_argument("GreenFunction needs a table");
}

double GreenFunction::operator()(const Point& disp) const {
  if (table_->covers(disp)) return table_->at(disp);
  if (disp.dim == 3 && disp.norm2() >= kAsymptoticRadius) return green_asymptotic(disp);
  Point key(disp.dim);
  std::array<std::int32_t, kMaxDim> c{};
  for (int i = 0; i < disp.dim; ++i) c[static_cast<std::size_t>(i)] = std::abs(disp[i]);
  std::sort(c.begin(), c.begin() + disp.dim, std::greater<>());
  for (int i = 0; i < disp.dim; ++i) key[i] = c[static_cast<std::size_t>(i)];
  {
    std::lock_guard lock(mutex_);
    if (auto it = extra_.find(key); it != extra_.end()) return it->second;
  }
  const double v = green_batch(disp.dim, {c})[0];
  std::lock_guard lock(mutex_);
  extra_.emplace(key, v);
  return v;
}

}  // namespace interlace
