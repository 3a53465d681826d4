#include "interlace/planar.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>

namespace interlace {

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftBuffers {
  int px = 0, py = 0;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  FftBuffers(int nx, int ny) : px(nx), py(ny) {
    const std::size_t nreal = static_cast<std::size_t>(px) * static_cast<std::size_t>(py);
    const std::size_t nspec = static_cast<std::size_t>(px) * static_cast<std::size_t>(py / 2 + 1);
    std::lock_guard lock(fftw_planner_mutex());
    real = fftw_alloc_real(nreal);
    spec = fftw_alloc_complex(nspec);
    forward = fftw_plan_dft_r2c_2d(px, py, real, spec, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_2d(px, py, spec, real, FFTW_ESTIMATE);
  }
  ~FftBuffers() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
  }
  FftBuffers(const FftBuffers&) = delete;
  FftBuffers& operator=(const FftBuffers&) = delete;

  std::size_t nspec() const { return static_cast<std::size_t>(px) * static_cast<std::size_t>(py / 2 + 1); }
};

}  // namespace

struct PlanarGreenOperator::Impl {
  explicit Impl(int nx, int ny) : fft(2 * nx, 2 * ny) {}
  FftBuffers fft;
  std::vector<std::size_t> cell;
  std::vector<std::complex<double>> khat;
};

PlanarGreenOperator::PlanarGreenOperator(const Window& set, const PlaneKernel& kernel) {
  if (set.size() == 0) throw PotentialError("planar operator on an empty set");
  if (!set.is_planar()) throw PotentialError("planar solver needs a set inside the embedded plane");
  if (kernel.dim() != set.dim()) throw PotentialError("dimension mismatch between set and plane kernel");
  const auto& box = set.bbox();
  const int nx = box.extent(0), ny = box.extent(1);
  if (kernel.range() < std::max(nx, ny) - 1)
    throw PotentialError("plane kernel range " + std::to_string(kernel.range()) + " does not cover the set");
  impl_ = std::make_unique<Impl>(nx, ny);
  auto& fft = impl_->fft;
  n_ = set.size();
  diag_ = kernel.at(0, 0);
  impl_->cell.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const Point& p = set.sites()[i];
    impl_->cell[i] = static_cast<std::size_t>(p[0] - box.lo()[0]) * static_cast<std::size_t>(fft.py) +
                     static_cast<std::size_t>(p[1] - box.lo()[1]);
  }
  std::fill_n(fft.real, static_cast<std::size_t>(fft.px) * static_cast<std::size_t>(fft.py), 0.0);
  for (int ix = 0; ix < fft.px; ++ix) {
    const int a = ix < nx ? ix : ix - fft.px;
    if (std::abs(a) >= nx) continue;
    for (int iy = 0; iy < fft.py; ++iy) {
      const int b = iy < ny ? iy : iy - fft.py;
      if (std::abs(b) >= ny) continue;
      fft.real[static_cast<std::size_t>(ix) * static_cast<std::size_t>(fft.py) + static_cast<std::size_t>(iy)] =
          kernel.at(a, b);
    }
  }
  fftw_execute(fft.forward);
  impl_->khat.resize(fft.nspec());
  const double scale = 1.0 / (static_cast<double>(fft.px) * fft.py);
  for (std::size_t k = 0; k < impl_->khat.size(); ++k)
    impl_->khat[k] = {fft.spec[k][0] * scale, fft.spec[k][1] * scale};
}

PlanarGreenOperator::~PlanarGreenOperator() = default;

void PlanarGreenOperator::apply(const std::vector<double>& v, std::vector<double>& out) const {
  auto& fft = impl_->fft;
  const auto& cell = impl_->cell;
  std::fill_n(fft.real, static_cast<std::size_t>(fft.px) * static_cast<std::size_t>(fft.py), 0.0);
  for (std::size_t i = 0; i < n_; ++i) fft.real[cell[i]] = v[i];
  fftw_execute(fft.forward);
  for (std::size_t k = 0; k < impl_->khat.size(); ++k) {
    const std::complex<double> z(fft.spec[k][0], fft.spec[k][1]);
    const auto w = z * impl_->khat[k];
    fft.spec[k][0] = w.real();
    fft.spec[k][1] = w.imag();
  }
  fftw_execute(fft.backward);
  out.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = fft.real[cell[i]];
}

double PlanarGreenOperator::residual(const std::vector<double>& rhs, const std::vector<double>& x,
                                     std::vector<double>& r) const {
  apply(x, r);
  double worst = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    r[i] = rhs[i] - r[i];
    worst = std::max(worst, std::abs(r[i]));
  }
  return worst;
}

int PlanarGreenOperator::solve(const std::vector<double>& rhs, std::vector<double>& x, double tolerance,
                               int max_iterations, double* final_residual) const {
  if (x.size() != n_) x.assign(n_, 0.0);
  std::vector<double> r, p, q;
  double res = residual(rhs, x, r);
  p = r;
  double rr = 0;
  for (double v : r) rr += v * v;
  int iter = 0;
  while (res > tolerance && iter < max_iterations) {
    apply(p, q);
    double pq = 0;
    for (std::size_t i = 0; i < n_; ++i) pq += p[i] * q[i];
    const double alpha = rr / pq;
    for (std::size_t i = 0; i < n_; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    ++iter;
    double rr_new = 0;
    if (iter % 50 == 0) {
      res = residual(rhs, x, r);
      for (double v : r) rr_new += v * v;
    } else {
      res = 0;
      for (double v : r) {
        rr_new += v * v;
        res = std::max(res, std::abs(v));
      }
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n_; ++i) p[i] = r[i] + beta * p[i];
  }
  const double final_res = residual(rhs, x, r);
  if (final_residual) *final_residual = final_res;
  return iter;
}

EquilibriumMeasure planar_equilibrium_measure(const Window& set, const PlaneKernel& kernel,
                                              const PlanarSolveOptions& options) {
  if (set.size() == 0) throw PotentialError("equilibrium measure of an empty set");
  const PlanarGreenOperator op(set, kernel);
  const std::size_t n = set.size();
  std::vector<double> e(n, 1.0 / (op.diagonal() * std::sqrt(static_cast<double>(n))));
  double res = 0;
  const int iter = op.solve(std::vector<double>(n, 1.0), e, options.tolerance, options.max_iterations, &res);

  EquilibriumMeasure eq;
  eq.set = set;
  eq.solver = EquilibriumSolver::PlanarFft;
  eq.residual = res;
  for (double& v : e) {
    if (v < -kNegativeWeightSlack)
      throw PotentialError("negative equilibrium weight " + std::to_string(v) + ": inconsistent Green values");
    if (v < 0) v = 0;
  }
  eq.weights = std::move(e);
  eq.capacity = 0;
  for (double v : eq.weights) eq.capacity += v;
  eq.normalized.resize(n);
  for (std::size_t i = 0; i < n; ++i) eq.normalized[i] = eq.weights[i] / eq.capacity;
  if (eq.residual > kSolverResidualTol)
    throw PotentialError("planar equilibrium residual " + std::to_string(eq.residual) + " after " +
                         std::to_string(iter) + " iterations");
  return eq;
}

// ---------------------------------------------------------------------------

PlaneExcursions::PlaneExcursions() {
  constexpr std::size_t kTable = 4096;
  central_.resize(kTable + 1);
  central_[0] = 1.0;
  for (std::size_t k = 1; k <= kTable; ++k)
    central_[k] = central_[k - 1] * (2.0 * static_cast<double>(k) - 1.0) / (2.0 * static_cast<double>(k));
}

namespace {

double central_series(double k) {
  const double ik = 1.0 / k;
  return (1.0 - ik / 8.0 + ik * ik / 128.0 + 5.0 * ik * ik * ik / 1024.0 - 21.0 * ik * ik * ik * ik / 32768.0) /
         std::sqrt(M_PI * k);
}

}  // namespace

double PlaneExcursions::tail(std::uint64_t k) const {
  const std::uint64_t j = k + 1;
  if (j < central_.size()) return central_[j];
  return central_series(static_cast<double>(j));
}

std::uint64_t PlaneExcursions::sample_return_time(RngStream& rng) const {
  const double u = rng.uniform();
  std::uint64_t k;
  if (central_.back() <= u) {
    // first j >= 1 with central_[j] <= u; the table is decreasing
    const auto it = std::lower_bound(central_.begin() + 1, central_.end(), u, std::greater<>());
    k = static_cast<std::uint64_t>(it - central_.begin()) - 1;
  } else {
    std::uint64_t lo = central_.size() - 1, hi = kMaxHalfTime;
    if (tail(hi) > u) {
      k = hi;
    } else {
      while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (tail(mid) <= u) hi = mid;
        else lo = mid + 1;
      }
      k = lo;
    }
  }
  return 2 * k + 1;
}

namespace {

std::int64_t fair_binomial(std::int64_t m, RngStream& rng) {
  if (m <= 0) return 0;
  if (m <= 64) {
    const std::uint64_t mask = m == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << m) - 1);
    return std::popcount(rng() & mask);
  }
  std::binomial_distribution<std::int64_t> bin(m, 0.5);
  return bin(rng);
}

std::int64_t fair_displacement(std::int64_t k, RngStream& rng) { return 2 * fair_binomial(k, rng) - k; }

}  // namespace

std::uint64_t PlaneExcursions::advance(std::int64_t& x, std::int64_t& y, RngStream& rng) const {
  const auto dir = rng.below(6);
  switch (dir) {
    case 0: ++x; return 1;
    case 1: --x; return 1;
    case 2: ++y; return 1;
    case 3: --y; return 1;
    default: break;
  }
  const std::uint64_t t = sample_return_time(rng);
  std::int64_t m = 0;
  if (t <= 15) {
    static const double inv_log = 1.0 / std::log(2.0 / 3.0);
    for (std::uint64_t i = 0; i < t; ++i) m += static_cast<std::int64_t>(std::floor(std::log(rng.uniform()) * inv_log));
  } else {
    std::negative_binomial_distribution<std::int64_t> nb(static_cast<std::int64_t>(t), 1.0 / 3.0);
    m = nb(rng);
  }
  const std::int64_t kx = fair_binomial(m, rng);
  x += fair_displacement(kx, rng);
  y += fair_displacement(m - kx, rng);
  return 1 + t + static_cast<std::uint64_t>(m);
}

// ---------------------------------------------------------------------------

double green3_lower(double r) {
  return 3.0 / (2.0 * M_PI * r) * (1.0 - 1.0 / (6.0 * r * r)) - 0.5 / std::pow(r, 5);
}

double green3_upper(double r) {
  return 3.0 / (2.0 * M_PI * r) * (1.0 + 1.0 / (4.0 * r * r)) + 0.5 / std::pow(r, 5);
}

PlaneHitting::PlaneHitting(const EquilibriumMeasure& eq, std::shared_ptr<const PlaneKernel> kernel,
                           std::int64_t grid_margin)
    : kernel_(std::move(kernel)), set_(eq.set), margin_(grid_margin) {
  if (eq.set.dim() != 3 || !eq.set.is_planar()) throw std::invalid_argument("PlaneHitting needs a planar set in d = 3");
  for (std::size_t i = 0; i < eq.weights.size(); ++i) {
    if (eq.weights[i] == 0) continue;
    xs_.push_back(eq.set.sites()[i][0]);
    ys_.push_back(eq.set.sites()[i][1]);
    w_.push_back(eq.weights[i]);
  }
  capacity_ = eq.capacity;
  x0_ = eq.set.bbox().lo()[0];
  x1_ = eq.set.bbox().hi()[0];
  y0_ = eq.set.bbox().lo()[1];
  y1_ = eq.set.bbox().hi()[1];
  if (margin_ > 0) build_grid(eq);
}

void PlaneHitting::build_grid(const EquilibriumMeasure& eq) {
  const std::int64_t nx = x1_ - x0_ + 1, ny = y1_ - y0_ + 1;
  gw_ = nx + 2 * margin_;
  gh_ = ny + 2 * margin_;
  FftBuffers fft(static_cast<int>(2 * (nx + margin_)), static_cast<int>(2 * (ny + margin_)));
  const auto px = static_cast<std::int64_t>(fft.px), py = static_cast<std::int64_t>(fft.py);
  const std::size_t total = static_cast<std::size_t>(px * py);
  auto wrap = [](std::int64_t v, std::int64_t n) { return ((v % n) + n) % n; };

  std::fill_n(fft.real, total, 0.0);
  for (std::int64_t a = -(nx - 1 + margin_); a <= nx - 1 + margin_; ++a)
    for (std::int64_t b = -(ny - 1 + margin_); b <= ny - 1 + margin_; ++b)
      fft.real[wrap(a, px) * py + wrap(b, py)] = plane_green(*kernel_, a, b);
  fftw_execute(fft.forward);
  std::vector<std::complex<double>> khat(fft.nspec());
  for (std::size_t k = 0; k < khat.size(); ++k) khat[k] = {fft.spec[k][0], fft.spec[k][1]};

  std::fill_n(fft.real, total, 0.0);
  for (std::size_t i = 0; i < eq.weights.size(); ++i) {
    const Point& p = eq.set.sites()[i];
    fft.real[(p[0] - x0_) * py + (p[1] - y0_)] = eq.weights[i];
  }
  fftw_execute(fft.forward);
  for (std::size_t k = 0; k < khat.size(); ++k) {
    const auto w = std::complex<double>(fft.spec[k][0], fft.spec[k][1]) * khat[k];
    fft.spec[k][0] = w.real();
    fft.spec[k][1] = w.imag();
  }
  fftw_execute(fft.backward);
  const double scale = 1.0 / static_cast<double>(total);
  grid_.resize(static_cast<std::size_t>(gw_ * gh_));
  for (std::int64_t gx = 0; gx < gw_; ++gx)
    for (std::int64_t gy = 0; gy < gh_; ++gy) {
      const std::int64_t jx = gx - margin_, jy = gy - margin_;
      const double v = fft.real[wrap(jx, px) * py + wrap(jy, py)] * scale;
      grid_[static_cast<std::size_t>(gx * gh_ + gy)] = std::clamp(v, 0.0, 1.0);
    }
}

double plane_green(const PlaneKernel& kernel, std::int64_t a, std::int64_t b) {
  const std::int64_t aa = a < 0 ? -a : a, bb = b < 0 ? -b : b;
  if (aa <= kernel.range() && bb <= kernel.range()) return kernel.at(aa, bb);
  const double fa = static_cast<double>(aa), fb = static_cast<double>(bb);
  const double r2 = fa * fa + fb * fb;
  const double r = std::sqrt(r2);
  const double r4 = fa * fa * fa * fa + fb * fb * fb * fb;
  return 3.0 / (2.0 * M_PI * r) + 3.0 / (16.0 * M_PI * r * r2) * (5.0 * r4 / (r2 * r2) - 3.0);
}

bool PlaneHitting::in_set(std::int64_t x, std::int64_t y) const {
  if (x < x0_ || x > x1_ || y < y0_ || y > y1_) return false;
  return set_.contains(Point::plane(3, static_cast<std::int32_t>(x), static_cast<std::int32_t>(y)));
}

double PlaneHitting::exact(std::int64_t x, std::int64_t y) const {
  if (in_set(x, y)) return 1.0;
  const std::int64_t gx = x - x0_ + margin_, gy = y - y0_ + margin_;
  if (!grid_.empty() && gx >= 0 && gy >= 0 && gx < gw_ && gy < gh_)
    return grid_[static_cast<std::size_t>(gx * gh_ + gy)];
  double s = 0;
  for (std::size_t i = 0; i < w_.size(); ++i) s += w_[i] * plane_green(*kernel_, x - xs_[i], y - ys_[i]);
  return std::min(s, 1.0);
}

void PlaneHitting::bracket(std::int64_t x, std::int64_t y, double* lo, double* hi) const {
  const double dx = static_cast<double>(std::max({x0_ - x, std::int64_t{0}, x - x1_}));
  const double dy = static_cast<double>(std::max({y0_ - y, std::int64_t{0}, y - y1_}));
  const double rmin = std::hypot(dx, dy);
  if (rmin < 10.0) {
    *lo = 0.0;
    *hi = 1.0;
    return;
  }
  const double fx = static_cast<double>(std::max(std::abs(x - x0_), std::abs(x - x1_)));
  const double fy = static_cast<double>(std::max(std::abs(y - y0_), std::abs(y - y1_)));
  const double rmax = std::hypot(fx, fy);
  *lo = std::max(0.0, capacity_ * green3_lower(rmax));
  *hi = std::min(1.0, capacity_ * green3_upper(rmin));
}

bool PlaneHitting::hits(std::int64_t x, std::int64_t y, double uniform) const {
  const std::int64_t gx = x - x0_ + margin_, gy = y - y0_ + margin_;
  if (!grid_.empty() && gx >= 0 && gy >= 0 && gx < gw_ && gy < gh_) return uniform < exact(x, y);
  double lo, hi;
  bracket(x, y, &lo, &hi);
  if (uniform < lo) return true;
  if (uniform >= hi) return false;
  return uniform < exact(x, y);
}

}  // namespace interlace
