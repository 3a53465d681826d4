#include "interlace/sampler.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace interlace {

std::string to_string(Propagation p) {
  switch (p) {
    case Propagation::Auto: return "auto";
    case Propagation::Stepwise: return "stepwise-doob";
    case Propagation::PlaneExcursion: return "plane-excursion";
  }
  return "unknown";
}

Propagation parse_propagation(const std::string& name) {
  if (name == "auto") return Propagation::Auto;
  if (name == "stepwise" || name == "stepwise-doob") return Propagation::Stepwise;
  if (name == "plane" || name == "plane-excursion") return Propagation::PlaneExcursion;
  throw std::invalid_argument("unknown propagation mode '" + name + "'");
}

std::shared_ptr<const PlaneKernel> cached_plane_kernel(int dim, int range) {
  static std::mutex m;
  static std::map<std::pair<int, int>, std::shared_ptr<const PlaneKernel>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[{dim, range}];
  if (!slot) slot = std::make_shared<const PlaneKernel>(PlaneKernel::build(dim, range));
  return slot;
}

EquilibriumMeasure solve_equilibrium(const Window& window, const GreenFunction& green,
                                     std::shared_ptr<const PlaneKernel>* kernel_out) {
  if (window.dim() == 3 && window.is_planar()) {
    const auto& box = window.bbox();
    const int range = std::max({box.extent(0) - 1, box.extent(1) - 1, 200});
    auto kernel = cached_plane_kernel(3, range);
    if (kernel_out) *kernel_out = kernel;
    if (window.size() <= kDenseSolveLimit) {
      const PlaneKernel& k = *kernel;
      return equilibrium_measure(window, GreenEval([&k](const Point& v) { return plane_green(k, v[0], v[1]); }));
    }
    return planar_equilibrium_measure(window, *kernel);
  }
  return equilibrium_measure(window, green);
}

// ---------------------------------------------------------------------------

std::vector<Point> VacantView::sites() const {
  std::vector<Point> out;
  for (std::size_t i = 0; i < vacant.size(); ++i)
    if (vacant[i]) out.push_back(window->sites()[i]);
  return out;
}

std::size_t VacantView::count() const {
  return static_cast<std::size_t>(std::count(vacant.begin(), vacant.end(), std::uint8_t{1}));
}

std::vector<std::uint8_t> InterlacementSample::occupancy_mask(double u) const {
  if (u > u_max) throw std::invalid_argument("occupancy level exceeds the sample's u_max");
  std::vector<std::uint8_t> occ(window->size(), 0);
  for (const auto& t : trajectories)
    if (t.label <= u)
      for (auto s : t.sites) occ[s] = 1;
  return occ;
}

std::vector<Point> InterlacementSample::occupancy_at(double u) const {
  const auto occ = occupancy_mask(u);
  std::vector<Point> out;
  for (std::size_t i = 0; i < occ.size(); ++i)
    if (occ[i]) out.push_back(window->sites()[i]);
  return out;
}

VacantView InterlacementSample::vacant_view(double u) const {
  auto occ = occupancy_mask(u);
  for (auto& v : occ) v = v ? 0 : 1;
  return {window, u, std::move(occ)};
}

std::vector<double> InterlacementSample::cover_levels() const {
  std::vector<double> lv(window->size(), std::numeric_limits<double>::infinity());
  for (const auto& t : trajectories)
    for (auto s : t.sites) lv[s] = std::min(lv[s], t.label);
  return lv;
}

std::size_t InterlacementSample::count_at(double u) const {
  return static_cast<std::size_t>(std::count_if(trajectories.begin(), trajectories.end(),
                                                [u](const LabeledTrajectory& t) { return t.label <= u; }));
}

namespace {

void write_point(std::ostream& os, const Point& p) {
  for (int i = 0; i < p.dim; ++i) os << (i ? "," : "") << p[i];
}

Point read_point(int d, const std::string& tok) {
  Point p(d);
  std::istringstream in(tok);
  std::string part;
  int i = 0;
  while (std::getline(in, part, ',')) {
    if (i >= d) throw std::runtime_error("sample file: point '" + tok + "' has too many coordinates");
    p[i++] = static_cast<std::int32_t>(std::stol(part));
  }
  if (i != d) throw std::runtime_error("sample file: point '" + tok + "' has too few coordinates");
  return p;
}

std::string expect_line(std::istream& is, const std::string& key) {
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind(key + " ", 0) != 0 && line != key)
      throw std::runtime_error("sample file: expected '" + key + "', got '" + line + "'");
    return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
  }
  throw std::runtime_error("sample file: missing '" + key + "'");
}

}  // namespace

void InterlacementSample::save(std::ostream& os) const {
  os << "# interlace sample v1\n";
  const int d = window->dim();
  os << "dim " << d << "\n";
  if (window->is_box()) {
    os << "window box ";
    write_point(os, window->bbox().lo());
    os << " ";
    write_point(os, window->bbox().hi());
    os << "\n";
  } else {
    os << "window sites " << window->size() << "\n";
    for (const auto& p : window->sites()) {
      write_point(os, p);
      os << "\n";
    }
  }
  os.precision(17);
  os << "u_max " << u_max << "\n";
  os << "trajectories " << trajectories.size() << "\n";
  for (const auto& t : trajectories) {
    os << "t " << t.label << " " << (t.truncated_after_escape ? 1 : 0) << " " << t.returns << " "
       << t.sites.size();
    for (auto s : t.sites) {
      os << " ";
      write_point(os, window->sites()[s]);
    }
    os << "\n";
  }
}

InterlacementSample InterlacementSample::load(std::istream& is) {
  const int d = std::stoi(expect_line(is, "dim"));
  if (d < 3 || d > kMaxDim) throw std::runtime_error("sample file: unsupported dimension");
  std::istringstream win(expect_line(is, "window"));
  std::string kind;
  win >> kind;
  std::shared_ptr<Window> window;
  if (kind == "box") {
    std::string lo, hi;
    win >> lo >> hi;
    window = std::make_shared<Window>(BoxRegion(read_point(d, lo), read_point(d, hi)));
  } else if (kind == "sites") {
    std::size_t n = 0;
    win >> n;
    std::vector<Point> pts;
    std::string line;
    while (pts.size() < n && std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      pts.push_back(read_point(d, line));
    }
    if (pts.size() != n) throw std::runtime_error("sample file: truncated site list");
    window = std::make_shared<Window>(d, std::move(pts));
  } else {
    throw std::runtime_error("sample file: unknown window kind '" + kind + "'");
  }
  InterlacementSample s;
  s.window = window;
  s.u_max = std::stod(expect_line(is, "u_max"));
  const std::size_t m = std::stoul(expect_line(is, "trajectories"));
  s.trajectories.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    std::istringstream in(expect_line(is, "t"));
    LabeledTrajectory t;
    int flag = 0;
    std::size_t count = 0;
    in >> t.label >> flag >> t.returns >> count;
    t.truncated_after_escape = flag != 0;
    for (std::size_t i = 0; i < count; ++i) {
      std::string tok;
      if (!(in >> tok)) throw std::runtime_error("sample file: trajectory site list too short");
      const auto slot = window->slot(read_point(d, tok));
      if (slot < 0) throw std::runtime_error("sample file: trajectory site outside the window");
      t.sites.push_back(static_cast<std::uint32_t>(slot));
    }
    if (!in) throw std::runtime_error("sample file: malformed trajectory line");
    s.trajectories.push_back(std::move(t));
  }
  return s;
}

// ---------------------------------------------------------------------------

struct InterlacementSampler::WalkState {
  std::vector<std::uint32_t> stamp;
  std::uint32_t current = 0;

  void visit(LabeledTrajectory& t, std::int32_t slot) {
    auto& s = stamp[static_cast<std::size_t>(slot)];
    if (s != current) {
      s = current;
      t.sites.push_back(static_cast<std::uint32_t>(slot));
    }
  }
};

// Entrance law for large planar windows. For x far away, g(x - .) on the
// support is fitted by Legendre polynomials P_i(s) P_j(t), i + j <= degree,
// whose images under G^{-1} are solved once. The residual of each fit is
// checked; a fit that misses the tolerance is finished by conjugate
// gradients.
struct InterlacementSampler::FarField {
  std::size_t n = 0, k = 0;
  int degree = 0;
  std::vector<double> phi;   // n x k
  std::vector<double> pinv;  // k x n
  std::vector<double> u;     // n x k, G^{-1} phi
  std::vector<double> eps;   // residual of each basis solve
  std::unique_ptr<PlanarGreenOperator> op;
  std::mutex op_mutex;
  std::atomic<std::uint64_t> fallbacks{0};

  void build(const Window& w, const std::vector<std::uint32_t>& support,
             const std::shared_ptr<const PlaneKernel>& kernel, double r_escape) {
    n = support.size();
    std::vector<Point> pts;
    pts.reserve(n);
    for (auto i : support) pts.push_back(w.sites()[i]);
    const auto& box = w.bbox();
    const double cx = 0.5 * (box.lo()[0] + box.hi()[0]), cy = 0.5 * (box.lo()[1] + box.hi()[1]);
    const double hx = std::max(0.5 * (box.hi()[0] - box.lo()[0]), 0.5);
    const double hy = std::max(0.5 * (box.hi()[1] - box.lo()[1]), 0.5);
    double rho = 0;
    for (const auto& p : pts) rho = std::max(rho, std::hypot(p[0] - cx, p[1] - cy));
    const double ratio = rho / (r_escape + std::min(hx, hy));
    degree = std::clamp(static_cast<int>(std::ceil(std::log(1e-12) / std::log(ratio))) - 1, 2, 20);
    k = static_cast<std::size_t>((degree + 1) * (degree + 2) / 2);

    phi.assign(n * k, 0.0);
    std::vector<double> ps(static_cast<std::size_t>(degree) + 1), pt(ps.size());
    auto legendre = [this](double s, std::vector<double>& out) {
      out[0] = 1.0;
      if (degree >= 1) out[1] = s;
      for (int m = 1; m < degree; ++m)
        out[static_cast<std::size_t>(m) + 1] =
            ((2.0 * m + 1.0) * s * out[static_cast<std::size_t>(m)] - m * out[static_cast<std::size_t>(m) - 1]) / (m + 1.0);
    };
    for (std::size_t a = 0; a < n; ++a) {
      legendre((pts[a][0] - cx) / hx, ps);
      legendre((pts[a][1] - cy) / hy, pt);
      std::size_t j = 0;
      for (int total = 0; total <= degree; ++total)
        for (int i = 0; i <= total; ++i, ++j)
          phi[a * k + j] = ps[static_cast<std::size_t>(i)] * pt[static_cast<std::size_t>(total - i)];
    }

    op = std::make_unique<PlanarGreenOperator>(Window(w.dim(), pts), *kernel);
    u.assign(n * k, 0.0);
    eps.assign(k, 0.0);
    std::vector<double> rhs(n), x;
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t a = 0; a < n; ++a) rhs[a] = phi[a * k + j];
      x.assign(n, 0.0);
      op->solve(rhs, x, 1e-12, 4000, &eps[j]);
      if (eps[j] > kSolverResidualTol)
        throw PotentialError("far-field basis solve residual " + std::to_string(eps[j]));
      for (std::size_t a = 0; a < n; ++a) u[a * k + j] = x[a];
    }
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> P(
        phi.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(P);
    const auto ki = static_cast<Eigen::Index>(k);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), ki);
    const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(ki, ki).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd pi = r.triangularView<Eigen::Upper>().solve(q.transpose());
    pinv.resize(k * n);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t a = 0; a < n; ++a)
        pinv[j * n + a] = pi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a));
  }

  void solve(const std::vector<double>& gx, std::vector<double>& nu) {
    std::vector<double> c(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const double* row = &pinv[j * n];
      double acc = 0;
      for (std::size_t a = 0; a < n; ++a) acc += row[a] * gx[a];
      c[j] = acc;
    }
    double gmax = 0, res = 0;
    for (std::size_t a = 0; a < n; ++a) {
      const double* pr = &phi[a * k];
      const double* ur = &u[a * k];
      double fit = 0, v = 0;
      for (std::size_t j = 0; j < k; ++j) {
        fit += pr[j] * c[j];
        v += ur[j] * c[j];
      }
      nu[a] = v;
      gmax = std::max(gmax, gx[a]);
      res = std::max(res, std::abs(gx[a] - fit));
    }
    for (std::size_t j = 0; j < k; ++j) res += std::abs(c[j]) * eps[j];
    const double tol = kSolverResidualTol * gmax;
    if (res <= tol) return;
    ++fallbacks;
    std::lock_guard lock(op_mutex);
    double final_res = 0;
    op->solve(gx, nu, tol, 4000, &final_res);
    if (final_res > tol) throw PotentialError("entrance law residual " + std::to_string(final_res));
  }
};

InterlacementSampler::~InterlacementSampler() = default;

InterlacementSampler::InterlacementSampler(Window window, const SamplerConfig& config)
    : window_(std::make_shared<const Window>(std::move(window))), config_(config) {
  const Window& w = *window_;
  const int d = w.dim();
  if (d < 3) throw std::invalid_argument("the sampler needs d >= 3");
  if (w.size() == 0) throw std::invalid_argument("empty window");
  const bool plane_ok = d == 3 && w.is_planar();
  mode_ = config.propagation;
  if (mode_ == Propagation::Auto) mode_ = plane_ok ? Propagation::PlaneExcursion : Propagation::Stepwise;
  if (mode_ == Propagation::PlaneExcursion && !plane_ok)
    throw std::invalid_argument("plane-excursion propagation needs d = 3 and a window inside the plane");

  const auto diam = static_cast<double>(w.diam_inf());
  if (!(config.escape_factor > 0) || !(config.plane_escape_factor > 0) || !(config.far_escape_factor > 0))
    throw std::invalid_argument("escape factors must be positive");
  r_escape_ = (mode_ == Propagation::PlaneExcursion ? config.plane_escape_factor : config.escape_factor) * (1.0 + diam);
  const int reach = static_cast<int>(std::ceil(r_escape_)) + static_cast<int>(diam) + 3;

  int range;
  if (mode_ == Propagation::PlaneExcursion) range = 40;
  else if (d == 3) range = std::max(std::min(reach, 120), static_cast<int>(diam) + 1);
  else range = reach;
  green_ = std::make_shared<GreenFunction>(cached_green_table(d, range, GreenMethod::Quadrature, config.green_cache_dir));

  eq_ = solve_equilibrium(w, *green_, &plane_kernel_);

  // Walker alias table over the support of the normalized measure.
  for (std::size_t i = 0; i < eq_.normalized.size(); ++i)
    if (eq_.normalized[i] > 0) support_.push_back(static_cast<std::uint32_t>(i));
  const std::size_t n = support_.size();
  alias_prob_.assign(n, 0.0);
  alias_idx_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  for (std::size_t k = 0; k < n; ++k) {
    scaled[k] = eq_.normalized[support_[k]] * static_cast<double>(n);
    (scaled[k] < 1.0 ? small : large).push_back(k);
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back(), l = large.back();
    small.pop_back();
    alias_prob_[s] = scaled[s];
    alias_idx_[s] = static_cast<std::uint32_t>(l);
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto k : large) alias_prob_[k] = 1.0;
  for (auto k : small) alias_prob_[k] = 1.0;

  if (mode_ == Propagation::PlaneExcursion && n > config.entrance_law_limit) {
    r_escape_ = config.far_escape_factor * (1.0 + diam);
    far_ = std::make_unique<FarField>();
    far_->build(w, support_, plane_kernel_, r_escape_);
  } else if (n <= config.entrance_law_limit) {
    Eigen::MatrixXd G(n, n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b <= a; ++b)
        G(a, b) = G(b, a) = g_between(w.sites()[support_[a]], w.sites()[support_[b]]);
    const Eigen::MatrixXd inv = G.llt().solve(Eigen::MatrixXd::Identity(n, n));
    entrance_inv_.resize(n * n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) entrance_inv_[a * n + b] = inv(a, b);
  }

  if (mode_ == Propagation::Stepwise) {
    h_box_ = w.bbox().expanded(static_cast<std::int32_t>(std::ceil(r_escape_)) + 2);
    const double work = static_cast<double>(h_box_.size()) * static_cast<double>(n);
    if (work <= 4e8) {
      h_grid_.resize(h_box_.size());
      for (std::size_t i = 0; i < h_grid_.size(); ++i) h_grid_[i] = h_direct(h_box_.point(i));
    }
  } else {
    const std::int64_t margin = static_cast<std::int64_t>(std::ceil(2.0 * r_escape_)) + 4;
    const double cells = static_cast<double>(w.bbox().extent(0) + 2 * margin) *
                         static_cast<double>(w.bbox().extent(1) + 2 * margin);
    plane_h_ = std::make_unique<PlaneHitting>(eq_, plane_kernel_, cells <= 1.6e7 ? margin : 0);
  }
}

std::string InterlacementSampler::method_tags() const {
  std::ostringstream os;
  os << "green=" << to_string(green_->table().method()) << ";equilibrium=" << to_string(eq_.solver)
     << ";propagation=" << to_string(mode_) << ";r_escape=" << r_escape_
     << ";return=";
  if (far_) os << "entrance-law-far-field(degree=" << far_->degree << ")";
  else if (has_entrance_law()) os << "entrance-law";
  else os << (mode_ == Propagation::Stepwise ? "doob-walk" : "rejection-walk");
  return os.str();
}

std::uint64_t InterlacementSampler::entrance_fallbacks() const { return far_ ? far_->fallbacks.load() : 0; }

double InterlacementSampler::h_direct(const Point& x) const {
  if (window_->contains(x)) return 1.0;
  if (mode_ == Propagation::PlaneExcursion && x.in_plane()) return plane_h_->exact(x[0], x[1]);
  double s = 0;
  for (auto k : support_) s += (*green_)(x - window_->sites()[k]) * eq_.weights[k];
  return s;
}

double InterlacementSampler::g_between(const Point& x, const Point& y) const {
  if (mode_ == Propagation::PlaneExcursion) return plane_green(*plane_kernel_, x[0] - y[0], x[1] - y[1]);
  return (*green_)(x - y);
}

std::vector<double> InterlacementSampler::entrance_law(const Point& x) const {
  if (!has_entrance_law()) throw std::logic_error("no entrance law for this window");
  // nu_x(z) = sum_y g(x - y) G^{-1}(y, z) = P_x[X_{H_K} = z] on the support.
  const std::size_t n = support_.size();
  std::vector<double> gx(n), nu(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) gx[a] = g_between(x, window_->sites()[support_[a]]);
  if (far_) {
    far_->solve(gx, nu);
  } else {
    for (std::size_t a = 0; a < n; ++a) {
      const double* row = &entrance_inv_[a * n];
      for (std::size_t b = 0; b < n; ++b) nu[b] += gx[a] * row[b];
    }
  }
  std::vector<double> out(window_->size(), 0.0);
  for (std::size_t a = 0; a < n; ++a) out[support_[a]] = nu[a];
  return out;
}

std::uint32_t InterlacementSampler::draw_entrance(const Point& x, RngStream& rng) const {
  auto nu = entrance_law(x);
  const std::size_t n = nu.size();
  double total = 0;
  for (auto& v : nu) {
    v = std::max(v, 0.0);
    total += v;
  }
  double u = rng.uniform() * total;
  std::size_t k = 0;
  while (k + 1 < n && u >= nu[k]) {
    u -= nu[k];
    ++k;
  }
  while (nu[k] == 0 && k > 0) --k;
  return static_cast<std::uint32_t>(k);
}

double InterlacementSampler::h(const Point& x) const {
  if (!h_grid_.empty() && h_box_.contains(x)) return h_grid_[h_box_.index(x)];
  return h_direct(x);
}

std::uint32_t InterlacementSampler::draw_start(RngStream& rng) const {
  const auto k = rng.below(support_.size());
  return rng.uniform() < alias_prob_[k] ? support_[k] : support_[alias_idx_[k]];
}

Continuation InterlacementSampler::continue_or_escape(const Point& current, RngStream& rng, bool keep_path) const {
  if (static_cast<double>(window_->dist_inf(current)) <= r_escape_)
    throw std::invalid_argument("continue_or_escape: point lies inside the escape radius");
  Continuation c;
  if (mode_ == Propagation::PlaneExcursion) {
    if (!current.in_plane()) throw std::invalid_argument("continue_or_escape: plane mode needs a plane point");
    std::int64_t x = current[0], y = current[1];
    if (!plane_h_->hits(x, y, rng.uniform())) return c;
    c.escaped = false;
    if (has_entrance_law()) {
      c.entrance = window_->sites()[draw_entrance(current, rng)];
      return c;
    }
    plane_return(x, y, rng);
    c.entrance = Point::plane(3, static_cast<std::int32_t>(x), static_cast<std::int32_t>(y));
    return c;
  }
  const double hx = h(current);
  if (hx < -1e-9 || hx > 1 + 1e-9)
    throw std::runtime_error("hitting probability " + std::to_string(hx) + " outside [0,1]: Green range too small");
  if (rng.uniform() >= hx) return c;
  c.escaped = false;
  if (!keep_path && has_entrance_law()) {
    c.entrance = window_->sites()[draw_entrance(current, rng)];
    return c;
  }
  const int d = current.dim;
  Point x = current;
  if (keep_path) c.path.push_back(x);
  std::array<double, 2 * kMaxDim> wts{};
  for (;;) {
    double total = 0;
    for (int dir = 0; dir < 2 * d; ++dir) {
      Point z = x;
      apply_direction(z, dir);
      wts[static_cast<std::size_t>(dir)] = h(z);
      total += wts[static_cast<std::size_t>(dir)];
    }
    double u = rng.uniform() * total;
    int dir = 0;
    while (dir < 2 * d - 1 && u >= wts[static_cast<std::size_t>(dir)]) {
      u -= wts[static_cast<std::size_t>(dir)];
      ++dir;
    }
    apply_direction(x, dir);
    ++c.steps;
    if (keep_path) c.path.push_back(x);
    if (window_->contains(x)) break;
  }
  c.entrance = x;
  return c;
}

void InterlacementSampler::plane_return(std::int64_t& x, std::int64_t& y, RngStream& rng) const {
  const auto& box = window_->bbox();
  const std::int64_t x0 = box.lo()[0], x1 = box.hi()[0], y0 = box.lo()[1], y1 = box.hi()[1];
  auto dist = [&](std::int64_t a, std::int64_t b) {
    return std::max({x0 - a, a - x1, y0 - b, b - y1, std::int64_t{0}});
  };
  std::int64_t ox = x, oy = y;
  for (;;) {
    const std::int64_t far = 2 * dist(ox, oy) + 1;
    std::int64_t qx = ox, qy = oy;
    for (;;) {
      excursions_.advance(qx, qy, rng);
      const auto dq = dist(qx, qy);
      if (dq == 0 && window_->contains(Point::plane(3, static_cast<std::int32_t>(qx), static_cast<std::int32_t>(qy)))) {
        x = qx;
        y = qy;
        return;
      }
      if (dq > far) break;
    }
    if (plane_h_->hits(qx, qy, rng.uniform())) {
      ox = qx;
      oy = qy;
    }
  }
}

void InterlacementSampler::run_stepwise(const Point& start, LabeledTrajectory& traj, WalkState& st,
                                        RngStream& rng) const {
  const int d = start.dim;
  Point p = start;
  for (;;) {
    apply_direction(p, random_direction(d, rng));
    const auto dist = window_->dist_inf(p);
    if (dist == 0) {
      const auto slot = window_->slot(p);
      if (slot >= 0) st.visit(traj, slot);
    } else if (static_cast<double>(dist) > r_escape_) {
      auto c = continue_or_escape(p, rng);
      if (c.escaped) break;
      ++traj.returns;
      p = c.entrance;
      st.visit(traj, window_->slot(p));
    }
  }
}

void InterlacementSampler::run_plane(const Point& start, LabeledTrajectory& traj, WalkState& st,
                                     RngStream& rng) const {
  const auto& box = window_->bbox();
  const std::int64_t x0 = box.lo()[0], x1 = box.hi()[0], y0 = box.lo()[1], y1 = box.hi()[1];
  std::int64_t x = start[0], y = start[1];
  for (;;) {
    excursions_.advance(x, y, rng);
    const auto dist = std::max({x0 - x, x - x1, y0 - y, y - y1, std::int64_t{0}});
    if (dist == 0) {
      const auto slot = window_->slot(Point::plane(3, static_cast<std::int32_t>(x), static_cast<std::int32_t>(y)));
      if (slot >= 0) st.visit(traj, slot);
    } else if (static_cast<double>(dist) > r_escape_) {
      if (!plane_h_->hits(x, y, rng.uniform())) break;
      if (has_entrance_law()) {
        const auto at = Point::plane(3, static_cast<std::int32_t>(x), static_cast<std::int32_t>(y));
        const auto& e = window_->sites()[draw_entrance(at, rng)];
        x = e[0];
        y = e[1];
      } else {
        plane_return(x, y, rng);
      }
      ++traj.returns;
      st.visit(traj, window_->slot(Point::plane(3, static_cast<std::int32_t>(x), static_cast<std::int32_t>(y))));
    }
  }
}

InterlacementSample InterlacementSampler::sample(double u_max, RngStream& rng) const {
  if (!(u_max >= 0) || !std::isfinite(u_max)) throw std::invalid_argument("u_max must be finite and >= 0");
  InterlacementSample s;
  s.window = window_;
  s.u_max = u_max;
  const auto count = sample_poisson(u_max * eq_.capacity, rng);
  s.trajectories.resize(count);
  WalkState st;
  st.stamp.assign(window_->size(), 0);
  for (std::uint64_t k = 0; k < count; ++k) {
    auto& t = s.trajectories[k];
    st.current = static_cast<std::uint32_t>(k + 1);
    t.label = u_max * rng.uniform();
    const auto start = draw_start(rng);
    st.visit(t, static_cast<std::int32_t>(start));
    if (mode_ == Propagation::PlaneExcursion) run_plane(window_->sites()[start], t, st, rng);
    else run_stepwise(window_->sites()[start], t, st, rng);
  }
  return s;
}

double InterlacementSampler::truncation_bias(double kill_radius) const {
  const auto& box = window_->bbox();
  double rad2 = 0;
  for (const auto& p : window_->sites()) {
    double r2 = 0;
    for (int i = 0; i < p.dim; ++i) {
      const double c = 0.5 * (box.lo()[i] + box.hi()[i]);
      r2 += (p[i] - c) * (p[i] - c);
    }
    rad2 = std::max(rad2, r2);
  }
  return eq_.capacity * green_upper_beyond(window_->dim(), kill_radius - std::sqrt(rad2) - 1.0);
}

InterlacementSample InterlacementSampler::sample_truncated(double u_max, double kill_radius, RngStream& rng,
                                                           Propagation mode) const {
  if (!(u_max >= 0) || !std::isfinite(u_max)) throw std::invalid_argument("u_max must be finite and >= 0");
  const Window& w = *window_;
  const int d = w.dim();
  const bool plane_ok = d == 3 && w.is_planar();
  if (mode == Propagation::Auto) mode = plane_ok ? Propagation::PlaneExcursion : Propagation::Stepwise;
  if (mode == Propagation::PlaneExcursion && !plane_ok)
    throw std::invalid_argument("plane-excursion propagation needs d = 3 and a window inside the plane");
  if (kill_radius <= static_cast<double>(w.diam_inf())) throw std::invalid_argument("kill radius too small");
  std::array<double, kMaxDim> c{};
  for (int i = 0; i < d; ++i)
    c[static_cast<std::size_t>(i)] = 0.5 * (w.bbox().lo()[i] + w.bbox().hi()[i]);
  const double kill2 = kill_radius * kill_radius;

  InterlacementSample s;
  s.window = window_;
  s.u_max = u_max;
  const auto count = sample_poisson(u_max * eq_.capacity, rng);
  s.trajectories.resize(count);
  WalkState st;
  st.stamp.assign(w.size(), 0);
  for (std::uint64_t k = 0; k < count; ++k) {
    auto& t = s.trajectories[k];
    st.current = static_cast<std::uint32_t>(k + 1);
    t.label = u_max * rng.uniform();
    const auto start = draw_start(rng);
    st.visit(t, static_cast<std::int32_t>(start));
    if (mode == Propagation::PlaneExcursion) {
      std::int64_t x = w.sites()[start][0], y = w.sites()[start][1];
      for (;;) {
        excursions_.advance(x, y, rng);
        const double dx = static_cast<double>(x) - c[0], dy = static_cast<double>(y) - c[1];
        if (dx * dx + dy * dy > kill2) break;
        if (w.bbox().dist_inf(Point::plane(3, static_cast<std::int32_t>(x), static_cast<std::int32_t>(y))) == 0) {
          const auto slot = w.slot(Point::plane(3, static_cast<std::int32_t>(x), static_cast<std::int32_t>(y)));
          if (slot >= 0) st.visit(t, slot);
        }
      }
    } else {
      Point p = w.sites()[start];
      for (;;) {
        apply_direction(p, random_direction(d, rng));
        double r2 = 0;
        for (int i = 0; i < d; ++i) r2 += (p[i] - c[static_cast<std::size_t>(i)]) * (p[i] - c[static_cast<std::size_t>(i)]);
        if (r2 > kill2) break;
        const auto slot = w.slot(p);
        if (slot >= 0) st.visit(t, slot);
      }
    }
  }
  return s;
}

InterlacementSample sample_interlacement(const Window& window, double u_max, RngStream& rng,
                                         const SamplerConfig& config) {
  return InterlacementSampler(window, config).sample(u_max, rng);
}

}  // namespace interlace
