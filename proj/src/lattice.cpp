#include "interlace/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace interlace {

Point::Point(int d) : dim(d) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("dimension out of range: " + std::to_string(d));
}

Point::Point(int d, std::initializer_list<std::int32_t> coords) : Point(d) {
  if (static_cast<int>(coords.size()) > d) throw std::invalid_argument("too many coordinates");
  std::copy(coords.begin(), coords.end(), x.begin());
}

Point Point::unit(int d, int axis, int sign) {
  Point p(d);
  p[axis] = sign;
  return p;
}

Point Point::plane(int d, std::int32_t a, std::int32_t b) {
  Point p(d);
  p[0] = a;
  p[1] = b;
  return p;
}

bool Point::in_plane() const {
  for (int i = 2; i < dim; ++i)
    if (x[static_cast<std::size_t>(i)] != 0) return false;
  return true;
}

std::int64_t Point::norm_inf() const {
  std::int64_t m = 0;
  for (int i = 0; i < dim; ++i) m = std::max<std::int64_t>(m, std::abs(static_cast<std::int64_t>((*this)[i])));
  return m;
}

std::int64_t Point::norm1() const {
  std::int64_t s = 0;
  for (int i = 0; i < dim; ++i) s += std::abs(static_cast<std::int64_t>((*this)[i]));
  return s;
}

double Point::norm2() const {
  double s = 0;
  for (int i = 0; i < dim; ++i) s += static_cast<double>((*this)[i]) * (*this)[i];
  return std::sqrt(s);
}

Point operator+(const Point& a, const Point& b) {
  Point r(a.dim);
  for (int i = 0; i < a.dim; ++i) r[i] = a[i] + b[i];
  return r;
}

Point operator-(const Point& a, const Point& b) {
  Point r(a.dim);
  for (int i = 0; i < a.dim; ++i) r[i] = a[i] - b[i];
  return r;
}

bool operator==(const Point& a, const Point& b) {
  if (a.dim != b.dim) return false;
  for (int i = 0; i < a.dim; ++i)
    if (a[i] != b[i]) return false;
  return true;
}

bool operator<(const Point& a, const Point& b) {
  if (a.dim != b.dim) return a.dim < b.dim;
  for (int i = 0; i < a.dim; ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

std::string Point::str() const {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < dim; ++i) os << (i ? "," : "") << (*this)[i];
  os << ')';
  return os.str();
}

std::size_t PointHash::operator()(const Point& p) const noexcept {
  std::uint64_t h = 0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(p.dim);
  for (int i = 0; i < p.dim; ++i) {
    h ^= static_cast<std::uint32_t>(p[i]);
    h *= 0xBF58476D1CE4E5B9ull;
    h ^= h >> 31;
  }
  return static_cast<std::size_t>(h);
}

// ---------------------------------------------------------------------------

BoxRegion::BoxRegion(Point lo, Point hi) : lo_(lo), hi_(hi) {
  if (lo.dim != hi.dim) throw std::invalid_argument("box corners differ in dimension");
  for (int i = 0; i < lo.dim; ++i)
    if (lo[i] > hi[i]) throw std::invalid_argument("empty box on axis " + std::to_string(i));
}

BoxRegion BoxRegion::centered(const Point& center, std::span<const std::int32_t> half_sides) {
  if (static_cast<int>(half_sides.size()) != center.dim)
    throw std::invalid_argument("half_sides length must equal the dimension");
  Point lo = center, hi = center;
  for (int i = 0; i < center.dim; ++i) {
    if (half_sides[static_cast<std::size_t>(i)] < 0) throw std::invalid_argument("negative half side");
    lo[i] -= half_sides[static_cast<std::size_t>(i)];
    hi[i] += half_sides[static_cast<std::size_t>(i)];
  }
  return {lo, hi};
}

BoxRegion BoxRegion::cube(const Point& center, std::int32_t half_side) {
  std::vector<std::int32_t> h(static_cast<std::size_t>(center.dim), half_side);
  return centered(center, h);
}

BoxRegion BoxRegion::plane_rect(int d, std::int32_t x0, std::int32_t x1, std::int32_t y0,
                                std::int32_t y1) {
  return {Point::plane(d, x0, y0), Point::plane(d, x1, y1)};
}

bool BoxRegion::contains(const Point& p) const {
  for (int i = 0; i < lo_.dim; ++i)
    if (p[i] < lo_[i] || p[i] > hi_[i]) return false;
  return true;
}

std::size_t BoxRegion::size() const {
  std::size_t n = 1;
  for (int i = 0; i < lo_.dim; ++i) n *= static_cast<std::size_t>(extent(i));
  return n;
}

std::size_t BoxRegion::index(const Point& p) const {
  std::size_t idx = 0;
  for (int i = lo_.dim - 1; i >= 0; --i)
    idx = idx * static_cast<std::size_t>(extent(i)) + static_cast<std::size_t>(p[i] - lo_[i]);
  return idx;
}

Point BoxRegion::point(std::size_t index) const {
  Point p(lo_.dim);
  for (int i = 0; i < lo_.dim; ++i) {
    const auto e = static_cast<std::size_t>(extent(i));
    p[i] = lo_[i] + static_cast<std::int32_t>(index % e);
    index /= e;
  }
  return p;
}

std::vector<Point> BoxRegion::points() const {
  std::vector<Point> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(point(i));
  return out;
}

std::int64_t BoxRegion::diam_inf() const {
  std::int64_t m = 0;
  for (int i = 0; i < lo_.dim; ++i) m = std::max<std::int64_t>(m, extent(i) - 1);
  return m;
}

std::int64_t BoxRegion::dist_inf(const Point& p) const {
  std::int64_t m = 0;
  for (int i = 0; i < lo_.dim; ++i) {
    if (p[i] < lo_[i]) m = std::max<std::int64_t>(m, static_cast<std::int64_t>(lo_[i]) - p[i]);
    if (p[i] > hi_[i]) m = std::max<std::int64_t>(m, static_cast<std::int64_t>(p[i]) - hi_[i]);
  }
  return m;
}

bool BoxRegion::is_planar() const {
  for (int i = 2; i < lo_.dim; ++i)
    if (lo_[i] != 0 || hi_[i] != 0) return false;
  return true;
}

BoxRegion BoxRegion::expanded(std::int32_t margin) const {
  Point lo = lo_, hi = hi_;
  for (int i = 0; i < lo_.dim; ++i) {
    lo[i] -= margin;
    hi[i] += margin;
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------

Window::Window(const BoxRegion& box) : bbox_(box), sites_(box.points()), is_box_(true) {
  build_index();
}

Window::Window(int d, std::vector<Point> sites) : sites_(std::move(sites)) {
  if (sites_.empty()) throw std::invalid_argument("window must be nonempty");
  std::sort(sites_.begin(), sites_.end());
  sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
  Point lo = sites_.front(), hi = sites_.front();
  for (const auto& p : sites_) {
    if (p.dim != d) throw std::invalid_argument("window site has wrong dimension");
    for (int i = 0; i < d; ++i) {
      lo[i] = std::min(lo[i], p[i]);
      hi[i] = std::max(hi[i], p[i]);
    }
  }
  bbox_ = BoxRegion(lo, hi);
  is_box_ = bbox_.size() == sites_.size();
  build_index();
}

void Window::build_index() {
  slot_.assign(bbox_.size(), -1);
  for (std::size_t i = 0; i < sites_.size(); ++i)
    slot_[bbox_.index(sites_[i])] = static_cast<std::int32_t>(i);
}

std::int32_t Window::slot(const Point& p) const {
  if (!bbox_.contains(p)) return -1;
  return slot_[bbox_.index(p)];
}

bool Window::is_planar() const { return bbox_.is_planar(); }

std::string Window::describe() const {
  std::ostringstream os;
  if (is_box_) {
    os << "box" << bbox_.lo().str() << ".." << bbox_.hi().str();
  } else {
    os << "set{";
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      if (i == 8) {
        os << ";...+" << sites_.size() - 8;
        break;
      }
      os << (i ? ";" : "") << sites_[i].str();
    }
    os << '}';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

std::vector<Point> enumerate_neighbors(const Point& x, Adjacency adjacency) {
  const int d = x.dim;
  std::vector<Point> out;
  if (adjacency == Adjacency::NearestNeighbor) {
    out.reserve(static_cast<std::size_t>(2 * d));
    for (int dir = 0; dir < 2 * d; ++dir) {
      Point y = x;
      apply_direction(y, dir);
      out.push_back(y);
    }
    return out;
  }
  int total = 1;
  for (int i = 0; i < d; ++i) total *= 3;
  out.reserve(static_cast<std::size_t>(total - 1));
  for (int code = 0; code < total; ++code) {
    Point y = x;
    int c = code;
    bool zero = true;
    for (int i = 0; i < d; ++i) {
      const int off = c % 3 - 1;
      c /= 3;
      y[i] += off;
      zero = zero && off == 0;
    }
    if (!zero) out.push_back(y);
  }
  return out;
}

std::vector<Point> boundary(std::span<const Point> set, BoundaryKind kind) {
  std::unordered_set<Point, PointHash> members(set.begin(), set.end());
  std::unordered_set<Point, PointHash> result;
  for (const auto& p : members) {
    for (const auto& q : enumerate_neighbors(p, Adjacency::NearestNeighbor)) {
      const bool q_in = members.count(q) > 0;
      if (kind == BoundaryKind::Outer && !q_in) result.insert(q);
      if (kind == BoundaryKind::Inner && !q_in) {
        result.insert(p);
        break;
      }
    }
  }
  std::vector<Point> out(result.begin(), result.end());
  std::sort(out.begin(), out.end());
  return out;
}

WalkResult run_walk_until(const Point& start, StopCondition condition,
                          const std::function<bool(const Point&)>& in_set,
                          std::uint64_t step_budget, RngStream& rng, bool keep_trace) {
  WalkResult result;
  Point p = start;
  if (keep_trace) result.trace.push_back(p);
  auto satisfied = [&](std::uint64_t n) {
    switch (condition) {
      case StopCondition::Enter: return in_set(p);
      case StopCondition::Reenter: return n >= 1 && in_set(p);
      case StopCondition::Exit: return !in_set(p);
      case StopCondition::Budget: return false;
    }
    return false;
  };
  for (std::uint64_t n = 0;; ++n) {
    if (satisfied(n)) {
      result.stop_time = n;
      break;
    }
    if (n == step_budget) break;
    apply_direction(p, random_direction(p.dim, rng));
    if (keep_trace) result.trace.push_back(p);
  }
  result.final = p;
  return result;
}

}  // namespace interlace
