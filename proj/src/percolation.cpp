#include "interlace/percolation.hpp"

#include <deque>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "interlace/parallel.hpp"
#include "interlace/stats.hpp"

namespace interlace {

Window PlaneRect::window(int d) const {
  return Window(BoxRegion::plane_rect(d, static_cast<std::int32_t>(x0), static_cast<std::int32_t>(x1),
                                      static_cast<std::int32_t>(y0), static_cast<std::int32_t>(y1)));
}

std::string PlaneRect::str() const {
  std::ostringstream os;
  os << "[" << x0 << ":" << x1 << "]x[" << y0 << ":" << y1 << "]";
  return os.str();
}

PlaneConfig PlaneConfig::filled(const PlaneRect& rect, bool value) {
  return {rect, std::vector<std::uint8_t>(rect.size(), value ? 1 : 0)};
}

PlaneSlicer::PlaneSlicer(const Window& window) {
  bool any = false;
  for (const auto& p : window.sites()) {
    if (!p.in_plane()) continue;
    if (!any) {
      rect_ = {p[0], p[0], p[1], p[1]};
      any = true;
    }
    rect_.x0 = std::min<std::int64_t>(rect_.x0, p[0]);
    rect_.x1 = std::max<std::int64_t>(rect_.x1, p[0]);
    rect_.y0 = std::min<std::int64_t>(rect_.y0, p[1]);
    rect_.y1 = std::max<std::int64_t>(rect_.y1, p[1]);
  }
  if (!any) throw std::invalid_argument("window does not meet the plane");
  cell_.assign(window.size(), -1);
  std::size_t in_plane = 0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const auto& p = window.sites()[i];
    if (!p.in_plane()) continue;
    cell_[i] = (p[1] - rect_.y0) * rect_.width() + (p[0] - rect_.x0);
    ++in_plane;
  }
  if (in_plane != rect_.size()) throw std::invalid_argument("plane trace of the window is not a rectangle");
}

PlaneConfig PlaneSlicer::slice(const std::vector<double>& cover_levels, double u) const {
  if (cover_levels.size() != cell_.size()) throw std::invalid_argument("cover levels do not match the window");
  PlaneConfig cfg = PlaneConfig::filled(rect_, false);
  for (std::size_t i = 0; i < cell_.size(); ++i)
    if (cell_[i] >= 0 && cover_levels[i] <= u) cfg.occupied[static_cast<std::size_t>(cell_[i])] = 1;
  return cfg;
}

PlaneConfig plane_config(const InterlacementSample& sample, double u) {
  if (u > sample.u_max) throw std::invalid_argument("occupancy level exceeds the sample's u_max");
  return PlaneSlicer(*sample.window).slice(sample.cover_levels(), u);
}

namespace {

struct UnionFind {
  std::vector<std::uint32_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
  std::uint32_t find(std::uint32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent[b] = a;
    else parent[a] = b;
  }
};

PlaneConfig restrict_to(const PlaneConfig& config, const PlaneRect& rect) {
  if (!config.rect.contains(rect)) throw std::invalid_argument("rectangle " + rect.str() + " not inside the configuration window " + config.rect.str());
  PlaneConfig out = PlaneConfig::filled(rect, false);
  for (std::int64_t y = rect.y0; y <= rect.y1; ++y)
    for (std::int64_t x = rect.x0; x <= rect.x1; ++x) out.set(x, y, config.at(x, y));
  return out;
}

}  // namespace

ClusterLabeling label_clusters(const PlaneRect& rect, const std::vector<std::uint8_t>& member, Adjacency adjacency) {
  if (member.size() != rect.size()) throw std::invalid_argument("membership does not match the rectangle");
  const std::int64_t w = rect.width(), h = rect.height();
  UnionFind uf(member.size());
  auto idx = [w](std::int64_t x, std::int64_t y) { return static_cast<std::uint32_t>(y * w + x); };
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      if (!member[idx(x, y)]) continue;
      if (x + 1 < w && member[idx(x + 1, y)]) uf.unite(idx(x, y), idx(x + 1, y));
      if (y + 1 < h) {
        if (member[idx(x, y + 1)]) uf.unite(idx(x, y), idx(x, y + 1));
        if (adjacency == Adjacency::Star) {
          if (x + 1 < w && member[idx(x + 1, y + 1)]) uf.unite(idx(x, y), idx(x + 1, y + 1));
          if (x > 0 && member[idx(x - 1, y + 1)]) uf.unite(idx(x, y), idx(x - 1, y + 1));
        }
      }
    }
  }
  ClusterLabeling out;
  out.adjacency = adjacency;
  out.rect = rect;
  out.labels.assign(member.size(), -1);
  std::vector<std::int32_t> root_label(member.size(), -1);
  for (std::uint32_t i = 0; i < member.size(); ++i) {
    if (!member[i]) continue;
    const auto r = uf.find(i);
    if (root_label[r] < 0) {
      root_label[r] = static_cast<std::int32_t>(out.sizes.size());
      out.sizes.push_back(0);
    }
    out.labels[i] = root_label[r];
    ++out.sizes[static_cast<std::size_t>(root_label[r])];
  }
  return out;
}

ClusterLabeling label_clusters(const PlaneConfig& config, Adjacency adjacency) {
  return label_clusters(config.rect, config.occupied, adjacency);
}

bool crossing_Bm(const PlaneConfig& config, const PlaneRect& inner, const PlaneRect& outer) {
  if (!outer.contains(inner)) throw std::invalid_argument("C_m must lie inside C~_m");
  const PlaneConfig sub = restrict_to(config, outer);
  const auto lab = label_clusters(sub, Adjacency::Star);
  std::vector<std::uint8_t> touches_inner(lab.count(), 0);
  for (std::int64_t y = inner.y0; y <= inner.y1; ++y)
    for (std::int64_t x = inner.x0; x <= inner.x1; ++x)
      if (const auto l = lab.label(x, y); l >= 0) touches_inner[static_cast<std::size_t>(l)] = 1;
  for (std::int64_t y = outer.y0; y <= outer.y1; ++y)
    for (std::int64_t x = outer.x0; x <= outer.x1; ++x) {
      if (!outer.on_border(x, y)) continue;
      if (const auto l = lab.label(x, y); l >= 0 && touches_inner[static_cast<std::size_t>(l)]) return true;
    }
  return false;
}

bool rectangle_crossing(const PlaneConfig& config, const PlaneRect& rect, int axis, std::int64_t from,
                        std::int64_t to) {
  if (axis != 0 && axis != 1) throw std::invalid_argument("axis must be 0 or 1");
  const PlaneConfig sub = restrict_to(config, rect);
  const auto lab = label_clusters(sub, Adjacency::Star);
  std::vector<std::uint8_t> first(lab.count(), 0);
  const std::int64_t lo = axis == 0 ? rect.y0 : rect.x0, hi = axis == 0 ? rect.y1 : rect.x1;
  auto at = [&](std::int64_t line, std::int64_t t) { return axis == 0 ? lab.label(line, t) : lab.label(t, line); };
  for (std::int64_t t = lo; t <= hi; ++t)
    if (const auto l = at(from, t); l >= 0) first[static_cast<std::size_t>(l)] = 1;
  for (std::int64_t t = lo; t <= hi; ++t)
    if (const auto l = at(to, t); l >= 0 && first[static_cast<std::size_t>(l)]) return true;
  return false;
}

CrossingRectangle crossing_rectangle(std::int64_t L0, int isometry) {
  if (L0 < 1) throw std::invalid_argument("L_0 must be >= 1");
  switch (isometry) {
    case 0: return {{0, 2 * L0, 0, 6 * L0}, 0, 0, 2 * L0 - 1};
    case 1: return {{-2 * L0, 0, 0, 6 * L0}, 0, 0, -(2 * L0 - 1)};
    case 2: return {{0, 6 * L0, 0, 2 * L0}, 1, 0, 2 * L0 - 1};
    case 3: return {{0, 6 * L0, -2 * L0, 0}, 1, 0, -(2 * L0 - 1)};
    default: throw std::invalid_argument("isometry index must be 0..3");
  }
}

bool rectangle_crossing(const PlaneConfig& config, std::int64_t L0, int isometry) {
  const auto r = crossing_rectangle(L0, isometry);
  return rectangle_crossing(config, r.rect, r.axis, r.from, r.to);
}

OriginProxy origin_percolation_proxy(const PlaneConfig& config) {
  const auto& r = config.rect;
  if (!r.contains(0, 0)) throw std::invalid_argument("origin outside the window " + r.str());
  OriginProxy out;
  if (config.at(0, 0)) {
    out.origin_occupied = true;
    out.circuit = true;
    return out;
  }
  std::vector<std::uint8_t> seen(r.size(), 0);
  std::deque<std::pair<std::int64_t, std::int64_t>> queue{{0, 0}};
  seen[config.index(0, 0)] = 1;
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    if (r.on_border(x, y)) {
      out.reaches_boundary = true;
      break;
    }
    constexpr std::int64_t dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const std::int64_t nx = x + dx[k], ny = y + dy[k];
      const auto i = config.index(nx, ny);
      if (seen[i] || config.occupied[i]) continue;
      seen[i] = 1;
      queue.emplace_back(nx, ny);
    }
  }
  out.circuit = !out.reaches_boundary;
  return out;
}

std::string CrossingReport::csv_header() {
  return "event,d,u,window,N,successes,estimate,ci_low,ci_high,master_seed,note";
}

std::string CrossingReport::csv_row() const {
  std::ostringstream os;
  os.precision(10);
  os << event << "," << dim << "," << u << "," << window << "," << trials << "," << successes << "," << estimate
     << "," << ci_low << "," << ci_high << "," << master_seed << "," << note;
  return os.str();
}

CrossingReport make_report(std::string event, int dim, double u, std::string window, std::uint64_t trials,
                           std::uint64_t successes, std::uint64_t master_seed, std::string note) {
  CrossingReport r;
  r.event = std::move(event);
  r.dim = dim;
  r.u = u;
  r.window = std::move(window);
  r.trials = trials;
  r.successes = successes;
  r.estimate = trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
  const auto ci = wilson_interval(successes, trials);
  r.ci_low = ci.low;
  r.ci_high = ci.high;
  r.master_seed = master_seed;
  r.note = std::move(note);
  return r;
}

CrossingReport estimate_event(const std::string& name, int dim, double u, const std::string& window,
                              const std::function<bool(std::uint64_t, RngStream&)>& event, std::uint64_t trials,
                              std::uint64_t master_seed, unsigned workers) {
  if (trials == 0) throw std::invalid_argument("estimate_event needs at least one replicate");
  std::vector<std::uint8_t> hit(trials, 0);
  parallel_for(trials, workers, [&](std::size_t rep) {
    RngStream rng(master_seed, rep);
    hit[rep] = event(rep, rng) ? 1 : 0;
  });
  std::uint64_t successes = 0;
  for (auto h : hit) successes += h;
  return make_report(name, dim, u, window, trials, successes, master_seed);
}

}  // namespace interlace
