#include "interlace/renorm.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "interlace/parallel.hpp"

namespace interlace {

using boost::multiprecision::cpp_int;

std::uint64_t floor_root(std::uint64_t value, unsigned k) {
  if (k == 0) throw std::invalid_argument("floor_root: k must be positive");
  if (value < 2 || k == 1) return value;
  auto r = static_cast<std::uint64_t>(std::floor(std::pow(static_cast<double>(value), 1.0 / k)));
  const cpp_int v = value;
  while (boost::multiprecision::pow(cpp_int(r + 1), k) <= v) ++r;
  while (r > 0 && boost::multiprecision::pow(cpp_int(r), k) > v) --r;
  return r;
}

bool ScaleCascade::growth_certified(int n) const {
  if (n < 0 || n >= levels()) throw std::out_of_range("cascade level out of range");
  for (int k = 0; k < n; ++k)
    if (boost::multiprecision::pow(cpp_int(ell[static_cast<std::size_t>(k)]), 100) < cpp_int(L[static_cast<std::size_t>(k)]))
      return false;
  return true;
}

bool ScaleCascade::growth_direct(int n) const {
  if (n < 0 || n >= levels()) throw std::out_of_range("cascade level out of range");
  if (n > 2) throw std::invalid_argument("direct growth comparison only up to n = 2");
  unsigned e100 = 1, e101 = 1;
  for (int k = 0; k < n; ++k) {
    e100 *= 100;
    e101 *= 101;
  }
  return boost::multiprecision::pow(cpp_int(L[static_cast<std::size_t>(n)]), e100) >=
         boost::multiprecision::pow(cpp_int(L0), e101);
}

ScaleCascade build_cascade(std::uint64_t L0, int n_max) {
  if (L0 < 2) throw std::invalid_argument("L_0 must be an integer >= 2");
  if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
  ScaleCascade c;
  c.L0 = L0;
  c.L.push_back(L0);
  for (int n = 0; n <= n_max; ++n) {
    const std::uint64_t Ln = c.L.back();
    c.ell.push_back(100 * floor_root(Ln, 100) + 1);
    if (n == n_max) break;
    std::uint64_t next = 0;
    if (__builtin_mul_overflow(c.ell.back(), Ln, &next))
      throw CascadeOverflow("L_" + std::to_string(n + 1) + " exceeds 64 bits; largest representable level is " +
                                std::to_string(n),
                            n);
    c.L.push_back(next);
  }
  return c;
}

ScaleCascade toy_cascade(std::uint64_t L0, std::uint64_t ell, int n_max) {
  if (L0 < 1 || ell < 1 || ell % 2 == 0) throw std::invalid_argument("toy cascade needs L_0 >= 1 and odd l");
  ScaleCascade c;
  c.L0 = L0;
  c.toy = true;
  c.L.push_back(L0);
  for (int n = 0; n <= n_max; ++n) {
    c.ell.push_back(ell);
    if (n == n_max) break;
    std::uint64_t next = 0;
    if (__builtin_mul_overflow(ell, c.L.back(), &next)) throw CascadeOverflow("toy cascade overflow", n);
    c.L.push_back(next);
  }
  return c;
}

namespace {

std::int64_t level_L(const ScaleCascade& c, int n) {
  if (n < 0 || n >= c.levels()) throw std::out_of_range("cascade level " + std::to_string(n) + " not computed");
  const auto L = c.L[static_cast<std::size_t>(n)];
  if (L > (std::uint64_t{1} << 56)) throw std::overflow_error("box coordinates exceed 64 bits");
  return static_cast<std::int64_t>(L);
}

PlaneRect square(std::int64_t cx, std::int64_t cy, std::int64_t half) {
  return {cx - half, cx + half, cy - half, cy + half};
}

std::vector<BoxLabel> ring(int n, std::int64_t radius) {
  std::vector<BoxLabel> out;
  for (std::int64_t a = -radius; a <= radius; ++a)
    for (std::int64_t b = -radius; b <= radius; ++b)
      if (std::max(std::abs(a), std::abs(b)) == radius) out.push_back({n, a, b});
  return out;
}

std::int64_t interval_min_abs(std::int64_t lo, std::int64_t hi) {
  if (lo <= 0 && hi >= 0) return 0;
  return std::min(std::abs(lo), std::abs(hi));
}

bool meets_sphere(const PlaneRect& r, std::int64_t radius) {
  const std::int64_t mx = std::max({std::abs(r.x0), std::abs(r.x1), std::abs(r.y0), std::abs(r.y1)});
  const std::int64_t mn = std::max(interval_min_abs(r.x0, r.x1), interval_min_abs(r.y0, r.y1));
  return mn <= radius && radius <= mx;
}

}  // namespace

BoxGeometry boxes(const BoxLabel& m, const ScaleCascade& cascade, int d) {
  const std::int64_t L = level_L(cascade, m.n);
  BoxGeometry g;
  g.label = m;
  const std::int64_t cx = 2 * L * m.i1, cy = 2 * L * m.i2;
  g.core = square(cx, cy, L);
  g.enlarged = square(cx, cy, 3 * L);
  g.half_open = {cx - L, cx + L - 1, cy - L, cy + L - 1};
  const std::int64_t lim = std::numeric_limits<std::int32_t>::max();
  if (std::max({std::abs(g.enlarged.x0), std::abs(g.enlarged.x1), std::abs(g.enlarged.y0), std::abs(g.enlarged.y1)}) <= lim) {
    Point c(d);
    c[0] = static_cast<std::int32_t>(cx);
    c[1] = static_cast<std::int32_t>(cy);
    g.core_box = BoxRegion::cube(c, static_cast<std::int32_t>(L));
    g.enlarged_box = BoxRegion::cube(c, static_cast<std::int32_t>(3 * L));
  }
  return g;
}

std::vector<BoxLabel> sub_boxes(const BoxLabel& m, const ScaleCascade& cascade) {
  if (m.n < 1) throw std::invalid_argument("sub_boxes needs a label at level >= 1");
  const auto ell = static_cast<std::int64_t>(cascade.ell[static_cast<std::size_t>(m.n - 1)]);
  const auto parent = boxes(m, cascade).core;
  std::vector<BoxLabel> out;
  const std::int64_t reach = (ell + 1) / 2 + 1;
  for (std::int64_t a = -reach; a <= reach; ++a)
    for (std::int64_t b = -reach; b <= reach; ++b) {
      const BoxLabel child{m.n - 1, ell * m.i1 + a, ell * m.i2 + b};
      if (parent.contains(boxes(child, cascade).core)) out.push_back(child);
    }
  return out;
}

PartitionCheck check_partition(const BoxLabel& m, const ScaleCascade& cascade) {
  const auto parent = boxes(m, cascade);
  const auto& P = parent.core;
  if (P.size() > 50'000'000) throw std::invalid_argument("partition scan too large: " + std::to_string(P.size()) + " sites");
  const auto children = sub_boxes(m, cascade);
  PartitionCheck out;
  out.sub_boxes = children.size();
  std::vector<std::uint16_t> closed(P.size(), 0), half(P.size(), 0);
  auto idx = [&P](std::int64_t x, std::int64_t y) { return static_cast<std::size_t>((y - P.y0) * P.width() + (x - P.x0)); };
  bool outside = false;
  for (const auto& c : children) {
    const auto g = boxes(c, cascade);
    for (std::int64_t y = g.core.y0; y <= g.core.y1; ++y)
      for (std::int64_t x = g.core.x0; x <= g.core.x1; ++x) {
        if (!P.contains(x, y)) {
          outside = true;
          continue;
        }
        ++closed[idx(x, y)];
        if (g.half_open.contains(x, y)) ++half[idx(x, y)];
      }
  }
  out.union_exact = !outside;
  for (auto v : closed)
    if (v == 0) out.union_exact = false;
  out.half_open_partition = true;
  for (std::int64_t y = P.y0; y <= P.y1; ++y)
    for (std::int64_t x = P.x0; x <= P.x1; ++x) {
      const bool in_half_parent = parent.half_open.contains(x, y);
      const auto v = half[idx(x, y)];
      if (in_half_parent ? v != 1 : v != 0) out.half_open_partition = false;
    }
  return out;
}

std::vector<BoxLabel> label_set_K1(const ScaleCascade& cascade, int n) {
  const auto ell = static_cast<std::int64_t>(cascade.ell.at(static_cast<std::size_t>(n)));
  return ring(n, (ell - 1) / 2);
}

std::vector<BoxLabel> label_set_K2(const ScaleCascade& cascade, int n) {
  const auto ell = static_cast<std::int64_t>(cascade.ell.at(static_cast<std::size_t>(n)));
  return ring(n, ell);
}

std::vector<BoxLabel> label_set_K1_geometric(const ScaleCascade& cascade, int n) {
  const auto ell = static_cast<std::int64_t>(cascade.ell.at(static_cast<std::size_t>(n)));
  const auto parent = boxes({n + 1, 0, 0}, cascade).core;
  const std::int64_t radius = parent.x1;
  std::vector<BoxLabel> out;
  for (std::int64_t a = -(ell + 2); a <= ell + 2; ++a)
    for (std::int64_t b = -(ell + 2); b <= ell + 2; ++b) {
      const auto g = boxes({n, a, b}, cascade);
      if (parent.contains(g.core) && meets_sphere(g.core, radius)) out.push_back({n, a, b});
    }
  return out;
}

std::vector<BoxLabel> label_set_K2_geometric(const ScaleCascade& cascade, int n) {
  const auto ell = static_cast<std::int64_t>(cascade.ell.at(static_cast<std::size_t>(n)));
  const std::int64_t radius = 2 * level_L(cascade, n + 1);
  std::vector<BoxLabel> out;
  for (std::int64_t a = -(ell + 2); a <= ell + 2; ++a)
    for (std::int64_t b = -(ell + 2); b <= ell + 2; ++b)
      if (meets_sphere(boxes({n, a, b}, cascade).core, radius)) out.push_back({n, a, b});
  return out;
}

double seed_level(double L0, double c2, int d) {
  if (!(L0 > 1)) throw std::invalid_argument("seed level needs L_0 > 1");
  if (!(c2 > 0)) throw std::invalid_argument("seed level needs c2 > 0");
  const double lg = std::log(L0);
  return 4.0 / c2 * lg * lg * std::pow(L0, -(d - 2.0));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
double down(double x) { return std::nextafter(x, -kInf); }
double up(double x) { return std::nextafter(x, kInf); }

double log_lower(std::uint64_t L) { return down(down(std::log(down(static_cast<double>(L))))); }

}  // namespace

LevelSequence level_sequence(double u0, const ScaleCascade& cascade, int n_max) {
  if (!(u0 > 0) || !std::isfinite(u0)) throw std::invalid_argument("u_0 must be positive");
  if (n_max < 0 || n_max >= cascade.levels())
    throw std::invalid_argument("level sequence needs cascade levels 0.." + std::to_string(n_max));
  LevelSequence s;
  s.u0 = u0;
  s.in_regime = u0 <= 1.0;
  s.u.push_back(u0);
  for (int n = 0; n <= n_max; ++n) {
    const double lg = std::log(static_cast<double>(cascade.L[static_cast<std::size_t>(n)]));
    s.u.push_back(s.u.back() / (1.0 + 1.0 / lg));
  }
  double sum = 0;
  for (int n = 0; n < n_max; ++n) sum = up(sum + up(1.0 / log_lower(cascade.L[static_cast<std::size_t>(n)])));
  const double tail = up((1.0 + kScaleExponent) / kScaleExponent / log_lower(cascade.L[static_cast<std::size_t>(n_max)]));
  s.log_sum_upper = up(up(sum + tail) * (1.0 + 4 * std::numeric_limits<double>::epsilon()));
  s.u_inf_lower = down(down(u0 * down(down(std::exp(-s.log_sum_upper)))));
  return s;
}

std::vector<QnEstimate> estimate_qn(int n, const std::vector<double>& u_grid, const ScaleCascade& cascade, int d,
                                    std::uint64_t reps, std::uint64_t master_seed, unsigned workers,
                                    const SamplerConfig& config) {
  if (u_grid.empty()) throw std::invalid_argument("estimate_qn needs at least one level");
  if (reps == 0) throw std::invalid_argument("estimate_qn needs at least one replicate");
  for (double u : u_grid)
    if (!(u >= 0)) throw std::invalid_argument("levels must be >= 0");
  const auto g = boxes({n, 0, 0}, cascade, d);
  if (g.enlarged.size() > kPlanarWindowLimit)
    throw WindowTooLarge("window C~_m has " + std::to_string(g.enlarged.size()) + " plane sites, limit " +
                             std::to_string(kPlanarWindowLimit),
                         g.enlarged.size());
  const double u_max = *std::max_element(u_grid.begin(), u_grid.end());
  const InterlacementSampler sampler(g.enlarged.window(d), config);
  const PlaneSlicer slicer(sampler.window());
  std::vector<std::uint8_t> hits(reps * u_grid.size(), 0);
  parallel_for(reps, workers, [&](std::size_t rep) {
    RngStream rng(master_seed, rep);
    const auto s = sampler.sample(u_max, rng);
    const auto cover = s.cover_levels();
    for (std::size_t k = 0; k < u_grid.size(); ++k)
      hits[rep * u_grid.size() + k] = crossing_Bm(slicer.slice(cover, u_grid[k]), g.core, g.enlarged) ? 1 : 0;
  });
  std::vector<QnEstimate> out;
  for (std::size_t k = 0; k < u_grid.size(); ++k) {
    std::uint64_t succ = 0;
    for (std::uint64_t rep = 0; rep < reps; ++rep) succ += hits[rep * u_grid.size() + k];
    QnEstimate e;
    e.n = n;
    e.u = u_grid[k];
    e.report = make_report("B_m n=" + std::to_string(n), d, u_grid[k], g.enlarged.str(), reps, succ, master_seed,
                           "finite window C~_m trace;" + sampler.method_tags());
    out.push_back(std::move(e));
  }
  return out;
}

InductionReport induction_report(const ScaleCascade& cascade, const LevelSequence& levels,
                                 const std::map<int, CrossingReport>& q_at_un, double c1, double c2, int d) {
  InductionReport rep;
  rep.d = d;
  rep.c1 = c1;
  rep.c2 = c2;
  const int top = std::min(cascade.levels(), static_cast<int>(levels.u.size()) - 1);
  for (const auto& [n, r] : q_at_un)
    if (n < 0 || n >= top) throw std::invalid_argument("estimate for level " + std::to_string(n) + " has no cascade data");
  for (int n = 0; n < top; ++n) {
    InductionRow row;
    row.n = n;
    row.L = cascade.L[static_cast<std::size_t>(n)];
    row.ell = cascade.ell[static_cast<std::size_t>(n)];
    row.u_n = levels.u[static_cast<std::size_t>(n)];
    row.u_next = levels.u[static_cast<std::size_t>(n + 1)];
    const double Ld = static_cast<double>(row.L);
    row.i_lhs = c2 * (row.u_n - row.u_next) * std::pow(Ld, d - 2.0);
    row.i_rhs = 2.0 * std::log(Ld);
    row.i_holds = row.i_lhs >= row.i_rhs;
    row.ii_rhs = 1.0 / Ld;
    const double ell2 = static_cast<double>(row.ell) * static_cast<double>(row.ell);
    if (auto it = q_at_un.find(n); it != q_at_un.end()) {
      row.measured = true;
      row.q = it->second.estimate;
      row.q_low = it->second.ci_low;
      row.q_high = it->second.ci_high;
      row.a_n = c1 * ell2 * row.q;
      row.a_n_high = c1 * ell2 * row.q_high;
      row.ii_holds = row.a_n <= row.ii_rhs;
      row.ii_holds_ci = row.a_n_high <= row.ii_rhs;
      if (auto nx = q_at_un.find(n + 1); nx != q_at_un.end()) {
        const double denom = ell2 * (row.q * row.q + row.u_next / (Ld * Ld) + std::exp(-row.i_lhs));
        row.ratio = nx->second.estimate / denom;
      }
    }
    std::string note;
    if (!levels.in_regime) note = "u0>1: outside the asymptotic regime";
    if (std::log(static_cast<double>(cascade.L0)) < 1.0) note += std::string(note.empty() ? "" : ";") + "log L0<1: outside the asymptotic regime";
    if (!row.measured) note += std::string(note.empty() ? "" : ";") + "q not measured";
    row.note = note;
    rep.rows.push_back(row);
  }
  return rep;
}

std::string InductionReport::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "n,L_n,ell_n,u_n,u_next,i_lhs,i_rhs,i_holds,measured,q_hat,q_low,q_high,a_n,a_n_high,ii_rhs,ii_holds,"
        "ii_holds_ci,ratio,note\n";
  for (const auto& r : rows) {
    os << r.n << "," << r.L << "," << r.ell << "," << r.u_n << "," << r.u_next << "," << r.i_lhs << "," << r.i_rhs
       << "," << r.i_holds << "," << r.measured << ",";
    if (r.measured) os << r.q << "," << r.q_low << "," << r.q_high << "," << r.a_n << "," << r.a_n_high;
    else os << ",,,,";
    os << "," << r.ii_rhs << ",";
    if (r.measured) os << r.ii_holds << "," << r.ii_holds_ci;
    else os << ",";
    os << ",";
    if (r.ratio) os << *r.ratio;
    os << "," << r.note << "\n";
  }
  return os.str();
}

std::string InductionReport::text_table() const {
  std::ostringstream os;
  char buf[512];
  std::snprintf(buf, sizeof buf, "induction criteria  d=%d  c1=%g  c2=%g\n", d, c1, c2);
  os << buf;
  std::snprintf(buf, sizeof buf, "%3s %14s %6s %12s %12s %12s %10s %3s %10s %12s %12s %3s %12s\n", "n", "L_n", "ell_n",
                "u_n", "u_n+1", "i) lhs", "i) rhs", "ok", "q_hat", "a_n", "1/L_n", "ok", "ratio");
  os << buf;
  for (const auto& r : rows) {
    char q[32] = "-", a[32] = "-", ok2[8] = "-", ratio[32] = "-";
    if (r.measured) {
      std::snprintf(q, sizeof q, "%.4g", r.q);
      std::snprintf(a, sizeof a, "%.4g", r.a_n);
      std::snprintf(ok2, sizeof ok2, "%s", r.ii_holds ? "yes" : "no");
    }
    if (r.ratio) std::snprintf(ratio, sizeof ratio, "%.4g", *r.ratio);
    std::snprintf(buf, sizeof buf, "%3d %14llu %6llu %12.6g %12.6g %12.6g %10.4g %3s %10s %12s %12.4g %3s %12s\n", r.n,
                  static_cast<unsigned long long>(r.L), static_cast<unsigned long long>(r.ell), r.u_n, r.u_next,
                  r.i_lhs, r.i_rhs, r.i_holds ? "yes" : "no", q, a, r.ii_rhs, ok2, ratio);
    os << buf;
    if (!r.note.empty()) os << "    " << r.note << "\n";
  }
  return os.str();
}

std::string cascade_dump(const ScaleCascade& cascade, const LevelSequence* levels) {
  nlohmann::ordered_json j;
  j["a"] = kScaleExponent;
  j["L0"] = cascade.L0;
  j["toy"] = cascade.toy;
  auto arr = nlohmann::ordered_json::array();
  for (int n = 0; n < cascade.levels(); ++n) {
    nlohmann::ordered_json lv;
    const auto ell = cascade.ell[static_cast<std::size_t>(n)];
    lv["n"] = n;
    lv["L"] = cascade.L[static_cast<std::size_t>(n)];
    lv["ell"] = ell;
    lv["ell_odd"] = ell % 2 == 1;
    lv["K1_size"] = 4 * (ell - 1);
    lv["K2_size"] = 8 * ell;
    lv["growth_certified"] = cascade.growth_certified(n);
    arr.push_back(lv);
  }
  j["levels"] = arr;
  if (levels) {
    nlohmann::ordered_json ls;
    ls["u0"] = levels->u0;
    ls["u"] = levels->u;
    ls["log_sum_upper"] = levels->log_sum_upper;
    ls["u_inf_lower"] = levels->u_inf_lower;
    ls["in_regime"] = levels->in_regime;
    j["level_sequence"] = ls;
  }
  return j.dump(2);
}

}  // namespace interlace
