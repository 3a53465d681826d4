// Acceptance checks: one PASS/FAIL line per criterion. `acceptance --only
// <name>` runs a single criterion; `--list` prints the names.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "interlace/experiments.hpp"
#include "interlace/green.hpp"
#include "interlace/percolation.hpp"
#include "interlace/potential.hpp"
#include "interlace/renorm.hpp"
#include "interlace/sampler.hpp"
#include "interlace/stats.hpp"
#include "oracles.hpp"

using namespace interlace;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ExperimentConfig base(const std::string& command, std::uint64_t reps) {
  ExperimentConfig c;
  c.command = command;
  c.reps = reps;
  c.seed = 20240611;
  return c;
}

Outcome vacancy_law() {
  auto c = base("vacancy-law", 100000);
  c.window = "point;pair:3;ball:2";
  c.u_grid = {0.5, 1.0, 2.0};
  const auto r = run_experiment(c);
  const double z = std::stod(r.summary_value("max_abs_z"));
  return {z < 3.0, fmt("max |z| = %.3f over %zu cells, N = 1e5", z, r.rows.size())};
}

Outcome green_cross_validation() {
  double worst_diff = 0, worst_harm = 0;
  for (int d : {3, 4}) {
    const auto q = build_green_table(d, 10, GreenMethod::Quadrature);
    const auto t = build_green_table(d, 10, GreenMethod::TruncatedSolve);
    const std::size_t cells = static_cast<std::size_t>(std::pow(11.0, d));
    for (std::size_t i = 0; i < cells; ++i) {
      Point p(d);
      std::size_t k = i;
      for (int a = 0; a < d; ++a, k /= 11) p[a] = static_cast<std::int32_t>(k % 11);
      worst_diff = std::max(worst_diff, std::abs(q.at(p) - t.at(p)));
    }
    worst_harm = std::max({worst_harm, q.max_harmonicity_residual(), t.max_harmonicity_residual()});
  }
  const auto q3 = build_green_table(3, 10, GreenMethod::Quadrature);
  const double e1 = std::abs(q3.at(Point::unit(3, 0)) - (q3.origin() - 1.0));
  const bool pass = worst_diff < 1e-4 && worst_harm < 1e-8 && e1 < 1e-10;
  return {pass, fmt("max |quad - trunc| = %.2e, max harmonicity residual = %.2e, |g(e1) - g(0) + 1| = %.2e",
                    worst_diff, worst_harm, e1)};
}

Outcome equilibrium_exactness() {
  const GreenFunction g(cached_green_table(3, 24, GreenMethod::Quadrature));
  double worst_res = 0, worst_pair = 0;
  std::size_t interior_nonzero = 0, order_violations = 0;
  auto solve = [&](const Window& w) {
    const auto eq = equilibrium_measure(w, g);
    worst_res = std::max(worst_res, eq.residual);
    const auto inner = boundary(w.sites(), BoundaryKind::Inner);
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!std::binary_search(inner.begin(), inner.end(), w.sites()[i]) && eq.weights[i] != 0.0) ++interior_nonzero;
    return eq.capacity;
  };
  solve(Window(BoxRegion::cube(Point::origin(3), 3)));
  solve(Window(BoxRegion::plane_rect(3, -4, 5, -2, 3)));
  for (int a = 1; a <= 6; ++a)
    for (int b = 0; b <= a; ++b)
      for (int c = 0; c <= b; ++c) {
        const Point y(3, {a, b, c});
        const double cap = solve(Window(3, {Point::origin(3), y}));
        worst_pair = std::max(worst_pair, std::abs(cap - 2.0 / (g.origin() + g(y))));
      }
  RngStream rng(7, 0);
  auto random_set = [&](int count) {
    std::vector<Point> pts;
    for (int i = 0; i < count; ++i)
      pts.push_back(Point(3, {static_cast<std::int32_t>(rng.below(9)) - 4, static_cast<std::int32_t>(rng.below(9)) - 4,
                              static_cast<std::int32_t>(rng.below(5)) - 2}));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
  };
  const double slack = 1e-10;
  for (int k = 0; k < 50; ++k) {
    const auto A = random_set(1 + static_cast<int>(rng.below(25)));
    const auto B = random_set(1 + static_cast<int>(rng.below(25)));
    std::vector<Point> U, I;
    std::set_union(A.begin(), A.end(), B.begin(), B.end(), std::back_inserter(U));
    std::set_intersection(A.begin(), A.end(), B.begin(), B.end(), std::back_inserter(I));
    const double ca = solve(Window(3, A)), cb = solve(Window(3, B)), cu = solve(Window(3, U));
    const double ci = I.empty() ? 0.0 : solve(Window(3, I));
    if (cu > ca + cb + slack) ++order_violations;
    if (cu + ci > ca + cb + slack) ++order_violations;
    if (ca > cu + slack || cb > cu + slack) ++order_violations;
    if (!I.empty() && (ci > ca + slack || ci > cb + slack)) ++order_violations;
  }
  const bool pass = worst_res < 1e-10 && interior_nonzero == 0 && worst_pair < 1e-10 && order_violations == 0;
  return {pass, fmt("max residual = %.2e, nonzero interior weights = %zu, pair-formula error = %.2e, "
                    "subadditivity/monotonicity violations = %zu over 50 pairs",
                    worst_res, interior_nonzero, worst_pair, order_violations)};
}

Outcome capacity_scaling() {
  auto c = base("capacity-scaling", 1);
  c.L_grid = {2, 4, 8, 16};
  c.dim = 3;
  const double s3 = std::stod(run_experiment(c).summary_value("loglog_slope"));
  c.dim = 4;
  const double s4 = std::stod(run_experiment(c).summary_value("loglog_slope"));
  const bool pass = s3 >= 0.85 && s3 <= 1.15 && s4 >= 1.8 && s4 <= 2.2;
  return {pass, fmt("slope d=3: %.4f (band [0.85, 1.15]), d=4: %.4f (band [1.8, 2.2])", s3, s4)};
}

Outcome correlation_decay() {
  auto c = base("correlation", 100000);
  c.L_grid = {1, 2, 4, 8, 16};
  c.u_grid = {1.0};
  const auto r = run_experiment(c);
  const double ex = std::stod(r.summary_value("analytic_exponent_r4_16 u=1"));
  const double z = std::stod(r.summary_value("max_abs_z"));
  const bool pass = std::abs(ex + 1.0) <= 0.15 && z < 3.0;
  return {pass, fmt("analytic exponent over r in [4,16] = %.4f (target -1 +- 0.15), MC vs analytic max |z| = %.3f",
                    ex, z)};
}

// Pearson independence test on a contingency table; both tails of each
// margin are merged until they hold at least 100 observations.
double independence_p_value(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  auto range = [](const std::vector<std::uint64_t>& v) {
    std::map<std::uint64_t, std::uint64_t> freq;
    for (auto x : v) ++freq[x];
    std::uint64_t lo = freq.begin()->first, hi = freq.rbegin()->first, acc = 0;
    for (auto it = freq.begin(); it != freq.end(); ++it)
      if ((acc += it->second) >= 100) {
        lo = it->first;
        break;
      }
    acc = 0;
    for (auto it = freq.rbegin(); it != freq.rend(); ++it)
      if ((acc += it->second) >= 100) {
        hi = it->first;
        break;
      }
    return std::pair{lo, std::max(lo, hi)};
  };
  const auto [alo, ahi] = range(a);
  const auto [blo, bhi] = range(b);
  const std::size_t ra = ahi - alo + 1, rb = bhi - blo + 1;
  std::vector<double> table(ra * rb, 0), row(ra, 0), col(rb, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = std::clamp(a[i], alo, ahi) - alo, y = std::clamp(b[i], blo, bhi) - blo;
    table[x * rb + y] += 1;
    row[x] += 1;
    col[y] += 1;
  }
  const double n = static_cast<double>(a.size());
  double chi = 0;
  for (std::size_t x = 0; x < ra; ++x)
    for (std::size_t y = 0; y < rb; ++y) {
      const double e = row[x] * col[y] / n;
      if (e > 0) chi += (table[x * rb + y] - e) * (table[x * rb + y] - e) / e;
    }
  const double dof = static_cast<double>((ra - 1) * (rb - 1));
  return dof > 0 ? chi_square_sf(chi, dof) : 1.0;
}

Outcome coupling_exactness() {
  const InterlacementSampler sampler(Window(BoxRegion::cube(Point::origin(3), 2)));
  const std::vector<std::pair<double, double>> pairs = {{0.1, 0.5}, {0.5, 1.0}, {1.0, 1.5}, {1.5, 2.0}, {0.25, 2.0}};
  constexpr std::uint64_t kN = 10000;
  const double cap = sampler.capacity();
  std::size_t violations = 0;
  std::vector<std::vector<std::uint64_t>> low(pairs.size()), high(pairs.size());
  for (std::uint64_t rep = 0; rep < kN; ++rep) {
    RngStream rng(99, rep);
    const auto s = sampler.sample(2.0, rng);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [u1, u2] = pairs[k];
      const auto m1 = s.occupancy_mask(u1), m2 = s.occupancy_mask(u2);
      for (std::size_t i = 0; i < m1.size(); ++i)
        if (m1[i] && !m2[i]) ++violations;
      std::uint64_t a = 0, b = 0;
      for (const auto& t : s.trajectories) {
        if (t.label <= u1) ++a;
        else if (t.label <= u2) ++b;
      }
      low[k].push_back(a);
      high[k].push_back(b);
    }
  }
  const double z99 = normal_quantile(0.995);
  double worst_p = 1.0;
  std::size_t failed = 0;
  auto poisson_tests = [&](const std::vector<std::uint64_t>& v, double lambda) {
    const double n = static_cast<double>(v.size());
    double mean = 0;
    for (auto x : v) mean += static_cast<double>(x);
    mean /= n;
    double ss = 0;
    for (auto x : v) ss += (static_cast<double>(x) - mean) * (static_cast<double>(x) - mean);
    const double zmean = (mean - lambda) / std::sqrt(lambda / n);
    // Dispersion index: sum (x - mean)^2 / mean ~ chi^2_{n-1} under the Poisson law.
    const double disp = ss / mean;
    const double upper = chi_square_sf(disp, n - 1);
    const double p_disp = 2.0 * std::min(upper, 1.0 - upper);
    const double p_mean = std::erfc(std::abs(zmean) / std::sqrt(2.0));
    worst_p = std::min({worst_p, p_disp, p_mean});
    if (std::abs(zmean) > z99) ++failed;
    if (p_disp < 0.01) ++failed;
  };
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    poisson_tests(low[k], pairs[k].first * cap);
    poisson_tests(high[k], (pairs[k].second - pairs[k].first) * cap);
    const double p = independence_p_value(low[k], high[k]);
    worst_p = std::min(worst_p, p);
    if (p < 0.01) ++failed;
  }
  return {violations == 0 && failed == 0,
          fmt("inclusion violations = %zu over 1e4 samples x 5 level pairs, failed tests at 1%% = %zu of 25, "
              "smallest p = %.4f",
              violations, failed, worst_p)};
}

Outcome sampler_equivalence() {
  const InterlacementSampler sampler(Window(3, {Point::origin(3), Point::plane(3, 2, 0)}));
  constexpr std::uint64_t kN = 100000;
  constexpr double kR = 512.0, kU = 1.0;
  std::array<double, 4> h{}, t{};
  for (std::uint64_t rep = 0; rep < kN; ++rep) {
    RngStream a(31, rep), b(32, rep);
    const auto ma = sampler.sample(kU, a).occupancy_mask(kU);
    const auto mb = sampler.sample_truncated(kU, kR, b).occupancy_mask(kU);
    h[static_cast<std::size_t>(ma[0] + 2 * ma[1])] += 1;
    t[static_cast<std::size_t>(mb[0] + 2 * mb[1])] += 1;
  }
  double tv = 0;
  for (std::size_t k = 0; k < 4; ++k) tv += 0.5 * std::abs(h[k] - t[k]) / static_cast<double>(kN);
  return {tv < 0.02, fmt("TV over 4 patterns = %.4f at N = 1e5 (truncation bias bound %.2e per trajectory)", tv,
                         sampler.truncation_bias(kR))};
}

Outcome connectivity_oracles() {
  std::size_t label_mismatch = 0, circuit_mismatch = 0, circuits = 0;
  RngStream rng(5, 0);
  const PlaneRect r10{0, 9, 0, 9};
  for (int k = 0; k < 50; ++k) {
    const auto c = oracle::random_config(r10, 0.3 + 0.4 * rng.uniform(), rng);
    for (auto adj : {Adjacency::NearestNeighbor, Adjacency::Star}) {
      const auto lab = label_clusters(c, adj);
      if (!oracle::same_partition(lab.labels, oracle::bfs_components(10, 10, c.occupied, adj))) ++label_mismatch;
    }
  }
  const PlaneRect r9{-4, 4, -4, 4};
  for (int k = 0; k < 100; ++k) {
    auto c = oracle::random_config(r9, 0.35 + 0.4 * rng.uniform(), rng);
    if (k % 10 != 0) c.set(0, 0, false);
    const bool want = oracle::circuit_by_cover(c);
    const auto proxy = origin_percolation_proxy(c);
    circuits += want;
    if (proxy.circuit != want) ++circuit_mismatch;
    if (!proxy.origin_occupied && proxy.circuit == proxy.reaches_boundary) ++circuit_mismatch;
  }
  return {label_mismatch == 0 && circuit_mismatch == 0,
          fmt("labeling mismatches = %zu of 100, circuit mismatches = %zu of 100 (%zu with a circuit)", label_mismatch,
              circuit_mismatch, circuits)};
}

Outcome qn_trend() {
  auto c = base("qn-sweep", 200);
  c.L_grid = {8, 16, 32};
  c.c2 = 1.0;
  const auto r = run_experiment(c);
  std::string detail;
  for (const auto& row : r.rows)
    detail += fmt("L0=%s: L0*q=%s [%s, %s]; ", row[0].c_str(), row[6].c_str(), row[7].c_str(), row[8].c_str());
  detail += "N = 200";
  return {r.summary_value("nonincreasing_95ci") == "true", detail};
}

Outcome phase() {
  auto c = base("eta-curve", 500);
  c.window = "plane:100";
  c.u_grid = {0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0};
  const auto r = run_experiment(c);
  const double eta_lo = std::stod(r.rows.front()[4]), eta_hi = std::stod(r.rows.back()[4]);
  const auto violations = r.summary_value("monotonicity_violations");
  return {eta_lo - eta_hi > 0.5 && violations == "0",
          fmt("eta(0.05) = %.3f, eta(5) = %.3f, monotonicity violations = %s, N = 500", eta_lo, eta_hi,
              violations.c_str())};
}

Outcome cascade_arithmetic() {
  using F = boost::multiprecision::cpp_bin_float_50;
  int n_max = 12;
  ScaleCascade cascade;
  for (;;) {
    try {
      cascade = build_cascade(10, n_max);
      break;
    } catch (const CascadeOverflow& e) {
      n_max = e.largest_level;
    }
  }
  bool growth = true, odd = true;
  for (int n = 0; n <= n_max; ++n) {
    growth = growth && cascade.growth_certified(n);
    if (n <= 2) growth = growth && cascade.growth_direct(n);
    odd = odd && cascade.ell[static_cast<std::size_t>(n)] % 2 == 1;
  }
  const auto levels = level_sequence(1.0, cascade, n_max);
  double worst_rel = 0;
  F u = 1;
  F product_floor = 1;
  for (int n = 0; n <= n_max; ++n) {
    u = u / (1 + 1 / log(F(cascade.L[static_cast<std::size_t>(n)])));
    const double got = levels.u[static_cast<std::size_t>(n) + 1];
    worst_rel = std::max(worst_rel, std::abs(((F(got) - u) / u).convert_to<double>()) / (n + 1));
    product_floor = u;
  }
  const double eps = std::numeric_limits<double>::epsilon();
  const bool recursion = worst_rel <= 4 * eps;
  const bool u_inf = levels.u_inf_lower > 0 && F(levels.u_inf_lower) <= product_floor;
  return {growth && odd && recursion && u_inf,
          fmt("levels 0..%d: growth certified = %s, l_n odd = %s, u_n relative error / (n+1) = %.2e eps, "
              "certified u_inf >= %.6g",
              n_max, growth ? "yes" : "no", odd ? "yes" : "no", worst_rel / eps, levels.u_inf_lower)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"vacancy-law", vacancy_law},
      {"green-cross-validation", green_cross_validation},
      {"equilibrium-exactness", equilibrium_exactness},
      {"capacity-scaling", capacity_scaling},
      {"correlation-decay", correlation_decay},
      {"coupling-exactness", coupling_exactness},
      {"sampler-equivalence", sampler_equivalence},
      {"connectivity-oracles", connectivity_oracles},
      {"qn-trend", qn_trend},
      {"phase", phase},
      {"cascade-arithmetic", cascade_arithmetic},
  };
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--list") {
      for (const auto& [name, f] : criteria) std::printf("%s\n", name.c_str());
      return 0;
    }
    if (a == "--only" && i + 1 < argc) only = argv[++i];
    else {
      std::fprintf(stderr, "usage: acceptance [--list] [--only NAME]\n");
      return 2;
    }
  }
  int failures = 0, ran = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && name != only) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
