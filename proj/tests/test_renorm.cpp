#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include <json.hpp>

#include "interlace/renorm.hpp"

using namespace interlace;

namespace {

// Can an occupied-or-not *-path inside C~_m avoid every box of `labels`
// while going from C_m to the border of C~_m?
bool path_avoids(const ScaleCascade& c, int n, const std::vector<BoxLabel>& labels) {
  const auto top = boxes({n + 1, 0, 0}, c);
  const PlaneRect outer = top.enlarged, inner = top.core;
  auto blocked = PlaneConfig::filled(outer, false);
  for (const auto& m : labels) {
    const auto r = boxes(m, c).core;
    for (std::int64_t y = r.y0; y <= r.y1; ++y)
      for (std::int64_t x = r.x0; x <= r.x1; ++x)
        if (outer.contains(x, y)) blocked.set(x, y, true);
  }
  std::vector<std::uint8_t> seen(outer.size(), 0);
  std::deque<std::pair<std::int64_t, std::int64_t>> queue;
  for (std::int64_t y = inner.y0; y <= inner.y1; ++y)
    for (std::int64_t x = inner.x0; x <= inner.x1; ++x)
      if (!blocked.at(x, y)) {
        seen[blocked.index(x, y)] = 1;
        queue.emplace_back(x, y);
      }
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    if (outer.on_border(x, y)) return true;
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto nx = x + dx, ny = y + dy;
        if (!outer.contains(nx, ny) || blocked.at(nx, ny) || seen[blocked.index(nx, ny)]) continue;
        seen[blocked.index(nx, ny)] = 1;
        queue.emplace_back(nx, ny);
      }
  }
  return false;
}

}  // namespace

TEST_SUITE("renorm") {

TEST_CASE("exact roots") {
  CHECK(floor_root(10, 100) == 1);
  CHECK(floor_root(1000000000000000000ULL, 3) == 1000000);
  CHECK(floor_root(999999999999999999ULL, 3) == 999999);
  CHECK(floor_root(18446744073709551615ULL, 2) == 4294967295ULL);
  CHECK(floor_root(18446744073709551615ULL, 64) == 1);
  CHECK(floor_root(1ULL << 63, 63) == 2);
}

TEST_CASE("cascade for L0 = 10") {
  const auto c = build_cascade(10, 2);
  CHECK(c.ell[0] == 101);
  CHECK(c.L[1] == 1010);
  CHECK(c.ell[1] == 101);
  CHECK(c.L[2] == 102010);
  for (auto e : c.ell) CHECK(e % 2 == 1);
  for (int n = 0; n < c.levels(); ++n) {
    CHECK(c.growth_certified(n));
    CHECK(c.growth_direct(n));
  }
  try {
    build_cascade(10, 20);
    FAIL("no overflow reported");
  } catch (const CascadeOverflow& e) {
    CHECK(e.largest_level >= 8);
    CHECK(e.largest_level < 20);
    CHECK_NOTHROW(build_cascade(10, e.largest_level));
  }
  CHECK_THROWS(build_cascade(1, 2));
}

TEST_CASE("box geometry") {
  const auto c = build_cascade(10, 1);
  const auto b = boxes({0, 0, 0}, c);
  CHECK(b.core.x0 == -10);
  CHECK(b.core.x1 == 10);
  CHECK(b.enlarged.y0 == -30);
  CHECK(b.enlarged.y1 == 30);
  CHECK(b.half_open.x1 == 9);
  REQUIRE(b.core_box.has_value());
  CHECK(b.core_box->lo() == Point(3, {-10, -10, -10}));
  CHECK(b.enlarged_box->hi() == Point(3, {30, 30, 30}));
  const auto s = boxes({1, 2, -1}, c);
  CHECK(s.core.x0 == 2 * 1010 * 2 - 1010);
  CHECK(s.core.y1 == 1010 - 2020);
}

TEST_CASE("label sets from formulas and from geometry") {
  for (std::uint64_t ell : {3, 5, 7}) {
    const auto toy = toy_cascade(2, ell, 2);
    for (int n : {0, 1}) {
      auto k1 = label_set_K1(toy, n), g1 = label_set_K1_geometric(toy, n);
      auto k2 = label_set_K2(toy, n), g2 = label_set_K2_geometric(toy, n);
      std::sort(k1.begin(), k1.end());
      std::sort(g1.begin(), g1.end());
      std::sort(k2.begin(), k2.end());
      std::sort(g2.begin(), g2.end());
      CHECK(k1 == g1);
      CHECK(k2 == g2);
      CHECK(k1.size() == 4 * (ell - 1));
      CHECK(k2.size() == 8 * ell);
    }
  }
  const auto c = build_cascade(10, 1);
  auto k1 = label_set_K1(c, 0), g1 = label_set_K1_geometric(c, 0);
  std::sort(k1.begin(), k1.end());
  std::sort(g1.begin(), g1.end());
  CHECK(k1 == g1);
  CHECK(k1.size() == 400);
  CHECK(label_set_K2(c, 0).size() == 808);
  CHECK(label_set_K2_geometric(c, 0).size() == 808);
}

TEST_CASE("paths from C_m to the border of C~_m meet K1 and K2") {
  for (std::uint64_t ell : {3, 5}) {
    const auto toy = toy_cascade(2, ell, 1);
    CHECK_FALSE(path_avoids(toy, 0, label_set_K1(toy, 0)));
    CHECK_FALSE(path_avoids(toy, 0, label_set_K2(toy, 0)));
    auto k1 = label_set_K1(toy, 0);
    k1.erase(k1.begin());
    CHECK(path_avoids(toy, 0, k1));
    CHECK(path_avoids(toy, 0, {}));
  }
}

TEST_CASE("seed level") {
  CHECK(seed_level(std::exp(2.0), 4, 3) == doctest::Approx(4 / std::exp(2.0)));
  CHECK(seed_level(std::exp(2.0), 4, 3) == doctest::Approx(0.5413).epsilon(1e-4));
  CHECK(seed_level(100, 1, 5) == doctest::Approx(4 * std::pow(std::log(100.0), 2) * 1e-6));
  double prev = seed_level(std::exp(2.0), 1, 3);
  for (double L = 8; L < 1e6; L *= 1.7) {
    const double u = seed_level(L, 1, 3);
    CHECK(u < prev);
    prev = u;
  }
  CHECK_THROWS(seed_level(1, 1, 3));
  CHECK_THROWS(seed_level(10, 0, 3));
}

TEST_CASE("level sequence") {
  const auto c = build_cascade(10, 6);
  const auto s = level_sequence(1.0, c, 6);
  CHECK(s.u[1] == doctest::Approx(1 / (1 + 1 / std::log(10.0))));
  CHECK(s.u[1] == doctest::Approx(0.69721).epsilon(1e-5));
  CHECK(s.in_regime);
  for (std::size_t n = 1; n < s.u.size(); ++n) CHECK(s.u[n] < s.u[n - 1]);
  CHECK(s.u_inf_lower > 0);
  for (double u : s.u) CHECK(s.u_inf_lower <= u);
  CHECK_FALSE(level_sequence(2.0, c, 3).in_regime);
}

TEST_CASE("q_n estimates") {
  const auto c = build_cascade(8, 1);
  const std::vector<double> grid = {0.0, 0.5, 1.5, 5.0};
  const auto q = estimate_qn(0, grid, c, 3, 60, 71);
  REQUIRE(q.size() == grid.size());
  CHECK(q[0].report.successes == 0);
  for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i].report.successes >= q[i - 1].report.successes);
  CHECK(q.back().report.estimate > 0.9);
  CHECK(q.back().report.window.find("[-24:24]") != std::string::npos);
  CHECK_THROWS_AS(estimate_qn(1, {1.0}, c, 3, 1, 1), WindowTooLarge);
}

TEST_CASE("induction report") {
  const auto c = build_cascade(8, 2);
  const auto s = level_sequence(seed_level(8, 1, 3), c, 2);
  std::map<int, CrossingReport> q;
  q[0] = make_report("B", 3, s.u[0], "plane", 100, 0, 1);
  const auto rep = induction_report(c, s, q, 1, 1, 3);
  REQUIRE(rep.rows.size() >= 2);
  const auto& r0 = rep.rows[0];
  CHECK(r0.i_lhs == doctest::Approx((s.u[0] - s.u[1]) * 8));
  CHECK(r0.i_rhs == doctest::Approx(2 * std::log(8.0)));
  CHECK(r0.measured);
  CHECK(r0.q == 0);
  CHECK(r0.ii_holds);
  CHECK_FALSE(rep.rows[1].measured);
  CHECK(rep.rows[1].note.find("not measured") != std::string::npos);
  for (double c1 : {0.01, 1.0, 1e6}) CHECK(induction_report(c, s, q, c1, 1, 3).rows[0].ii_holds);
  CHECK(rep.csv().rfind("n,L_n,ell_n", 0) == 0);
  CHECK_FALSE(rep.text_table().empty());
  std::map<int, CrossingReport> bad;
  bad[7] = q[0];
  CHECK_THROWS(induction_report(c, s, bad, 1, 1, 3));
}

TEST_CASE("cascade dump") {
  const auto c = build_cascade(10, 2);
  const auto s = level_sequence(1.0, c, 2);
  const auto j = nlohmann::json::parse(cascade_dump(c, &s));
  CHECK(j["L0"] == 10);
  CHECK(j["levels"].size() == 3);
  CHECK(j["levels"][2]["L"] == 102010);
  CHECK(j["levels"][0]["K1_size"] == 400);
  CHECK(j["level_sequence"]["u"].size() == s.u.size());
  CHECK(nlohmann::json::parse(cascade_dump(c)).count("level_sequence") == 0);
}

}
